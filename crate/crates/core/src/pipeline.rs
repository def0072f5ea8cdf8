//! Configuration-driven runs of the whole design chain.
//!
//! A run samples the plant, analyses its RHP poles and zeros, builds the
//! achievable reference model and the ideal controller, realizes and
//! reduces the controller, certifies every requested order and checks the
//! reconstructed closed loops. Every stage writes its artifacts into the
//! output directory before the next one starts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::certify::{self, ProjectionTestOptions};
use crate::error::{Error, Result};
use crate::hardy::{Alpha, DEFAULT_K_BASIS};
use crate::loewner::{self, DescriptorSystem, LoewnerPencil};
use crate::plants::{
    make_log_grid, sample_response, AngularFrequencyGrid, DelayTerm, DelayedRational, FreqResponseData,
    OpenChannel, RationalLti, TransferModel,
};
use crate::refmodel::{self, ReferenceModel};
use crate::report::{self, AnalysisReport, CertificateReport, ControllerReport};
use crate::scenarios;
use crate::unstable::{self, AnalysisOptions, BandpassMode, InstabilityEstimate, DEFAULT_DROP_RATIO};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Output directory, relative to the config file.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub plant: PlantSpec,
    /// Design grid. Required unless the plant is read from CSV.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub reference: Option<ReferenceSpec>,
    #[serde(default)]
    pub controller: ControllerSpec,
    #[serde(default)]
    pub certify: CertifySpec,
    #[serde(default)]
    pub simulate: Option<SimulateSpec>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlantSpec {
    Rational { num: Vec<f64>, den: Vec<f64> },
    DelayedRational { num: Vec<f64>, terms: Vec<DelayTerm> },
    OpenChannel(OpenChannel),
    Csv { path: PathBuf },
    Builtin { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub w_min: f64,
    pub w_max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<AngularFrequencyGrid> {
        make_log_grid(self.w_min, self.w_max, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    pub k_basis: usize,
    pub alpha: Alpha,
    pub drop_ratio: f64,
    pub bandpass: BandpassMode,
    pub bandpass_order: u32,
    /// Grid used to sample model plants for the analysis. Defaults to one
    /// decade beyond the design grid on each side with `max(4N, 1000)` points.
    pub grid: Option<GridSpec>,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            k_basis: DEFAULT_K_BASIS,
            alpha: Alpha::Auto,
            drop_ratio: DEFAULT_DROP_RATIO,
            bandpass: BandpassMode::Auto,
            bandpass_order: 1,
            grid: None,
        }
    }
}

impl AnalysisSpec {
    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            k_basis: self.k_basis,
            alpha: self.alpha,
            drop_ratio: self.drop_ratio,
            bandpass: self.bandpass,
            bandpass_order: self.bandpass_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalSpec {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

/// Either a first- or second-order `M_init` made achievable with the
/// analysed RHP poles and zeros, or the closed loop of the plant with a
/// given controller.
#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub order: Option<u8>,
    pub tau: Option<f64>,
    pub omega0: Option<f64>,
    pub xi: Option<f64>,
    pub closed_loop: Option<RationalSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSpec {
    pub orders: Vec<usize>,
    pub tol: f64,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        Self {
            orders: vec![2],
            tol: loewner::DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifySpec {
    pub eps: f64,
    pub cancellation_distance: f64,
}

impl Default for CertifySpec {
    fn default() -> Self {
        Self {
            eps: certify::DEFAULT_EPS,
            cancellation_distance: certify::CANCELLATION_DISTANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub t_end: f64,
    pub dt: f64,
}

fn invalid(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive and finite, got {v}")))
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| invalid("config", e.to_string().trim_end()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base).map_err(|e| match e {
            Error::Config { path: field, message } => Error::Config {
                path: format!("{}: {field}", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.plant {
            PlantSpec::Csv { .. } => {}
            PlantSpec::Builtin { name } if builtin_plant(name).is_none() => {
                return Err(invalid(
                    "plant.name",
                    format!("unknown builtin {name:?}; expected crystallizer_surrogate or open_channel"),
                ))
            }
            _ if self.grid.is_none() => return Err(invalid("grid", "required for model plants")),
            _ => {}
        }
        self.plant_model().map_err(|e| invalid("plant", e.to_string()))?;
        if let Some(g) = &self.grid {
            g.build().map_err(|e| invalid("grid", e.to_string()))?;
        }
        if let Some(g) = &self.analysis.grid {
            g.build().map_err(|e| invalid("analysis.grid", e.to_string()))?;
        }
        if self.analysis.k_basis == 0 {
            return Err(invalid("analysis.k_basis", "must be at least 1"));
        }
        self.analysis
            .alpha
            .resolve(&make_log_grid(1.0, 2.0, 2)?)
            .map_err(|e| invalid("analysis.alpha", e.to_string()))?;
        if !(self.analysis.drop_ratio > 0.0 && self.analysis.drop_ratio < 1.0) {
            return Err(invalid("analysis.drop_ratio", "must lie in (0, 1)"));
        }
        if self.analysis.bandpass_order == 0 {
            return Err(invalid("analysis.bandpass_order", "must be at least 1"));
        }
        if let BandpassMode::Band { w_lo, w_hi } = self.analysis.bandpass {
            if !(w_lo > 0.0 && w_lo < w_hi && w_hi.is_finite()) {
                return Err(invalid("analysis.bandpass", "need 0 < w_lo < w_hi"));
            }
        }
        if let Some(r) = &self.reference {
            r.validate()?;
        }
        self.validate_orders(&self.controller.orders)?;
        positive("controller.tol", self.controller.tol)?;
        positive("certify.eps", self.certify.eps)?;
        positive("certify.cancellation_distance", self.certify.cancellation_distance)?;
        if let Some(sim) = &self.simulate {
            positive("simulate.t_end", sim.t_end)?;
            positive("simulate.dt", sim.dt)?;
            if !matches!(self.plant_model()?, Some(TransferModel::Rational(_))) {
                return Err(invalid("simulate", "step responses need a rational plant"));
            }
        }
        Ok(())
    }

    pub fn validate_orders(&self, orders: &[usize]) -> Result<()> {
        if orders.is_empty() {
            return Err(invalid("controller.orders", "must not be empty"));
        }
        if orders.contains(&0) {
            return Err(invalid("controller.orders", "orders must be positive"));
        }
        Ok(())
    }

    /// The plant as an evaluable model, or `None` for CSV data.
    pub fn plant_model(&self) -> Result<Option<TransferModel>> {
        Ok(Some(match &self.plant {
            PlantSpec::Rational { num, den } => RationalLti::new(num.clone(), den.clone())?.into(),
            PlantSpec::DelayedRational { num, terms } => DelayedRational::new(num.clone(), terms.clone())?.into(),
            PlantSpec::OpenChannel(oc) => {
                oc.validate()?;
                oc.clone().into()
            }
            PlantSpec::Builtin { name } => builtin_plant(name)
                .ok_or_else(|| invalid("plant.name", format!("unknown builtin {name:?}")))?,
            PlantSpec::Csv { .. } => return Ok(None),
        }))
    }

    /// Grid of the analysis samples for model plants.
    pub fn analysis_grid(&self) -> Result<Option<AngularFrequencyGrid>> {
        if let Some(g) = &self.analysis.grid {
            return g.build().map(Some);
        }
        match &self.grid {
            Some(g) => make_log_grid(g.w_min / 10.0, g.w_max * 10.0, (4 * g.n).max(1000)).map(Some),
            None => Ok(None),
        }
    }
}

impl ReferenceSpec {
    fn validate(&self) -> Result<()> {
        if let Some(c) = &self.closed_loop {
            if self.order.is_some() || self.tau.is_some() || self.omega0.is_some() || self.xi.is_some() {
                return Err(invalid("reference.closed_loop", "cannot be combined with order/tau/omega0/xi"));
            }
            RationalLti::new(c.num.clone(), c.den.clone())
                .map_err(|e| invalid("reference.closed_loop", e.to_string()))?;
            return Ok(());
        }
        match self.order {
            Some(1) => {
                positive("reference.tau", self.tau.ok_or_else(|| invalid("reference.tau", "required for order 1"))?)
            }
            Some(2) => {
                positive(
                    "reference.omega0",
                    self.omega0.ok_or_else(|| invalid("reference.omega0", "required for order 2"))?,
                )?;
                positive("reference.xi", self.xi.ok_or_else(|| invalid("reference.xi", "required for order 2"))?)
            }
            Some(o) => Err(invalid("reference.order", format!("must be 1 or 2, got {o}"))),
            None => Err(invalid("reference.order", "required unless closed_loop is given")),
        }
    }

    /// `M_init` for the order-1/order-2 forms.
    pub fn m_init(&self) -> Result<Option<RationalLti>> {
        match self.order {
            Some(1) => RationalLti::first_order(self.tau.unwrap_or(1.0)).map(Some),
            Some(2) => RationalLti::second_order(self.omega0.unwrap_or(1.0), self.xi.unwrap_or(1.0)).map(Some),
            _ => Ok(None),
        }
    }
}

pub fn builtin_plant(name: &str) -> Option<TransferModel> {
    match name {
        "crystallizer_surrogate" => Some(scenarios::crystallizer_surrogate().into()),
        "open_channel" => Some(scenarios::open_channel().into()),
        _ => None,
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    AnalysisFailure,
    RealizationFailure,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::AnalysisFailure => 2,
            ExitStatus::RealizationFailure => 3,
        }
    }
}

/// Plant samples on the design grid plus, for models, the model itself.
#[derive(Debug, Clone)]
pub struct PlantData {
    pub model: Option<TransferModel>,
    pub design: FreqResponseData,
}

pub fn load_plant(cfg: &PipelineConfig) -> Result<PlantData> {
    let model = cfg.plant_model()?;
    let design = match (&cfg.plant, &model) {
        (PlantSpec::Csv { path }, _) => FreqResponseData::load(&cfg.resolve(path))?,
        (_, Some(m)) => {
            let grid = cfg.grid.as_ref().ok_or_else(|| invalid("grid", "required for model plants"))?;
            sample_response(m, &grid.build()?)?
        }
        (_, None) => unreachable!("non-CSV plants always have a model"),
    };
    Ok(PlantData { model, design })
}

impl PlantData {
    /// Samples used for the RHP analysis and the projection test.
    pub fn analysis_data(&self, cfg: &PipelineConfig) -> Result<FreqResponseData> {
        match (&self.model, cfg.analysis_grid()?) {
            (Some(m), Some(g)) => sample_response(m, &g),
            _ => Ok(self.design.clone()),
        }
    }
}

/// Runs the pole and zero analyses; failures end up in `errors`.
pub fn analyze(data: &FreqResponseData, spec: &AnalysisSpec) -> AnalysisReport {
    match unstable::analyze_plant(data, &spec.options()) {
        Ok(a) => AnalysisReport::from_analysis(&a),
        Err(e) => {
            let mut r = AnalysisReport::default();
            r.push_error("analysis", &e);
            r
        }
    }
}

/// Reference samples on the plant grid, and warnings about them.
pub fn reference_samples(
    spec: &ReferenceSpec,
    plant: &FreqResponseData,
    est: &InstabilityEstimate,
) -> Result<(FreqResponseData, Vec<String>)> {
    if let Some(c) = &spec.closed_loop {
        let c = RationalLti::new(c.num.clone(), c.den.clone())?;
        let k = sample_response(&c.into(), plant.grid())?;
        return Ok((certify::reconstruct_closed_loop(plant, &k)?, Vec::new()));
    }
    let m_init = spec
        .m_init()?
        .ok_or_else(|| invalid("reference.order", "required unless closed_loop is given"))?;
    let m = refmodel::make_achievable(m_init, est)?;
    Ok((m.sample(plant)?, m.warnings()))
}

pub fn achievable_reference(spec: &ReferenceSpec, est: &InstabilityEstimate) -> Result<Option<ReferenceModel>> {
    match spec.m_init()? {
        Some(m) if spec.closed_loop.is_none() => refmodel::make_achievable(m, est).map(Some),
        _ => Ok(None),
    }
}

/// Ideal controller samples, its Loewner pencil and realizations.
#[derive(Debug, Clone)]
pub struct Design {
    pub kstar: FreqResponseData,
    pub pencil: LoewnerPencil,
    pub minimal_order: usize,
    pub controllers: BTreeMap<usize, DescriptorSystem>,
    pub failures: BTreeMap<usize, String>,
}

pub fn design(plant: &FreqResponseData, m: &FreqResponseData, orders: &[usize], tol: f64) -> Result<Design> {
    let kstar = refmodel::ideal_controller_from_samples(plant, m)?;
    let pencil = loewner::build_pencil(&loewner::partition_points(&kstar)?)?;
    let minimal_order = loewner::minimal_order(&pencil, tol);
    let mut controllers = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for &r in orders {
        if r > minimal_order {
            failures.insert(
                r,
                Error::TruncationTooAggressive {
                    requested: r,
                    rank: minimal_order,
                }
                .to_string(),
            );
            continue;
        }
        match loewner::realize(&pencil, r) {
            Ok(sys) => {
                controllers.insert(r, sys);
            }
            Err(e) => {
                failures.insert(r, e.to_string());
            }
        }
    }
    Ok(Design {
        kstar,
        pencil,
        minimal_order,
        controllers,
        failures,
    })
}

pub fn write_controller(dir: &Path, order: usize, sys: &DescriptorSystem) -> Result<()> {
    report::write_json(
        &dir.join(format!("controller_{order}.json")),
        &ControllerReport::from_system(sys)?,
    )?;
    let text = format!("{}\n", loewner::zpk(sys)?);
    report::write_text(&dir.join(format!("controller_{order}.zpk.txt")), &text)
}

pub fn read_controller(dir: &Path, order: usize) -> Result<DescriptorSystem> {
    let path = dir.join(format!("controller_{order}.json"));
    let rep: ControllerReport = report::read_json(&path)?;
    rep.to_system().map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Small-gain certificate plus projection test of each closed loop. The
/// projection test uses `check_plant` (the analysis samples for model
/// plants), the certificate the design grid.
pub fn certify_stage(
    controllers: &BTreeMap<usize, DescriptorSystem>,
    kstar: &FreqResponseData,
    plant: &FreqResponseData,
    check_plant: &FreqResponseData,
    est: &InstabilityEstimate,
    spec: &CertifySpec,
    k_basis: usize,
) -> Result<CertificateReport> {
    let m = certify::reconstruct_closed_loop(plant, kstar)?;
    let certificate = certify::certify_controllers(controllers, kstar, plant, &m)?;
    let opts = ProjectionTestOptions {
        eps: spec.eps,
        k_basis,
        cancellation_distance: spec.cancellation_distance,
        ..ProjectionTestOptions::default()
    };
    let mut projection_tests = BTreeMap::new();
    for (&r, k) in controllers {
        let h = certify::reconstruct_closed_loop_with(check_plant, k)?;
        projection_tests.insert(r, certify::projection_stability_test(&h, est, Some(k), &opts)?);
    }
    Ok(CertificateReport {
        certificate,
        projection_tests,
    })
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub status: ExitStatus,
    pub analysis: AnalysisReport,
    pub certificate: Option<CertificateReport>,
    pub design: Option<Design>,
}

fn log(verbose: bool, msg: impl AsRef<str>) {
    if verbose {
        eprintln!("[lddc] {}", msg.as_ref());
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Runs every stage and writes all artifacts into `out`. Numerical
/// failures are reported through the status and `analysis.json`; only
/// configuration and I/O problems are returned as errors.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path, verbose: bool) -> Result<PipelineOutcome> {
    ensure_dir(out)?;
    let plant = load_plant(cfg)?;
    plant.design.save(&out.join("plant_response.csv"))?;
    log(verbose, format!("plant sampled on {} points", plant.design.len()));

    let check = plant.analysis_data(cfg)?;
    let mut analysis = analyze(&check, &cfg.analysis);
    let write_analysis = |a: &AnalysisReport| report::write_json(&out.join("analysis.json"), a);
    report::write_hankel_svals(&out.join("hankel_svals.csv"), &analysis.hankel_svals)?;
    if !analysis.errors.is_empty() {
        write_analysis(&analysis)?;
        return Ok(PipelineOutcome {
            status: ExitStatus::AnalysisFailure,
            analysis,
            certificate: None,
            design: None,
        });
    }
    log(
        verbose,
        format!("analysis: n_p = {}, n_z = {}", analysis.n_p, analysis.n_z),
    );
    let est = analysis.estimate();

    let fail_design = |mut analysis: AnalysisReport, stage: &str, e: &Error| -> Result<PipelineOutcome> {
        analysis.push_error(stage, e);
        write_analysis(&analysis)?;
        Ok(PipelineOutcome {
            status: ExitStatus::RealizationFailure,
            analysis,
            certificate: None,
            design: None,
        })
    };

    let reference = cfg.reference.clone().unwrap_or(ReferenceSpec {
        order: Some(1),
        tau: Some(1.0),
        ..ReferenceSpec::default()
    });
    let m = match reference_samples(&reference, &plant.design, &est) {
        Ok((m, warnings)) => {
            analysis.warnings.extend(warnings);
            m
        }
        Err(e) => return fail_design(analysis, "reference", &e),
    };
    let design = match design(&plant.design, &m, &cfg.controller.orders, cfg.controller.tol) {
        Ok(d) => d,
        Err(e) => return fail_design(analysis, "design", &e),
    };
    analysis.loewner_minimal_order = Some(design.minimal_order);
    design.kstar.save(&out.join("kstar_response.csv"))?;
    report::write_loewner_svals(&out.join("loewner_svals.csv"), &design.pencil)?;
    log(verbose, format!("ideal controller: minimal order {}", design.minimal_order));
    for (r, msg) in &design.failures {
        analysis.errors.push(report::StageError {
            stage: format!("realize order {r}"),
            message: msg.clone(),
        });
    }
    for (&r, sys) in &design.controllers {
        write_controller(out, r, sys)?;
    }

    let mut certificate = None;
    if !design.controllers.is_empty() {
        let model_check = plant.model.is_some();
        let check_plant = if model_check { &check } else { &plant.design };
        match certify_stage(
            &design.controllers,
            &design.kstar,
            &plant.design,
            check_plant,
            &est,
            &cfg.certify,
            cfg.analysis.k_basis,
        ) {
            Ok(c) => {
                report::write_json(&out.join("certificate.json"), &c)?;
                log(
                    verbose,
                    format!(
                        "gamma = {:.6e}, certified orders {:?}",
                        c.certificate.gamma_tilde,
                        c.certificate.certified_orders()
                    ),
                );
                certificate = Some(c);
            }
            Err(e) => analysis.push_error("certify", &e),
        }
        for (&r, k) in &design.controllers {
            match certify::reconstruct_closed_loop_with(&plant.design, k) {
                Ok(h) => h.save(&out.join(format!("closed_loop_{r}.csv")))?,
                Err(e) => analysis.push_error(&format!("closed loop order {r}"), &e),
            }
        }
        if let (Some(sim), Some(TransferModel::Rational(p))) = (&cfg.simulate, &plant.model) {
            for (&r, k) in &design.controllers {
                match certify::step_response(p, k, sim.t_end, sim.dt) {
                    Ok(step) => {
                        if let Some(w) = &step.stiffness_warning {
                            analysis.warnings.push(format!("order {r}: {w}"));
                        }
                        let path = out.join(format!("step_{r}.csv"));
                        let file = std::fs::File::create(&path).map_err(|source| Error::Io {
                            path: path.display().to_string(),
                            source,
                        })?;
                        step.write_csv(file)?;
                    }
                    Err(e) => analysis.push_error(&format!("simulate order {r}"), &e),
                }
            }
        }
    }
    write_analysis(&analysis)?;
    let status = if design.failures.is_empty() {
        ExitStatus::Success
    } else {
        ExitStatus::RealizationFailure
    };
    Ok(PipelineOutcome {
        status,
        analysis,
        certificate,
        design: Some(design),
    })
}
