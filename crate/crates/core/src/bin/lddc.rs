use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lddc::certify;
use lddc::pipeline::{self, PipelineConfig, PlantSpec, ReferenceSpec};
use lddc::plants::{make_log_grid, sample_response, FreqResponseData, TransferModel};
use lddc::report::{self, AnalysisReport};
use lddc::Error;

const EX_USAGE: u8 = 64;
const EX_NOINPUT: u8 = 66;

#[derive(Parser)]
#[command(name = "lddc", version, about = "Loewner data-driven controller design")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the configured plant into plant_response.csv.
    Sample {
        #[arg(long)]
        w_min: Option<f64>,
        #[arg(long)]
        w_max: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Estimate RHP poles and zeros of a response CSV.
    Analyze {
        /// Defaults to <out>/plant_response.csv.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Compute the ideal controller and realize the requested orders.
    Design {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Defaults to <out>/analysis.json.
        #[arg(long)]
        analysis: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        orders: Vec<usize>,
    },
    /// Certify the controllers written by `design`.
    Certify {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Defaults to <out>/kstar_response.csv.
        #[arg(long)]
        kstar: Option<PathBuf>,
        #[arg(long)]
        analysis: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<usize>>,
    },
    /// Step response of the rational plant in feedback with a controller.
    Simulate {
        /// Controller JSON; defaults to <out>/controller_<order>.json.
        #[arg(long)]
        controller: Option<PathBuf>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Run every stage.
    Pipeline,
}

enum Failure {
    Usage(String),
    File(String),
    Stage(u8, String),
}

impl Failure {
    fn from_error(e: Error, stage_code: u8) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            Error::Io { .. } | Error::Parse { .. } => Failure::File(e.to_string()),
            other => Failure::Stage(stage_code, other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EX_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(EX_USAGE)
        }
        Err(Failure::File(m)) => {
            eprintln!("file error: {m}");
            ExitCode::from(EX_NOINPUT)
        }
        Err(Failure::Stage(code, m)) => {
            eprintln!("error: {m}");
            ExitCode::from(code)
        }
    }
}

struct Ctx {
    cfg: Option<PipelineConfig>,
    out: PathBuf,
    verbose: bool,
}

impl Ctx {
    fn cfg(&self) -> Result<&PipelineConfig, Failure> {
        self.cfg
            .as_ref()
            .ok_or_else(|| Failure::Usage("this subcommand needs --config".into()))
    }

    fn path_or(&self, given: &Option<PathBuf>, default: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out.join(default))
    }

    fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("[lddc] {msg}");
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let cfg = match &cli.config {
        Some(p) => Some(PipelineConfig::load(p).map_err(|e| Failure::from_error(e, EX_USAGE))?),
        None => None,
    };
    let out = match (&cli.out, &cfg) {
        (Some(o), _) => o.clone(),
        (None, Some(c)) => c.out_dir.as_ref().map(|d| c.resolve(d)).unwrap_or_else(|| PathBuf::from(".")),
        (None, None) => PathBuf::from("."),
    };
    let ctx = Ctx {
        cfg,
        out,
        verbose: cli.verbose,
    };
    pipeline::ensure_dir(&ctx.out).map_err(|e| Failure::from_error(e, EX_NOINPUT))?;
    match &cli.command {
        Command::Sample { w_min, w_max, n } => sample(&ctx, *w_min, *w_max, *n),
        Command::Analyze { input } => analyze(&ctx, input),
        Command::Design {
            input,
            analysis,
            orders,
        } => design(&ctx, input, analysis, orders),
        Command::Certify {
            input,
            kstar,
            analysis,
            orders,
        } => certify_cmd(&ctx, input, kstar, analysis, orders.as_deref()),
        Command::Simulate {
            controller,
            order,
            t_end,
            dt,
        } => simulate(&ctx, controller, *order, *t_end, *dt),
        Command::Pipeline => {
            let cfg = ctx.cfg()?;
            let outcome = pipeline::run_pipeline(cfg, &ctx.out, ctx.verbose).map_err(|e| Failure::from_error(e, 2))?;
            for e in &outcome.analysis.errors {
                eprintln!("{}: {}", e.stage, e.message);
            }
            Ok(outcome.status.code() as u8)
        }
    }
}

fn sample(ctx: &Ctx, w_min: Option<f64>, w_max: Option<f64>, n: Option<usize>) -> Result<u8, Failure> {
    let cfg = ctx.cfg()?;
    let usage = |e: Error| Failure::from_error(e, EX_USAGE);
    let model = cfg
        .plant_model()
        .map_err(usage)?
        .ok_or_else(|| Failure::Usage("sample needs a model plant, not CSV data".into()))?;
    let g = cfg.grid.as_ref();
    let pick = |v: Option<f64>, f: fn(&pipeline::GridSpec) -> f64, name: &str| {
        v.or(g.map(f)).ok_or_else(|| Failure::Usage(format!("missing {name}")))
    };
    let grid = make_log_grid(
        pick(w_min, |g| g.w_min, "--w-min")?,
        pick(w_max, |g| g.w_max, "--w-max")?,
        n.or(g.map(|g| g.n)).ok_or_else(|| Failure::Usage("missing --n".into()))?,
    )
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let data = sample_response(&model, &grid).map_err(|e| Failure::from_error(e, 2))?;
    let path = ctx.out.join("plant_response.csv");
    data.save(&path).map_err(|e| Failure::from_error(e, EX_NOINPUT))?;
    ctx.log(&format!("wrote {} samples to {}", data.len(), path.display()));
    Ok(0)
}

fn load_csv(path: &Path) -> Result<FreqResponseData, Failure> {
    FreqResponseData::load(path).map_err(|e| Failure::from_error(e, EX_NOINPUT))
}

fn analyze(ctx: &Ctx, input: &Option<PathBuf>) -> Result<u8, Failure> {
    let data = load_csv(&ctx.path_or(input, "plant_response.csv"))?;
    let spec = ctx.cfg.as_ref().map(|c| c.analysis.clone()).unwrap_or_default();
    let rep = pipeline::analyze(&data, &spec);
    let file = |e| Failure::from_error(e, EX_NOINPUT);
    report::write_json(&ctx.out.join("analysis.json"), &rep).map_err(file)?;
    report::write_hankel_svals(&ctx.out.join("hankel_svals.csv"), &rep.hankel_svals).map_err(file)?;
    for e in &rep.errors {
        eprintln!("{}: {}", e.stage, e.message);
    }
    ctx.log(&format!("n_p = {}, n_z = {}", rep.n_p, rep.n_z));
    Ok(if rep.errors.is_empty() { 0 } else { 2 })
}

fn orders_from(ctx: &Ctx, given: Option<&[usize]>) -> Result<Vec<usize>, Failure> {
    let orders = match (given, &ctx.cfg) {
        (Some(o), _) => o.to_vec(),
        (None, Some(c)) => c.controller.orders.clone(),
        (None, None) => return Err(Failure::Usage("no orders given; pass --orders or --config".into())),
    };
    if orders.is_empty() {
        return Err(Failure::Usage("orders list is empty".into()));
    }
    if orders.contains(&0) {
        return Err(Failure::Usage("orders must be positive".into()));
    }
    Ok(orders)
}

fn design(ctx: &Ctx, input: &Option<PathBuf>, analysis: &Option<PathBuf>, orders: &[usize]) -> Result<u8, Failure> {
    let orders = orders_from(ctx, (!orders.is_empty()).then_some(orders))?;
    let plant = load_csv(&ctx.path_or(input, "plant_response.csv"))?;
    let rep: AnalysisReport = report::read_json(&ctx.path_or(analysis, "analysis.json"))
        .map_err(|e| Failure::from_error(e, EX_NOINPUT))?;
    let reference = ctx
        .cfg
        .as_ref()
        .and_then(|c| c.reference.clone())
        .unwrap_or(ReferenceSpec {
            order: Some(1),
            tau: Some(1.0),
            ..ReferenceSpec::default()
        });
    let tol = ctx.cfg.as_ref().map(|c| c.controller.tol).unwrap_or(lddc::loewner::DEFAULT_TOL);
    let (m, warnings) =
        pipeline::reference_samples(&reference, &plant, &rep.estimate()).map_err(|e| Failure::from_error(e, 3))?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let d = pipeline::design(&plant, &m, &orders, tol).map_err(|e| Failure::from_error(e, 3))?;
    let file = |e| Failure::from_error(e, EX_NOINPUT);
    d.kstar.save(&ctx.out.join("kstar_response.csv")).map_err(file)?;
    report::write_loewner_svals(&ctx.out.join("loewner_svals.csv"), &d.pencil).map_err(file)?;
    for (&r, sys) in &d.controllers {
        pipeline::write_controller(&ctx.out, r, sys).map_err(|e| Failure::from_error(e, 3))?;
    }
    ctx.log(&format!("minimal order {}", d.minimal_order));
    for (r, msg) in &d.failures {
        eprintln!("order {r}: {msg}");
    }
    Ok(if d.failures.is_empty() { 0 } else { 3 })
}

fn certify_cmd(
    ctx: &Ctx,
    input: &Option<PathBuf>,
    kstar: &Option<PathBuf>,
    analysis: &Option<PathBuf>,
    orders: Option<&[usize]>,
) -> Result<u8, Failure> {
    let orders = orders_from(ctx, orders)?;
    let plant = load_csv(&ctx.path_or(input, "plant_response.csv"))?;
    let kstar = load_csv(&ctx.path_or(kstar, "kstar_response.csv"))?;
    let analysis_path = ctx.path_or(analysis, "analysis.json");
    let est = if analysis_path.exists() {
        report::read_json::<AnalysisReport>(&analysis_path)
            .map_err(|e| Failure::from_error(e, EX_NOINPUT))?
            .estimate()
    } else {
        Default::default()
    };
    let mut controllers = BTreeMap::new();
    for r in orders {
        let sys = pipeline::read_controller(&ctx.out, r).map_err(|e| Failure::from_error(e, EX_NOINPUT))?;
        controllers.insert(r, sys);
    }
    let (spec, k_basis) = match &ctx.cfg {
        Some(c) => (c.certify, c.analysis.k_basis),
        None => (Default::default(), lddc::hardy::DEFAULT_K_BASIS),
    };
    let cert = pipeline::certify_stage(&controllers, &kstar, &plant, &plant, &est, &spec, k_basis)
        .map_err(|e| Failure::from_error(e, 3))?;
    report::write_json(&ctx.out.join("certificate.json"), &cert).map_err(|e| Failure::from_error(e, EX_NOINPUT))?;
    ctx.log(&format!(
        "gamma = {:.6e}, certified orders {:?}",
        cert.certificate.gamma_tilde,
        cert.certificate.certified_orders()
    ));
    Ok(0)
}

fn simulate(
    ctx: &Ctx,
    controller: &Option<PathBuf>,
    order: Option<usize>,
    t_end: Option<f64>,
    dt: Option<f64>,
) -> Result<u8, Failure> {
    let cfg = ctx.cfg()?;
    let plant = match cfg.plant_model().map_err(|e| Failure::from_error(e, EX_USAGE))? {
        Some(TransferModel::Rational(p)) => p,
        _ if matches!(cfg.plant, PlantSpec::Csv { .. }) => {
            return Err(Failure::Usage("simulate needs a rational plant, not CSV data".into()))
        }
        _ => return Err(Failure::Usage("simulate needs a rational plant".into())),
    };
    let (path, tag) = match (controller, order) {
        (Some(p), _) => (p.clone(), order.map(|r| r.to_string()).unwrap_or_else(|| "controller".into())),
        (None, Some(r)) => (ctx.out.join(format!("controller_{r}.json")), r.to_string()),
        (None, None) => return Err(Failure::Usage("pass --controller or --order".into())),
    };
    let rep: report::ControllerReport = report::read_json(&path).map_err(|e| Failure::from_error(e, EX_NOINPUT))?;
    let k = rep
        .to_system()
        .map_err(|e| Failure::File(format!("{}: {e}", path.display())))?;
    let sim = cfg.simulate;
    let t_end = t_end.or(sim.map(|s| s.t_end)).unwrap_or(10.0);
    let dt = dt.or(sim.map(|s| s.dt)).unwrap_or(1e-3);
    let step = certify::step_response(&plant, &k, t_end, dt).map_err(|e| Failure::from_error(e, 3))?;
    if let Some(w) = &step.stiffness_warning {
        eprintln!("warning: {w}");
    }
    let out = ctx.out.join(format!("step_{tag}.csv"));
    let f = std::fs::File::create(&out).map_err(|e| Failure::File(format!("{}: {e}", out.display())))?;
    step.write_csv(f).map_err(|e| Failure::from_error(e, EX_NOINPUT))?;
    ctx.log(&format!("wrote {} samples to {}", step.t.len(), out.display()));
    Ok(0)
}
