//! Transfer-function evaluators and frequency-response sample sets.
//!
//! A [`TransferModel`] is evaluated at complex frequencies; sampling it on an
//! [`AngularFrequencyGrid`] along the imaginary axis produces
//! [`FreqResponseData`], the value passed between all later stages.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;

/// Denominator magnitudes below this are treated as a pole hit.
pub const DENOMINATOR_FLOOR: f64 = 1e-300;

/// Header of the frequency-response CSV format.
pub const CSV_HEADER: [&str; 3] = ["omega_rad_s", "re", "im"];

/// Strictly increasing, positive angular frequencies in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularFrequencyGrid {
    omegas: Vec<f64>,
}

impl AngularFrequencyGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 frequencies, got {}",
                omegas.len()
            )));
        }
        for (i, w) in omegas.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "omega[{i}] = {w} is not a positive finite frequency"
                )));
            }
            if i > 0 && omegas[i - 1] >= *w {
                return Err(Error::InvalidGrid(format!(
                    "omega[{i}] = {w} does not exceed omega[{}] = {}",
                    i - 1,
                    omegas[i - 1]
                )));
            }
        }
        Ok(Self { omegas })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn w_min(&self) -> f64 {
        self.omegas[0]
    }

    pub fn w_max(&self) -> f64 {
        self.omegas[self.omegas.len() - 1]
    }

    /// Points `j·omega` on the positive imaginary axis.
    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.omegas.iter().map(|w| Complex64::new(0.0, *w))
    }
}

/// `n` logarithmically spaced frequencies from `w_min` to `w_max`.
pub fn make_log_grid(w_min: f64, w_max: f64, n: usize) -> Result<AngularFrequencyGrid> {
    if !(w_min > 0.0 && w_min.is_finite() && w_max.is_finite() && w_min < w_max) {
        return Err(Error::InvalidRange(format!(
            "need 0 < w_min < w_max, got w_min = {w_min}, w_max = {w_max}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidRange(format!("need n >= 2, got {n}")));
    }
    let (l0, l1) = (w_min.log10(), w_max.log10());
    let step = (l1 - l0) / (n - 1) as f64;
    let mut omegas: Vec<f64> = (0..n).map(|i| 10f64.powf(l0 + step * i as f64)).collect();
    omegas[0] = w_min;
    omegas[n - 1] = w_max;
    AngularFrequencyGrid::new(omegas).map_err(|e| Error::InvalidRange(e.to_string()))
}

/// Complex response samples paired one-to-one with a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqResponseData {
    grid: AngularFrequencyGrid,
    samples: Vec<Complex64>,
}

impl FreqResponseData {
    pub fn new(grid: AngularFrequencyGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a grid of {} frequencies",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument(format!("sample {i} is not finite")));
        }
        Ok(Self { grid, samples })
    }

    pub fn grid(&self) -> &AngularFrequencyGrid {
        &self.grid
    }

    pub fn omegas(&self) -> &[f64] {
        self.grid.omegas()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same grid, samples transformed pointwise.
    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Result<Self> {
        let samples = self
            .omegas()
            .iter()
            .zip(&self.samples)
            .map(|(w, z)| f(*w, *z))
            .collect();
        Self::new(self.grid.clone(), samples)
    }

    /// Pointwise combination with data on the same grid.
    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("response grids differ".into()));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Self::new(self.grid.clone(), samples)
    }

    /// Euclidean norm of the sample vector.
    pub fn l2_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Parse {
            path: "<csv>".into(),
            message: e.to_string(),
        };
        w.write_record(CSV_HEADER).map_err(io)?;
        for (omega, z) in self.omegas().iter().zip(&self.samples) {
            w.write_record([omega.to_string(), z.re.to_string(), z.im.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: "<csv>".into(),
            message,
        };
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = r.headers().map_err(|e| parse_err(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(parse_err(format!(
                "expected header {}, found {}",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut omegas = Vec::new();
        let mut samples = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| parse_err(e.to_string()))?;
            if rec.len() != 3 {
                return Err(parse_err(format!("row {}: expected 3 fields", line + 1)));
            }
            let field = |k: usize| -> Result<f64> {
                rec[k].parse::<f64>().map_err(|e| {
                    parse_err(format!("row {}, column {}: {e}", line + 1, CSV_HEADER[k]))
                })
            };
            omegas.push(field(0)?);
            samples.push(Complex64::new(field(1)?, field(2)?));
        }
        let grid = AngularFrequencyGrid::new(omegas).map_err(|e| parse_err(e.to_string()))?;
        Self::new(grid, samples).map_err(|e| parse_err(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| relabel(e, path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::read_csv(std::io::BufReader::new(file)).map_err(|e| relabel(e, path))
    }
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.display().to_string(),
            message,
        },
        Error::Io { source, .. } => Error::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    }
}

/// Rational transfer function `num(s)/den(s)` with real coefficients in
/// descending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalLti {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl RationalLti {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::InvalidModel("empty coefficient list".into()));
        }
        if num.iter().chain(&den).any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        let den = poly::trim(&den);
        if den[0] == 0.0 {
            return Err(Error::InvalidModel("denominator is identically zero".into()));
        }
        Ok(Self {
            num: poly::trim(&num),
            den,
        })
    }

    pub fn gain(k: f64) -> Self {
        Self {
            num: vec![k],
            den: vec![1.0],
        }
    }

    /// `1/(1 + tau s)`.
    pub fn first_order(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidModel(format!("tau must be positive, got {tau}")));
        }
        Self::new(vec![1.0], vec![tau, 1.0])
    }

    /// `1/(1 + 2 xi s/omega0 + s^2/omega0^2)`.
    pub fn second_order(omega0: f64, xi: f64) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite() && xi > 0.0 && xi.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "omega0 and xi must be positive, got omega0 = {omega0}, xi = {xi}"
            )));
        }
        Self::new(vec![1.0], vec![1.0 / (omega0 * omega0), 2.0 * xi / omega0, 1.0])
    }

    /// `k · Π(s - z) / Π(s - p)`.
    pub fn from_zpk(zeros: &[Complex64], poles: &[Complex64], k: f64) -> Result<Self> {
        Self::new(poly::scale(&poly::from_roots(zeros), k), poly::from_roots(poles))
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = poly::horner(&self.den, s);
        if d.norm() < DENOMINATOR_FLOOR {
            return Err(Error::DenominatorUnderflow { s, index: None });
        }
        Ok(poly::horner(&self.num, s) / d)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        poly::roots(&self.den)
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.num == [0.0] {
            return Ok(Vec::new());
        }
        poly::roots(&self.num)
    }

    /// True when every pole lies in the open left half-plane.
    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.poles()?.iter().all(|p| p.re < 0.0))
    }

    pub fn is_proper(&self) -> bool {
        poly::degree(&self.num) <= poly::degree(&self.den)
    }
}

/// One denominator term `coeffs(s)·e^{-s·delay}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayTerm {
    pub coeffs: Vec<f64>,
    pub delay: f64,
}

/// `num(s) / Σ_k den_k(s)·e^{-s τ_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayedRational {
    num: Vec<f64>,
    terms: Vec<DelayTerm>,
}

impl DelayedRational {
    pub fn new(num: Vec<f64>, terms: Vec<DelayTerm>) -> Result<Self> {
        if num.is_empty() || num.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("numerator must be nonempty and finite".into()));
        }
        if terms.is_empty() {
            return Err(Error::InvalidModel("at least one denominator term is required".into()));
        }
        let mut clean = Vec::with_capacity(terms.len());
        for (k, t) in terms.into_iter().enumerate() {
            if !(t.delay >= 0.0 && t.delay.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "term {k}: delay must be nonnegative, got {}",
                    t.delay
                )));
            }
            if t.coeffs.is_empty() || t.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidModel(format!("term {k}: invalid coefficients")));
            }
            let coeffs = poly::trim(&t.coeffs);
            if t.delay == 0.0 && coeffs[0] == 0.0 {
                return Err(Error::InvalidModel(format!(
                    "term {k}: zero-delay polynomial has a zero leading coefficient"
                )));
            }
            clean.push(DelayTerm {
                coeffs,
                delay: t.delay,
            });
        }
        Ok(Self {
            num: poly::trim(&num),
            terms: clean,
        })
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn terms(&self) -> &[DelayTerm] {
        &self.terms
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let mut d = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let p = poly::horner(&t.coeffs, s);
            d += if t.delay == 0.0 { p } else { p * (-s * t.delay).exp() };
        }
        if !(d.norm() >= DENOMINATOR_FLOOR) {
            return Err(Error::DenominatorUnderflow { s, index: None });
        }
        Ok(poly::horner(&self.num, s) / d)
    }
}

/// Open-channel level-to-flow transfer with
/// `λ_{1,2}(s) = a s + b ± sqrt(c s² + d s + e)` and
/// `G(s) = (λ1 e^{λ1 x} − λ2 e^{λ2 x}) / (B0 s (e^{λ1 L} − e^{λ2 L}))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenChannel {
    /// Width in m.
    pub b0: f64,
    /// Reach length in m.
    pub length: f64,
    /// Abscissa of the measured level in m.
    pub x: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl OpenChannel {
    pub fn validate(&self) -> Result<()> {
        let all = [self.b0, self.length, self.x, self.a, self.b, self.c, self.d, self.e];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("open-channel parameters must be finite".into()));
        }
        if !(self.b0 > 0.0 && self.length > 0.0) {
            return Err(Error::InvalidModel("B0 and L must be positive".into()));
        }
        if !(0.0..=self.length).contains(&self.x) {
            return Err(Error::InvalidModel("x must lie in [0, L]".into()));
        }
        Ok(())
    }

    pub fn lambdas(&self, s: Complex64) -> (Complex64, Complex64) {
        let root = (s * s * self.c + s * self.d + self.e).sqrt();
        let base = s * self.a + self.b;
        (base + root, base - root)
    }

    /// Evaluated after dividing through by `e^{λ1 L}`; `Re λ1 ≥ Re λ2` with
    /// the principal square root, so no exponential overflows.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let (l1, l2) = self.lambdas(s);
        let den = s * self.b0 * (1.0 - ((l2 - l1) * self.length).exp());
        if !(den.norm() >= DENOMINATOR_FLOOR) {
            return Err(Error::DenominatorUnderflow { s, index: None });
        }
        let num = l1 * (l1 * (self.x - self.length)).exp()
            - l2 * (l2 * self.x - l1 * self.length).exp();
        Ok(num / den)
    }
}

/// Any plant or controller model that can be evaluated at complex `s`.
#[derive(Debug, Clone, PartialEq)]
pub enum TransferModel {
    Rational(RationalLti),
    DelayedRational(DelayedRational),
    OpenChannel(OpenChannel),
}

impl From<RationalLti> for TransferModel {
    fn from(m: RationalLti) -> Self {
        TransferModel::Rational(m)
    }
}

impl From<DelayedRational> for TransferModel {
    fn from(m: DelayedRational) -> Self {
        TransferModel::DelayedRational(m)
    }
}

impl From<OpenChannel> for TransferModel {
    fn from(m: OpenChannel) -> Self {
        TransferModel::OpenChannel(m)
    }
}

pub fn eval_transfer(model: &TransferModel, s: Complex64) -> Result<Complex64> {
    match model {
        TransferModel::Rational(m) => m.eval(s),
        TransferModel::DelayedRational(m) => m.eval(s),
        TransferModel::OpenChannel(m) => m.eval(s),
    }
}

/// Samples `model(j omega)` on every grid point.
pub fn sample_response(model: &TransferModel, grid: &AngularFrequencyGrid) -> Result<FreqResponseData> {
    let samples = grid
        .points()
        .enumerate()
        .map(|(i, s)| {
            eval_transfer(model, s).map_err(|e| match e {
                Error::DenominatorUnderflow { s, .. } => Error::DenominatorUnderflow { s, index: Some(i) },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FreqResponseData::new(grid.clone(), samples)
}

/// Pointwise reciprocal of the samples.
pub fn invert_response(data: &FreqResponseData) -> Result<FreqResponseData> {
    let floor = 1e-12 * data.max_abs();
    if let Some(i) = data.samples().iter().position(|z| !(z.norm() > floor)) {
        return Err(Error::NearZeroSample(i));
    }
    data.map(|_, z| z.inv())
}
