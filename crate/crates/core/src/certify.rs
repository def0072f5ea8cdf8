//! Small-gain certification of reduced controllers and closed-loop checks.
//!
//! With `Δ = K_r − K*`, the loop `(P, K_r)` is internally stable for every
//! stable `Δ` with `‖Δ‖∞ < 1/γ` where `γ ≥ ‖P(1 − M)‖∞`. Both norms are
//! estimated as maxima over the frequency grid.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{self, Alpha};
use crate::linalg;
use crate::loewner::{self, DescriptorSystem, LoewnerPencil};
use crate::plants::{FreqResponseData, RationalLti};
use crate::refmodel::ReferenceModel;
use crate::unstable::InstabilityEstimate;

pub const DEFAULT_EPS: f64 = 1e-3;
pub const CANCELLATION_DISTANCE: f64 = 1e-3;

/// Closed-loop response samples `H = PK/(1 + PK)`.
pub type ClosedLoopData = FreqResponseData;

/// `max_i |P(jω_i)·(1 − M(jω_i))|`.
pub fn gamma_bound(plant: &FreqResponseData, m: &ReferenceModel) -> Result<f64> {
    gamma_bound_samples(plant, &m.sample(plant)?)
}

pub fn gamma_bound_samples(plant: &FreqResponseData, m: &FreqResponseData) -> Result<f64> {
    if plant.grid() != m.grid() {
        return Err(Error::InvalidGrid("plant and reference grids differ".into()));
    }
    Ok(plant
        .samples()
        .iter()
        .zip(m.samples())
        .map(|(p, mv)| (p * (1.0 - mv)).norm())
        .fold(0.0, f64::max))
}

/// `max_i |K_r(jω_i) − K*(jω_i)|`.
pub fn delta_norm(kr: &DescriptorSystem, kstar: &FreqResponseData) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (s, k) in kstar.grid().points().zip(kstar.samples()) {
        worst = worst.max((kr.eval(s)? - k).norm());
    }
    Ok(worst)
}

/// Certification outcome for one reduction order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCertificate {
    pub order: usize,
    pub delta_norm: Option<f64>,
    pub controller_stable: bool,
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub gamma_tilde: f64,
    pub bound: f64,
    pub orders: Vec<OrderCertificate>,
    pub max_certified_order: Option<usize>,
}

impl StabilityCertificate {
    /// Marks each order certified iff its controller is stable and its
    /// error norm is below `1/gamma_tilde`.
    pub fn from_entries(gamma_tilde: f64, entries: Vec<OrderCertificate>) -> Self {
        let bound = 1.0 / gamma_tilde;
        let orders: Vec<OrderCertificate> = entries
            .into_iter()
            .map(|mut e| {
                e.certified = e.controller_stable && e.delta_norm.is_some_and(|d| d < bound);
                e
            })
            .collect();
        let max_certified_order = orders.iter().filter(|e| e.certified).map(|e| e.order).max();
        Self {
            gamma_tilde,
            bound,
            orders,
            max_certified_order,
        }
    }

    pub fn delta_norms(&self) -> BTreeMap<usize, f64> {
        self.orders
            .iter()
            .filter_map(|e| e.delta_norm.map(|d| (e.order, d)))
            .collect()
    }

    pub fn certified_orders(&self) -> Vec<usize> {
        self.orders.iter().filter(|e| e.certified).map(|e| e.order).collect()
    }
}

/// Certificate together with the realized controllers.
#[derive(Debug, Clone)]
pub struct Certification {
    pub certificate: StabilityCertificate,
    pub controllers: BTreeMap<usize, DescriptorSystem>,
}

pub fn certify_orders(
    pencil: &LoewnerPencil,
    kstar: &FreqResponseData,
    plant: &FreqResponseData,
    m: &ReferenceModel,
    orders: &[usize],
) -> Result<Certification> {
    certify_orders_with_samples(pencil, kstar, plant, &m.sample(plant)?, orders)
}

/// Realize, measure and certify every requested order. Failures of one
/// order are recorded in its entry and do not stop the others.
pub fn certify_orders_with_samples(
    pencil: &LoewnerPencil,
    kstar: &FreqResponseData,
    plant: &FreqResponseData,
    m: &FreqResponseData,
    orders: &[usize],
) -> Result<Certification> {
    if orders.is_empty() {
        return Err(Error::InvalidArgument("no orders to certify".into()));
    }
    let mut realized = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for &order in orders {
        match loewner::realize(pencil, order) {
            Ok(sys) => {
                realized.insert(order, sys);
            }
            Err(e) => {
                failures.insert(order, e.to_string());
            }
        }
    }
    let mut certificate = certify_controllers(&realized, kstar, plant, m)?;
    for (order, message) in failures {
        certificate.orders.push(OrderCertificate {
            order,
            delta_norm: None,
            controller_stable: false,
            certified: false,
            error: Some(message),
        });
    }
    let mut entries = certificate.orders;
    entries.sort_by_key(|e| orders.iter().position(|o| *o == e.order));
    Ok(Certification {
        certificate: StabilityCertificate::from_entries(certificate.gamma_tilde, entries),
        controllers: realized,
    })
}

/// Certificate for controllers that are already realized, keyed by order.
pub fn certify_controllers(
    controllers: &BTreeMap<usize, DescriptorSystem>,
    kstar: &FreqResponseData,
    plant: &FreqResponseData,
    m: &FreqResponseData,
) -> Result<StabilityCertificate> {
    if controllers.is_empty() {
        return Err(Error::InvalidArgument("no orders to certify".into()));
    }
    let gamma = gamma_bound_samples(plant, m)?;
    let entries = controllers
        .iter()
        .map(|(&order, sys)| {
            let outcome = loewner::controller_poles(sys).and_then(|poles| Ok((poles, delta_norm(sys, kstar)?)));
            match outcome {
                Ok((poles, delta)) => OrderCertificate {
                    order,
                    delta_norm: Some(delta),
                    controller_stable: loewner::is_stable(&poles),
                    certified: false,
                    error: None,
                },
                Err(e) => OrderCertificate {
                    order,
                    delta_norm: None,
                    controller_stable: false,
                    certified: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(StabilityCertificate::from_entries(gamma, entries))
}

/// `H_i = P_i K_i / (1 + P_i K_i)`.
pub fn reconstruct_closed_loop(plant: &FreqResponseData, k: &FreqResponseData) -> Result<ClosedLoopData> {
    if plant.grid() != k.grid() {
        return Err(Error::InvalidGrid("plant and controller grids differ".into()));
    }
    let mut out = Vec::with_capacity(plant.len());
    for (i, (p, kv)) in plant.samples().iter().zip(k.samples()).enumerate() {
        let loop_gain = p * kv;
        let den = 1.0 + loop_gain;
        if den.norm() <= 1e-12 {
            return Err(Error::AlgebraicLoopSingular(i));
        }
        out.push(loop_gain / den);
    }
    FreqResponseData::new(plant.grid().clone(), out)
}

pub fn reconstruct_closed_loop_with(plant: &FreqResponseData, k: &DescriptorSystem) -> Result<ClosedLoopData> {
    reconstruct_closed_loop(plant, &k.response_on(plant.grid())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionTestOptions {
    pub eps: f64,
    pub k_basis: usize,
    pub alpha: Alpha,
    pub cancellation_distance: f64,
}

impl Default for ProjectionTestOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            k_basis: hardy::DEFAULT_K_BASIS,
            alpha: Alpha::Auto,
            cancellation_distance: CANCELLATION_DISTANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionTest {
    pub verdict: Verdict,
    pub antistable_fraction: f64,
    pub cancellation: bool,
}

/// Three-valued stability verdict from the antistable content of `h` and a
/// check that no controller zero cancels an estimated plant RHP pole.
pub fn projection_stability_test(
    h: &ClosedLoopData,
    est: &InstabilityEstimate,
    k: Option<&DescriptorSystem>,
    opts: &ProjectionTestOptions,
) -> Result<ProjectionTest> {
    let k_basis = opts.k_basis.min((h.len() - 1) / 2).max(1);
    let split = hardy::project(h, k_basis, opts.alpha)?;
    let fraction = split.antistable_fraction();
    let cancellation = match k {
        Some(sys) if !est.rhp_poles.is_empty() => {
            let zeros = loewner::controller_zeros(sys)?;
            est.rhp_poles.iter().any(|p| {
                zeros
                    .iter()
                    .any(|z| (z - p).norm() <= opts.cancellation_distance * p.norm())
            })
        }
        _ => false,
    };
    let verdict = if fraction < opts.eps && !cancellation {
        Verdict::Stable
    } else if fraction > 10.0 * opts.eps {
        Verdict::Unstable
    } else {
        Verdict::Inconclusive
    };
    Ok(ProjectionTest {
        verdict,
        antistable_fraction: fraction,
        cancellation,
    })
}

/// Unit-step response samples of a rational closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResponse {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub stiffness_warning: Option<String>,
}

impl StepResponse {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Parse {
            path: "<csv>".into(),
            message: e.to_string(),
        };
        w.write_record(["t_s", "y"]).map_err(err)?;
        for (t, y) in self.t.iter().zip(&self.y) {
            w.write_record([t.to_string(), y.to_string()]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })
    }
}

/// Closed-loop state space `ẋ = A x + B r`, `y = C x + D r` of the unit
/// feedback loop around `plant` and `k`.
fn closed_loop_state_space(
    plant: &RationalLti,
    k: &DescriptorSystem,
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>, f64)> {
    let (ap, bp, cp, dp) = DescriptorSystem::from_rational(plant)?.to_state_space()?;
    let (ak, bk, ck, dk) = k.to_state_space()?;
    let (np, nk) = (ap.nrows(), ak.nrows());
    let g = 1.0 + dp * dk;
    if g.abs() <= 1e-12 {
        return Err(Error::InvalidArgument("ill-posed loop: 1 + D_p D_k = 0".into()));
    }
    let n = np + nk;
    let mut cy = DVector::zeros(n);
    cy.rows_mut(0, np).copy_from(&(&cp / g));
    cy.rows_mut(np, nk).copy_from(&(&ck * (dp / g)));
    let dy = dp * dk / g;
    let ce = -&cy;
    let de = 1.0 - dy;
    let mut cu = &ce * dk;
    for i in 0..nk {
        cu[np + i] += ck[i];
    }
    let du = dk * de;

    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    a.view_mut((0, 0), (np, np)).copy_from(&ap);
    add_outer(&mut a, 0, &bp, &cu);
    b.rows_mut(0, np).copy_from(&(&bp * du));
    a.view_mut((np, np), (nk, nk)).copy_from(&ak);
    add_outer(&mut a, np, &bk, &ce);
    b.rows_mut(np, nk).copy_from(&(&bk * de));
    Ok((a, b, cy, dy))
}

/// `a[row0 + i][j] += col[i]·row[j]`.
fn add_outer(a: &mut DMatrix<f64>, row0: usize, col: &DVector<f64>, row: &DVector<f64>) {
    for i in 0..col.len() {
        for j in 0..row.len() {
            a[(row0 + i, j)] += col[i] * row[j];
        }
    }
}

/// Unit reference step of the loop, integrated with classical RK4.
pub fn step_response(plant: &RationalLti, k: &DescriptorSystem, t_end: f64, dt: f64) -> Result<StepResponse> {
    if !(dt > 0.0 && dt.is_finite() && t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and t_end > 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let (a, b, c, d) = closed_loop_state_space(plant, k)?;
    let eig = linalg::real_eigenvalues(&a)?;
    let rate = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let stiffness_warning = (rate > 0.0 && dt > 0.1 / rate).then(|| {
        format!(
            "time step {dt} exceeds 0.1/max|eigenvalue| = {:.3e}; results may be inaccurate",
            0.1 / rate
        )
    });
    let steps = (t_end / dt).round() as usize;
    let f = |x: &DVector<f64>| &a * x + &b;
    let mut x = DVector::zeros(a.nrows());
    let mut t = Vec::with_capacity(steps + 1);
    let mut y = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        t.push(i as f64 * dt);
        y.push(c.dot(&x) + d);
        if i == steps {
            break;
        }
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * (dt / 2.0)));
        let k3 = f(&(&x + &k2 * (dt / 2.0)));
        let k4 = f(&(&x + &k3 * dt));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    Ok(StepResponse {
        t,
        y,
        stiffness_warning,
    })
}

/// Zeros of `K_r` that land within the cancellation distance of a plant RHP pole.
pub fn cancelling_zeros(k: &DescriptorSystem, est: &InstabilityEstimate, distance: f64) -> Result<Vec<Complex64>> {
    let zeros = loewner::controller_zeros(k)?;
    Ok(zeros
        .into_iter()
        .filter(|z| est.rhp_poles.iter().any(|p| (z - p).norm() <= distance * p.norm()))
        .collect())
}
