//! JSON and CSV artifacts written by the pipeline and read back by the CLI.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::certify::{ProjectionTest, StabilityCertificate};
use crate::error::{Error, Result};
use crate::loewner::{self, DescriptorSystem, LoewnerPencil};
use crate::unstable::{InstabilityEstimate, PlantAnalysis};

pub fn complex_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn from_pairs(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub w_lo: f64,
    pub w_hi: f64,
    pub order: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub w_min: f64,
    pub w_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

/// Contents of `analysis.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AnalysisReport {
    pub n_p: usize,
    pub rhp_poles: Vec<[f64; 2]>,
    pub n_z: usize,
    pub rhp_zeros: Vec<[f64; 2]>,
    pub hankel_svals: Vec<f64>,
    #[serde(default)]
    pub hankel_gap: Option<f64>,
    #[serde(default)]
    pub zero_hankel_svals: Vec<f64>,
    #[serde(default)]
    pub discarded_poles: Vec<[f64; 2]>,
    #[serde(default)]
    pub integrator_detected: bool,
    #[serde(default)]
    pub bandpass: Option<BandReport>,
    #[serde(default)]
    pub rolloff_order: u32,
    #[serde(default)]
    pub basis_pole: Option<f64>,
    #[serde(default)]
    pub antistable_fraction: Option<f64>,
    #[serde(default)]
    pub analysis_grid: Option<GridReport>,
    #[serde(default)]
    pub loewner_minimal_order: Option<usize>,
    #[serde(default)]
    pub errors: Vec<StageError>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn from_analysis(a: &PlantAnalysis) -> Self {
        let c = &a.poles.conditioning;
        let grid = &a.poles.split.grid;
        Self {
            n_p: a.estimate.n_p,
            rhp_poles: complex_pairs(&a.estimate.rhp_poles),
            n_z: a.estimate.n_z,
            rhp_zeros: complex_pairs(&a.estimate.rhp_zeros),
            hankel_svals: a.poles.count.hankel_svals.clone(),
            hankel_gap: a.poles.count.gap,
            zero_hankel_svals: a.zeros.count.hankel_svals.clone(),
            discarded_poles: complex_pairs(&a.poles.discarded),
            integrator_detected: c.integrator_detected,
            bandpass: c.bandpass.map(|(w_lo, w_hi, order)| BandReport { w_lo, w_hi, order }),
            rolloff_order: c.rolloff_order,
            basis_pole: Some(a.poles.split.basis_pole),
            antistable_fraction: Some(a.poles.split.antistable_fraction()),
            analysis_grid: Some(GridReport {
                w_min: grid.w_min(),
                w_max: grid.w_max(),
                n: grid.len(),
            }),
            ..Self::default()
        }
    }

    pub fn estimate(&self) -> InstabilityEstimate {
        let mut e = InstabilityEstimate::new(from_pairs(&self.rhp_poles), from_pairs(&self.rhp_zeros));
        e.hankel_svals = self.hankel_svals.clone();
        e
    }

    pub fn push_error(&mut self, stage: &str, err: &Error) {
        self.errors.push(StageError {
            stage: stage.to_string(),
            message: err.to_string(),
        });
    }
}

/// Contents of `controller_<r>.json`. Matrices are row-major; `B` is a
/// column and `C` a row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerReport {
    pub order: usize,
    #[serde(rename = "E")]
    pub e: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: f64,
    pub poles: Vec<[f64; 2]>,
    pub zeros: Vec<[f64; 2]>,
}

impl ControllerReport {
    pub fn from_system(sys: &DescriptorSystem) -> Result<Self> {
        let n = sys.order();
        Ok(Self {
            order: n,
            e: DescriptorSystem::rows(sys.e()),
            a: DescriptorSystem::rows(sys.a()),
            b: sys.b().iter().map(|x| vec![*x]).collect(),
            c: vec![sys.c().iter().copied().collect()],
            d: sys.d(),
            poles: complex_pairs(&loewner::controller_poles(sys)?),
            zeros: complex_pairs(&loewner::controller_zeros(sys)?),
        })
    }

    pub fn to_system(&self) -> Result<DescriptorSystem> {
        let n = self.order;
        let square = |m: &[Vec<f64>], name: &str| -> Result<DMatrix<f64>> {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidModel(format!("{name} must be {n}x{n}")));
            }
            Ok(DMatrix::from_fn(n, n, |i, j| m[i][j]))
        };
        if n == 0 {
            return Ok(DescriptorSystem::static_gain(self.d));
        }
        let e = square(&self.e, "E")?;
        let a = square(&self.a, "A")?;
        if self.b.len() != n || self.b.iter().any(|r| r.len() != 1) {
            return Err(Error::InvalidModel(format!("B must be {n}x1")));
        }
        if self.c.len() != 1 || self.c[0].len() != n {
            return Err(Error::InvalidModel(format!("C must be 1x{n}")));
        }
        let b = DVector::from_iterator(n, self.b.iter().map(|r| r[0]));
        let c = DVector::from_column_slice(&self.c[0]);
        DescriptorSystem::new(e, a, b, c, self.d)
    }
}

/// Contents of `certificate.json`: the small-gain certificate plus the
/// projection test of each reconstructed closed loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    #[serde(flatten)]
    pub certificate: StabilityCertificate,
    #[serde(default)]
    pub projection_tests: BTreeMap<usize, ProjectionTest>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{header}").map_err(io)?;
    for row in rows {
        writeln!(w, "{row}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// `index,sigma`, 1-based.
pub fn write_hankel_svals(path: &Path, svals: &[f64]) -> Result<()> {
    write_rows(
        path,
        "index,sigma",
        svals.iter().enumerate().map(|(i, s)| format!("{},{}", i + 1, s)),
    )
}

/// `index,stacked,concat`: singular values of `[L; Ls]` and `[L, Ls]`.
pub fn write_loewner_svals(path: &Path, pencil: &LoewnerPencil) -> Result<()> {
    let n = pencil.svals_stacked.len().max(pencil.svals_concat.len());
    let cell = |v: &[f64], i: usize| v.get(i).map(|x| x.to_string()).unwrap_or_default();
    write_rows(
        path,
        "index,stacked,concat",
        (0..n).map(|i| {
            format!(
                "{},{},{}",
                i + 1,
                cell(&pencil.svals_stacked, i),
                cell(&pencil.svals_concat, i)
            )
        }),
    )
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plants::RationalLti;

    #[test]
    fn controller_round_trip() {
        let r = RationalLti::new(vec![1.0, 2.0], vec![1.0, 3.0, 2.0]).unwrap();
        let sys = DescriptorSystem::from_rational(&r).unwrap();
        let rep = ControllerReport::from_system(&sys).unwrap();
        assert_eq!(rep.order, 2);
        assert_eq!(rep.poles.len(), 2);
        let back = rep.to_system().unwrap();
        assert_eq!(back, sys);
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"E\"") && json.contains("\"D\""));
    }

    #[test]
    fn malformed_controller_is_rejected() {
        let mut rep = ControllerReport::from_system(&DescriptorSystem::static_gain(2.0)).unwrap();
        assert_eq!(rep.to_system().unwrap().d(), 2.0);
        rep.order = 1;
        assert!(rep.to_system().is_err());
    }
}
