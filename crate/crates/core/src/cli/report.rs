//! Versioned JSON mirrors of the library reports. Matrices are row-major
//! nested arrays.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dichotomy::{DichotomyMethod, DichotomyReport, Verdict};
use crate::lq_solver::{GramianReport, HypothesisCheck, KratzCase, SolveReport, Trajectory};
use crate::rotation::RotationEstimate;

pub const SCHEMA_VERSION: u32 = 1;

pub type RowMajor = Vec<Vec<f64>>;

fn rows(m: &DMatrix<f64>) -> RowMajor {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vector(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyFile {
    pub schema_version: u32,
    pub has_dichotomy: bool,
    pub verdict: Verdict,
    pub method: DichotomyMethod,
    pub t0: f64,
    pub beta_est: Option<f64>,
    pub eta_est: Option<f64>,
    pub l_plus: Option<RowMajor>,
    pub l_minus: Option<RowMajor>,
    pub m_plus: Option<RowMajor>,
    pub m_minus: Option<RowMajor>,
    /// `[re, im]` pairs.
    pub spectrum: Vec<[f64; 2]>,
    pub exponents: Vec<f64>,
    pub frame_change: Option<f64>,
    pub seed: Option<u64>,
    pub assumed: bool,
    pub notes: Vec<String>,
}

impl From<&DichotomyReport> for DichotomyFile {
    fn from(r: &DichotomyReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            has_dichotomy: r.has_dichotomy(),
            verdict: r.verdict,
            method: r.method,
            t0: r.t0,
            beta_est: r.beta_est,
            eta_est: r.eta_est,
            l_plus: r.l_plus.as_ref().map(|l| rows(l.matrix())),
            l_minus: r.l_minus.as_ref().map(|l| rows(l.matrix())),
            m_plus: r.m_plus.as_ref().map(rows),
            m_minus: r.m_minus.as_ref().map(rows),
            spectrum: r.spectrum.iter().map(|z| [z.re, z.im]).collect(),
            exponents: r.exponents.clone(),
            frame_change: r.frame_change,
            seed: r.seed,
            assumed: r.assumed,
            notes: r.notes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationFile {
    pub schema_version: u32,
    pub alpha: f64,
    pub alpha_raw: f64,
    pub horizon: f64,
    pub convergence_indicator: f64,
    pub converged: bool,
    /// Set when the estimate is not converged.
    pub warning: Option<String>,
    pub samples: Vec<(f64, f64)>,
}

impl From<&RotationEstimate> for RotationFile {
    fn from(r: &RotationEstimate) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            alpha: r.alpha,
            alpha_raw: r.alpha_raw,
            horizon: r.horizon,
            convergence_indicator: r.convergence_indicator,
            converged: r.converged,
            warning: (!r.converged).then(|| {
                format!(
                    "not converged at horizon {}: indicator {:.3e}; increase the horizon",
                    r.horizon, r.convergence_indicator
                )
            }),
            samples: r.samples.clone(),
        }
    }
}

/// Rotation data embedded in a solve report, without samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSummary {
    pub alpha: f64,
    pub horizon: f64,
    pub convergence_indicator: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub t: Vec<f64>,
    pub x: RowMajor,
    pub y: Option<RowMajor>,
    pub u: RowMajor,
}

impl From<&Trajectory> for TrajectoryFile {
    fn from(tr: &Trajectory) -> Self {
        Self {
            t: tr.times.clone(),
            x: tr.x.iter().map(vector).collect(),
            y: tr.y.as_ref().map(|ys| ys.iter().map(vector).collect()),
            u: tr.u.iter().map(vector).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPointFile {
    pub epsilon: f64,
    pub weyl: RowMajor,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramianFile {
    pub horizon: f64,
    pub gramian: RowMajor,
    pub min_eigenvalue: f64,
    pub positive_definite: bool,
}

impl From<&GramianReport> for GramianFile {
    fn from(g: &GramianReport) -> Self {
        Self {
            horizon: g.horizon,
            gramian: rows(&g.gramian),
            min_eigenvalue: g.min_eigenvalue,
            positive_definite: g.positive_definite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveFile {
    pub schema_version: u32,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub applicable: bool,
    pub admissible: Option<bool>,
    pub residual: Option<f64>,
    pub c: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    pub min_value: Option<f64>,
    pub pair_label: Option<String>,
    pub horizon: Option<f64>,
    pub functional_truncations: Vec<(f64, f64)>,
    pub epsilon_path: Option<Vec<EpsilonPointFile>>,
    pub kratz_case: Option<KratzCase>,
    pub hypotheses: Vec<HypothesisCheck>,
    pub dichotomy: DichotomyFile,
    pub rotation: Option<RotationSummary>,
    pub gramian: Option<GramianFile>,
    pub notes: Vec<String>,
    pub trajectory: Option<TrajectoryFile>,
}

impl From<&SolveReport> for SolveFile {
    fn from(r: &SolveReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            x0: vector(&r.x0),
            t0: r.t0,
            applicable: r.applicable,
            admissible: r.admissible,
            residual: r.residual,
            c: r.c.as_ref().map(vector),
            y0: r.y0.as_ref().map(vector),
            min_value: r.min_value,
            pair_label: r.pair_label.clone(),
            horizon: r.horizon,
            functional_truncations: r.functional_truncations.clone(),
            epsilon_path: r.epsilon_path.as_ref().map(|path| {
                path.iter()
                    .map(|p| EpsilonPointFile {
                        epsilon: p.epsilon,
                        weyl: rows(&p.weyl),
                        value: p.value,
                    })
                    .collect()
            }),
            kratz_case: r.kratz_case.clone(),
            hypotheses: r.hypotheses.clone(),
            dichotomy: DichotomyFile::from(&r.dichotomy),
            rotation: r.rotation.as_ref().map(|e| RotationSummary {
                alpha: e.alpha,
                horizon: e.horizon,
                convergence_indicator: e.convergence_indicator,
                converged: e.converged,
            }),
            gramian: r.gramian.as_ref().map(GramianFile::from),
            notes: r.notes.clone(),
            trajectory: r.trajectory.as_ref().map(TrajectoryFile::from),
        }
    }
}
