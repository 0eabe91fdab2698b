//! The minimization pipeline: hypotheses, admissibility of `x0`, minimum
//! value, minimizing pair, and the regularized cross-check.

mod admissibility;
mod gramian;
mod regularization;
mod trajectory;

pub use admissibility::{admissibility, minimum_value, Admissibility};
pub use gramian::{controllability_gramian, GramianReport};
pub use regularization::{
    default_eps_grid, epsilon_path, kratz_classify, make_epsilon_problem, orthogonal_reduction, EpsilonPoint,
    EpsilonProblem, KratzCase,
};
pub use trajectory::{functional_truncation, minimizing_pair, simpson, simulate_control, PlaneSplitting, Trajectory};

use log::{info, warn};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::coefficients::{ProblemData, ValidationTolerances};
use crate::dichotomy::{self, DichotomyConfig, DichotomyReport, Verdict};
use crate::dynamics::{self, PropagationConfig};
use crate::error::{LqError, Result};
use crate::hamiltonian::HamiltonianFamily;
use crate::rotation::{self, RotationConfig, RotationEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub t0: f64,
    pub validation: ValidationTolerances,
    pub dichotomy: DichotomyConfig,
    pub rotation: RotationConfig,
    pub check_rotation: bool,
    pub tau_adm: f64,
    /// Trajectory horizon; `max(10 / beta, 10)` when absent.
    pub horizon: Option<f64>,
    pub sample_step: f64,
    /// Time between projections of the trajectory onto the stable plane.
    pub reproject_interval: f64,
    pub eps_check: bool,
    pub eps_grid: Vec<f64>,
    pub tau_mono: f64,
    pub r_max: f64,
    /// Relative agreement required between the direct minimum and the
    /// regularized limit.
    pub cross_check_tol: f64,
    /// Horizon of the Gramian diagnostic; skipped when absent.
    pub gramian_horizon: Option<f64>,
    pub tau_gram: f64,
    pub propagation: PropagationConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            t0: 0.0,
            validation: ValidationTolerances::default(),
            dichotomy: DichotomyConfig::default(),
            rotation: RotationConfig::default(),
            check_rotation: true,
            tau_adm: 1e-7,
            horizon: None,
            sample_step: 0.025,
            reproject_interval: 1.0,
            eps_check: false,
            eps_grid: default_eps_grid(),
            tau_mono: 1e-7,
            r_max: 0.5,
            cross_check_tol: 1e-3,
            gramian_horizon: None,
            tau_gram: 1e-10,
            propagation: PropagationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
    /// Not checkable numerically; taken on trust.
    Asserted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl HypothesisCheck {
    fn new(name: &str, status: CheckStatus, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x0: DVector<f64>,
    pub t0: f64,
    /// False when no dichotomy was found or the rotation number is nonzero;
    /// the minimization stage is then skipped.
    pub applicable: bool,
    pub admissible: Option<bool>,
    pub residual: Option<f64>,
    pub c: Option<DVector<f64>>,
    pub y0: Option<DVector<f64>>,
    pub min_value: Option<f64>,
    /// "the minimizer" when the Weyl matrix exists, "a minimizer" otherwise.
    pub pair_label: Option<String>,
    pub horizon: Option<f64>,
    pub trajectory: Option<Trajectory>,
    pub functional_truncations: Vec<(f64, f64)>,
    pub epsilon_path: Option<Vec<EpsilonPoint>>,
    pub kratz_case: Option<KratzCase>,
    pub hypotheses: Vec<HypothesisCheck>,
    pub dichotomy: DichotomyReport,
    pub rotation: Option<RotationEstimate>,
    pub gramian: Option<GramianReport>,
    pub notes: Vec<String>,
}

/// Runs the full pipeline for initial state `x0` at time `opts.t0`.
pub fn solve(p: &ProblemData, x0: &DVector<f64>, opts: &SolveOptions) -> Result<SolveReport> {
    let n = p.n();
    if x0.len() != n {
        return Err(LqError::Shape {
            field: "x0".into(),
            expected: format!("length {n}"),
            got: format!("length {}", x0.len()),
        });
    }
    let t0 = opts.t0;
    let violations = p.validate(&p.default_grid(t0), opts.validation)?;
    if !violations.is_empty() {
        return Err(LqError::InvalidProblem(violations));
    }
    let mut hypotheses = vec![HypothesisCheck::new(
        "coefficient_validation",
        CheckStatus::Pass,
        "G, R symmetric and R >= rho I on the sample grid",
    )];
    hypotheses.push(HypothesisCheck::new(
        "minimal_hull",
        CheckStatus::Asserted,
        "minimality of the translation hull cannot be checked from finitely many samples",
    ));
    let reduction = orthogonal_reduction(p, t0);
    hypotheses.push(match &reduction {
        Ok(_) => HypothesisCheck::new("control_full_rank", CheckStatus::Pass, format!("rank B(t0) = {}", p.m())),
        Err(e) => HypothesisCheck::new("control_full_rank", CheckStatus::Warn, e.to_string()),
    });

    let h = HamiltonianFamily::from_problem(p);
    let dich = dichotomy::compute_dichotomy(&h, t0, &opts.dichotomy)?;
    let dich_status = match (dich.verdict, dich.assumed) {
        (Verdict::Present, true) => CheckStatus::Asserted,
        (Verdict::Present, false) => CheckStatus::Pass,
        (Verdict::Absent, _) => CheckStatus::Fail,
        (Verdict::Undetermined, _) => CheckStatus::Warn,
    };
    hypotheses.push(HypothesisCheck::new(
        "exponential_dichotomy",
        dich_status,
        format!("{:?} via {:?}", dich.verdict, dich.method),
    ));

    let mut rotation_blocks = false;
    let rotation = if opts.check_rotation && dich.has_dichotomy() {
        let est = rotation::rotation_number_adaptive(&h, t0, &opts.rotation)?;
        let check = match rotation::is_rotation_zero(&est, opts.rotation.zero_tol) {
            Ok(true) => HypothesisCheck::new("rotation_number_zero", CheckStatus::Pass, format!("alpha = {:.3e}", est.alpha)),
            Ok(false) => {
                rotation_blocks = true;
                HypothesisCheck::new("rotation_number_zero", CheckStatus::Fail, format!("alpha = {:.3e}", est.alpha))
            }
            Err(e) => {
                warn!("rotation number not certified: {e}");
                HypothesisCheck::new("rotation_number_zero", CheckStatus::Warn, e.to_string())
            }
        };
        hypotheses.push(check);
        Some(est)
    } else {
        None
    };

    let gramian = match opts.gramian_horizon {
        Some(t) => {
            let g = controllability_gramian(p, t0, t, opts.tau_gram, &opts.propagation)?;
            hypotheses.push(HypothesisCheck::new(
                "null_controllability",
                if g.positive_definite { CheckStatus::Pass } else { CheckStatus::Warn },
                format!("smallest Gramian eigenvalue {:.3e} at T = {t}", g.min_eigenvalue),
            ));
            Some(g)
        }
        None => None,
    };

    let applicable = dich.has_dichotomy() && !rotation_blocks;
    let mut report = SolveReport {
        x0: x0.clone(),
        t0,
        applicable,
        admissible: None,
        residual: None,
        c: None,
        y0: None,
        min_value: None,
        pair_label: None,
        horizon: None,
        trajectory: None,
        functional_truncations: Vec::new(),
        epsilon_path: None,
        kratz_case: None,
        hypotheses,
        dichotomy: dich,
        rotation,
        gramian,
        notes: Vec::new(),
    };
    if !applicable {
        warn!("minimization stage skipped: hypotheses not met");
        report.notes.push("hypotheses of the main result not met; minimization skipped".into());
        return Ok(report);
    }

    let l_plus = report
        .dichotomy
        .l_plus
        .clone()
        .expect("frames are present when a dichotomy is reported");
    let adm = admissibility(&l_plus, x0, opts.tau_adm)?;
    info!("admissible = {} (residual {:.3e})", adm.admissible, adm.residual);
    report.admissible = Some(adm.admissible);
    report.residual = Some(adm.residual);
    if adm.admissible {
        let min = minimum_value(&l_plus, &adm.c);
        let beta = report.dichotomy.beta_est.unwrap_or(1.0);
        let wanted = opts.horizon.unwrap_or_else(|| (10.0 / beta).max(10.0));
        // whole number of sample steps, divisible by four
        let quarters = (wanted / (4.0 * opts.sample_step) - 1e-6).ceil().max(1.0) as usize;
        let intervals = 4 * quarters;
        let horizon = intervals as f64 * opts.sample_step;
        let times = dynamics::uniform_grid(t0, t0 + horizon, intervals);
        let splitting = PlaneSplitting::new(&h, &report.dichotomy, &opts.dichotomy)?;
        let pair = minimizing_pair(
            p,
            x0,
            &adm.y0,
            &times,
            Some(&splitting),
            opts.reproject_interval,
            &opts.propagation,
        )?;
        for k in [quarters, 2 * quarters, intervals] {
            let t = times[k] - t0;
            report.functional_truncations.push((t, functional_truncation(p, &pair, t)?));
        }
        report.min_value = Some(min);
        report.pair_label = Some(
            if report.dichotomy.m_plus.is_some() { "the minimizer" } else { "a minimizer" }.into(),
        );
        report.horizon = Some(horizon);
        report.trajectory = Some(pair);
        report.c = Some(adm.c);
        report.y0 = Some(adm.y0);
    }

    if opts.eps_check {
        match reduction {
            Ok((pm, reduced)) => {
                let path = epsilon_path(&reduced, &pm, x0, &opts.eps_grid, t0, &opts.dichotomy, opts.tau_mono)?;
                let case = kratz_classify(&path, opts.r_max);
                cross_check(&report, &case, opts.cross_check_tol)?;
                if let KratzCase::Undetermined { reason } = &case {
                    report.notes.push(format!("regularized path undetermined: {reason}"));
                }
                report.epsilon_path = Some(path);
                report.kratz_case = Some(case);
            }
            Err(e) => report.notes.push(format!("regularized cross-check skipped: {e}")),
        }
    }
    Ok(report)
}

fn cross_check(report: &SolveReport, case: &KratzCase, tol: f64) -> Result<()> {
    match (case, report.admissible, report.min_value) {
        (KratzCase::FiniteLimit { value }, Some(true), Some(min)) => {
            let limit = -0.5 * value;
            if (limit - min).abs() > tol * min.abs().max(1.0) {
                return Err(LqError::CrossCheckMismatch(format!(
                    "direct minimum {min:.12e} differs from regularized limit {limit:.12e}"
                )));
            }
            Ok(())
        }
        (KratzCase::FiniteLimit { .. }, Some(false), _) => Err(LqError::CrossCheckMismatch(
            "regularized path has a finite limit but x0 is not admissible".into(),
        )),
        (KratzCase::MinusInfinity, Some(true), _) => Err(LqError::CrossCheckMismatch(
            "regularized path diverges but x0 is admissible".into(),
        )),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn m(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    fn shear() -> ProblemData {
        ProblemData::constant(
            m(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            m(2, 1, &[1.0, 0.0]),
            m(2, 2, &[2.0, 1.0, 1.0, 1.0]),
            m(2, 1, &[1.0, 1.0]),
            m(1, 1, &[1.0]),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn shear_admissible_state() {
        let opts = SolveOptions {
            eps_check: true,
            ..SolveOptions::default()
        };
        let r = solve(&shear(), &DVector::from_vec(vec![1.0, 0.0]), &opts).unwrap();
        assert!(r.applicable);
        assert_eq!(r.admissible, Some(true));
        assert!((r.min_value.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(r.pair_label.as_deref(), Some("a minimizer"));
        let traj = r.trajectory.as_ref().unwrap();
        for t in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let i = traj.index_of(t).unwrap();
            assert!((traj.x[i][0] - (-t).exp()).abs() < 1e-8);
            assert!(traj.x[i][1].abs() < 1e-8);
            assert!((traj.u[i][0] + 2.0 * (-t).exp()).abs() < 1e-8);
        }
        let (_, last) = *r.functional_truncations.last().unwrap();
        assert!((last - 0.5).abs() < 1e-6);
        assert!(matches!(r.kratz_case, Some(KratzCase::FiniteLimit { .. })));
    }

    #[test]
    fn shear_inadmissible_state() {
        let opts = SolveOptions {
            eps_check: true,
            ..SolveOptions::default()
        };
        let r = solve(&shear(), &DVector::from_vec(vec![0.0, 1.0]), &opts).unwrap();
        assert_eq!(r.admissible, Some(false));
        assert!(r.min_value.is_none() && r.trajectory.is_none());
        assert_eq!(r.kratz_case, Some(KratzCase::MinusInfinity));
    }

    #[test]
    fn identity_weights_match_riccati() {
        let p = ProblemData::constant(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            1.0,
        )
        .unwrap();
        let r = solve(&p, &DVector::from_vec(vec![1.0, 1.0]), &SolveOptions::default()).unwrap();
        assert!((r.min_value.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.pair_label.as_deref(), Some("the minimizer"));
    }

    #[test]
    fn oscillator_is_inapplicable() {
        // A = 0, B = 1, G = -1, R = 1 gives H = [[0, 1], [-1, 0]]
        let p = ProblemData::constant(m(1, 1, &[0.0]), m(1, 1, &[1.0]), m(1, 1, &[-1.0]), m(1, 1, &[0.0]), m(1, 1, &[1.0]), 1.0)
            .unwrap();
        let r = solve(&p, &DVector::from_vec(vec![1.0]), &SolveOptions::default()).unwrap();
        assert!(!r.applicable);
        assert!(r.admissible.is_none());
    }

    #[test]
    fn invalid_weight_is_rejected() {
        let mut p = shear();
        p.state_weight = crate::coefficients::CoefficientFn::constant(m(2, 2, &[2.0, 1.0, 0.0, 1.0]));
        assert!(matches!(
            solve(&p, &DVector::from_vec(vec![1.0, 0.0]), &SolveOptions::default()),
            Err(LqError::InvalidProblem(_))
        ));
    }
}
