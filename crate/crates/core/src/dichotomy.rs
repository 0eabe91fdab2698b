//! Exponential dichotomy detection and the Lagrange planes `l+` (initial data
//! of solutions bounded at `+inf`) and `l-` (bounded at `-inf`).
//!
//! Three estimators, chosen by how the coefficients depend on time:
//!
//! - constant: spectral splitting of `H`, computed from the matrix sign
//!   function;
//! - periodic: splitting of the monodromy matrix by modulus of the Floquet
//!   multipliers (through a Cayley transform and the sign function);
//! - otherwise: long-horizon propagation of random frames with QR
//!   re-orthonormalization, forward from `t0 - T` for `l-` and backward from
//!   `t0 + T` for `l+`.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coefficients::Periodicity;
use crate::dynamics::{self, PropagationConfig};
use crate::error::{LqError, Result};
use crate::hamiltonian::HamiltonianFamily;
use crate::linalg;

/// Relative rank threshold for frames.
pub const TAU_RANK: f64 = 1e-12;

/// A `2n x n` matrix whose columns span a Lagrange plane.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeFrame {
    matrix: DMatrix<f64>,
}

impl LagrangeFrame {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != 2 * c || c == 0 {
            return Err(LqError::Shape {
                field: "lagrange frame".into(),
                expected: "2n x n".into(),
                got: format!("{r}x{c}"),
            });
        }
        let sv = linalg::singular_values(&matrix);
        if sv[c - 1] < TAU_RANK * sv[0] || sv[0] == 0.0 {
            return Err(LqError::InvalidArgument(format!(
                "frame is rank deficient (singular values {sv:?})"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `L1`, the top `n x n` block.
    pub fn top(&self) -> DMatrix<f64> {
        self.matrix.rows(0, self.n()).into_owned()
    }

    /// `L2`, the bottom `n x n` block.
    pub fn bottom(&self) -> DMatrix<f64> {
        self.matrix.rows(self.n(), self.n()).into_owned()
    }

    /// `||L2^T L1 - L1^T L2||_F`.
    pub fn lagrange_residual(&self) -> f64 {
        let (l1, l2) = (self.top(), self.bottom());
        (l2.transpose() * &l1 - l1.transpose() * &l2).norm()
    }

    /// Lagrange condition with tolerance `tau * ||L||_2^2`.
    pub fn is_lagrangian(&self, tau: f64) -> bool {
        self.lagrange_residual() <= tau * linalg::spectral_norm(&self.matrix).powi(2)
    }

    pub fn orthonormalized(&self) -> Self {
        Self {
            matrix: linalg::orthonormal_basis(&self.matrix),
        }
    }

    /// Largest principal angle to another plane.
    pub fn angle_to(&self, other: &DMatrix<f64>) -> f64 {
        linalg::principal_angle(&self.matrix, other)
    }
}

/// `M = L2 L1^{-1}`, symmetrized, when `cond(L1) <= kappa_max`.
///
/// Absence means the plane is not a graph over the `x` coordinates, which is
/// exactly the situation where only some initial states admit finite cost.
pub fn weyl_from_frame(l: &LagrangeFrame, kappa_max: f64) -> Option<DMatrix<f64>> {
    let l1 = l.top();
    if linalg::condition_number(&l1) > kappa_max {
        return None;
    }
    // M^T = L1^{-T} L2^T
    let mt = l1.transpose().lu().solve(&l.bottom().transpose())?;
    Some(linalg::symmetric_part(&mt))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Present,
    Absent,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DichotomyMethod {
    AutonomousEigen,
    PeriodicFloquet,
    GeneralQr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DichotomyConfig {
    pub tau_spec: f64,
    pub tau_floq: f64,
    pub tau_gap: f64,
    pub kappa_max: f64,
    /// Lagrange tolerance relative to `||L||^2`.
    pub tau_lag: f64,
    /// Horizon of the general method.
    pub t_max: f64,
    /// Largest principal angle allowed between the `T/2` and `T` frames.
    pub convergence_tol: f64,
    pub seed: u64,
    /// Window, in units of `1/beta`, over which the constant `eta` is measured.
    pub eta_window: f64,
    pub assume_dichotomy: bool,
    pub propagation: PropagationConfig,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        Self {
            tau_spec: 1e-8,
            tau_floq: 1e-6,
            tau_gap: 0.05,
            kappa_max: 1e10,
            tau_lag: 1e-8,
            t_max: 40.0,
            convergence_tol: 1e-6,
            seed: 0x5eed_1a9e,
            eta_window: 8.0,
            assume_dichotomy: false,
            propagation: PropagationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyReport {
    pub verdict: Verdict,
    pub method: DichotomyMethod,
    pub t0: f64,
    pub beta_est: Option<f64>,
    pub eta_est: Option<f64>,
    pub l_plus: Option<LagrangeFrame>,
    pub l_minus: Option<LagrangeFrame>,
    pub m_plus: Option<DMatrix<f64>>,
    pub m_minus: Option<DMatrix<f64>>,
    /// Eigenvalues of `H` or Floquet multipliers, by method.
    pub spectrum: Vec<Complex<f64>>,
    /// QR growth rates, descending (general method only).
    pub exponents: Vec<f64>,
    /// Principal angle between the half-horizon and full-horizon frames.
    pub frame_change: Option<f64>,
    pub seed: Option<u64>,
    /// Set when an undetermined verdict was overridden by `assume_dichotomy`.
    pub assumed: bool,
    pub notes: Vec<String>,
}

impl DichotomyReport {
    fn empty(method: DichotomyMethod, t0: f64) -> Self {
        Self {
            verdict: Verdict::Undetermined,
            method,
            t0,
            beta_est: None,
            eta_est: None,
            l_plus: None,
            l_minus: None,
            m_plus: None,
            m_minus: None,
            spectrum: Vec::new(),
            exponents: Vec::new(),
            frame_change: None,
            seed: None,
            assumed: false,
            notes: Vec::new(),
        }
    }

    pub fn has_dichotomy(&self) -> bool {
        self.verdict == Verdict::Present
    }

    fn set_frames(&mut self, plus: DMatrix<f64>, minus: DMatrix<f64>, kappa_max: f64) -> Result<()> {
        let plus = LagrangeFrame::new(plus)?;
        let minus = LagrangeFrame::new(minus)?;
        self.m_plus = weyl_from_frame(&plus, kappa_max);
        self.m_minus = weyl_from_frame(&minus, kappa_max);
        self.l_plus = Some(plus);
        self.l_minus = Some(minus);
        Ok(())
    }

    fn transversality(&self) -> f64 {
        match (&self.l_plus, &self.l_minus) {
            (Some(p), Some(m)) => {
                let mut both = DMatrix::zeros(2 * p.n(), 2 * p.n());
                both.columns_mut(0, p.n()).copy_from(p.matrix());
                both.columns_mut(p.n(), p.n()).copy_from(m.matrix());
                linalg::singular_values(&both).last().copied().unwrap_or(0.0)
            }
            _ => 0.0,
        }
    }
}

/// Spectral splitting for a constant Hamiltonian matrix.
pub fn stable_plane_autonomous(h: &DMatrix<f64>, cfg: &DichotomyConfig) -> Result<DichotomyReport> {
    let n = h.nrows() / 2;
    let mut report = DichotomyReport::empty(DichotomyMethod::AutonomousEigen, 0.0);
    let spectrum: Vec<Complex<f64>> = h.clone().complex_eigenvalues().iter().copied().collect();
    let stable = spectrum.iter().filter(|l| l.re < -cfg.tau_spec).count();
    let unstable = spectrum.iter().filter(|l| l.re > cfg.tau_spec).count();
    report.spectrum = spectrum;
    if stable != n || unstable != n {
        report.verdict = Verdict::Absent;
        report.notes.push(format!(
            "spectral profile: {stable} stable, {unstable} unstable, {} central eigenvalues",
            2 * n - stable - unstable
        ));
        return Ok(report);
    }
    let beta = report
        .spectrum
        .iter()
        .map(|l| l.re.abs())
        .fold(f64::INFINITY, f64::min);
    let (plus, minus) = split_by_sign(&linalg::matrix_sign(h)?, n);
    report.set_frames(plus, minus, cfg.kappa_max)?;
    report.verdict = Verdict::Present;
    report.beta_est = Some(beta);
    let family = HamiltonianFamily::constant(h.clone())?;
    report.eta_est = Some(estimate_eta(&family, 0.0, &report, beta, cfg)?);
    Ok(report)
}

/// Ranges of `(I - S)/2` and `(I + S)/2` for a sign matrix `S`.
fn split_by_sign(sign: &DMatrix<f64>, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let id = DMatrix::identity(2 * n, 2 * n);
    let (plus, _) = linalg::dominant_range(&((&id - sign) * 0.5), n);
    let (minus, _) = linalg::dominant_range(&((&id + sign) * 0.5), n);
    (plus, minus)
}

/// Floquet splitting for coefficients of period `period`, at the section `t0`.
pub fn stable_plane_periodic(
    h: &HamiltonianFamily,
    period: f64,
    t0: f64,
    cfg: &DichotomyConfig,
) -> Result<DichotomyReport> {
    let n = h.n();
    let mut report = DichotomyReport::empty(DichotomyMethod::PeriodicFloquet, t0);
    let monodromy = dynamics::transition(h, t0, t0 + period, &cfg.propagation)?;
    let multipliers: Vec<Complex<f64>> = monodromy.clone().complex_eigenvalues().iter().copied().collect();
    let inside = multipliers.iter().filter(|m| m.norm() < 1.0 - cfg.tau_floq).count();
    let outside = multipliers.iter().filter(|m| m.norm() > 1.0 + cfg.tau_floq).count();
    report.spectrum = multipliers;
    if inside != n || outside != n {
        report.verdict = Verdict::Absent;
        report.notes.push(format!(
            "Floquet multipliers: {inside} inside, {outside} outside, {} on the unit circle",
            2 * n - inside - outside
        ));
        return Ok(report);
    }
    let beta = report
        .spectrum
        .iter()
        .filter(|m| m.norm() < 1.0)
        .map(|m| -m.norm().ln() / period)
        .fold(f64::INFINITY, f64::min);
    // Cayley transform sends |mu| < 1 to Re < 0; -1 is excluded by the gap.
    let id = DMatrix::identity(2 * n, 2 * n);
    let cayley = (&monodromy + &id)
        .lu()
        .solve(&(&monodromy - &id))
        .ok_or_else(|| LqError::InvalidArgument("monodromy + I is singular".into()))?;
    let (plus, minus) = split_by_sign(&linalg::matrix_sign(&cayley)?, n);
    report.set_frames(plus, minus, cfg.kappa_max)?;
    report.verdict = Verdict::Present;
    report.beta_est = Some(beta);
    report.eta_est = Some(estimate_eta(h, t0, &report, beta, cfg)?);
    Ok(report)
}

fn random_frame(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// QR-based estimator for aperiodic coefficients.
pub fn stable_plane_general(h: &HamiltonianFamily, t0: f64, cfg: &DichotomyConfig) -> Result<DichotomyReport> {
    let n = h.n();
    let mut report = DichotomyReport::empty(DichotomyMethod::GeneralQr, t0);
    report.seed = Some(cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start_minus = random_frame(&mut rng, 2 * n, n);
    let start_plus = random_frame(&mut rng, 2 * n, n);
    let t = cfg.t_max;
    let prop = &cfg.propagation;

    let (full, growth) = dynamics::propagate_orthonormal(h, &DMatrix::identity(2 * n, 2 * n), t0, t0 + t, prop)?;
    drop(full);
    let mut exponents: Vec<f64> = growth.iter().map(|g| g / t).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    let gap = exponents[n - 1] - exponents[n];
    report.exponents = exponents;

    let (minus, _) = dynamics::propagate_orthonormal(h, &start_minus, t0 - t, t0, prop)?;
    let (minus_half, _) = dynamics::propagate_orthonormal(h, &start_minus, t0 - 0.5 * t, t0, prop)?;
    let (plus, _) = dynamics::propagate_orthonormal(h, &start_plus, t0 + t, t0, prop)?;
    let (plus_half, _) = dynamics::propagate_orthonormal(h, &start_plus, t0 + 0.5 * t, t0, prop)?;
    let change = linalg::principal_angle(&minus, &minus_half).max(linalg::principal_angle(&plus, &plus_half));
    report.frame_change = Some(change);
    report.set_frames(plus, minus, cfg.kappa_max)?;

    if gap < cfg.tau_gap {
        report.verdict = Verdict::Absent;
        report.notes.push(format!(
            "no exponential separation: gap between growth rates {n} and {} is {gap:.3e}",
            n + 1
        ));
        return Ok(report);
    }
    report.beta_est = Some(0.5 * gap);
    let lagrangian = [&report.l_plus, &report.l_minus]
        .iter()
        .all(|l| l.as_ref().is_some_and(|l| l.is_lagrangian(cfg.tau_lag)));
    let transversal = report.transversality();
    report.verdict = if change > cfg.convergence_tol {
        report.notes.push(format!("frames not converged: change {change:.3e}"));
        Verdict::Undetermined
    } else if !lagrangian {
        report.notes.push("limit frames violate the Lagrange condition".into());
        Verdict::Undetermined
    } else if transversal < 1e-8 {
        report.notes.push(format!("l+ and l- are not transversal ({transversal:.3e})"));
        Verdict::Undetermined
    } else {
        Verdict::Present
    };
    if report.verdict == Verdict::Present {
        report.eta_est = Some(estimate_eta(h, t0, &report, 0.5 * gap, cfg)?);
    }
    Ok(report)
}

/// `eta = max(1, sup ||U(t) Q+|| e^{beta t}, sup ||U(-t) Q-|| e^{beta t})` over
/// `t` in `[0, eta_window / beta]` (capped at `t_max`), for orthonormal frames
/// `Q+-` of the two planes.
fn estimate_eta(
    h: &HamiltonianFamily,
    t0: f64,
    report: &DichotomyReport,
    beta: f64,
    cfg: &DichotomyConfig,
) -> Result<f64> {
    let (Some(plus), Some(minus)) = (&report.l_plus, &report.l_minus) else {
        return Ok(1.0);
    };
    let window = (cfg.eta_window / beta).min(cfg.t_max);
    let steps = ((window / 0.25).ceil() as usize).max(8);
    let mut eta = 1.0f64;
    for (frame, dir) in [(plus, 1.0), (minus, -1.0)] {
        let q = frame.orthonormalized();
        let times: Vec<f64> = dynamics::uniform_grid(0.0, window, steps)
            .into_iter()
            .map(|s| t0 + dir * s)
            .collect();
        let sols = dynamics::propagate_frame(h, q.matrix(), &times, &cfg.propagation)?;
        for (t, z) in times.iter().zip(&sols) {
            eta = eta.max(linalg::spectral_norm(z) * (beta * (t - t0).abs()).exp());
        }
    }
    Ok(eta)
}

/// Dispatches on the time dependence of `h`: constant, periodic, or general.
pub fn compute_dichotomy(h: &HamiltonianFamily, t0: f64, cfg: &DichotomyConfig) -> Result<DichotomyReport> {
    let mut report = match h.periodicity() {
        Periodicity::Constant => {
            let mut r = stable_plane_autonomous(&h.eval(t0)?, cfg)?;
            r.t0 = t0;
            r
        }
        Periodicity::Periodic(period) => stable_plane_periodic(h, period, t0, cfg)?,
        Periodicity::Aperiodic => stable_plane_general(h, t0, cfg)?,
    };
    if cfg.assume_dichotomy && report.verdict == Verdict::Undetermined {
        report.verdict = Verdict::Present;
        report.assumed = true;
        report.notes.push("undetermined verdict overridden by assume_dichotomy".into());
    }
    Ok(report)
}
