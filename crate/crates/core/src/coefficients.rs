//! Time-varying coefficient data.
//!
//! Every coefficient is a finite trigonometric polynomial
//! `C(t) = sum_k C_k cos(nu_k t) + S_k sin(nu_k t)`, which covers constant,
//! periodic and quasi-periodic data with an exact bound and exact
//! almost-periodicity. Time translation is represented by a stored shift, so
//! the orbit `s -> p(. + s)` of a problem stands in for its hull.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LqError, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientKind {
    Constant,
    Periodic { period: f64 },
    QuasiPeriodic { frequencies: Vec<f64> },
}

/// One harmonic of a trigonometric polynomial.
///
/// For periodic data `multi_index` has a single entry (the harmonic number);
/// for quasi-periodic data it has one entry per base frequency; for constant
/// data it is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub multi_index: Vec<i64>,
    pub cos: DMatrix<f64>,
    pub sin: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFn {
    kind: CoefficientKind,
    rows: usize,
    cols: usize,
    terms: Vec<TrigTerm>,
    shift: f64,
}

impl CoefficientFn {
    pub fn constant(m: DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        Self {
            kind: CoefficientKind::Constant,
            rows,
            cols,
            terms: vec![TrigTerm {
                multi_index: Vec::new(),
                sin: DMatrix::zeros(rows, cols),
                cos: m,
            }],
            shift: 0.0,
        }
    }

    /// `sum_j cos_j cos(2 pi j t / T) + sin_j sin(2 pi j t / T)`; `terms` holds
    /// `(j, cos_j, sin_j)`.
    pub fn periodic(
        period: f64,
        rows: usize,
        cols: usize,
        terms: Vec<(i64, DMatrix<f64>, DMatrix<f64>)>,
    ) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(LqError::InvalidArgument(format!(
                "period must be positive and finite, got {period}"
            )));
        }
        let terms = terms
            .into_iter()
            .map(|(j, c, s)| TrigTerm {
                multi_index: vec![j],
                cos: c,
                sin: s,
            })
            .collect();
        Self::checked(CoefficientKind::Periodic { period }, rows, cols, terms)
    }

    pub fn quasi_periodic(
        frequencies: Vec<f64>,
        rows: usize,
        cols: usize,
        terms: Vec<TrigTerm>,
    ) -> Result<Self> {
        if frequencies.is_empty() || frequencies.iter().any(|w| !w.is_finite()) {
            return Err(LqError::InvalidArgument(
                "quasi-periodic data needs a nonempty vector of finite frequencies".into(),
            ));
        }
        if let Some(t) = terms.iter().find(|t| t.multi_index.len() != frequencies.len()) {
            return Err(LqError::Shape {
                field: "multi_index".into(),
                expected: format!("length {}", frequencies.len()),
                got: format!("length {}", t.multi_index.len()),
            });
        }
        Self::checked(
            CoefficientKind::QuasiPeriodic { frequencies },
            rows,
            cols,
            terms,
        )
    }

    fn checked(
        kind: CoefficientKind,
        rows: usize,
        cols: usize,
        terms: Vec<TrigTerm>,
    ) -> Result<Self> {
        for t in &terms {
            for (name, m) in [("cos_matrix", &t.cos), ("sin_matrix", &t.sin)] {
                if m.shape() != (rows, cols) {
                    return Err(LqError::Shape {
                        field: name.into(),
                        expected: format!("{rows}x{cols}"),
                        got: format!("{}x{}", m.nrows(), m.ncols()),
                    });
                }
            }
        }
        Ok(Self {
            kind,
            rows,
            cols,
            terms,
            shift: 0.0,
        })
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Accumulated translation `s`: the function evaluates the base data at `t + s`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn angular_frequency(&self, term: &TrigTerm) -> f64 {
        match &self.kind {
            CoefficientKind::Constant => 0.0,
            CoefficientKind::Periodic { period } => 2.0 * PI * term.multi_index[0] as f64 / period,
            CoefficientKind::QuasiPeriodic { frequencies } => term
                .multi_index
                .iter()
                .zip(frequencies)
                .map(|(&k, w)| k as f64 * w)
                .sum(),
        }
    }

    pub fn evaluate(&self, t: f64) -> DMatrix<f64> {
        let tau = t + self.shift;
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for term in &self.terms {
            let nu = self.angular_frequency(term);
            if nu == 0.0 {
                out += &term.cos;
            } else {
                let (s, c) = (nu * tau).sin_cos();
                out += &term.cos * c + &term.sin * s;
            }
        }
        out
    }

    /// Upper bound on `sup_t ||C(t)||_2`: the sum of the Frobenius norms of
    /// all harmonic coefficients.
    pub fn bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                if self.angular_frequency(t) == 0.0 {
                    t.cos.norm()
                } else {
                    t.cos.norm() + t.sin.norm()
                }
            })
            .sum()
    }

    /// True when no harmonic with nonzero frequency has a nonzero coefficient.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| {
            self.angular_frequency(t) == 0.0 || (t.cos.iter().all(|v| *v == 0.0) && t.sin.iter().all(|v| *v == 0.0))
        })
    }

    /// A period of the function, when it is nonconstant and periodic.
    pub fn period(&self) -> Option<f64> {
        if self.is_constant() {
            return None;
        }
        match &self.kind {
            CoefficientKind::Constant => None,
            CoefficientKind::Periodic { period } => Some(*period),
            CoefficientKind::QuasiPeriodic { frequencies } if frequencies.len() == 1 => {
                let w = frequencies[0].abs();
                (w > 0.0).then(|| 2.0 * PI / w)
            }
            CoefficientKind::QuasiPeriodic { .. } => None,
        }
    }

    pub fn translated(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.shift += s;
        out
    }

    fn map_terms(&self, rows: usize, cols: usize, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        Self {
            kind: self.kind.clone(),
            rows,
            cols,
            terms: self
                .terms
                .iter()
                .map(|t| TrigTerm {
                    multi_index: t.multi_index.clone(),
                    cos: f(&t.cos),
                    sin: f(&t.sin),
                })
                .collect(),
            shift: self.shift,
        }
    }

    /// `t -> left * C(t)`.
    pub fn left_mul(&self, left: &DMatrix<f64>) -> Self {
        assert_eq!(left.ncols(), self.rows, "left_mul shape mismatch");
        self.map_terms(left.nrows(), self.cols, |m| left * m)
    }

    /// `t -> C(t) * right`.
    pub fn right_mul(&self, right: &DMatrix<f64>) -> Self {
        assert_eq!(right.nrows(), self.cols, "right_mul shape mismatch");
        self.map_terms(self.rows, right.ncols(), |m| m * right)
    }

    /// Index of the zero-frequency term, inserting one if absent.
    fn constant_term_index(&mut self) -> usize {
        if let Some(i) = self
            .terms
            .iter()
            .position(|t| t.multi_index.iter().all(|&k| k == 0))
        {
            return i;
        }
        let len = match &self.kind {
            CoefficientKind::Constant => 0,
            CoefficientKind::Periodic { .. } => 1,
            CoefficientKind::QuasiPeriodic { frequencies } => frequencies.len(),
        };
        self.terms.push(TrigTerm {
            multi_index: vec![0; len],
            cos: DMatrix::zeros(self.rows, self.cols),
            sin: DMatrix::zeros(self.rows, self.cols),
        });
        self.terms.len() - 1
    }

    /// `t -> [C(t) | block]` with a constant right block.
    pub fn hstack_constant(&self, block: &DMatrix<f64>) -> Self {
        assert_eq!(block.nrows(), self.rows, "hstack shape mismatch");
        let cols = self.cols + block.ncols();
        let pad = |m: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(self.rows, cols);
            out.view_mut((0, 0), m.shape()).copy_from(m);
            out
        };
        let mut out = self.map_terms(self.rows, cols, pad);
        let i = out.constant_term_index();
        out.terms[i]
            .cos
            .view_mut((0, self.cols), block.shape())
            .copy_from(block);
        out
    }

    /// `t -> diag(C(t), block)` with a constant lower-right block.
    pub fn block_diag_constant(&self, block: &DMatrix<f64>) -> Self {
        let (rows, cols) = (self.rows + block.nrows(), self.cols + block.ncols());
        let zero = DMatrix::zeros(block.nrows(), block.ncols());
        let mut out = self.map_terms(rows, cols, |m| linalg::block_diag(m, &zero));
        let i = out.constant_term_index();
        out.terms[i]
            .cos
            .view_mut((self.rows, self.cols), block.shape())
            .copy_from(block);
        out
    }
}

/// How the coefficient tuple of a problem depends on time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Periodicity {
    Constant,
    Periodic(f64),
    Aperiodic,
}

/// Finds a common period for a set of coefficient functions, if one exists
/// among the declared periods (the largest declared period must be an integer
/// multiple of every other).
pub fn common_periodicity<'a>(fns: impl IntoIterator<Item = &'a CoefficientFn>) -> Periodicity {
    let mut periods = Vec::new();
    for f in fns {
        if f.is_constant() {
            continue;
        }
        match f.period() {
            Some(p) => periods.push(p),
            None => return Periodicity::Aperiodic,
        }
    }
    let Some(&longest) = periods.iter().max_by(|a, b| a.total_cmp(b)) else {
        return Periodicity::Constant;
    };
    let commensurate = periods.iter().all(|p| {
        let ratio = longest / p;
        (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0)
    });
    if commensurate {
        Periodicity::Periodic(longest)
    } else {
        Periodicity::Aperiodic
    }
}

/// Symmetry and definiteness tolerances used by [`ProblemData::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationTolerances {
    pub tau_sym: f64,
    pub tau_psd: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        Self {
            tau_sym: 1e-9,
            tau_psd: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    /// `||C(t) - C(t)^T||_F` exceeded the tolerance.
    Asymmetric { field: String, t: f64, norm: f64 },
    /// Smallest eigenvalue of `R(t) - rho I` fell below `-tau_psd`.
    NotPositive { t: f64, min_eigenvalue: f64, rho: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Asymmetric { field, t, norm } => {
                write!(f, "{field} is not symmetric at t = {t} (asymmetry {norm:.3e})")
            }
            Violation::NotPositive {
                t,
                min_eigenvalue,
                rho,
            } => write!(
                f,
                "R - rho*I is not positive semidefinite at t = {t} (rho = {rho}, smallest eigenvalue {min_eigenvalue:.3e})"
            ),
        }
    }
}

/// The coefficient tuple `(A, B, G, g, R)` of a minimization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    n: usize,
    m: usize,
    pub a: CoefficientFn,
    pub b: CoefficientFn,
    /// `G`, the state weight.
    pub state_weight: CoefficientFn,
    /// `g`, the state/control cross weight.
    pub cross_weight: CoefficientFn,
    /// `R`, the control weight.
    pub control_weight: CoefficientFn,
    pub rho: f64,
}

impl ProblemData {
    pub fn new(
        a: CoefficientFn,
        b: CoefficientFn,
        state_weight: CoefficientFn,
        cross_weight: CoefficientFn,
        control_weight: CoefficientFn,
        rho: f64,
    ) -> Result<Self> {
        let (n, m) = b.shape();
        let expect = |field: &str, f: &CoefficientFn, shape: (usize, usize)| {
            if f.shape() == shape {
                Ok(())
            } else {
                Err(LqError::Shape {
                    field: field.into(),
                    expected: format!("{}x{}", shape.0, shape.1),
                    got: format!("{}x{}", f.rows, f.cols),
                })
            }
        };
        if n == 0 || m == 0 {
            return Err(LqError::InvalidArgument(
                "state and control dimensions must be positive".into(),
            ));
        }
        expect("A", &a, (n, n))?;
        expect("G", &state_weight, (n, n))?;
        expect("g", &cross_weight, (n, m))?;
        expect("R", &control_weight, (m, m))?;
        if !(rho.is_finite() && rho > 0.0) {
            return Err(LqError::InvalidArgument(format!(
                "rho must be positive, got {rho}"
            )));
        }
        Ok(Self {
            n,
            m,
            a,
            b,
            state_weight,
            cross_weight,
            control_weight,
            rho,
        })
    }

    /// Constant-coefficient problem from plain matrices.
    pub fn constant(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        state_weight: DMatrix<f64>,
        cross_weight: DMatrix<f64>,
        control_weight: DMatrix<f64>,
        rho: f64,
    ) -> Result<Self> {
        Self::new(
            CoefficientFn::constant(a),
            CoefficientFn::constant(b),
            CoefficientFn::constant(state_weight),
            CoefficientFn::constant(cross_weight),
            CoefficientFn::constant(control_weight),
            rho,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coefficients(&self) -> [&CoefficientFn; 5] {
        [
            &self.a,
            &self.b,
            &self.state_weight,
            &self.cross_weight,
            &self.control_weight,
        ]
    }

    /// The point `omega . s` of the translation flow.
    pub fn translate(&self, s: f64) -> Self {
        Self {
            n: self.n,
            m: self.m,
            a: self.a.translated(s),
            b: self.b.translated(s),
            state_weight: self.state_weight.translated(s),
            cross_weight: self.cross_weight.translated(s),
            control_weight: self.control_weight.translated(s),
            rho: self.rho,
        }
    }

    pub fn periodicity(&self) -> Periodicity {
        common_periodicity(self.coefficients())
    }

    /// Checks symmetry of `G`, `R` and `R >= rho I` on a time grid.
    pub fn validate(&self, grid: &[f64], tol: ValidationTolerances) -> Result<Vec<Violation>> {
        if grid.is_empty() {
            return Err(LqError::InvalidArgument("validation grid is empty".into()));
        }
        let mut out = Vec::new();
        for &t in grid {
            for (field, f) in [("G", &self.state_weight), ("R", &self.control_weight)] {
                let norm = linalg::asymmetry(&f.evaluate(t));
                if norm > tol.tau_sym {
                    out.push(Violation::Asymmetric {
                        field: field.into(),
                        t,
                        norm,
                    });
                }
            }
            let shifted = self.control_weight.evaluate(t)
                - DMatrix::<f64>::identity(self.m, self.m) * self.rho;
            let min_eigenvalue = linalg::min_sym_eigenvalue(&shifted);
            if min_eigenvalue < -tol.tau_psd {
                out.push(Violation::NotPositive {
                    t,
                    min_eigenvalue,
                    rho: self.rho,
                });
            }
        }
        Ok(out)
    }

    /// Default validation grid: 64 points over one period (or over `[t0, t0 + 16]`
    /// for aperiodic data, a single point for constant data).
    pub fn default_grid(&self, t0: f64) -> Vec<f64> {
        match self.periodicity() {
            Periodicity::Constant => vec![t0],
            Periodicity::Periodic(p) => (0..64).map(|k| t0 + p * k as f64 / 64.0).collect(),
            Periodicity::Aperiodic => (0..64).map(|k| t0 + 0.25 * k as f64).collect(),
        }
    }
}
