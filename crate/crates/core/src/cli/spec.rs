//! Problem description files.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientFn, ProblemData, TrigTerm};
use crate::error::{LqError, Result};
use crate::hamiltonian::HamiltonianFamily;
use crate::lq_solver::SolveOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

/// Row-major matrix as nested arrays.
pub type RowMajor = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub freq_index: i64,
    pub cos_matrix: RowMajor,
    pub sin_matrix: RowMajor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicData {
    pub period: f64,
    pub fourier: Vec<FourierTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasiTerm {
    pub multi_index: Vec<i64>,
    pub cos_matrix: RowMajor,
    pub sin_matrix: RowMajor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasiPeriodicData {
    pub frequencies: Vec<f64>,
    pub terms: Vec<QuasiTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum CoefficientSpec {
    Constant(RowMajor),
    Periodic(PeriodicData),
    Quasiperiodic(QuasiPeriodicData),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSet {
    #[serde(rename = "A")]
    pub a: CoefficientSpec,
    #[serde(rename = "B")]
    pub b: CoefficientSpec,
    #[serde(rename = "G")]
    pub big_g: CoefficientSpec,
    #[serde(rename = "g")]
    pub small_g: CoefficientSpec,
    #[serde(rename = "R")]
    pub r: CoefficientSpec,
}

/// Optional overrides of [`SolveOptions`]; absent keys keep the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_sym: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_psd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_spec: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_floq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_adm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assume_dichotomy: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_conv: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_rotation: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_check: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gramian_horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
}

impl SpecOptions {
    pub fn to_solve_options(&self) -> SolveOptions {
        let mut o = SolveOptions::default();
        macro_rules! set {
            ($src:ident => $($dst:tt)+) => {
                if let Some(v) = self.$src.clone() {
                    o.$($dst)+ = v;
                }
            };
        }
        set!(t0 => t0);
        set!(tau_sym => validation.tau_sym);
        set!(tau_psd => validation.tau_psd);
        set!(tau_spec => dichotomy.tau_spec);
        set!(tau_floq => dichotomy.tau_floq);
        set!(tau_gap => dichotomy.tau_gap);
        set!(kappa_max => dichotomy.kappa_max);
        set!(tau_adm => tau_adm);
        set!(t_max => dichotomy.t_max);
        set!(seed => dichotomy.seed);
        set!(assume_dichotomy => dichotomy.assume_dichotomy);
        set!(rotation_horizon => rotation.horizon);
        set!(rotation_cap => rotation.horizon_cap);
        set!(tau_conv => rotation.tau_conv);
        set!(check_rotation => check_rotation);
        set!(eps_check => eps_check);
        set!(eps_grid => eps_grid);
        set!(rel_tol => propagation.rel_tol);
        set!(abs_tol => propagation.abs_tol);
        o.horizon = self.horizon;
        o.gramian_horizon = self.gramian_horizon;
        o.dichotomy.propagation = o.propagation;
        o.rotation.propagation = o.propagation;
        o
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpecFile {
    pub dims: Dims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientSet>,
    /// A Hamiltonian matrix function given directly, for systems that do not
    /// come from minimization data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<CoefficientSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub options: SpecOptions,
}

fn field_error(path: &str, msg: impl Into<String>) -> LqError {
    LqError::InvalidArgument(format!("{path}: {}", msg.into()))
}

fn matrix(path: &str, rows: &RowMajor, shape: (usize, usize)) -> Result<DMatrix<f64>> {
    if rows.len() != shape.0 {
        return Err(field_error(path, format!("expected {} rows, got {}", shape.0, rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != shape.1 {
            return Err(field_error(
                &format!("{path}[{i}]"),
                format!("expected {} columns, got {}", shape.1, row.len()),
            ));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(field_error(&format!("{path}[{i}][{j}]"), "entry is not finite"));
        }
    }
    Ok(DMatrix::from_fn(shape.0, shape.1, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> RowMajor {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl CoefficientSpec {
    pub fn build(&self, path: &str, shape: (usize, usize)) -> Result<CoefficientFn> {
        let wrap = |e: LqError| field_error(path, e.to_string());
        match self {
            CoefficientSpec::Constant(rows) => Ok(CoefficientFn::constant(matrix(&format!("{path}.data"), rows, shape)?)),
            CoefficientSpec::Periodic(d) => {
                let mut terms = Vec::with_capacity(d.fourier.len());
                for (k, t) in d.fourier.iter().enumerate() {
                    let base = format!("{path}.data.fourier[{k}]");
                    if t.freq_index < 0 {
                        return Err(field_error(&format!("{base}.freq_index"), "must be nonnegative"));
                    }
                    terms.push((
                        t.freq_index,
                        matrix(&format!("{base}.cos_matrix"), &t.cos_matrix, shape)?,
                        matrix(&format!("{base}.sin_matrix"), &t.sin_matrix, shape)?,
                    ));
                }
                CoefficientFn::periodic(d.period, shape.0, shape.1, terms).map_err(wrap)
            }
            CoefficientSpec::Quasiperiodic(d) => {
                let mut terms = Vec::with_capacity(d.terms.len());
                for (k, t) in d.terms.iter().enumerate() {
                    let base = format!("{path}.data.terms[{k}]");
                    if t.multi_index.len() != d.frequencies.len() {
                        return Err(field_error(
                            &format!("{base}.multi_index"),
                            format!("expected {} entries, got {}", d.frequencies.len(), t.multi_index.len()),
                        ));
                    }
                    terms.push(TrigTerm {
                        multi_index: t.multi_index.clone(),
                        cos: matrix(&format!("{base}.cos_matrix"), &t.cos_matrix, shape)?,
                        sin: matrix(&format!("{base}.sin_matrix"), &t.sin_matrix, shape)?,
                    });
                }
                CoefficientFn::quasi_periodic(d.frequencies.clone(), shape.0, shape.1, terms).map_err(wrap)
            }
        }
    }

    pub fn constant(m: &DMatrix<f64>) -> Self {
        CoefficientSpec::Constant(to_rows(m))
    }
}

impl ProblemSpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            LqError::InvalidArgument(format!("{path}: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LqError::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Minimization data, when coefficients are present.
    pub fn problem(&self) -> Result<Option<ProblemData>> {
        let Some(c) = &self.coefficients else {
            return Ok(None);
        };
        let n = self.dims.n;
        let m = self
            .dims
            .m
            .ok_or_else(|| field_error("dims.m", "required when coefficients are given"))?;
        if n == 0 || m == 0 {
            return Err(field_error("dims", "n and m must be positive"));
        }
        let rho = self.rho.ok_or_else(|| field_error("rho", "required when coefficients are given"))?;
        let p = ProblemData::new(
            c.a.build("coefficients.A", (n, n))?,
            c.b.build("coefficients.B", (n, m))?,
            c.big_g.build("coefficients.G", (n, n))?,
            c.small_g.build("coefficients.g", (n, m))?,
            c.r.build("coefficients.R", (m, m))?,
            rho,
        )
        .map_err(|e| field_error("rho", e.to_string()))?;
        Ok(Some(p))
    }

    /// The Hamiltonian family: given directly, or assembled from coefficients.
    pub fn hamiltonian_family(&self) -> Result<HamiltonianFamily> {
        if let Some(h) = &self.hamiltonian {
            let n = self.dims.n;
            return HamiltonianFamily::from_matrix_fn(h.build("hamiltonian", (2 * n, 2 * n))?);
        }
        match self.problem()? {
            Some(p) => Ok(HamiltonianFamily::from_problem(&p)),
            None => Err(field_error("coefficients", "either coefficients or hamiltonian is required")),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        super::output::to_json(self)
    }
}
