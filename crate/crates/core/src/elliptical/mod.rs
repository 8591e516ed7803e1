//! Elliptical generators, correlation matrices, partial correlations and the
//! Student-t conditional copula.

mod mixing;

pub use mixing::{
    f3_components, relative_spread, simplified_ratio_profile, tilted_moment, MixingDistribution, RatioProfile,
};

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::bicop::BivariateCopula;
use crate::error::{Error, Result};
use crate::numerics::special::{ln_gamma, normal_pdf, normal_quantile, PearsonIIMargin, StudentT};

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric positive-definite matrix with unit diagonal, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct CorrelationMatrix {
    dim: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for CorrelationMatrix {
    type Error = Error;
    fn try_from(raw: RawMatrix) -> Result<Self> {
        CorrelationMatrix::new(raw.dim, raw.data)
    }
}

impl From<CorrelationMatrix> for RawMatrix {
    fn from(m: CorrelationMatrix) -> Self {
        RawMatrix {
            dim: m.dim,
            data: m.data,
        }
    }
}

impl CorrelationMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::invalid(format!(
                "correlation matrix of dimension {dim} needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("correlation matrix has non-finite entries"));
        }
        for i in 0..dim {
            if (data[i * dim + i] - 1.0).abs() > SYMMETRY_TOL {
                return Err(Error::invalid(format!("diagonal entry {i} is {} (must be 1)", data[i * dim + i])));
            }
            for j in 0..i {
                if (data[i * dim + j] - data[j * dim + i]).abs() > SYMMETRY_TOL {
                    return Err(Error::invalid(format!("correlation matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        let m = CorrelationMatrix { dim, data };
        if Cholesky::new(m.to_dmatrix()).is_none() {
            return Err(Error::Singular("correlation matrix is not positive definite".into()));
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        CorrelationMatrix { dim, data }
    }

    /// Matrix with every off-diagonal entry equal to `rho`.
    pub fn equicorrelated(dim: usize, rho: f64) -> Result<Self> {
        let mut data = vec![rho; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        CorrelationMatrix::new(dim, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("correlation matrix rows must all have length dim"));
        }
        CorrelationMatrix::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    fn cholesky(&self) -> Cholesky<f64, Dyn> {
        Cholesky::new(self.to_dmatrix()).expect("validated positive definite")
    }

    pub fn determinant(&self) -> f64 {
        let l = self.cholesky().l();
        (0..self.dim).map(|i| l[(i, i)]).product::<f64>().powi(2)
    }

    /// Quadratic form `x' R⁻¹ x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let z = self.cholesky().l().solve_lower_triangular(&nalgebra::DVector::from_column_slice(x));
        z.expect("nonsingular factor").norm_squared()
    }
}

fn check_indices(dim: usize, a: [usize; 2], b: &[usize]) -> Result<()> {
    let mut seen = vec![false; dim];
    for &i in a.iter().chain(b) {
        if i >= dim {
            return Err(Error::invalid(format!("index {i} out of range for dimension {dim}")));
        }
        if seen[i] {
            return Err(Error::invalid(format!("index {i} appears twice in A and B")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Correlation matrix of the pair `a` after conditioning on the variables `b`.
pub fn partial_correlation_matrix(r: &CorrelationMatrix, a: [usize; 2], b: &[usize]) -> Result<CorrelationMatrix> {
    check_indices(r.dim(), a, b)?;
    let mut v = DMatrix::from_fn(2, 2, |i, j| r.get(a[i], a[j]));
    if !b.is_empty() {
        let rbb = DMatrix::from_fn(b.len(), b.len(), |i, j| r.get(b[i], b[j]));
        let rba = DMatrix::from_fn(b.len(), 2, |i, j| r.get(b[i], a[j]));
        let chol = Cholesky::new(rbb).ok_or_else(|| Error::Singular("conditioning block R_B".into()))?;
        let x = chol.solve(&rba);
        v -= rba.transpose() * x;
    }
    let (v11, v22) = (v[(0, 0)], v[(1, 1)]);
    if !(v11 > 0.0 && v22 > 0.0) {
        return Err(Error::Singular("conditional covariance of A has a zero variance".into()));
    }
    let rho = (0.5 * (v[(0, 1)] + v[(1, 0)]) / (v11 * v22).sqrt()).clamp(-1.0, 1.0);
    if rho.abs() >= 1.0 {
        return Err(Error::Singular("pair is perfectly correlated given B".into()));
    }
    CorrelationMatrix::new(2, vec![1.0, rho, rho, 1.0])
}

/// Copula of the pair `a` of a Student-t vector given the variables `b`:
/// Student-t with the partial correlation and `nu + |b|` degrees of freedom.
pub fn t_conditional_copula(r: &CorrelationMatrix, nu: f64, a: [usize; 2], b: &[usize]) -> Result<BivariateCopula> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::Parameter {
            family: "pearson_vii",
            name: "nu",
            value: nu,
            range: "(0, inf)",
        });
    }
    let p = partial_correlation_matrix(r, a, b)?;
    BivariateCopula::student_t(p.get(0, 1), nu + b.len() as f64)
}

/// Kendall's tau of an atom-free elliptical copula with correlation `rho`.
pub fn tau_rho(rho: f64) -> f64 {
    2.0 / PI * rho.asin()
}

pub fn rho_tau(tau: f64) -> f64 {
    (0.5 * PI * tau).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EllipticalFamily {
    Gauss,
    #[serde(alias = "student_t", alias = "t")]
    PearsonVii,
    PearsonIi,
}

/// Elliptical law with zero location, correlation matrix `r` and a generator family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawElliptical", into = "RawElliptical")]
pub struct EllipticalSpec {
    generator: EllipticalFamily,
    r: CorrelationMatrix,
    shape: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElliptical {
    generator: EllipticalFamily,
    r: CorrelationMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<f64>,
}

impl TryFrom<RawElliptical> for EllipticalSpec {
    type Error = Error;
    fn try_from(raw: RawElliptical) -> Result<Self> {
        match (raw.generator, raw.shape) {
            (EllipticalFamily::Gauss, _) => Ok(EllipticalSpec::gauss(raw.r)),
            (g, Some(s)) => EllipticalSpec::new(g, raw.r, s),
            (_, None) => Err(Error::invalid("shape is required for pearson_vii and pearson_ii")),
        }
    }
}

impl From<EllipticalSpec> for RawElliptical {
    fn from(s: EllipticalSpec) -> Self {
        RawElliptical {
            generator: s.generator,
            r: s.r,
            shape: (s.generator != EllipticalFamily::Gauss).then_some(s.shape),
        }
    }
}

/// One-dimensional margin of an elliptical law.
#[derive(Debug, Clone, Copy)]
pub enum EllipticalMargin {
    Normal,
    T(StudentT),
    PearsonII(PearsonIIMargin),
}

impl EllipticalMargin {
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            EllipticalMargin::Normal => normal_pdf(x),
            EllipticalMargin::T(t) => t.pdf(x),
            EllipticalMargin::PearsonII(p) => p.pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            EllipticalMargin::Normal => crate::numerics::special::normal_cdf(x),
            EllipticalMargin::T(t) => t.cdf(x),
            EllipticalMargin::PearsonII(p) => p.cdf(x),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            EllipticalMargin::Normal => normal_quantile(p),
            EllipticalMargin::T(t) => t.quantile(p),
            EllipticalMargin::PearsonII(m) => m.quantile(p),
        }
    }
}

impl EllipticalSpec {
    pub fn new(generator: EllipticalFamily, r: CorrelationMatrix, shape: f64) -> Result<Self> {
        match generator {
            EllipticalFamily::Gauss => return Ok(EllipticalSpec::gauss(r)),
            EllipticalFamily::PearsonVii if !(shape.is_finite() && shape > 0.0) => {
                return Err(Error::Parameter {
                    family: "pearson_vii",
                    name: "nu",
                    value: shape,
                    range: "(0, inf)",
                })
            }
            EllipticalFamily::PearsonIi if !(shape.is_finite() && shape > 1.0) => {
                return Err(Error::Parameter {
                    family: "pearson_ii",
                    name: "zeta",
                    value: shape,
                    range: "(1, inf)",
                })
            }
            _ => {}
        }
        Ok(EllipticalSpec { generator, r, shape })
    }

    pub fn gauss(r: CorrelationMatrix) -> Self {
        EllipticalSpec {
            generator: EllipticalFamily::Gauss,
            r,
            shape: 0.0,
        }
    }

    pub fn student_t(r: CorrelationMatrix, nu: f64) -> Result<Self> {
        EllipticalSpec::new(EllipticalFamily::PearsonVii, r, nu)
    }

    pub fn pearson_ii(r: CorrelationMatrix, zeta: f64) -> Result<Self> {
        EllipticalSpec::new(EllipticalFamily::PearsonIi, r, zeta)
    }

    pub fn generator(&self) -> EllipticalFamily {
        self.generator
    }

    pub fn correlation(&self) -> &CorrelationMatrix {
        &self.r
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    /// Univariate margin of the `dim`-dimensional law.
    pub fn margin(&self) -> EllipticalMargin {
        match self.generator {
            EllipticalFamily::Gauss => EllipticalMargin::Normal,
            EllipticalFamily::PearsonVii => EllipticalMargin::T(StudentT::new(self.shape)),
            // integrating out dim - 1 coordinates raises the exponent by (dim - 1) / 2
            EllipticalFamily::PearsonIi => {
                EllipticalMargin::PearsonII(PearsonIIMargin::new(self.shape + 0.5 * (self.dim() as f64 - 1.0)))
            }
        }
    }

    /// Joint density `|R|^{-1/2} g_d(x' R⁻¹ x)` at `x`.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                dim: x.len(),
                reason: "point dimension must match the correlation matrix",
            });
        }
        let q = self.r.quadratic_form(x);
        Ok(elliptical_generator_eval(self, q, self.dim())? / self.r.determinant().sqrt())
    }

    /// Copula density at `u ∈ (0,1)^d`.
    pub fn copula_density(&self, u: &[f64]) -> Result<f64> {
        if let Some(&bad) = u.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::Domain {
                name: "u",
                value: bad,
                domain: "(0, 1)",
            });
        }
        let m = self.margin();
        let x: Vec<f64> = u.iter().map(|&p| m.quantile(p)).collect();
        self.copula_density_at_scores(&x, &m)
    }

    /// Copula density at the marginal scores `x = G⁻¹(u)`.
    pub fn copula_density_at_scores(&self, x: &[f64], margin: &EllipticalMargin) -> Result<f64> {
        let joint = self.density(x)?;
        if joint == 0.0 {
            return Ok(0.0);
        }
        let denom: f64 = x.iter().map(|&xi| margin.pdf(xi)).product();
        Ok(if denom > 0.0 { joint / denom } else { 0.0 })
    }
}

/// Generator `g` of the `n`-dimensional law, normalized to a density in `R^n`.
pub fn elliptical_generator_eval(spec: &EllipticalSpec, t: f64, n: usize) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain {
            name: "t",
            value: t,
            domain: "[0, inf)",
        });
    }
    let nf = n as f64;
    Ok(match spec.generator {
        EllipticalFamily::Gauss => (-0.5 * nf * (2.0 * PI).ln() - 0.5 * t).exp(),
        EllipticalFamily::PearsonVii => {
            let nu = spec.shape;
            let ln_c = ln_gamma(0.5 * (nu + nf)) - ln_gamma(0.5 * nu) - 0.5 * nf * (nu * PI).ln();
            (ln_c - 0.5 * (nu + nf) * (t / nu).ln_1p()).exp()
        }
        EllipticalFamily::PearsonIi => {
            if t >= 1.0 {
                0.0
            } else {
                let zeta = spec.shape;
                let ln_c = ln_gamma(0.5 * nf + zeta + 1.0) - ln_gamma(zeta + 1.0) - 0.5 * nf * PI.ln();
                (ln_c + zeta * (-t).ln_1p()).exp()
            }
        }
    })
}
