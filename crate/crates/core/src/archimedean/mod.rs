//! Archimedean generators, Archimedean copulas and conditional generators.

mod conditional;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::MonotoneCubic;

pub use conditional::{conditional_archimedean_copula_cdf, conditional_generator, ConditionalGenerator};

/// Highest derivative order with a closed form.
const ANALYTIC_ORDER: usize = 3;
/// Highest derivative order of a tabulated (piecewise cubic) generator.
const TABULATED_ORDER: usize = 2;

/// A generator `φ` with `φ(0) = 1`, decreasing to 0 on `[0, s0)`.
pub trait Generator: Send + Sync {
    fn value(&self, s: f64) -> f64;

    /// `φ^(order)(s)`; errors when `order > self.max_order()`.
    fn derivative(&self, s: f64, order: usize) -> Result<f64>;

    /// `φ⁻¹(t)` for `t ∈ [0, 1]`; errors at `t = 0` when the support is unbounded.
    fn inverse(&self, t: f64) -> Result<f64>;

    /// `s0 = inf { s : φ(s) = 0 }` (possibly infinite).
    fn support_end(&self) -> f64;

    /// Largest `d` for which the generator is declared valid.
    fn max_dim(&self) -> usize;

    fn max_order(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorFamily {
    #[serde(alias = "clayton")]
    Mtcj,
    Frank,
    Gumbel,
    Amh,
    Tabulated,
}

impl GeneratorFamily {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorFamily::Mtcj => "mtcj",
            GeneratorFamily::Frank => "frank",
            GeneratorFamily::Gumbel => "gumbel",
            GeneratorFamily::Amh => "amh",
            GeneratorFamily::Tabulated => "tabulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    interp: MonotoneCubic,
    s_last: f64,
    phi_last: f64,
    /// Exponential decay rate beyond the grid; 0 when the table reaches 0.
    tail_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum GenKind {
    Mtcj(f64),
    /// α and `1 - e^{-α}`.
    Frank(f64, f64),
    Gumbel(f64),
    Amh(f64),
    Tabulated(Box<Table>),
}

/// Serializes as `{"family", "theta", "max_dim"}`, or for tabulated
/// generators `{"family": "tabulated", "s_grid", "phi_grid"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGenerator", into = "RawGenerator")]
pub struct ArchimedeanGenerator {
    kind: GenKind,
    max_dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    family: GeneratorFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi_grid: Option<Vec<f64>>,
}

impl TryFrom<RawGenerator> for ArchimedeanGenerator {
    type Error = Error;

    fn try_from(raw: RawGenerator) -> Result<Self> {
        if raw.family == GeneratorFamily::Tabulated {
            if raw.theta.is_some() {
                return Err(Error::invalid("tabulated generator takes s_grid and phi_grid, not theta"));
            }
            let s = raw.s_grid.ok_or_else(|| Error::invalid("tabulated generator needs s_grid"))?;
            let p = raw.phi_grid.ok_or_else(|| Error::invalid("tabulated generator needs phi_grid"))?;
            return ArchimedeanGenerator::tabulated(s, p, raw.max_dim.unwrap_or(2));
        }
        if raw.s_grid.is_some() || raw.phi_grid.is_some() {
            return Err(Error::invalid("s_grid/phi_grid are only valid for the tabulated family"));
        }
        let theta = raw
            .theta
            .ok_or_else(|| Error::invalid(format!("{} generator needs theta", raw.family.name())))?;
        let max_dim = raw.max_dim.ok_or_else(|| Error::invalid("generator needs max_dim"))?;
        ArchimedeanGenerator::new(raw.family, theta, max_dim)
    }
}

impl From<ArchimedeanGenerator> for RawGenerator {
    fn from(g: ArchimedeanGenerator) -> Self {
        match &g.kind {
            GenKind::Tabulated(t) => RawGenerator {
                family: GeneratorFamily::Tabulated,
                theta: None,
                max_dim: Some(g.max_dim),
                s_grid: Some(t.interp.xs().to_vec()),
                phi_grid: Some(t.interp.ys().to_vec()),
            },
            _ => RawGenerator {
                family: g.family(),
                theta: g.theta(),
                max_dim: Some(g.max_dim),
                s_grid: None,
                phi_grid: None,
            },
        }
    }
}

fn gen_param(family: GeneratorFamily, value: f64, range: &'static str) -> Error {
    Error::Parameter {
        family: family.name(),
        name: "theta",
        value,
        range,
    }
}

impl ArchimedeanGenerator {
    pub fn new(family: GeneratorFamily, theta: f64, max_dim: usize) -> Result<Self> {
        if max_dim < 2 {
            return Err(Error::Dimension {
                dim: max_dim,
                reason: "generators need max_dim >= 2",
            });
        }
        let kind = match family {
            GeneratorFamily::Mtcj => {
                let lower = -1.0 / (max_dim as f64 - 1.0);
                if !(theta.is_finite() && theta >= lower) {
                    return Err(gen_param(family, theta, "[-1/(max_dim-1), inf)"));
                }
                GenKind::Mtcj(theta)
            }
            GeneratorFamily::Frank => {
                if !(theta.is_finite() && theta > 0.0) {
                    return Err(gen_param(family, theta, "(0, inf)"));
                }
                GenKind::Frank(theta, -(-theta).exp_m1())
            }
            GeneratorFamily::Gumbel => {
                if !(theta.is_finite() && theta >= 1.0) {
                    return Err(gen_param(family, theta, "[1, inf)"));
                }
                GenKind::Gumbel(theta)
            }
            GeneratorFamily::Amh => {
                if !(0.0..1.0).contains(&theta) {
                    return Err(gen_param(family, theta, "[0, 1)"));
                }
                GenKind::Amh(theta)
            }
            GeneratorFamily::Tabulated => {
                return Err(Error::invalid("use ArchimedeanGenerator::tabulated for tabulated generators"));
            }
        };
        Ok(ArchimedeanGenerator { kind, max_dim })
    }

    pub fn mtcj(theta: f64, max_dim: usize) -> Result<Self> {
        Self::new(GeneratorFamily::Mtcj, theta, max_dim)
    }

    pub fn frank(alpha: f64, max_dim: usize) -> Result<Self> {
        Self::new(GeneratorFamily::Frank, alpha, max_dim)
    }

    pub fn gumbel(theta: f64, max_dim: usize) -> Result<Self> {
        Self::new(GeneratorFamily::Gumbel, theta, max_dim)
    }

    pub fn amh(theta: f64, max_dim: usize) -> Result<Self> {
        Self::new(GeneratorFamily::Amh, theta, max_dim)
    }

    /// Generator interpolated (PCHIP) through `(s_grid, phi_grid)`. The grid
    /// must start at `(0, 1)` and decrease; beyond the last node the
    /// generator continues with the exponential decay of the last segment,
    /// unless the table already ends at 0.
    pub fn tabulated(s_grid: Vec<f64>, phi_grid: Vec<f64>, max_dim: usize) -> Result<Self> {
        let n = s_grid.len();
        if n < 3 || phi_grid.len() != n {
            return Err(Error::invalid("tabulated generator needs at least 3 nodes and equal-length grids"));
        }
        if s_grid[0] != 0.0 || (phi_grid[0] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("tabulated generator must start at s = 0 with phi = 1"));
        }
        if phi_grid.windows(2).any(|w| !(w[1] < w[0])) || phi_grid[n - 1] < 0.0 {
            return Err(Error::invalid("tabulated generator values must be strictly decreasing and nonnegative"));
        }
        if max_dim < 2 {
            return Err(Error::Dimension {
                dim: max_dim,
                reason: "generators need max_dim >= 2",
            });
        }
        let s_last = s_grid[n - 1];
        let phi_last = phi_grid[n - 1];
        let tail_rate = if phi_last > 0.0 {
            (phi_grid[n - 2] / phi_last).ln() / (s_last - s_grid[n - 2])
        } else {
            0.0
        };
        let interp = MonotoneCubic::new(s_grid, phi_grid)?;
        Ok(ArchimedeanGenerator {
            kind: GenKind::Tabulated(Box::new(Table {
                interp,
                s_last,
                phi_last,
                tail_rate,
            })),
            max_dim,
        })
    }

    pub fn family(&self) -> GeneratorFamily {
        match self.kind {
            GenKind::Mtcj(_) => GeneratorFamily::Mtcj,
            GenKind::Frank(..) => GeneratorFamily::Frank,
            GenKind::Gumbel(_) => GeneratorFamily::Gumbel,
            GenKind::Amh(_) => GeneratorFamily::Amh,
            GenKind::Tabulated(_) => GeneratorFamily::Tabulated,
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self.kind {
            GenKind::Mtcj(t) | GenKind::Frank(t, _) | GenKind::Gumbel(t) | GenKind::Amh(t) => Some(t),
            GenKind::Tabulated(_) => None,
        }
    }

    fn eval(&self, s: f64, order: usize) -> f64 {
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        match &self.kind {
            GenKind::Mtcj(theta) => {
                let theta = *theta;
                if theta == 0.0 {
                    return sign * (-s).exp();
                }
                let base = theta * s;
                if base <= -1.0 {
                    return 0.0;
                }
                let mut coef = 1.0;
                for i in 0..order {
                    coef *= 1.0 + i as f64 * theta;
                }
                sign * coef * (-(1.0 / theta + order as f64) * base.ln_1p()).exp()
            }
            GenKind::Frank(alpha, c) => {
                let q = c * (-s).exp();
                let om = 1.0 - q;
                match order {
                    0 => -(-q).ln_1p() / alpha,
                    1 => -q / om / alpha,
                    2 => q / (om * om) / alpha,
                    _ => -q * (1.0 + q) / (om * om * om) / alpha,
                }
            }
            GenKind::Gumbel(theta) => {
                let b = 1.0 / theta;
                if s == 0.0 {
                    // φ'(0) is finite only for the independence case θ = 1.
                    return match order {
                        0 => 1.0,
                        _ if b == 1.0 => sign,
                        _ => sign * f64::INFINITY,
                    };
                }
                let x = s.powf(b);
                let phi = (-x).exp();
                // φ^(j) = φ · Σ terms in powers of s^b, divided by s^j.
                let poly = match order {
                    0 => 1.0,
                    1 => -b * x,
                    2 => b * x * (b * x - (b - 1.0)),
                    _ => -b * x * (b * b * x * x - 3.0 * b * (b - 1.0) * x + (b - 1.0) * (b - 2.0)),
                };
                phi * poly / s.powi(order as i32)
            }
            GenKind::Amh(theta) => {
                let q = (-s).exp();
                let r = theta * q;
                let om = 1.0 - r;
                let base = (1.0 - theta) * q / om;
                match order {
                    0 => base,
                    1 => -base / om,
                    2 => base * (1.0 + r) / (om * om),
                    _ => -base * (1.0 + 4.0 * r + r * r) / (om * om * om),
                }
            }
            GenKind::Tabulated(t) => {
                if s <= t.s_last {
                    match order {
                        0 => t.interp.eval(s).max(0.0),
                        1 => t.interp.derivative(s),
                        _ => t.interp.second_derivative(s),
                    }
                } else if t.tail_rate == 0.0 {
                    0.0
                } else {
                    let v = t.phi_last * (-t.tail_rate * (s - t.s_last)).exp();
                    v * (-t.tail_rate).powi(order as i32)
                }
            }
        }
    }

    fn inv(&self, t: f64) -> Result<f64> {
        if t.is_nan() || !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain {
                name: "t",
                value: t,
                domain: "[0, 1]",
            });
        }
        if t == 1.0 {
            return Ok(0.0);
        }
        if t == 0.0 {
            let s0 = self.support_end();
            return if s0.is_finite() { Ok(s0) } else { Err(Error::InfiniteInverse) };
        }
        let s = match &self.kind {
            GenKind::Mtcj(theta) => {
                if *theta == 0.0 {
                    -t.ln()
                } else {
                    (-theta * t.ln()).exp_m1() / theta
                }
            }
            GenKind::Frank(alpha, c) => c.ln() - (-(-alpha * t).exp_m1()).ln(),
            GenKind::Gumbel(theta) => (-t.ln()).powf(*theta),
            GenKind::Amh(theta) => ((1.0 - theta) * (1.0 - t) / t).ln_1p(),
            GenKind::Tabulated(tab) => {
                if t >= tab.phi_last {
                    tab.interp.inverse(t)
                } else {
                    tab.s_last + (tab.phi_last / t).ln() / tab.tail_rate
                }
            }
        };
        Ok(s.max(0.0))
    }
}

impl Generator for ArchimedeanGenerator {
    fn value(&self, s: f64) -> f64 {
        self.eval(s.max(0.0), 0).clamp(0.0, 1.0)
    }

    fn derivative(&self, s: f64, order: usize) -> Result<f64> {
        if order > self.max_order() {
            return Err(Error::DerivativeOrder {
                order,
                max: self.max_order(),
            });
        }
        Ok(self.eval(s.max(0.0), order))
    }

    fn inverse(&self, t: f64) -> Result<f64> {
        self.inv(t)
    }

    fn support_end(&self) -> f64 {
        match &self.kind {
            GenKind::Mtcj(theta) if *theta < 0.0 => -1.0 / theta,
            GenKind::Tabulated(t) if t.tail_rate == 0.0 => {
                // first node where the table reaches 0
                let xs = t.interp.xs();
                let ys = t.interp.ys();
                xs[ys.iter().position(|&y| y == 0.0).unwrap_or(xs.len() - 1)]
            }
            _ => f64::INFINITY,
        }
    }

    fn max_dim(&self) -> usize {
        self.max_dim
    }

    fn max_order(&self) -> usize {
        let limit = match self.kind {
            GenKind::Tabulated(_) => TABULATED_ORDER,
            _ => ANALYTIC_ORDER,
        };
        limit.min(self.max_dim)
    }
}

/// `φ^(order)(s)` with argument and order checks.
pub fn generator_eval<G: Generator + ?Sized>(gen: &G, s: f64, order: usize) -> Result<f64> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::Domain {
            name: "s",
            value: s,
            domain: "[0, inf)",
        });
    }
    if order == 0 {
        Ok(gen.value(s))
    } else {
        gen.derivative(s, order)
    }
}

pub fn generator_inv<G: Generator + ?Sized>(gen: &G, t: f64) -> Result<f64> {
    gen.inverse(t)
}

fn check_unit_vector(u: &[f64]) -> Result<()> {
    for &x in u {
        if x.is_nan() || !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                name: "u",
                value: x,
                domain: "[0, 1]",
            });
        }
    }
    Ok(())
}

fn check_dim<G: Generator + ?Sized>(gen: &G, dim: usize) -> Result<()> {
    if dim == 0 || dim > gen.max_dim() {
        return Err(Error::Dimension {
            dim,
            reason: "dimension exceeds the generator's max_dim",
        });
    }
    Ok(())
}

/// `C(u) = φ(Σ φ⁻¹(u_j))`.
pub fn archimedean_cdf<G: Generator + ?Sized>(gen: &G, u: &[f64]) -> Result<f64> {
    check_dim(gen, u.len())?;
    check_unit_vector(u)?;
    if u.iter().any(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let others_one: Vec<f64> = u.iter().copied().filter(|&x| x < 1.0).collect();
    if others_one.len() <= 1 {
        return Ok(others_one.first().copied().unwrap_or(1.0));
    }
    let mut s = 0.0;
    for &x in &others_one {
        s += gen.inverse(x)?;
    }
    Ok(gen.value(s))
}

/// Density `φ^(d)(Σ φ⁻¹(u_j)) / Π φ'(φ⁻¹(u_j))` on the open cube.
pub fn archimedean_density<G: Generator + ?Sized>(gen: &G, u: &[f64]) -> Result<f64> {
    let d = u.len();
    check_dim(gen, d)?;
    check_unit_vector(u)?;
    if d == 1 {
        return Ok(1.0);
    }
    let mut s = 0.0;
    let mut denom = 1.0;
    for &x in u {
        let x = x.clamp(crate::bicop::EPS, 1.0 - crate::bicop::EPS);
        let si = gen.inverse(x)?;
        s += si;
        denom *= -gen.derivative(si, 1)?;
    }
    if s >= gen.support_end() {
        return Ok(0.0);
    }
    let top = gen.derivative(s, d)?;
    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
    Ok((sign * top / denom).max(0.0))
}

/// The generator of the conditional copulas of an MTCJ copula of dimension
/// `dim` after conditioning on `m` variables: MTCJ with `θ / (mθ + 1)`,
/// valid up to dimension `dim - m`.
pub fn mtcj_conditional_generator(theta: f64, m: usize, dim: usize) -> Result<ArchimedeanGenerator> {
    ArchimedeanGenerator::mtcj(theta, dim)?;
    let denom = m as f64 * theta + 1.0;
    if denom <= 0.0 {
        return Err(Error::Parameter {
            family: "mtcj",
            name: "m*theta+1",
            value: denom,
            range: "(0, inf)",
        });
    }
    if dim < m + 2 {
        return Err(Error::Dimension {
            dim,
            reason: "conditioning on m variables needs dim >= m + 2",
        });
    }
    // θ ≥ -1/(dim-1) implies θ' ≥ -1/(dim-m-1); clamp away the rounding.
    let lower = -1.0 / ((dim - m) as f64 - 1.0);
    ArchimedeanGenerator::mtcj((theta / denom).max(lower), dim - m)
}

/// Generator wrapper `s ↦ ψ(c s)`; the copula it generates is unchanged.
#[derive(Debug, Clone)]
pub struct Scaled<G> {
    pub inner: G,
    pub scale: f64,
}

impl<G: Generator> Generator for Scaled<G> {
    fn value(&self, s: f64) -> f64 {
        self.inner.value(self.scale * s)
    }

    fn derivative(&self, s: f64, order: usize) -> Result<f64> {
        Ok(self.scale.powi(order as i32) * self.inner.derivative(self.scale * s, order)?)
    }

    fn inverse(&self, t: f64) -> Result<f64> {
        Ok(self.inner.inverse(t)? / self.scale)
    }

    fn support_end(&self) -> f64 {
        self.inner.support_end() / self.scale
    }

    fn max_dim(&self) -> usize {
        self.inner.max_dim()
    }

    fn max_order(&self) -> usize {
        self.inner.max_order()
    }
}
