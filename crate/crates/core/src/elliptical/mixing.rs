//! Scale mixtures of normals: mixing laws for `W`, moments of the tilted
//! variable `V_t` and the moment-ratio profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::special::ln_gamma;
use crate::numerics::{integrate, integrate_half_line, QuadOptions};

const MOMENT_TOL: QuadOptions = QuadOptions {
    abs_tol: 1e-13,
    rel_tol: 1e-12,
    max_subdivisions: 4000,
};

/// Law of the mixing variable `W` on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawMixing")]
pub enum MixingDistribution {
    Gamma { shape: f64, rate: f64 },
    /// Atoms at `w1` (probability `p`) and `w2` (probability `1 - p`).
    TwoPoint { w1: f64, w2: f64, p: f64 },
    LogNormal { mu: f64, sigma: f64 },
    /// Piecewise-linear density through `(w, density)`, renormalized to mass one.
    Tabulated { w: Vec<f64>, density: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawMixing {
    Gamma { shape: f64, rate: f64 },
    TwoPoint { w1: f64, w2: f64, p: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Tabulated { w: Vec<f64>, density: Vec<f64> },
}

impl TryFrom<RawMixing> for MixingDistribution {
    type Error = Error;
    fn try_from(raw: RawMixing) -> Result<Self> {
        match raw {
            RawMixing::Gamma { shape, rate } => MixingDistribution::gamma(shape, rate),
            RawMixing::TwoPoint { w1, w2, p } => MixingDistribution::two_point(w1, w2, p),
            RawMixing::LogNormal { mu, sigma } => MixingDistribution::log_normal(mu, sigma),
            RawMixing::Tabulated { w, density } => MixingDistribution::tabulated(w, density),
        }
    }
}

fn bad(name: &'static str, value: f64, range: &'static str) -> Error {
    Error::Parameter {
        family: "mixing",
        name,
        value,
        range,
    }
}

impl MixingDistribution {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(bad("shape", shape, "(0, inf)"));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(bad("rate", rate, "(0, inf)"));
        }
        Ok(MixingDistribution::Gamma { shape, rate })
    }

    pub fn two_point(w1: f64, w2: f64, p: f64) -> Result<Self> {
        for (name, w) in [("w1", w1), ("w2", w2)] {
            if !(w.is_finite() && w > 0.0) {
                return Err(bad(name, w, "(0, inf)"));
            }
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(bad("p", p, "[0, 1]"));
        }
        Ok(MixingDistribution::TwoPoint { w1, w2, p })
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(bad("mu", mu, "(-inf, inf)"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(bad("sigma", sigma, "(0, inf)"));
        }
        Ok(MixingDistribution::LogNormal { mu, sigma })
    }

    pub fn tabulated(w: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if w.len() < 2 || w.len() != density.len() {
            return Err(Error::invalid("tabulated mixing needs at least two (w, density) pairs of equal length"));
        }
        if !(w[0] >= 0.0) || w.windows(2).any(|p| !(p[1] > p[0])) || !w[w.len() - 1].is_finite() {
            return Err(Error::invalid("tabulated mixing grid must be nonnegative, finite and strictly increasing"));
        }
        if density.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::invalid("tabulated mixing density must be finite and nonnegative"));
        }
        let mass: f64 = w
            .windows(2)
            .zip(density.windows(2))
            .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
            .sum();
        if !(mass > 0.0) {
            return Err(Error::invalid("tabulated mixing density has zero mass"));
        }
        let density = density.into_iter().map(|f| f / mass).collect();
        Ok(MixingDistribution::Tabulated { w, density })
    }

    /// Density of `W` (`None` for the atomic law).
    pub fn pdf(&self, w: f64) -> Option<f64> {
        if !(w > 0.0) {
            return Some(0.0);
        }
        match self {
            MixingDistribution::Gamma { shape, rate } => {
                Some((shape * rate.ln() - ln_gamma(*shape) + (shape - 1.0) * w.ln() - rate * w).exp())
            }
            MixingDistribution::LogNormal { mu, sigma } => {
                let z = (w.ln() - mu) / sigma;
                Some((-0.5 * z * z).exp() / (w * sigma * (2.0 * std::f64::consts::PI).sqrt()))
            }
            MixingDistribution::Tabulated { w: grid, density } => {
                if w > grid[grid.len() - 1] || w < grid[0] {
                    return Some(0.0);
                }
                let i = grid.partition_point(|&x| x <= w).clamp(1, grid.len() - 1);
                let s = (w - grid[i - 1]) / (grid[i] - grid[i - 1]);
                Some(density[i - 1] + s * (density[i] - density[i - 1]))
            }
            MixingDistribution::TwoPoint { .. } => None,
        }
    }

    /// Total mass of the density by quadrature (1 for the atomic law).
    pub fn mass(&self) -> Result<f64> {
        self.tilted_raw_moment(0.0, 0.0)
    }

    /// `∫ w^q e^{-t w} dF_W(w)`.
    pub fn tilted_raw_moment(&self, q: f64, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain {
                name: "t",
                value: t,
                domain: "[0, inf)",
            });
        }
        let value = match self {
            MixingDistribution::TwoPoint { w1, w2, p } => {
                p * (q * w1.ln() - t * w1).exp() + (1.0 - p) * (q * w2.ln() - t * w2).exp()
            }
            MixingDistribution::Tabulated { w: grid, .. } => {
                let mut total = 0.0;
                for seg in grid.windows(2) {
                    let f = |w: f64| {
                        if w <= 0.0 {
                            0.0
                        } else {
                            (q * w.ln() - t * w).exp() * self.pdf(w).unwrap_or(0.0)
                        }
                    };
                    total += integrate(f, seg[0], seg[1], MOMENT_TOL)?.value;
                }
                total
            }
            _ => {
                let f = |w: f64| {
                    if !(w > 0.0 && w.is_finite()) {
                        return 0.0;
                    }
                    let dens = self.pdf(w).unwrap_or(0.0);
                    if dens == 0.0 {
                        0.0
                    } else {
                        (q * w.ln() - t * w + dens.ln()).exp()
                    }
                };
                integrate_half_line(f, MOMENT_TOL)?.value
            }
        };
        if !value.is_finite() {
            return Err(Error::Quadrature {
                a: 0.0,
                b: f64::INFINITY,
                estimate: value,
                error: f64::INFINITY,
                subdivisions: 0,
            });
        }
        Ok(value)
    }
}

/// `E[V_t^p]`, where `V` has density proportional to `v^{1/2} f_W(v)` and
/// `V_t` is its exponential tilt `∝ e^{-t v} f_V(v)`.
pub fn tilted_moment(mix: &MixingDistribution, t: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            domain: "(0, inf)",
        });
    }
    let norm = mix.tilted_raw_moment(0.5, t)?;
    let m = mix.tilted_raw_moment(p + 0.5, t)?;
    if !(norm > 0.0) {
        return Err(Error::invalid("tilted law has zero mass"));
    }
    Ok(m / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioProfile {
    /// `E[V_t^{(d-1)/2}] / E[V_t^{1/2}]^{d-1}`.
    E4,
    /// `-alpha A(t) + B(t)` with `A, B` from [`f3_components`].
    F3 { alpha: f64 },
}

fn check_d(d: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::Dimension {
            dim: d,
            reason: "ratio profiles need d >= 3",
        });
    }
    Ok(())
}

/// Per `t`: `A = E[V_t^{(d+1)/2}] / E[V_t^{1/2}]^{d+1}` and
/// `B = E[V_t^{(d-1)/2}] E[V_t^{3/2}] / E[V_t^{1/2}]^{d+2}`.
pub fn f3_components(mix: &MixingDistribution, d: usize, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_d(d)?;
    let df = d as f64;
    t_grid
        .iter()
        .map(|&t| {
            let half = tilted_moment(mix, t, 0.5)?;
            let a = tilted_moment(mix, t, 0.5 * (df + 1.0))? / half.powf(df + 1.0);
            let b = tilted_moment(mix, t, 0.5 * (df - 1.0))? * tilted_moment(mix, t, 1.5)? / half.powf(df + 2.0);
            Ok((a, b))
        })
        .collect()
}

/// Moment-ratio profile over `t_grid`; constant in `t` exactly for Gamma mixing.
pub fn simplified_ratio_profile(
    mix: &MixingDistribution,
    d: usize,
    t_grid: &[f64],
    profile: RatioProfile,
) -> Result<Vec<f64>> {
    check_d(d)?;
    match profile {
        RatioProfile::E4 => {
            let df = d as f64;
            t_grid
                .iter()
                .map(|&t| Ok(tilted_moment(mix, t, 0.5 * (df - 1.0))? / tilted_moment(mix, t, 0.5)?.powf(df - 1.0)))
                .collect()
        }
        RatioProfile::F3 { alpha } => {
            if !(alpha >= 1.0 && alpha.is_finite()) {
                return Err(Error::Domain {
                    name: "alpha",
                    value: alpha,
                    domain: "[1, inf)",
                });
            }
            Ok(f3_components(mix, d, t_grid)?.into_iter().map(|(a, b)| -alpha * a + b).collect())
        }
    }
}

/// `(max - min) / min |v|`; equals `max/min - 1` for positive values.
pub fn relative_spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let smallest = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    (max - min) / smallest
}
