//! Trivariate Marshall-Olkin copula with a common shock rate.
//!
//! `X_i` is the minimum of the exponential shocks `E_I` with `i ∈ I`, one
//! shock per nonempty `I ⊂ {1, 2, 3}`. The copula is the survival copula of
//! `X`, so `U_i = exp(-4 λ X_i)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::rng::{open_unit, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMo")]
pub struct MoSpec {
    lambda: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMo {
    lambda: f64,
}

impl TryFrom<RawMo> for MoSpec {
    type Error = Error;
    fn try_from(raw: RawMo) -> Result<Self> {
        MoSpec::new(raw.lambda)
    }
}

impl MoSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Parameter {
                family: "marshall_olkin",
                name: "lambda",
                value: lambda,
                range: "(0, inf)",
            });
        }
        Ok(MoSpec { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `exp(-4 λ x)`, the survival function of each `X_i`.
    pub fn margin_survival(&self, x: f64) -> f64 {
        (-4.0 * self.lambda * x).exp()
    }

    pub fn margin_survival_inv(&self, u: f64) -> f64 {
        -u.ln() / (4.0 * self.lambda)
    }

    /// `(lower, upper]`: conditional margins given `X_3 = x3` put an atom at
    /// `x3`, so survival levels in this range have no unique inverse.
    pub fn flat_segment(&self, x3: f64) -> (f64, f64) {
        let top = (-2.0 * self.lambda * x3).exp();
        (0.5 * top, top)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoSample {
    pub x: Vec<[f64; 3]>,
    /// `exp(-4 λ x)` elementwise.
    pub u: Vec<[f64; 3]>,
}

/// Shock order: E1, E2, E3, E12, E13, E23, E123.
fn shocks_to_x(e: &[f64; 7]) -> [f64; 3] {
    [
        e[0].min(e[3]).min(e[4]).min(e[6]),
        e[1].min(e[3]).min(e[5]).min(e[6]),
        e[2].min(e[4]).min(e[5]).min(e[6]),
    ]
}

pub fn mo_sample(spec: &MoSpec, n: usize, seed: u64) -> Result<MoSample> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let x: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            let mut e = [0.0; 7];
            for s in e.iter_mut() {
                *s = -open_unit(&mut rng).ln() / spec.lambda;
            }
            shocks_to_x(&e)
        })
        .collect();
    let u = x.iter().map(|r| r.map(|xi| spec.margin_survival(xi))).collect();
    Ok(MoSample { x, u })
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain {
            name,
            value: x,
            domain: "(0, inf)",
        });
    }
    Ok(())
}

/// `P(X_1 > x1, X_2 > x2 | X_3 = x3)`.
///
/// The branches use `x_i <= x3`, so the function is left-continuous in `x_i`
/// at `x3`, where it halves.
pub fn mo_conditional_survival(spec: &MoSpec, x1: f64, x2: f64, x3: f64) -> Result<f64> {
    check_positive("x1", x1)?;
    check_positive("x2", x2)?;
    check_positive("x3", x3)?;
    Ok(conditional_survival(spec.lambda, x1, x2, x3))
}

fn conditional_survival(lambda: f64, x1: f64, x2: f64, x3: f64) -> f64 {
    let s = x1 + x2 + x1.max(x2);
    let bracket = match (x1 <= x3, x2 <= x3) {
        (true, true) => 4.0,
        (false, false) => (-lambda * (s - 3.0 * x3)).exp(),
        (true, false) => 2.0 * (-2.0 * lambda * (x2 - x3)).exp(),
        (false, true) => 2.0 * (-2.0 * lambda * (x1 - x3)).exp(),
    };
    0.25 * (-lambda * s).exp() * bracket
}

/// Generalized inverse of `x ↦ P(X_1 > x | X_3 = x3)`; the flat segment maps to `x3`.
pub fn mo_conditional_margin_inv(spec: &MoSpec, v: f64, x3: f64) -> Result<f64> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Domain {
            name: "v",
            value: v,
            domain: "(0, 1]",
        });
    }
    check_positive("x3", x3)?;
    let (lower, upper) = spec.flat_segment(x3);
    let l2 = 2.0 * spec.lambda;
    Ok(if v > upper {
        -v.ln() / l2
    } else if v > lower {
        x3
    } else {
        0.5 * (x3 - (2.0 * v).ln() / l2)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoCopulaValue {
    pub value: f64,
    /// False when either level lies on its margin's flat segment.
    pub unique: bool,
}

/// Conditional survival copula of `(U_1, U_2)` given `U_3 = u3`.
pub fn mo_conditional_copula(spec: &MoSpec, v1: f64, v2: f64, u3: f64) -> Result<MoCopulaValue> {
    for (name, p) in [("v1", v1), ("v2", v2), ("u3", u3)] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain {
                name,
                value: p,
                domain: "(0, 1)",
            });
        }
    }
    let x3 = spec.margin_survival_inv(u3);
    let (lower, upper) = spec.flat_segment(x3);
    let on_flat = |v: f64| v > lower && v <= upper;
    let x1 = mo_conditional_margin_inv(spec, v1, x3)?;
    let x2 = mo_conditional_margin_inv(spec, v2, x3)?;
    Ok(MoCopulaValue {
        value: conditional_survival(spec.lambda, x1, x2, x3),
        unique: !(on_flat(v1) || on_flat(v2)),
    })
}
