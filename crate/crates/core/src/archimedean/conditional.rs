//! Conditional generators `ψ(s; a) = h(s + a) / h(a)` with `h = (-1)^k φ^(k)`.

use super::{archimedean_cdf, ArchimedeanGenerator, Generator};
use crate::error::{Error, Result};
use crate::numerics::roots::{bisect, expand_upper};

/// Argument tolerance of the `h⁻¹` bisection.
const H_INV_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGenerator {
    base: ArchimedeanGenerator,
    k: usize,
    a: f64,
    h_a: f64,
}

/// Generator of the copula of the remaining variables after conditioning an
/// Archimedean copula on `k` variables whose inverse generator values sum to `a`.
pub fn conditional_generator(base: &ArchimedeanGenerator, k: usize, a: f64) -> Result<ConditionalGenerator> {
    if !(k == 1 || k == 2) {
        return Err(Error::invalid(format!("conditional generators are available for k = 1, 2 (got {k})")));
    }
    if k + 1 > base.max_dim() || k > base.max_order() {
        return Err(Error::Dimension {
            dim: base.max_dim(),
            reason: "k conditioning variables need max_dim >= k + 1",
        });
    }
    let s0 = base.support_end();
    if !(a.is_finite() && a >= 0.0 && a < s0) {
        return Err(Error::Domain {
            name: "a",
            value: a,
            domain: "[0, s0)",
        });
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let h_a = sign * base.derivative(a, k)?;
    if !(h_a.is_finite() && h_a > 0.0) {
        return Err(Error::Domain {
            name: "a",
            value: a,
            domain: "points where (-1)^k phi^(k) is finite and positive",
        });
    }
    Ok(ConditionalGenerator {
        base: base.clone(),
        k,
        a,
        h_a,
    })
}

impl ConditionalGenerator {
    pub fn base(&self) -> &ArchimedeanGenerator {
        &self.base
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    fn sign(&self) -> f64 {
        if self.k % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `h(x) = (-1)^k φ^(k)(x)`.
    pub fn h(&self, x: f64) -> f64 {
        if x >= self.base.support_end() {
            return 0.0;
        }
        self.sign() * self.base.derivative(x, self.k).unwrap_or(f64::NAN)
    }

    /// `h⁻¹(y)` on `[a, s0)` by bisection after widening the bracket.
    pub fn h_inverse(&self, y: f64) -> Result<f64> {
        if y >= self.h_a {
            return Ok(self.a);
        }
        let s0 = self.base.support_end();
        if y <= 0.0 {
            return if s0.is_finite() { Ok(s0) } else { Err(Error::InfiniteInverse) };
        }
        let g = |x: f64| self.h(x) - y;
        let start = if s0.is_finite() { s0 } else { self.a + 1.0 };
        let (lo, hi) = expand_upper(g, self.a, start, s0)?;
        let tol = H_INV_TOL.max(4.0 * f64::EPSILON * hi);
        bisect(g, lo, hi, tol, 400)
    }
}

impl Generator for ConditionalGenerator {
    fn value(&self, s: f64) -> f64 {
        (self.h(s.max(0.0) + self.a) / self.h_a).clamp(0.0, 1.0)
    }

    fn derivative(&self, s: f64, order: usize) -> Result<f64> {
        if order > self.max_order() {
            return Err(Error::DerivativeOrder {
                order,
                max: self.max_order(),
            });
        }
        let x = s.max(0.0) + self.a;
        if x >= self.base.support_end() {
            return Ok(0.0);
        }
        Ok(self.sign() * self.base.derivative(x, self.k + order)? / self.h_a)
    }

    fn inverse(&self, t: f64) -> Result<f64> {
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
        Ok(self.h_inverse(t * self.h_a)? - self.a)
    }

    fn support_end(&self) -> f64 {
        self.base.support_end() - self.a
    }

    fn max_dim(&self) -> usize {
        self.base.max_dim() - self.k
    }

    fn max_order(&self) -> usize {
        self.base.max_order() - self.k
    }
}

/// `C*(v) = h(Σ h⁻¹(v_j h(a)) - (n - 1) a) / h(a)` for `n = v.len()`.
pub fn conditional_archimedean_copula_cdf(cg: &ConditionalGenerator, v: &[f64]) -> Result<f64> {
    archimedean_cdf(cg, v)
}
