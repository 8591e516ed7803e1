//! Univariate distribution functions needed by the copula families.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::beta::beta_reg;
use libm::erfc;
use statrs::function::erf::erfc_inv;
pub use statrs::function::gamma::ln_gamma;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    // One Newton polish against the tail on the side where p is represented exactly.
    let d = normal_pdf(x);
    if d > 0.0 {
        let resid = if p < 0.5 {
            normal_cdf(x) - p
        } else {
            (1.0 - p) - normal_cdf(-x)
        };
        x -= resid / d;
    }
    x
}

/// Student-t distribution with `nu` degrees of freedom (location 0, scale 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentT {
    nu: f64,
    ln_norm: f64,
}

impl StudentT {
    pub fn new(nu: f64) -> Self {
        debug_assert!(nu > 0.0);
        let ln_norm = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln();
        StudentT { nu, ln_norm }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn ln_pdf(&self, t: f64) -> f64 {
        self.ln_norm - 0.5 * (self.nu + 1.0) * (t * t / self.nu).ln_1p()
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.ln_pdf(t).exp()
    }

    /// Upper tail `P(T > t)` for `t >= 0`, accurate in relative terms.
    fn upper_tail(&self, t: f64) -> f64 {
        let t2 = t * t;
        if t2 < self.nu {
            let x = t2 / (self.nu + t2);
            0.5 - 0.5 * beta_reg(0.5, 0.5 * self.nu, x)
        } else {
            let x = self.nu / (self.nu + t2);
            0.5 * beta_reg(0.5 * self.nu, 0.5, x)
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t.is_nan() {
            return f64::NAN;
        }
        if t == f64::INFINITY {
            return 1.0;
        }
        if t == f64::NEG_INFINITY {
            return 0.0;
        }
        if t >= 0.0 {
            1.0 - self.upper_tail(t)
        } else {
            self.upper_tail(-t)
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        if p == 0.5 {
            return 0.0;
        }
        let q = p.min(1.0 - p);
        let t = self.upper_quantile(q);
        if p < 0.5 {
            -t
        } else {
            t
        }
    }

    /// Solves `P(T > t) = q` for `q in (0, 0.5)`.
    fn upper_quantile(&self, q: f64) -> f64 {
        let nu = self.nu;
        if nu == 1.0 {
            return (PI * (0.5 - q)).tan();
        }
        if nu == 2.0 {
            let p = 1.0 - q;
            return (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
        }
        // Cornish-Fisher start in the body, power-law start in the tail.
        let z = -normal_quantile(q);
        let cf = z + (z.powi(3) + z) / (4.0 * nu) + (5.0 * z.powi(5) + 16.0 * z.powi(3) + 3.0 * z) / (96.0 * nu * nu);
        let k = (self.ln_norm + 0.5 * (nu - 1.0) * nu.ln()).exp();
        let tail = (k / q).powf(1.0 / nu);
        let score = |t: f64| (self.upper_tail(t).ln() - q.ln()).abs();
        let mut t = if cf > 0.0 && score(cf) <= score(tail) { cf } else { tail };
        if !(t.is_finite() && t > 0.0) {
            t = 1.0;
        }

        let mut lo = 0.0;
        let mut hi = f64::INFINITY;
        let ln_q = q.ln();
        for _ in 0..100 {
            let s = self.upper_tail(t);
            if s > q {
                lo = t;
            } else {
                hi = t;
            }
            let d = self.pdf(t);
            let next = if q > 0.05 {
                t + (s - q) / d
            } else {
                // Newton on ln P(T > t) against ln t.
                let w = t.ln();
                let slope = -t * d / s;
                (w - (s.ln() - ln_q) / slope).exp()
            };
            let next = if next > lo && next < hi && next.is_finite() {
                next
            } else if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * t.max(1.0)
            };
            if (next - t).abs() <= 4.0 * f64::EPSILON * t.max(1e-300) {
                return next;
            }
            t = next;
        }
        t
    }
}

/// One-dimensional margin of a Pearson type II law with density
/// proportional to `(1 - x^2)_+^{zeta}` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PearsonIIMargin {
    zeta: f64,
    ln_norm: f64,
}

impl PearsonIIMargin {
    pub fn new(zeta: f64) -> Self {
        let ln_norm = ln_gamma(zeta + 1.5) - ln_gamma(zeta + 1.0) - 0.5 * PI.ln();
        PearsonIIMargin { zeta, ln_norm }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let s = 1.0 - x * x;
        if s <= 0.0 {
            0.0
        } else {
            (self.ln_norm + self.zeta * s.ln()).exp()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= -1.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let i = beta_reg(0.5, self.zeta + 1.0, x * x);
        if x >= 0.0 {
            0.5 + 0.5 * i
        } else {
            0.5 - 0.5 * i
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return -1.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        super::roots::generalized_inverse(|x| self.cdf(x), p, -1.0, 1.0, 1e-15)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_roundtrip() {
        for &p in &[1e-12, 1e-6, 0.025, 0.3, 0.5, 0.8, 0.975, 1.0 - 1e-9] {
            let x = normal_quantile(p);
            let back = normal_cdf(x);
            assert!((back - p).abs() <= 1e-14 * p.max(1e-2), "p={p} back={back}");
        }
        let z = normal_quantile(0.975);
        assert!((z - 1.959_963_984_540_054).abs() < 1e-13, "{z}");
    }

    #[test]
    fn t_cdf_matches_closed_forms() {
        let cauchy = StudentT::new(1.0);
        let t2 = StudentT::new(2.0);
        for &t in &[-50.0, -3.0, -0.4, 0.0, 1e-8, 0.7, 2.5, 1e3] {
            let c1 = 0.5 + (t as f64).atan() / PI;
            assert!((cauchy.cdf(t) - c1).abs() <= 1e-12 * c1.max(1e-3), "t={t}");
            let c2 = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
            assert!((t2.cdf(t) - c2).abs() <= 1e-12 * c2.max(1e-3), "t={t}");
        }
    }

    #[test]
    fn t_quantile_roundtrip() {
        for &nu in &[0.7, 1.5, 3.0, 4.0, 7.5, 30.0] {
            let dist = StudentT::new(nu);
            for &p in &[1e-10, 1e-5, 0.01, 0.2, 0.49, 0.5, 0.51, 0.9, 0.999, 1.0 - 1e-8] {
                let t = dist.quantile(p);
                let back = dist.cdf(t);
                let tail = p.min(1.0 - p);
                assert!((back - p).abs() <= 1e-12 * tail.max(1e-3), "nu={nu} p={p} t={t} back={back}");
            }
        }
    }

    #[test]
    fn t_density_at_zero() {
        // Γ(2) / (Γ(1.5) √(3π))
        assert!((StudentT::new(3.0).pdf(0.0) - 0.367_552_596_947_861).abs() < 1e-14);
    }

    #[test]
    fn pearson_ii_margin() {
        let m = PearsonIIMargin::new(2.0);
        let gl = crate::numerics::quadrature::GaussLegendre::new(40);
        let mass = gl.integrate(|x| m.pdf(x), -1.0, 1.0);
        assert!((mass - 1.0).abs() < 1e-13);
        let partial = gl.integrate(|x| m.pdf(x), -1.0, 0.3);
        assert!((m.cdf(0.3) - partial).abs() < 1e-13);
        assert!((m.quantile(m.cdf(-0.42)) + 0.42).abs() < 1e-13);
    }
}
