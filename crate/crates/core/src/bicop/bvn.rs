//! Bivariate normal upper-orthant probability (Drezner-Wesolowsky with
//! Genz's refinements), accurate to roughly double precision.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::numerics::special::normal_cdf;
use crate::numerics::GaussLegendre;

const TWO_PI: f64 = 2.0 * PI;

/// Negative half of the 6-, 12- and 20-point Gauss-Legendre rules.
fn half_rules() -> &'static [(Vec<f64>, Vec<f64>); 3] {
    static RULES: OnceLock<[(Vec<f64>, Vec<f64>); 3]> = OnceLock::new();
    RULES.get_or_init(|| {
        let half = |n: usize| {
            let gl = GaussLegendre::new(n);
            let mut x = Vec::with_capacity(n / 2);
            let mut w = Vec::with_capacity(n / 2);
            for (xi, wi) in gl.nodes.iter().zip(&gl.weights) {
                if *xi < 0.0 {
                    x.push(*xi);
                    w.push(*wi);
                }
            }
            (x, w)
        };
        [half(6), half(12), half(20)]
    })
}

/// `P(X > dh, Y > dk)` for a standard bivariate normal with correlation `r`.
pub fn bvnu(dh: f64, dk: f64, r: f64) -> f64 {
    if dh == f64::INFINITY || dk == f64::INFINITY {
        return 0.0;
    }
    if dh == f64::NEG_INFINITY {
        return if dk == f64::NEG_INFINITY { 1.0 } else { normal_cdf(-dk) };
    }
    if dk == f64::NEG_INFINITY {
        return normal_cdf(-dh);
    }
    if r == 0.0 {
        return normal_cdf(-dh) * normal_cdf(-dk);
    }
    let rules = half_rules();
    let (x, w) = if r.abs() < 0.3 {
        &rules[0]
    } else if r.abs() < 0.75 {
        &rules[1]
    } else {
        &rules[2]
    };

    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = r.asin();
        for (xi, wi) in x.iter().zip(w) {
            for s in [1.0 + xi, 1.0 - xi] {
                let sn = (0.5 * asr * s).sin();
                bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (2.0 * TWO_PI) + normal_cdf(-h) * normal_cdf(-k);
    }

    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let as_ = (1.0 - r) * (1.0 + r);
        let mut a = as_.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(bs / as_ + hk) / 2.0).exp()
            * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp() * TWO_PI.sqrt() * normal_cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (xi, wi) in x.iter().zip(w) {
            let xs = (a * (xi + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            bvn += a
                * wi
                * ((-bs / (2.0 * xs) - hk / (1.0 + rs)).exp() / rs
                    - (-(bs / xs + hk) / 2.0).exp() * (1.0 + c * xs * (1.0 + d * xs)));
            let xs = as_ * (1.0 - xi).powi(2) / 4.0;
            let rs = (1.0 - xs).sqrt();
            bvn += a
                * wi
                * (-(bs / xs + hk) / 2.0).exp()
                * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
        }
        bvn = -bvn / TWO_PI;
    }
    if r > 0.0 {
        bvn + normal_cdf(-h.max(k))
    } else {
        let mut out = -bvn;
        if k > h {
            out += if h < 0.0 {
                normal_cdf(k) - normal_cdf(h)
            } else {
                normal_cdf(-h) - normal_cdf(-k)
            };
        }
        out
    }
}

/// `P(X <= x, Y <= y)` for a standard bivariate normal with correlation `r`.
pub fn bvn_cdf(x: f64, y: f64, r: f64) -> f64 {
    bvnu(-x, -y, r).clamp(0.0, 1.0)
}
