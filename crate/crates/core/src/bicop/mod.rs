//! Bivariate copula families: cdf, density, h-function and its inverse,
//! Kendall's tau, and sampling.

mod bvn;
mod empirical;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::rng::{open_unit, stream};
use crate::numerics::special::{ln_gamma, normal_cdf, normal_quantile, StudentT};
use crate::numerics::{integrate, QuadOptions};

pub use bvn::{bvn_cdf, bvnu};
pub use empirical::empirical_tau;

/// Arguments of densities and h-functions are clamped to `[EPS, 1 - EPS]`.
pub const EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[serde(rename = "indep", alias = "independence")]
    Independence,
    Clayton,
    Gumbel,
    Frank,
    Amh,
    Gaussian,
    #[serde(alias = "student_t", alias = "t")]
    StudentT,
    #[serde(alias = "cuadras_auge")]
    CuadrasAuge,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Independence,
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
        Family::Amh,
        Family::Gaussian,
        Family::StudentT,
        Family::CuadrasAuge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "indep",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
            Family::Amh => "amh",
            Family::Gaussian => "gaussian",
            Family::StudentT => "studentt",
            Family::CuadrasAuge => "cuadrasauge",
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            Family::Independence => 0,
            Family::StudentT => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "independence" {
            return Ok(Family::Independence);
        }
        Family::ALL
            .into_iter()
            .find(|f| f.name() == lower)
            .ok_or_else(|| Error::invalid(format!("unknown copula family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Independence,
    Clayton(f64),
    Gumbel(f64),
    Frank(f64),
    Amh(f64),
    Gaussian(f64),
    StudentT { rho: f64, nu: f64, t: StudentT, t1: StudentT, ln_k: f64 },
    CuadrasAuge(f64),
}

/// A validated bivariate copula. Serializes as `{"family": ..., "params": [...]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCopula", into = "RawCopula")]
pub struct BivariateCopula {
    kind: Kind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCopula {
    family: Family,
    #[serde(default)]
    params: Vec<f64>,
}

impl TryFrom<RawCopula> for BivariateCopula {
    type Error = Error;

    fn try_from(raw: RawCopula) -> Result<Self> {
        BivariateCopula::new(raw.family, &raw.params)
    }
}

impl From<BivariateCopula> for RawCopula {
    fn from(c: BivariateCopula) -> Self {
        RawCopula {
            family: c.family(),
            params: c.params(),
        }
    }
}

fn param_err(family: Family, name: &'static str, value: f64, range: &'static str) -> Error {
    Error::Parameter {
        family: family.name(),
        name,
        value,
        range,
    }
}

impl BivariateCopula {
    pub fn new(family: Family, params: &[f64]) -> Result<Self> {
        if params.len() != family.n_params() {
            return Err(Error::invalid(format!(
                "{family} copula takes {} parameter(s), got {}",
                family.n_params(),
                params.len()
            )));
        }
        let p0 = params.first().copied().unwrap_or(0.0);
        let kind = match family {
            Family::Independence => Kind::Independence,
            Family::Clayton => {
                if !(p0.is_finite() && p0 >= -1.0 && p0 != 0.0) {
                    return Err(param_err(family, "theta", p0, "[-1, inf) excluding 0"));
                }
                Kind::Clayton(p0)
            }
            Family::Gumbel => {
                if !(p0.is_finite() && p0 >= 1.0) {
                    return Err(param_err(family, "theta", p0, "[1, inf)"));
                }
                Kind::Gumbel(p0)
            }
            Family::Frank => {
                if !(p0.is_finite() && p0 > 0.0) {
                    return Err(param_err(family, "alpha", p0, "(0, inf)"));
                }
                Kind::Frank(p0)
            }
            Family::Amh => {
                if !(0.0..1.0).contains(&p0) {
                    return Err(param_err(family, "theta", p0, "[0, 1)"));
                }
                Kind::Amh(p0)
            }
            Family::Gaussian => {
                if !(p0 > -1.0 && p0 < 1.0) {
                    return Err(param_err(family, "rho", p0, "(-1, 1)"));
                }
                Kind::Gaussian(p0)
            }
            Family::StudentT => {
                let nu = params[1];
                if !(p0 > -1.0 && p0 < 1.0) {
                    return Err(param_err(family, "rho", p0, "(-1, 1)"));
                }
                if !(nu.is_finite() && nu > 0.0) {
                    return Err(param_err(family, "nu", nu, "(0, inf)"));
                }
                let ln_k = ln_gamma(0.5 * (nu + 2.0)) + ln_gamma(0.5 * nu) - 2.0 * ln_gamma(0.5 * (nu + 1.0));
                Kind::StudentT {
                    rho: p0,
                    nu,
                    t: StudentT::new(nu),
                    t1: StudentT::new(nu + 1.0),
                    ln_k,
                }
            }
            Family::CuadrasAuge => {
                if !(0.0..=1.0).contains(&p0) {
                    return Err(param_err(family, "alpha", p0, "[0, 1]"));
                }
                Kind::CuadrasAuge(p0)
            }
        };
        Ok(BivariateCopula { kind })
    }

    pub fn independence() -> Self {
        BivariateCopula { kind: Kind::Independence }
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        Self::new(Family::Clayton, &[theta])
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        Self::new(Family::Gumbel, &[theta])
    }

    pub fn frank(alpha: f64) -> Result<Self> {
        Self::new(Family::Frank, &[alpha])
    }

    pub fn amh(theta: f64) -> Result<Self> {
        Self::new(Family::Amh, &[theta])
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        Self::new(Family::Gaussian, &[rho])
    }

    pub fn student_t(rho: f64, nu: f64) -> Result<Self> {
        Self::new(Family::StudentT, &[rho, nu])
    }

    pub fn cuadras_auge(alpha: f64) -> Result<Self> {
        Self::new(Family::CuadrasAuge, &[alpha])
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Independence => Family::Independence,
            Kind::Clayton(_) => Family::Clayton,
            Kind::Gumbel(_) => Family::Gumbel,
            Kind::Frank(_) => Family::Frank,
            Kind::Amh(_) => Family::Amh,
            Kind::Gaussian(_) => Family::Gaussian,
            Kind::StudentT { .. } => Family::StudentT,
            Kind::CuadrasAuge(_) => Family::CuadrasAuge,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self.kind {
            Kind::Independence => vec![],
            Kind::Clayton(p) | Kind::Gumbel(p) | Kind::Frank(p) | Kind::Amh(p) | Kind::Gaussian(p) | Kind::CuadrasAuge(p) => {
                vec![p]
            }
            Kind::StudentT { rho, nu, .. } => vec![rho, nu],
        }
    }

    /// False for copulas with a singular component.
    pub fn is_absolutely_continuous(&self) -> bool {
        match self.kind {
            Kind::CuadrasAuge(a) => a == 0.0,
            Kind::Clayton(t) => t > -1.0,
            _ => true,
        }
    }

    /// Copula cdf. Arguments are clipped to `[0, 1]`; boundary values are exact.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        if u.is_nan() || v.is_nan() {
            return f64::NAN;
        }
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        let c = match self.kind {
            Kind::Independence => u * v,
            Kind::Clayton(theta) => match clayton_ln_s(theta, u.ln(), v.ln()) {
                Some(ln_s) => (-ln_s / theta).exp(),
                None => 0.0,
            },
            Kind::Gumbel(theta) => (-gumbel_a(theta, -u.ln(), -v.ln())).exp(),
            Kind::Frank(alpha) => {
                let (m, mx) = if u <= v { (u, v) } else { (v, u) };
                m - (frank_ln_t(alpha, m, mx) - (-(-alpha).exp_m1()).ln()) / alpha
            }
            Kind::Amh(theta) => u * v / amh_denominator(theta, u, v),
            Kind::Gaussian(rho) => bvn_cdf(normal_quantile(u), normal_quantile(v), rho),
            Kind::StudentT { .. } => self.t_cdf(u, v),
            Kind::CuadrasAuge(alpha) => u.min(v) * u.max(v).powf(1.0 - alpha),
        };
        c.clamp(0.0, u.min(v))
    }

    fn t_cdf(&self, u: f64, v: f64) -> f64 {
        // C(u, v) = ∫_0^v h(u, s) ds; integrate along the shorter side.
        let (fixed, len) = if v <= u { (u, v) } else { (v, u) };
        let opts = QuadOptions::tolerances(1e-15, 1e-13);
        match integrate(|s| self.h_interior(fixed, s), 0.0, len, opts) {
            Ok(r) => r.value,
            Err(Error::Quadrature { estimate, .. }) => estimate,
            Err(_) => f64::NAN,
        }
    }

    /// Copula density on the open unit square.
    pub fn pdf(&self, u: f64, v: f64) -> Result<f64> {
        check_closed("u", u)?;
        check_closed("v", v)?;
        if !self.is_absolutely_continuous() {
            return Err(Error::NoDensity(self.family().name()));
        }
        Ok(self.pdf_unchecked(u, v))
    }

    /// Density without argument or family checks (0 for singular families).
    pub(crate) fn pdf_unchecked(&self, u: f64, v: f64) -> f64 {
        let u = u.clamp(EPS, 1.0 - EPS);
        let v = v.clamp(EPS, 1.0 - EPS);
        match self.kind {
            Kind::Independence => 1.0,
            Kind::Clayton(theta) => {
                if theta <= -1.0 {
                    return 0.0;
                }
                let (lu, lv) = (u.ln(), v.ln());
                match clayton_ln_s(theta, lu, lv) {
                    Some(ln_s) => ((1.0 + theta).ln() - (theta + 1.0) * (lu + lv) - (1.0 / theta + 2.0) * ln_s).exp(),
                    None => 0.0,
                }
            }
            Kind::Gumbel(theta) => {
                let (x, y) = (-u.ln(), -v.ln());
                let a = gumbel_a(theta, x, y);
                (-a + x + y + (theta - 1.0) * (x.ln() + y.ln()) + (1.0 - 2.0 * theta) * a.ln() + (a + theta - 1.0).ln()).exp()
            }
            Kind::Frank(alpha) => {
                let (m, mx) = if u <= v { (u, v) } else { (v, u) };
                let ln_t = frank_ln_t(alpha, m, mx);
                (alpha.ln() + (-(-alpha).exp_m1()).ln() - alpha * (mx - m) - 2.0 * ln_t).exp()
            }
            Kind::Amh(theta) => {
                let d = amh_denominator(theta, u, v);
                let e = 1.0 - theta;
                (2.0 * u * v + e * (u + v - 3.0 * u * v) + e * e * (1.0 - u) * (1.0 - v)) / (d * d * d)
            }
            Kind::Gaussian(rho) => {
                let (x, y) = (normal_quantile(u), normal_quantile(v));
                let q = 1.0 - rho * rho;
                (-0.5 * q.ln() - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * q)).exp()
            }
            Kind::StudentT { rho, nu, t, ln_k, .. } => {
                let (x, y) = (t.quantile(u), t.quantile(v));
                let q = 1.0 - rho * rho;
                let quad = (x * x - 2.0 * rho * x * y + y * y) / (nu * q);
                (ln_k - 0.5 * q.ln() - 0.5 * (nu + 2.0) * quad.ln_1p()
                    + 0.5 * (nu + 1.0) * ((x * x / nu).ln_1p() + (y * y / nu).ln_1p()))
                .exp()
            }
            Kind::CuadrasAuge(alpha) => {
                if alpha == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Conditional cdf of `U` given `V = v`, i.e. `∂C(u, v)/∂v`.
    ///
    /// For Cuadras-Augé the value at the atom `u = v` is the left limit.
    pub fn hfunc(&self, u: f64, v: f64) -> Result<f64> {
        check_closed("u", u)?;
        if v.is_nan() || v <= 0.0 || v >= 1.0 {
            return Err(Error::Domain {
                name: "v",
                value: v,
                domain: "(0, 1)",
            });
        }
        Ok(self.h(u, v))
    }

    /// h-function with clamped arguments and no error path.
    pub fn h(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        self.h_interior(u.max(EPS).min(1.0 - EPS), v.clamp(EPS, 1.0 - EPS))
    }

    fn h_interior(&self, u: f64, v: f64) -> f64 {
        let h = match self.kind {
            Kind::Independence => u,
            Kind::Clayton(theta) => {
                let lv = v.ln();
                match clayton_ln_s(theta, u.ln(), lv) {
                    Some(ln_s) => ((-theta - 1.0) * lv - (1.0 / theta + 1.0) * ln_s).exp(),
                    None => 0.0,
                }
            }
            Kind::Gumbel(theta) => {
                let (x, y) = (-u.ln(), -v.ln());
                let a = gumbel_a(theta, x, y);
                (-a + y + (theta - 1.0) * (y.ln() - a.ln())).exp()
            }
            Kind::Frank(alpha) => {
                let (m, mx) = if u <= v { (u, v) } else { (v, u) };
                (-alpha * v + (-(-alpha * u).exp_m1()).ln() + alpha * m - frank_ln_t(alpha, m, mx)).exp()
            }
            Kind::Amh(theta) => {
                let d = amh_denominator(theta, u, v);
                u * (u + (1.0 - theta) * (1.0 - u)) / (d * d)
            }
            Kind::Gaussian(rho) => {
                let (x, y) = (normal_quantile(u), normal_quantile(v));
                normal_cdf((x - rho * y) / (1.0 - rho * rho).sqrt())
            }
            Kind::StudentT { rho, nu, t, t1, .. } => {
                let (x, y) = (t.quantile(u), t.quantile(v));
                let scale = ((1.0 - rho * rho) * (nu + y * y) / (nu + 1.0)).sqrt();
                t1.cdf((x - rho * y) / scale)
            }
            Kind::CuadrasAuge(alpha) => {
                if u <= v {
                    (1.0 - alpha) * u * v.powf(-alpha)
                } else {
                    u.powf(1.0 - alpha)
                }
            }
        };
        h.clamp(0.0, 1.0)
    }

    /// Generalized inverse of the h-function in its first argument:
    /// `inf { u : h(u, v) >= p }`.
    pub fn hinv(&self, p: f64, v: f64) -> f64 {
        if p.is_nan() || v.is_nan() {
            return f64::NAN;
        }
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let v = v.clamp(EPS, 1.0 - EPS);
        let u = match self.kind {
            Kind::Independence => p,
            Kind::Clayton(theta) => {
                if theta <= -1.0 {
                    1.0 - v
                } else {
                    let b = -theta * v.ln();
                    let d = -theta / (1.0 + theta) * p.ln();
                    // ln(u^{-θ}) = ln(1 + e^b expm1(d))
                    let x = if b > 1.0 {
                        b + ((-b).exp() + d.exp_m1()).ln()
                    } else {
                        (b.exp() * d.exp_m1()).ln_1p()
                    };
                    (-x / theta).exp()
                }
            }
            Kind::Frank(alpha) => {
                let ev = (-alpha * v).exp();
                let a = -p * (-(-alpha).exp_m1()) / (p + (1.0 - p) * ev);
                if a > -0.5 {
                    -a.ln_1p() / alpha
                } else {
                    let (lp, lq) = (p.ln(), (-p).ln_1p());
                    (log_add_exp(lp, lq - alpha * v) - log_add_exp(lq - alpha * v, lp - alpha)) / alpha
                }
            }
            Kind::Gaussian(rho) => normal_cdf(normal_quantile(p) * (1.0 - rho * rho).sqrt() + rho * normal_quantile(v)),
            Kind::StudentT { rho, nu, t, t1, .. } => {
                let y = t.quantile(v);
                let scale = ((1.0 - rho * rho) * (nu + y * y) / (nu + 1.0)).sqrt();
                t.cdf(t1.quantile(p) * scale + rho * y)
            }
            Kind::CuadrasAuge(alpha) => {
                if alpha >= 1.0 {
                    v
                } else {
                    let lower = (1.0 - alpha) * v.powf(1.0 - alpha);
                    if p <= lower {
                        p * v.powf(alpha) / (1.0 - alpha)
                    } else if p <= v.powf(1.0 - alpha) {
                        v
                    } else {
                        p.powf(1.0 / (1.0 - alpha))
                    }
                }
            }
            Kind::Gumbel(_) | Kind::Amh(_) => self.hinv_numeric(p, v),
        };
        u.clamp(0.0, 1.0)
    }

    /// Bisection to 1e-12 followed by up to five Newton steps inside the bracket.
    fn hinv_numeric(&self, p: f64, v: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.h(mid, v) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut u = 0.5 * (lo + hi);
        let mut resid = self.h(u, v) - p;
        for _ in 0..5 {
            let d = self.pdf_unchecked(u, v);
            if !(d > 0.0 && d.is_finite()) || resid == 0.0 {
                break;
            }
            let next = u - resid / d;
            if !(next > lo && next < hi) {
                break;
            }
            let r = self.h(next, v) - p;
            if r.abs() >= resid.abs() {
                break;
            }
            u = next;
            resid = r;
        }
        u
    }

    /// Population Kendall's tau.
    pub fn kendall_tau(&self) -> f64 {
        match self.kind {
            Kind::Independence => 0.0,
            Kind::Clayton(theta) => theta / (theta + 2.0),
            Kind::Gumbel(theta) => 1.0 - 1.0 / theta,
            Kind::Frank(alpha) => frank_tau(alpha),
            Kind::Amh(theta) => amh_tau(theta),
            Kind::Gaussian(rho) | Kind::StudentT { rho, .. } => std::f64::consts::FRAC_2_PI * rho.asin(),
            Kind::CuadrasAuge(alpha) => alpha / (2.0 - alpha),
        }
    }

    /// `n` draws by the conditional method: `v` uniform, `u = hinv(w, v)`.
    /// Draw `i` uses its own random stream, so results do not depend on threading.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<(f64, f64)> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, i as u64);
                let v = open_unit(&mut rng);
                let w = open_unit(&mut rng);
                (self.hinv(w, v), v)
            })
            .collect()
    }
}

fn check_closed(name: &'static str, x: f64) -> Result<()> {
    if x.is_nan() || !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            name,
            value: x,
            domain: "[0, 1]",
        });
    }
    Ok(())
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln(u^{-θ} + v^{-θ} - 1)` from `ln u`, `ln v`; `None` when the sum is not
/// positive (outside the support of the positive-part generator).
fn clayton_ln_s(theta: f64, lu: f64, lv: f64) -> Option<f64> {
    let (a, b) = (-theta * lu, -theta * lv);
    if theta > 0.0 {
        let (m, n) = if a >= b { (a, b) } else { (b, a) };
        Some(m + ((-m).exp() * n.exp_m1()).ln_1p())
    } else {
        let t = a.exp_m1() + b.exp_m1();
        if t <= -1.0 {
            None
        } else {
            Some(t.ln_1p())
        }
    }
}

/// `(x^θ + y^θ)^{1/θ}` without overflow.
fn gumbel_a(theta: f64, x: f64, y: f64) -> f64 {
    let (m, n) = if x >= y { (x, y) } else { (y, x) };
    if m == 0.0 {
        return 0.0;
    }
    m * ((n / m).powf(theta).ln_1p() / theta).exp()
}

/// `ln T` where, for `m <= M`,
/// `T = 1 - e^{-αM} + e^{-α(M-m)} (1 - e^{-α(1-M)})`; every term is nonnegative.
fn frank_ln_t(alpha: f64, m: f64, mx: f64) -> f64 {
    let t = -(-alpha * mx).exp_m1() + (-alpha * (mx - m)).exp() * (-(-alpha * (1.0 - mx)).exp_m1());
    t.ln()
}

fn frank_tau(alpha: f64) -> f64 {
    if alpha < 1e-2 {
        let a2 = alpha * alpha;
        return alpha * (1.0 / 9.0 - a2 / 900.0 + a2 * a2 / 52920.0);
    }
    // Debye function D1(α) = α⁻¹ ∫_0^α t / (e^t - 1) dt.
    let f = |t: f64| if t == 0.0 { 1.0 } else { t / t.exp_m1() };
    let integral = integrate(f, 0.0, alpha, QuadOptions::tolerances(1e-16, 1e-13))
        .map(|r| r.value)
        .unwrap_or_else(|e| match e {
            Error::Quadrature { estimate, .. } => estimate,
            _ => f64::NAN,
        });
    1.0 + 4.0 * (integral / alpha - 1.0) / alpha
}

fn amh_tau(theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    if theta < 0.5 {
        // (4/3) Σ_{n≥3} θ^{n-2} / (n (n-1) (n-2))
        let mut sum = 0.0;
        let mut pow = theta;
        for n in 3..200u32 {
            let nf = n as f64;
            let term = pow / (nf * (nf - 1.0) * (nf - 2.0));
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            pow *= theta;
        }
        return 4.0 / 3.0 * sum;
    }
    let q = 1.0 - theta;
    1.0 - 2.0 * (q * q * q.ln() + theta) / (3.0 * theta * theta)
}


// 1 - θ(1-u)(1-v) without cancellation as θ → 1 near the origin.
fn amh_denominator(theta: f64, u: f64, v: f64) -> f64 {
    u + v * (1.0 - u) + (1.0 - theta) * (1.0 - u) * (1.0 - v)
}
