//! Shape-preserving piecewise cubic Hermite interpolation (PCHIP).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds the interpolant. `x` must be strictly increasing; `y` must be
    /// monotone (either direction) for the result to be monotone.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::invalid(format!(
                "interpolation needs at least two nodes and matching lengths (got {} and {})",
                n,
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("interpolation nodes must be finite"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("interpolation abscissae must be strictly increasing"));
        }
        let d = pchip_slopes(&x, &y);
        Ok(MonotoneCubic { x, y, d })
    }

    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Value at `t`; constant continuation outside the node range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    /// First derivative; zero outside the node range.
    pub fn derivative(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t < self.x[0] || t > self.x[n - 1] {
            return 0.0;
        }
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let dy = (self.y[i + 1] - self.y[i]) / h;
        6.0 * s * (1.0 - s) * dy + (1.0 - s) * (1.0 - 3.0 * s) * self.d[i] + s * (3.0 * s - 2.0) * self.d[i + 1]
    }

    /// Second derivative (piecewise linear); zero outside the node range.
    pub fn second_derivative(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t < self.x[0] || t > self.x[n - 1] {
            return 0.0;
        }
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let dy = (self.y[i + 1] - self.y[i]) / h;
        ((6.0 - 12.0 * s) * dy + (6.0 * s - 4.0) * self.d[i] + (6.0 * s - 2.0) * self.d[i + 1]) / h
    }

    /// Abscissa where the interpolant equals `target`, for monotone data.
    /// Targets beyond the range of `y` map to the nearer end node.
    pub fn inverse(&self, target: f64) -> f64 {
        let n = self.x.len();
        let increasing = self.y[n - 1] >= self.y[0];
        let sign = if increasing { 1.0 } else { -1.0 };
        let key = sign * target;
        if key <= sign * self.y[0] {
            return self.x[0];
        }
        if key >= sign * self.y[n - 1] {
            return self.x[n - 1];
        }
        let k = self.y.partition_point(|&yi| sign * yi < key);
        let (lo, hi) = (self.x[k - 1], self.x[k]);
        super::roots::generalized_inverse(|t| sign * self.eval(t), key, lo, hi, 1e-15 * hi.abs().max(1.0))
    }
}

/// Fritsch-Butland slopes: weighted harmonic means at interior nodes,
/// non-centred three-point formula at the ends.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a * b > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_cubic_free_data_and_nodes() {
        let x: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let p = MonotoneCubic::new(x.clone(), y).unwrap();
        for t in [0.0, 0.13, 1.01, 2.99, 3.0] {
            assert!((p.eval(t) - (2.0 * t - 1.0)).abs() < 1e-14);
            assert!((p.derivative(t) - 2.0).abs() < 1e-12);
            assert!(p.second_derivative(t).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_of_decreasing_table() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = x.iter().map(|v| (-v).exp()).collect();
        let p = MonotoneCubic::new(x, y).unwrap();
        for t in [0.05, 1.7, 6.3] {
            assert!((p.inverse(p.eval(t)) - t).abs() < 1e-12);
        }
        assert_eq!(p.inverse(2.0), 0.0);
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn preserves_monotonicity(steps in proptest::collection::vec((0.01f64..2.0, 0.0f64..3.0), 3..20)) {
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let xmax = *x.last().unwrap();
            let p = MonotoneCubic::new(x, y).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=500 {
                let v = p.eval(xmax * k as f64 / 500.0);
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
