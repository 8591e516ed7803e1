//! Numerical extraction of the conditional copula of a trivariate copula
//! density given one coordinate.
//!
//! The two free coordinates are integrated in logistic scale
//! `u = 1 / (1 + e^{-z})` with composite Gauss-Legendre panels on
//! `[-z_max, z_max]`. Partial-panel integrals use the exact integral of the
//! panel's interpolating polynomial, so conditional cdfs are available at
//! any point and can be inverted by bisection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pcc_density, PccSpec};
use crate::archimedean::{archimedean_density, Generator};
use crate::elliptical::{elliptical_generator_eval, EllipticalSpec};
use crate::error::{Error, Result};
use crate::numerics::GaussLegendre;

/// Trivariate copula given by its density.
pub trait TrivariateModel: Sync {
    fn density(&self, u: [f64; 3]) -> Result<f64>;

    /// Row-major `nodes.len()²` matrix of densities with coordinate
    /// `cond_index` fixed at `cond_value`; rows run over the smaller free index.
    fn conditional_slice(&self, cond_index: usize, cond_value: f64, nodes: &[f64]) -> Result<Vec<f64>> {
        let (p, q) = free_pair(cond_index);
        let n = nodes.len();
        let rows: Vec<Vec<f64>> = nodes
            .par_iter()
            .map(|&x| {
                nodes
                    .iter()
                    .map(|&y| {
                        let mut u = [0.0; 3];
                        u[cond_index] = cond_value;
                        u[p] = x;
                        u[q] = y;
                        self.density(u)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(n * n);
        rows.into_iter().for_each(|r| out.extend(r));
        Ok(out)
    }
}

fn free_pair(cond_index: usize) -> (usize, usize) {
    match cond_index {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

impl TrivariateModel for PccSpec {
    fn density(&self, u: [f64; 3]) -> Result<f64> {
        pcc_density(self, &u)
    }
}

/// Trivariate Archimedean copula of a generator.
#[derive(Debug, Clone)]
pub struct ArchimedeanModel<G>(pub G);

impl<G: Generator> TrivariateModel for ArchimedeanModel<G> {
    fn density(&self, u: [f64; 3]) -> Result<f64> {
        archimedean_density(&self.0, &u)
    }
}

/// Density supplied as a closure.
pub struct DensityFn<F>(pub F);

impl<F: Fn([f64; 3]) -> f64 + Sync> TrivariateModel for DensityFn<F> {
    fn density(&self, u: [f64; 3]) -> Result<f64> {
        Ok((self.0)(u))
    }
}

impl TrivariateModel for EllipticalSpec {
    fn density(&self, u: [f64; 3]) -> Result<f64> {
        self.copula_density(&u)
    }

    fn conditional_slice(&self, cond_index: usize, cond_value: f64, nodes: &[f64]) -> Result<Vec<f64>> {
        if self.dim() != 3 {
            return Err(Error::Dimension {
                dim: self.dim(),
                reason: "conditional extraction needs a trivariate elliptical law",
            });
        }
        if !(cond_value > 0.0 && cond_value < 1.0) {
            return Err(Error::Domain {
                name: "cond_value",
                value: cond_value,
                domain: "(0, 1)",
            });
        }
        let (p, q) = free_pair(cond_index);
        let margin = self.margin();
        let scores: Vec<f64> = nodes.iter().map(|&u| margin.quantile(u)).collect();
        let pdfs: Vec<f64> = scores.iter().map(|&x| margin.pdf(x)).collect();
        let xc = margin.quantile(cond_value);
        let pc = margin.pdf(xc);
        let r = self.correlation();
        let inv = r.to_dmatrix().try_inverse().ok_or_else(|| Error::Singular("correlation matrix".into()))?;
        let norm = r.determinant().sqrt();
        let n = nodes.len();
        let mut out = vec![0.0; n * n];
        out.par_chunks_mut(n).enumerate().try_for_each(|(i, row)| -> Result<()> {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut x = [0.0; 3];
                x[cond_index] = xc;
                x[p] = scores[i];
                x[q] = scores[j];
                let mut quad = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        quad += x[a] * inv[(a, b)] * x[b];
                    }
                }
                let g = elliptical_generator_eval(self, quad.max(0.0), 3)?;
                let denom = pdfs[i] * pdfs[j] * pc;
                *cell = if g == 0.0 || denom <= 0.0 { 0.0 } else { g / (norm * denom) };
            }
            Ok(())
        })?;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractOptions {
    /// Lattice resolution: quantile levels `k / (n + 1)`, `k = 1..=n`.
    pub n: usize,
    pub z_max: f64,
    pub panel_width: f64,
    pub gl_order: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            n: 21,
            z_max: 25.0,
            panel_width: 0.5,
            gl_order: 8,
        }
    }
}

impl ExtractOptions {
    pub fn with_n(n: usize) -> Self {
        ExtractOptions {
            n,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 11 {
            return Err(Error::invalid(format!("lattice resolution n must be >= 11, got {}", self.n)));
        }
        if !(self.z_max > 0.0 && self.panel_width > 0.0 && self.panel_width <= self.z_max) || self.gl_order < 2 {
            return Err(Error::invalid("invalid quadrature options"));
        }
        Ok(())
    }
}

/// Conditional copula `C*` evaluated on a lattice of quantile levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCopulaGrid {
    pub cond_index: usize,
    pub cond_value: f64,
    pub n: usize,
    pub levels: Vec<f64>,
    /// `values[k][l] = C*(levels[k], levels[l])`.
    pub values: Vec<Vec<f64>>,
    /// Kendall's tau of `C*`, `4 E[C*(V1, V2)] - 1`.
    pub kendall_tau: f64,
}

impl ConditionalCopulaGrid {
    pub fn sup_distance(&self, other: &ConditionalCopulaGrid) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest difference to `f` evaluated on the lattice.
    pub fn sup_distance_to<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let mut worst = 0.0f64;
        for (k, row) in self.values.iter().enumerate() {
            for (l, &v) in row.iter().enumerate() {
                worst = worst.max((v - f(self.levels[k], self.levels[l])).abs());
            }
        }
        worst
    }
}

/// Composite Gauss-Legendre rule in logistic scale.
struct LogisticRule {
    z0: f64,
    width: f64,
    panels: usize,
    m: usize,
    u: Vec<f64>,
    jac: Vec<f64>,
    w: Vec<f64>,
    /// `partial[a * m + k]`: integral of basis `k` from the panel start to local node `a`.
    partial: Vec<f64>,
    gl: GaussLegendre,
}

impl LogisticRule {
    fn new(opts: &ExtractOptions) -> Self {
        let panels = (2.0 * opts.z_max / opts.panel_width).round().max(1.0) as usize;
        let width = 2.0 * opts.z_max / panels as f64;
        let m = opts.gl_order;
        let gl = GaussLegendre::new(m);
        let z0 = -opts.z_max;
        let (mut u, mut jac, mut w) = (Vec::new(), Vec::new(), Vec::new());
        for p in 0..panels {
            for k in 0..m {
                let z = z0 + width * (p as f64 + 0.5 * (gl.nodes[k] + 1.0));
                let s = logistic(z);
                let d = s * logistic(-z);
                u.push(s);
                jac.push(d);
                w.push(0.5 * width * gl.weights[k] * d);
            }
        }
        let mut rule = LogisticRule {
            z0,
            width,
            panels,
            m,
            u,
            jac,
            w,
            partial: Vec::new(),
            gl,
        };
        let mut partial = Vec::with_capacity(m * m);
        for a in 0..m {
            partial.extend(rule.basis_integrals(0.5 * (rule.gl.nodes[a] + 1.0)));
        }
        rule.partial = partial;
        rule
    }

    fn len(&self) -> usize {
        self.u.len()
    }

    fn lagrange(&self, k: usize, s: f64) -> f64 {
        let x = &self.gl.nodes;
        (0..self.m).filter(|&l| l != k).map(|l| (s - x[l]) / (x[k] - x[l])).product()
    }

    /// `∫` of each basis polynomial over the first fraction `tau` of a panel, in z units.
    fn basis_integrals(&self, tau: f64) -> Vec<f64> {
        (0..self.m)
            .map(|k| {
                let mut acc = 0.0;
                for q in 0..self.m {
                    let s = -1.0 + tau * (1.0 + self.gl.nodes[q]);
                    acc += self.gl.weights[q] * self.lagrange(k, s);
                }
                0.5 * self.width * tau * acc
            })
            .collect()
    }

    /// Panel index and the weights `a_k` of its nodes for `∫_{-inf}^{z}`.
    fn cumulative_weights(&self, z: f64) -> (usize, Vec<f64>) {
        let pos = ((z - self.z0) / self.width).clamp(0.0, self.panels as f64);
        let p = (pos.floor() as usize).min(self.panels - 1);
        let tau = (pos - p as f64).clamp(0.0, 1.0);
        let lam = self.basis_integrals(tau);
        let weights = (0..self.m).map(|k| lam[k] * self.jac[p * self.m + k]).collect();
        (p, weights)
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One-dimensional conditional margin: prefix masses at panel starts plus node densities.
struct Margin<'a> {
    rule: &'a LogisticRule,
    dens: Vec<f64>,
    prefix: Vec<f64>,
}

impl<'a> Margin<'a> {
    fn new(rule: &'a LogisticRule, dens: Vec<f64>) -> Self {
        let prefix = panel_prefix(rule, &dens);
        Margin { rule, dens, prefix }
    }

    fn cdf_z(&self, z: f64) -> f64 {
        let (p, a) = self.rule.cumulative_weights(z);
        let m = self.rule.m;
        self.prefix[p] + (0..m).map(|k| a[k] * self.dens[p * m + k]).sum::<f64>()
    }

    /// Generalized inverse in z: bisection inside the bracketing panel.
    fn quantile_z(&self, level: f64) -> f64 {
        let rule = self.rule;
        let p = self.prefix.partition_point(|&c| c < level).clamp(1, rule.panels) - 1;
        let mut lo = rule.z0 + p as f64 * rule.width;
        let mut hi = lo + rule.width;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf_z(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `∫_{-inf}^{z} v` for cumulative weights `(p, a)` of `z`.
fn dot_cumulative(rule: &LogisticRule, prefix_rowsum: &[f64], row: &[f64], p: usize, a: &[f64]) -> f64 {
    let m = rule.m;
    prefix_rowsum[p] + (0..m).map(|k| a[k] * row[p * m + k]).sum::<f64>()
}

/// Conditional copula of the two free coordinates given coordinate
/// `cond_index = cond_value`.
pub fn extract_conditional_copula<M: TrivariateModel + ?Sized>(
    model: &M,
    cond_index: usize,
    cond_value: f64,
    opts: &ExtractOptions,
) -> Result<ConditionalCopulaGrid> {
    opts.validate()?;
    if cond_index > 2 {
        return Err(Error::invalid(format!("cond_index must be 0, 1 or 2, got {cond_index}")));
    }
    if !(cond_value > 0.0 && cond_value < 1.0) {
        return Err(Error::Domain {
            name: "cond_value",
            value: cond_value,
            domain: "(0, 1)",
        });
    }
    let rule = LogisticRule::new(opts);
    let nn = rule.len();
    let mut dens = model.conditional_slice(cond_index, cond_value, &rule.u)?;
    if dens.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invalid("density is negative or not finite on the quadrature nodes"));
    }
    let total: f64 = dens
        .chunks(nn)
        .zip(&rule.w)
        .map(|(row, wi)| wi * row.iter().zip(&rule.w).map(|(d, wj)| d * wj).sum::<f64>())
        .sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::invalid("conditional density is not integrable"));
    }
    dens.iter_mut().for_each(|d| *d /= total);

    let m1: Vec<f64> = dens.chunks(nn).map(|row| row.iter().zip(&rule.w).map(|(d, w)| d * w).sum()).collect();
    let m2: Vec<f64> = (0..nn).map(|j| (0..nn).map(|i| dens[i * nn + j] * rule.w[i]).sum()).collect();
    let f1 = Margin::new(&rule, m1);
    let f2 = Margin::new(&rule, m2);

    let n = opts.n;
    let levels: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
    let xs: Vec<(usize, Vec<f64>)> = levels.iter().map(|&l| rule.cumulative_weights(f1.quantile_z(l))).collect();
    let ys: Vec<(usize, Vec<f64>)> = levels.iter().map(|&l| rule.cumulative_weights(f2.quantile_z(l))).collect();

    // prefix sums of D_ij w_j along each row, per panel
    let row_prefix: Vec<Vec<f64>> = dens.par_chunks(nn).map(|row| panel_prefix(&rule, row)).collect();
    // E[l][i] = Σ_j D_ij a_j(y_l)
    let e: Vec<Vec<f64>> = ys
        .par_iter()
        .map(|(p, a)| (0..nn).map(|i| dot_cumulative(&rule, &row_prefix[i], &dens[i * nn..(i + 1) * nn], *p, a)).collect())
        .collect();
    let e_prefix: Vec<Vec<f64>> = e.iter().map(|el| panel_prefix(&rule, el)).collect();
    let values: Vec<Vec<f64>> = xs
        .iter()
        .map(|(p, a)| {
            e.iter()
                .zip(&e_prefix)
                .map(|(el, pre)| dot_cumulative(&rule, pre, el, *p, a).clamp(0.0, 1.0))
                .collect()
        })
        .collect();

    let kendall_tau = grid_tau(&rule, &dens);
    Ok(ConditionalCopulaGrid {
        cond_index,
        cond_value,
        n,
        levels,
        values,
        kendall_tau,
    })
}

fn panel_prefix(rule: &LogisticRule, v: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(rule.panels + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for p in 0..rule.panels {
        for k in 0..rule.m {
            let i = p * rule.m + k;
            acc += rule.w[i] * v[i];
        }
        prefix.push(acc);
    }
    prefix
}

/// `4 ∫∫ F12 dF12 - 1` with `F12` at all node pairs.
fn grid_tau(rule: &LogisticRule, dens: &[f64]) -> f64 {
    let nn = rule.len();
    let m = rule.m;
    // cumulative of a vector at every node position
    let cumulate = |v: &[f64]| -> Vec<f64> {
        let prefix = panel_prefix(rule, v);
        (0..nn)
            .map(|j| {
                let (p, a) = (j / m, j % m);
                prefix[p]
                    + (0..m)
                        .map(|k| rule.partial[a * m + k] * rule.jac[p * m + k] * v[p * m + k])
                        .sum::<f64>()
            })
            .collect()
    };
    // B[i][j] = ∫_{-inf}^{z_j} D(i, y) dy
    let b: Vec<Vec<f64>> = dens.par_chunks(nn).map(|row| cumulate(row)).collect();
    // F[i][j] = ∫_{-inf}^{z_i} B(x, j) dx, column by column
    let mut acc = 0.0;
    let cols: Vec<f64> = (0..nn)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = (0..nn).map(|i| b[i][j]).collect();
            let f = cumulate(&col);
            (0..nn).map(|i| rule.w[i] * rule.w[j] * dens[i * nn + j] * f[i]).sum::<f64>()
        })
        .collect();
    for c in cols {
        acc += c;
    }
    4.0 * acc - 1.0
}

/// Extracted grids at several conditioning values and their largest pairwise sup distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedReport {
    pub max_pairwise_sup_deviation: f64,
    pub grids: Vec<ConditionalCopulaGrid>,
}

pub fn simplified_assumption_check<M: TrivariateModel + ?Sized>(
    model: &M,
    cond_index: usize,
    cond_grid: &[f64],
    opts: &ExtractOptions,
) -> Result<SimplifiedReport> {
    if cond_grid.len() < 2 {
        return Err(Error::invalid("cond_grid needs at least two values"));
    }
    let grids = cond_grid
        .iter()
        .map(|&c| extract_conditional_copula(model, cond_index, c, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for (i, a) in grids.iter().enumerate() {
        for b in &grids[i + 1..] {
            worst = worst.max(a.sup_distance(b));
        }
    }
    Ok(SimplifiedReport {
        max_pairwise_sup_deviation: worst,
        grids,
    })
}
