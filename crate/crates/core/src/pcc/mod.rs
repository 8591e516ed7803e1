//! Pair copula constructions on C-vines.
//!
//! Variable indices are 0-based in the API and 1-based in JSON.

mod extract;
#[cfg(test)]
mod tests;

pub use extract::{
    extract_conditional_copula, simplified_assumption_check, ArchimedeanModel, ConditionalCopulaGrid, DensityFn,
    ExtractOptions, SimplifiedReport, TrivariateModel,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bicop::{BivariateCopula, Family};
use crate::error::{Error, Result};
use crate::numerics::interp::MonotoneCubic;
use crate::numerics::rng::{open_unit, stream};
use crate::numerics::{integrate, QuadOptions};

/// Largest dimension accepted for density and sampling.
pub const MAX_DIM: usize = 8;

/// Boundary margin for the integrand of [`pcc_cdf3`].
const CDF3_EPS: f64 = 1e-10;

/// How an edge's parameters depend on the (original) conditioning values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamFunction {
    Constant(Vec<f64>),
    /// AMH parameter `1 - exp(-alpha u)` of the single conditioning value.
    FrankAmhTilt { alpha: f64 },
    JointProbability(JointProbabilityMap),
}

/// Parameter as a monotone function of the joint probability of the
/// conditioning values under a base copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJointMap", into = "RawJointMap")]
pub struct JointProbabilityMap {
    base: BivariateCopula,
    map: MonotoneCubic,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJointMap {
    base: BivariateCopula,
    p_grid: Vec<f64>,
    theta_grid: Vec<f64>,
}

impl TryFrom<RawJointMap> for JointProbabilityMap {
    type Error = Error;
    fn try_from(raw: RawJointMap) -> Result<Self> {
        JointProbabilityMap::new(raw.base, raw.p_grid, raw.theta_grid)
    }
}

impl From<JointProbabilityMap> for RawJointMap {
    fn from(m: JointProbabilityMap) -> Self {
        RawJointMap {
            base: m.base,
            p_grid: m.map.xs().to_vec(),
            theta_grid: m.map.ys().to_vec(),
        }
    }
}

impl JointProbabilityMap {
    pub fn new(base: BivariateCopula, p_grid: Vec<f64>, theta_grid: Vec<f64>) -> Result<Self> {
        if p_grid.first().is_none_or(|&p| p > 0.0) || p_grid.last().is_none_or(|&p| p < 1.0) {
            return Err(Error::invalid("p_grid must cover [0, 1]"));
        }
        let map = MonotoneCubic::new(p_grid, theta_grid)?;
        Ok(JointProbabilityMap { base, map })
    }

    pub fn base(&self) -> &BivariateCopula {
        &self.base
    }

    /// Joint probability of the conditioning values: the value itself for one
    /// variable, the base copula cdf for two.
    pub fn probability(&self, cond_values: &[f64]) -> Result<f64> {
        match cond_values {
            [u] => Ok(*u),
            [u, v] => Ok(self.base.cdf(*u, *v)),
            _ => Err(Error::invalid(format!(
                "joint_probability needs one or two conditioning values, got {}",
                cond_values.len()
            ))),
        }
    }

    pub fn theta(&self, p: f64) -> f64 {
        self.map.eval(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    family: Family,
    params: ParamFunction,
    fixed: Option<BivariateCopula>,
}

impl EdgeSpec {
    pub fn new(family: Family, params: ParamFunction) -> Result<Self> {
        let fixed = match &params {
            ParamFunction::Constant(p) => Some(BivariateCopula::new(family, p)?),
            ParamFunction::FrankAmhTilt { alpha } => {
                if family != Family::Amh {
                    return Err(Error::invalid("frank_amh_tilt parameters require the amh family"));
                }
                // 1 - e^{-alpha u} >= -1 on [0, 1]
                if !(alpha.is_finite() && *alpha >= -std::f64::consts::LN_2) {
                    return Err(Error::Parameter {
                        family: "amh",
                        name: "alpha",
                        value: *alpha,
                        range: "[-ln 2, inf)",
                    });
                }
                None
            }
            ParamFunction::JointProbability(m) => {
                if family.n_params() != 1 {
                    return Err(Error::invalid("joint_probability parameters need a one-parameter family"));
                }
                // the monotone interpolant stays between its end values
                for &theta in m.map.ys() {
                    BivariateCopula::new(family, &[theta])?;
                }
                None
            }
        };
        Ok(EdgeSpec { family, params, fixed })
    }

    pub fn constant(copula: BivariateCopula) -> Self {
        EdgeSpec {
            family: copula.family(),
            params: ParamFunction::Constant(copula.params()),
            fixed: Some(copula),
        }
    }

    pub fn frank_amh_tilt(alpha: f64) -> Result<Self> {
        EdgeSpec::new(Family::Amh, ParamFunction::FrankAmhTilt { alpha })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &ParamFunction {
        &self.params
    }

    /// True when the copula depends on no conditioning value.
    pub fn is_constant(&self) -> bool {
        self.fixed.is_some()
    }

    /// Pair copula for the given original conditioning values.
    pub fn copula(&self, cond_values: &[f64]) -> Result<BivariateCopula> {
        match &self.fixed {
            Some(c) => Ok(c.clone()),
            None => BivariateCopula::new(self.family, &resolve_edge_params(self, cond_values)?),
        }
    }
}

/// Parameters of `edge` at the given conditioning values.
pub fn resolve_edge_params(edge: &EdgeSpec, cond_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = cond_values.iter().find(|u| !(0.0..=1.0).contains(*u)) {
        return Err(Error::Domain {
            name: "cond_value",
            value: bad,
            domain: "[0, 1]",
        });
    }
    match &edge.params {
        ParamFunction::Constant(p) => Ok(p.clone()),
        ParamFunction::FrankAmhTilt { alpha } => match cond_values {
            [u] => Ok(vec![-(-alpha * u).exp_m1()]),
            _ => Err(Error::invalid(format!(
                "frank_amh_tilt needs exactly one conditioning value, got {}",
                cond_values.len()
            ))),
        },
        ParamFunction::JointProbability(m) => {
            let theta = m.theta(m.probability(cond_values)?);
            BivariateCopula::new(edge.family, &[theta])?;
            Ok(vec![theta])
        }
    }
}

/// C-vine: tree `j` joins root `order[j]` with each later `order[j + 1 + i]`,
/// conditioned on `order[..j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPcc", into = "RawPcc")]
pub struct PccSpec {
    dim: usize,
    order: Vec<usize>,
    edges: Vec<Vec<EdgeSpec>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPcc {
    dim: usize,
    order: Vec<usize>,
    edges: Vec<RawEdge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    conditioned: [usize; 2],
    #[serde(default)]
    conditioning: Vec<usize>,
    family: Family,
    params: ParamFunction,
}

impl TryFrom<RawPcc> for PccSpec {
    type Error = Error;
    fn try_from(raw: RawPcc) -> Result<Self> {
        let one_based = |i: usize| {
            i.checked_sub(1)
                .ok_or_else(|| Error::invalid("variable indices are 1-based in JSON"))
        };
        let order = raw.order.iter().map(|&i| one_based(i)).collect::<Result<Vec<_>>>()?;
        let mut edges = Vec::with_capacity(raw.edges.len());
        for e in raw.edges {
            let conditioned = [one_based(e.conditioned[0])?, one_based(e.conditioned[1])?];
            let conditioning = e.conditioning.iter().map(|&i| one_based(i)).collect::<Result<Vec<_>>>()?;
            edges.push((conditioned, conditioning, EdgeSpec::new(e.family, e.params)?));
        }
        PccSpec::new(raw.dim, order, edges)
    }
}

impl From<PccSpec> for RawPcc {
    fn from(s: PccSpec) -> Self {
        let mut edges = Vec::new();
        for (j, tree) in s.edges.iter().enumerate() {
            for (i, e) in tree.iter().enumerate() {
                let mut conditioning: Vec<usize> = s.order[..j].iter().map(|&k| k + 1).collect();
                conditioning.sort_unstable();
                edges.push(RawEdge {
                    conditioned: [s.order[j] + 1, s.order[j + 1 + i] + 1],
                    conditioning,
                    family: e.family,
                    params: e.params.clone(),
                });
            }
        }
        RawPcc {
            dim: s.dim,
            order: s.order.iter().map(|&k| k + 1).collect(),
            edges,
        }
    }
}

impl PccSpec {
    /// Builds a C-vine from edges given as (conditioned pair, conditioning set, edge).
    pub fn new(dim: usize, order: Vec<usize>, edges: Vec<([usize; 2], Vec<usize>, EdgeSpec)>) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::Dimension {
                dim,
                reason: "pair copula constructions support 2 <= dim <= 8",
            });
        }
        let mut seen = vec![false; dim];
        if order.len() != dim || order.iter().any(|&k| k >= dim || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::invalid("order must be a permutation of the variables"));
        }
        if edges.len() != dim * (dim - 1) / 2 {
            return Err(Error::invalid(format!(
                "a {dim}-dimensional vine has {} edges, got {}",
                dim * (dim - 1) / 2,
                edges.len()
            )));
        }
        let mut slots: Vec<Vec<Option<EdgeSpec>>> = (0..dim - 1).map(|j| vec![None; dim - 1 - j]).collect();
        for (pair, mut cond, edge) in edges {
            let j = cond.len();
            if j >= dim - 1 {
                return Err(Error::invalid("conditioning set too large"));
            }
            cond.sort_unstable();
            let mut expect = order[..j].to_vec();
            expect.sort_unstable();
            if cond != expect {
                return Err(Error::invalid(format!(
                    "edge {:?}|{:?} does not belong to the C-vine with this order",
                    pair, cond
                )));
            }
            let root = order[j];
            let other = match pair {
                [a, b] if a == root && b != root => b,
                [a, b] if b == root && a != root => a,
                _ => {
                    return Err(Error::invalid(format!(
                        "edge {pair:?} in tree {} must contain the root variable {root}",
                        j + 1
                    )))
                }
            };
            let i = match order[j + 1..].iter().position(|&k| k == other) {
                Some(i) => i,
                None => return Err(Error::invalid(format!("edge {pair:?} repeats a conditioning variable"))),
            };
            if slots[j][i].replace(edge).is_some() {
                return Err(Error::invalid(format!("duplicate edge {pair:?}")));
            }
        }
        let edges = slots
            .into_iter()
            .map(|tree| tree.into_iter().collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::invalid("missing edge"))?;
        Ok(PccSpec { dim, order, edges })
    }

    /// Three-dimensional C-vine with root `order[0]`: edges
    /// `(o0, o1)`, `(o0, o2)` and the conditional edge `(o1, o2 | o0)`.
    pub fn trivariate(order: [usize; 3], first: EdgeSpec, second: EdgeSpec, conditional: EdgeSpec) -> Result<Self> {
        let [a, b, c] = order;
        PccSpec::new(
            3,
            order.to_vec(),
            vec![([a, b], vec![], first), ([a, c], vec![], second), ([b, c], vec![a], conditional)],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Edge of tree `tree` between `order[tree]` and `order[tree + 1 + index]`.
    pub fn edge(&self, tree: usize, index: usize) -> &EdgeSpec {
        &self.edges[tree][index]
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::Dimension {
                dim: u.len(),
                reason: "point dimension must match the vine",
            });
        }
        Ok(())
    }

    fn root_values(&self, u: &[f64], j: usize) -> Vec<f64> {
        self.order[..j].iter().map(|&k| u[k]).collect()
    }
}

/// C-vine copula density: product of all pair-copula densities evaluated at
/// the h-transformed arguments.
pub fn pcc_density(spec: &PccSpec, u: &[f64]) -> Result<f64> {
    spec.check_point(u)?;
    if let Some(&bad) = u.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::Domain {
            name: "u",
            value: bad,
            domain: "(0, 1)",
        });
    }
    let d = spec.dim;
    // v[k] holds F(u_{o_k} | u_{o_0}, ..., u_{o_{j-1}}) while processing tree j
    let mut v: Vec<f64> = spec.order.iter().map(|&k| u[k]).collect();
    let mut density = 1.0;
    for j in 0..d - 1 {
        let cond = spec.root_values(u, j);
        let root = v[j];
        for i in j + 1..d {
            let c = spec.edges[j][i - j - 1].copula(&cond)?;
            if !c.is_absolutely_continuous() {
                return Err(Error::NoDensity(c.family().name()));
            }
            density *= c.pdf_unchecked(v[i], root);
            v[i] = c.h(v[i], root);
        }
    }
    Ok(density)
}

/// Inverse Rosenblatt sampling; row `r` holds variables `0..dim` of draw `r`.
pub fn pcc_sample(spec: &PccSpec, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    (0..n)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            let w: Vec<f64> = (0..spec.dim).map(|_| open_unit(&mut rng)).collect();
            sample_one(spec, &w)
        })
        .collect()
}

/// Maps independent uniforms `w` (in vine order) to one draw.
fn sample_one(spec: &PccSpec, w: &[f64]) -> Result<Vec<f64>> {
    let d = spec.dim;
    let mut u = vec![0.0; d];
    // v[j][k]: F(u_{o_k} | u_{o_0..o_{j-1}})
    let mut v = vec![vec![0.0; d]; d];
    for k in 0..d {
        let mut x = w[k];
        for j in (0..k).rev() {
            let c = spec.edges[j][k - j - 1].copula(&spec.root_values(&u, j))?;
            x = c.hinv(x, v[j][j]);
        }
        u[spec.order[k]] = x;
        v[0][k] = x;
        for j in 0..k {
            let c = spec.edges[j][k - j - 1].copula(&spec.root_values(&u, j))?;
            v[j + 1][k] = c.h(v[j][k], v[j][j]);
        }
    }
    Ok(u)
}

/// Forward Rosenblatt transform: independent uniforms in vine order.
pub fn pcc_rosenblatt(spec: &PccSpec, u: &[f64]) -> Result<Vec<f64>> {
    spec.check_point(u)?;
    let d = spec.dim;
    let mut v: Vec<f64> = spec.order.iter().map(|&k| u[k]).collect();
    let mut w = vec![0.0; d];
    w[0] = v[0];
    for j in 0..d - 1 {
        let cond = spec.root_values(u, j);
        for i in j + 1..d {
            let c = spec.edges[j][i - j - 1].copula(&cond)?;
            v[i] = c.h(v[i], v[j]);
        }
        w[j + 1] = v[j + 1];
    }
    Ok(w)
}

/// Trivariate cdf `∫_0^{u_r} C_{ab|r}(F_{a|r}(u_a|t), F_{b|r}(u_b|t); t) dt`
/// over the root variable `r`.
pub fn pcc_cdf3(spec: &PccSpec, u: [f64; 3]) -> Result<f64> {
    if spec.dim != 3 {
        return Err(Error::Dimension {
            dim: spec.dim,
            reason: "pcc_cdf3 needs a trivariate spec",
        });
    }
    if let Some(&bad) = u.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Domain {
            name: "u",
            value: bad,
            domain: "[0, 1]",
        });
    }
    let [r, a, b] = [spec.order[0], spec.order[1], spec.order[2]];
    if u.iter().any(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let (ca, cb) = (spec.edge(0, 0).copula(&[])?, spec.edge(0, 1).copula(&[])?);
    let cond = spec.edge(1, 0);
    let mut failure = None;
    let integrand = |t: f64| {
        let t = t.clamp(CDF3_EPS, 1.0 - CDF3_EPS);
        match cond.copula(&[t]) {
            Ok(c) => c.cdf(ca.h(u[a], t), cb.h(u[b], t)),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let res = integrate(integrand, 0.0, u[r], QuadOptions::tolerances(1e-9, 1e-10))?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(res.value.clamp(0.0, u.iter().copied().fold(1.0, f64::min)))
}
