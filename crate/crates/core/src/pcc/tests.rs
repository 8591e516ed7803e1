use super::*;
use crate::archimedean::{archimedean_cdf, archimedean_density, ArchimedeanGenerator};
use crate::bicop::empirical_tau;
use crate::elliptical::{CorrelationMatrix, EllipticalSpec};
use crate::numerics::special::normal_quantile;
use crate::numerics::GaussLegendre;
use rand::{Rng, SeedableRng};

fn constant(c: BivariateCopula) -> EdgeSpec {
    EdgeSpec::constant(c)
}

fn clayton_vine(theta: f64) -> PccSpec {
    let c = || constant(BivariateCopula::clayton(theta).unwrap());
    let cond = constant(BivariateCopula::clayton(theta / (1.0 + theta)).unwrap());
    PccSpec::trivariate([1, 0, 2], c(), c(), cond).unwrap()
}

fn gaussian_vine() -> PccSpec {
    let g = |rho| constant(BivariateCopula::gaussian(rho).unwrap());
    PccSpec::trivariate([0, 1, 2], g(0.5), g(0.5), g(1.0 / 3.0)).unwrap()
}

fn independence_vine(dim: usize) -> PccSpec {
    let mut edges = Vec::new();
    for j in 0..dim - 1 {
        for k in j + 1..dim {
            edges.push(([j, k], (0..j).collect(), constant(BivariateCopula::independence())));
        }
    }
    PccSpec::new(dim, (0..dim).collect(), edges).unwrap()
}

fn extended_frank() -> PccSpec {
    let f = |a| constant(BivariateCopula::frank(a).unwrap());
    PccSpec::trivariate([2, 0, 1], f(1.0), f(3.0), EdgeSpec::frank_amh_tilt(30.0).unwrap()).unwrap()
}

fn gl_integral_3d<F: Fn([f64; 3]) -> f64>(f: F, n: usize) -> f64 {
    let gl = GaussLegendre::new(n);
    let pts: Vec<(f64, f64)> = gl.on_interval(0.0, 1.0).collect();
    let mut total = 0.0;
    for &(x, wx) in &pts {
        for &(y, wy) in &pts {
            for &(z, wz) in &pts {
                total += wx * wy * wz * f([x, y, z]);
            }
        }
    }
    total
}

#[test]
fn resolve_params() {
    let c = constant(BivariateCopula::clayton(2.0).unwrap());
    assert_eq!(resolve_edge_params(&c, &[0.3]).unwrap(), vec![2.0]);
    let tilt = EdgeSpec::frank_amh_tilt(3.0).unwrap();
    let p = resolve_edge_params(&tilt, &[0.5]).unwrap();
    assert!((p[0] - 0.776_870).abs() < 1e-6);
    assert_eq!(resolve_edge_params(&tilt, &[0.0]).unwrap(), vec![0.0]);
    assert!(resolve_edge_params(&tilt, &[0.2, 0.3]).is_err());
    assert!(EdgeSpec::new(Family::Frank, ParamFunction::FrankAmhTilt { alpha: 1.0 }).is_err());

    let map = JointProbabilityMap::new(BivariateCopula::independence(), vec![0.0, 0.5, 1.0], vec![0.5, 1.0, 4.0]).unwrap();
    let jp = EdgeSpec::new(Family::Clayton, ParamFunction::JointProbability(map)).unwrap();
    assert_eq!(resolve_edge_params(&jp, &[0.5]).unwrap(), vec![1.0]);
    // independence base: joint probability of (0.5, 1.0) is 0.5
    assert_eq!(resolve_edge_params(&jp, &[0.5, 1.0]).unwrap(), vec![1.0]);
    let bad = JointProbabilityMap::new(BivariateCopula::independence(), vec![0.0, 1.0], vec![0.5, 0.99]).unwrap();
    assert!(EdgeSpec::new(Family::Gumbel, ParamFunction::JointProbability(bad)).is_err());
}

#[test]
fn spec_validation() {
    let i = || constant(BivariateCopula::independence());
    assert!(PccSpec::trivariate([0, 0, 2], i(), i(), i()).is_err());
    assert!(PccSpec::new(3, vec![0, 1, 2], vec![([0, 1], vec![], i()), ([0, 2], vec![], i())]).is_err());
    // conditioning set must be the earlier roots
    let wrong = vec![([0, 1], vec![], i()), ([0, 2], vec![], i()), ([1, 2], vec![1], i())];
    assert!(PccSpec::new(3, vec![0, 1, 2], wrong).is_err());
    let dup = vec![([0, 1], vec![], i()), ([1, 0], vec![], i()), ([1, 2], vec![0], i())];
    assert!(PccSpec::new(3, vec![0, 1, 2], dup).is_err());
    assert!(PccSpec::new(9, (0..9).collect(), vec![]).is_err());
}

#[test]
fn spec_json_roundtrip() {
    let json = r#"{"dim":3,"order":[2,1,3],"edges":[
        {"conditioned":[1,2],"conditioning":[],"family":"clayton","params":{"constant":[2.0]}},
        {"conditioned":[2,3],"conditioning":[],"family":"frank","params":{"constant":[3.0]}},
        {"conditioned":[1,3],"conditioning":[2],"family":"amh","params":{"frank_amh_tilt":{"alpha":3.0}}}]}"#;
    let spec: PccSpec = serde_json::from_str(json).unwrap();
    assert_eq!(spec.order(), &[1, 0, 2]);
    assert_eq!(spec.edge(0, 1).family(), Family::Frank);
    assert!(!spec.edge(1, 0).is_constant());
    let back: PccSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(back, spec);
    let zero_based = json.replace("[2,1,3]", "[1,0,2]");
    assert!(serde_json::from_str::<PccSpec>(&zero_based).is_err());
    let bad_param = json.replace("[3.0]", "[0.0]");
    assert!(serde_json::from_str::<PccSpec>(&bad_param).is_err());
}

#[test]
fn independence_density_is_one() {
    let spec = independence_vine(5);
    assert_eq!(pcc_density(&spec, &[0.1, 0.5, 0.9, 0.3, 0.7]).unwrap(), 1.0);
    assert!(pcc_density(&spec, &[0.1, 0.5, 0.9, 0.3]).is_err());
    assert!(pcc_density(&spec, &[0.0, 0.5, 0.9, 0.3, 0.7]).is_err());
}

#[test]
fn gaussian_vine_matches_gaussian_copula() {
    let spec = gaussian_vine();
    let r = nalgebra::Matrix3::new(1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0);
    let inv = r.try_inverse().unwrap() - nalgebra::Matrix3::identity();
    let det = r.determinant();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let u: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let x = nalgebra::Vector3::from_iterator(u.iter().map(|&p| normal_quantile(p)));
        let want = (-0.5 * (x.transpose() * inv * x)[0]).exp() / det.sqrt();
        let got = pcc_density(&spec, &u).unwrap();
        assert!((got - want).abs() < 1e-8 * want.max(1.0), "{u:?}: {got} vs {want}");
    }
}

#[test]
fn singular_edge_has_no_density() {
    let ca = |a| constant(BivariateCopula::cuadras_auge(a).unwrap());
    let spec = PccSpec::trivariate([1, 0, 2], ca(0.7), ca(0.3), ca(0.7)).unwrap();
    assert!(matches!(pcc_density(&spec, &[0.3, 0.4, 0.5]), Err(Error::NoDensity(_))));
}

#[test]
fn densities_integrate_to_one() {
    for spec in [extended_frank(), gaussian_vine()] {
        let total = gl_integral_3d(|u| pcc_density(&spec, &u).unwrap(), 64);
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
    let spec = extended_frank();
    for &u in &[[0.1, 0.2, 0.9], [0.95, 0.95, 0.05], [0.5, 0.5, 0.5]] {
        assert!(pcc_density(&spec, &u).unwrap() > 0.0);
    }
}

#[test]
fn clayton_vine_matches_mtcj_density() {
    let spec = clayton_vine(2.0);
    let gen = ArchimedeanGenerator::mtcj(2.0, 3).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let u: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let want = archimedean_density(&gen, &u).unwrap();
        assert!((pcc_density(&spec, &u).unwrap() - want).abs() < 1e-9 * want.max(1.0));
    }
}

#[test]
fn sampling_is_deterministic() {
    let spec = clayton_vine(2.0);
    let a = pcc_sample(&spec, 500, 9).unwrap();
    assert_eq!(a, pcc_sample(&spec, 500, 9).unwrap());
    assert_ne!(a, pcc_sample(&spec, 500, 10).unwrap());
    assert!(a.iter().flatten().all(|&x| x > 0.0 && x < 1.0));
}

fn pair(sample: &[Vec<f64>], a: usize, b: usize) -> Vec<(f64, f64)> {
    sample.iter().map(|r| (r[a], r[b])).collect()
}

#[test]
fn sample_kendall_tau() {
    let n = 200_000;
    let ind = pcc_sample(&independence_vine(3), n, 1).unwrap();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        assert!(empirical_tau(&pair(&ind, a, b)).unwrap().abs() < 0.01);
    }
    let cl = pcc_sample(&clayton_vine(2.0), n, 2).unwrap();
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        let t = empirical_tau(&pair(&cl, a, b)).unwrap();
        assert!((t - 0.5).abs() < 0.01, "({a},{b}): {t}");
    }
}

#[test]
fn cuadras_auge_vine_reproducible_across_seeds() {
    let ca = |a| constant(BivariateCopula::cuadras_auge(a).unwrap());
    let spec = PccSpec::trivariate([1, 0, 2], ca(0.7), ca(0.3), ca(0.7)).unwrap();
    let t1 = empirical_tau(&pair(&pcc_sample(&spec, 200_000, 3).unwrap(), 0, 2)).unwrap();
    let t2 = empirical_tau(&pair(&pcc_sample(&spec, 200_000, 4).unwrap(), 0, 2)).unwrap();
    assert!((t1 - t2).abs() < 0.01, "{t1} vs {t2}");
}

#[test]
fn marginal_ks_statistic() {
    let n = 50_000;
    let sample = pcc_sample(&extended_frank(), n, 8).unwrap();
    for k in 0..3 {
        let mut col: Vec<f64> = sample.iter().map(|r| r[k]).collect();
        col.sort_by(f64::total_cmp);
        let d = col
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / n as f64 - x).max(x - i as f64 / n as f64))
            .fold(0.0, f64::max);
        println!("KS statistic margin {k}: {d:.5} (1% critical {:.5})", 1.63 / (n as f64).sqrt());
        assert!(d < 3.0 / (n as f64).sqrt());
    }
}

#[test]
fn rosenblatt_inverts_sampling() {
    let specs = [clayton_vine(2.0), gaussian_vine(), extended_frank()];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
    for spec in &specs {
        for _ in 0..200 {
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.001..0.999)).collect();
            let u = sample_one(spec, &w).unwrap();
            let back = pcc_rosenblatt(spec, &u).unwrap();
            for k in 0..3 {
                assert!((back[k] - w[k]).abs() < 1e-9, "{w:?} -> {u:?} -> {back:?}");
            }
        }
    }
}

#[test]
fn cdf3_examples() {
    let ind = independence_vine(3);
    assert!((pcc_cdf3(&ind, [0.3, 0.5, 0.7]).unwrap() - 0.105).abs() < 1e-12);
    let spec = extended_frank();
    for &x in &[0.0, 0.2, 0.77, 1.0] {
        for pos in 0..3 {
            let mut u = [1.0; 3];
            u[pos] = x;
            assert!((pcc_cdf3(&spec, u).unwrap() - x).abs() < 1e-9);
        }
    }
    let cl = clayton_vine(2.0);
    let got = pcc_cdf3(&cl, [0.5, 0.5, 0.5]).unwrap();
    assert!((got - 10f64.powf(-0.5)).abs() < 1e-6, "{got}");
    let gen = ArchimedeanGenerator::mtcj(2.0, 3).unwrap();
    for &u in &[[0.1, 0.9, 0.4], [0.8, 0.3, 0.6], [0.05, 0.05, 0.95]] {
        let a = archimedean_cdf(&gen, &u).unwrap();
        assert!((pcc_cdf3(&cl, u).unwrap() - a).abs() < 1e-6);
    }
    assert!(pcc_cdf3(&independence_vine(4), [0.5; 3]).is_err());
}

#[test]
fn cdf3_matches_empirical_cdf() {
    let n = 100_000;
    let spec = extended_frank();
    let sample = pcc_sample(&spec, n, 77).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let u: [f64; 3] = [rng.random_range(0.1..1.0), rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)];
        let emp = sample.iter().filter(|r| r[0] <= u[0] && r[1] <= u[1] && r[2] <= u[2]).count() as f64 / n as f64;
        let c = pcc_cdf3(&spec, u).unwrap();
        assert!((emp - c).abs() < 2.0 / (n as f64).sqrt(), "{u:?}: {emp} vs {c}");
    }
}

#[test]
fn cdf3_is_grounded_and_increasing() {
    let spec = extended_frank();
    assert_eq!(pcc_cdf3(&spec, [0.0, 0.4, 0.9]).unwrap(), 0.0);
    let mut prev = 0.0;
    for i in 1..=10 {
        let x = i as f64 / 10.0;
        let c = pcc_cdf3(&spec, [x, 0.6, 0.7]).unwrap();
        assert!(c >= prev - 1e-12);
        prev = c;
    }
}

// extraction

#[test]
fn extraction_of_independence() {
    let grid = extract_conditional_copula(&independence_vine(3), 1, 0.37, &ExtractOptions::default()).unwrap();
    assert_eq!(grid.n, 21);
    assert!((grid.levels[0] - 1.0 / 22.0).abs() < 1e-15);
    let d = grid.sup_distance_to(|u, v| u * v);
    assert!(d < 1e-8, "{d}");
    assert!(grid.kendall_tau.abs() < 1e-8);
}

#[test]
fn extraction_options_are_checked() {
    let spec = independence_vine(3);
    assert!(extract_conditional_copula(&spec, 0, 0.5, &ExtractOptions::with_n(5)).is_err());
    assert!(extract_conditional_copula(&spec, 3, 0.5, &ExtractOptions::default()).is_err());
    assert!(extract_conditional_copula(&spec, 0, 1.0, &ExtractOptions::default()).is_err());
}

#[test]
fn extraction_recovers_mtcj_conditional_copula() {
    let model = ArchimedeanModel(ArchimedeanGenerator::mtcj(2.0, 3).unwrap());
    let target = BivariateCopula::clayton(2.0 / 3.0).unwrap();
    for &c in &[0.2, 0.8] {
        let grid = extract_conditional_copula(&model, 2, c, &ExtractOptions::default()).unwrap();
        let d = grid.sup_distance_to(|u, v| target.cdf(u, v));
        assert!(d < 1e-6, "u3={c}: {d}");
        assert!((grid.kendall_tau - target.kendall_tau()).abs() < 1e-6);
    }
}

#[test]
fn extraction_recovers_amh_from_frank() {
    let model = ArchimedeanModel(ArchimedeanGenerator::frank(3.0, 3).unwrap());
    let grid = extract_conditional_copula(&model, 2, 0.5, &ExtractOptions::default()).unwrap();
    let amh = BivariateCopula::amh(-(-1.5f64).exp_m1()).unwrap();
    let d = grid.sup_distance_to(|u, v| amh.cdf(u, v));
    assert!(d < 1e-6, "{d}");
}

#[test]
fn extraction_returns_the_conditional_edge() {
    // the conditional edge of a simplified vine is recovered given the root
    let spec = gaussian_vine();
    let target = BivariateCopula::gaussian(1.0 / 3.0).unwrap();
    for &c in &[0.15, 0.6] {
        let grid = extract_conditional_copula(&spec, 0, c, &ExtractOptions::default()).unwrap();
        assert!(grid.sup_distance_to(|u, v| target.cdf(u, v)) < 1e-6);
    }
    let spec = extended_frank();
    for &c in &[0.1, 0.9] {
        let grid = extract_conditional_copula(&spec, 2, c, &ExtractOptions::default()).unwrap();
        let amh = BivariateCopula::amh(-(-30.0 * c).exp_m1()).unwrap();
        let d = grid.sup_distance_to(|u, v| amh.cdf(u, v));
        assert!(d < 1e-6, "u3={c}: {d}");
    }
}

#[test]
fn extracted_grids_are_copulas() {
    let model = ArchimedeanModel(ArchimedeanGenerator::gumbel(2.0, 3).unwrap());
    let grid = extract_conditional_copula(&model, 0, 0.3, &ExtractOptions::with_n(15)).unwrap();
    let n = grid.n;
    let top = grid.levels[n - 1];
    for k in 0..n {
        let l = grid.levels[k];
        // C(l, top) lies within 1 - top of l
        assert!((grid.values[k][n - 1] - l).abs() <= 2.0 / n as f64);
        assert!((grid.values[n - 1][k] - l).abs() <= 2.0 / n as f64);
        assert!(grid.values[k][n - 1] <= l + 1e-9 && grid.values[k][n - 1] >= l - (1.0 - top) - 1e-9);
    }
    for k in 0..n - 1 {
        for l in 0..n - 1 {
            let vol = grid.values[k + 1][l + 1] - grid.values[k + 1][l] - grid.values[k][l + 1] + grid.values[k][l];
            assert!(vol >= -1e-8);
        }
    }
}

#[test]
fn simplified_check_separates_families() {
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let opts = ExtractOptions::default();
    let clayton = ArchimedeanModel(ArchimedeanGenerator::mtcj(2.0, 3).unwrap());
    let r = simplified_assumption_check(&clayton, 2, &grid, &opts).unwrap();
    assert_eq!(r.grids.len(), 9);
    assert!(r.max_pairwise_sup_deviation < 5e-4, "{}", r.max_pairwise_sup_deviation);
    let gumbel = ArchimedeanModel(ArchimedeanGenerator::gumbel(2.0, 3).unwrap());
    let r = simplified_assumption_check(&gumbel, 2, &grid, &opts).unwrap();
    assert!(r.max_pairwise_sup_deviation > 5e-3, "{}", r.max_pairwise_sup_deviation);
    assert!(simplified_assumption_check(&gumbel, 2, &[0.5], &opts).is_err());
}

#[test]
fn student_t_conditional_copula_is_constant() {
    let spec = EllipticalSpec::student_t(CorrelationMatrix::equicorrelated(3, 0.5).unwrap(), 3.0).unwrap();
    let target = BivariateCopula::student_t(1.0 / 3.0, 4.0).unwrap();
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let r = simplified_assumption_check(&spec, 2, &grid, &ExtractOptions::default()).unwrap();
    assert!(r.max_pairwise_sup_deviation < 1e-3, "{}", r.max_pairwise_sup_deviation);
    let tau = tau_of(&target);
    for g in &r.grids {
        let d = g.sup_distance_to(|u, v| target.cdf(u, v));
        assert!(d < 1e-3, "u3={}: {d}", g.cond_value);
        assert!((g.kendall_tau - tau).abs() < 2e-3, "u3={}: {}", g.cond_value, g.kendall_tau);
    }
}

fn tau_of(c: &BivariateCopula) -> f64 {
    c.kendall_tau()
}

#[test]
fn pearson_ii_conditional_copula_is_constant() {
    let r = CorrelationMatrix::from_rows(&[vec![1.0, 0.4, 0.3], vec![0.4, 1.0, 0.5], vec![0.3, 0.5, 1.0]]).unwrap();
    let spec = EllipticalSpec::pearson_ii(r, 2.0).unwrap();
    let grid = [0.2, 0.5, 0.8];
    let r = simplified_assumption_check(&spec, 2, &grid, &ExtractOptions::default()).unwrap();
    assert!(r.max_pairwise_sup_deviation < 1e-3, "{}", r.max_pairwise_sup_deviation);
}

#[test]
fn density_callback_model() {
    // product of a Clayton pair and an independent third coordinate
    let c = BivariateCopula::clayton(1.5).unwrap();
    let model = DensityFn(|u: [f64; 3]| c.pdf(u[0], u[1]).unwrap());
    let grid = extract_conditional_copula(&model, 2, 0.4, &ExtractOptions::default()).unwrap();
    assert!(grid.sup_distance_to(|u, v| c.cdf(u, v)) < 1e-6);
}
