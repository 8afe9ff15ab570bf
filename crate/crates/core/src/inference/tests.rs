use super::*;
use crate::data::{DataScale, MaximaDataset};
use crate::maxid::{log_copula_pair_density, MarginalTable, PairContext};
use crate::model::{rescaled_times, DependenceParams, Family, ModelSpec, StudyDesign};
use crate::numerics::{std_normal_quantile, student_t_cdf, QuadratureSpec};
use crate::simulate::{simulate_gaussian_copula, simulate_maxid, OutputScale, SimulationSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

fn line_design(d: usize, n: usize) -> StudyDesign {
    let coords: Vec<(f64, f64, f64)> =
        (0..d).map(|j| (0.13 * j as f64, 0.07 * ((j * 3) % 5) as f64, 0.4 * (j % 3) as f64)).collect();
    StudyDesign::planar(&coords, rescaled_times(n)).unwrap()
}

fn random_uniform(n: usize, d: usize, seed: u64) -> MaximaDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0.001..0.999)).collect()).collect();
    MaximaDataset::from_rows(&rows, DataScale::Uniform).unwrap()
}

fn quiet_fit(restarts: usize) -> FitOptions {
    FitOptions { restarts, ..Default::default() }
}

#[test]
fn single_term_objective() {
    let design = line_design(2, 1);
    let data = MaximaDataset::from_rows(&[vec![0.3, 0.8]], DataScale::Uniform).unwrap();
    let p = DependenceParams { alpha: 1.5, beta: 0.7, lambda0: -0.5, nu: 0.4, ..Default::default() };
    let spec = ModelSpec::numbered(5).unwrap();
    let w = PairWeights::all_ones(2);
    let v = negative_log_pl(&p, &data, &design, &w, &spec).unwrap();
    let pair = PairContext::new(&design, 0, 1, 0.5, 1.0).unwrap();
    let table = MarginalTable::build(1.5, 0.7).unwrap();
    let direct = log_copula_pair_density(0.3, 0.8, &pair, &p, &table).unwrap();
    assert!((v + direct).abs() < 1e-6 * direct.abs().max(1.0), "{v} vs {direct}");
}

#[test]
fn zero_weights_give_zero() {
    let design = line_design(4, 12);
    let data = random_uniform(12, 4, 1);
    let w = PairWeights::from_matrix(4, vec![0.0; 16]).unwrap();
    for k in [1, 5, 7, 9] {
        let spec = ModelSpec::numbered(k).unwrap();
        let v = negative_log_pl(&DependenceParams::default(), &data, &design, &w, &spec).unwrap();
        assert_eq!(v, 0.0);
    }
}

/// Extremal-t copula on the model scale: `V(z1, z2)` in closed form, with
/// derivatives by central differences.
fn extremal_t_log_copula(u1: f64, u2: f64, alpha: f64, rho: f64) -> f64 {
    let c = 2f64.powf(alpha / 2.0 - 1.0) * gamma((alpha + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
    let b = ((alpha + 1.0) / (1.0 - rho * rho)).sqrt();
    let v = |x: f64, y: f64| {
        c * (x.powf(-alpha) * student_t_cdf(b * (y / x - rho), alpha + 1.0)
            + y.powf(-alpha) * student_t_cdf(b * (x / y - rho), alpha + 1.0))
    };
    let z = |u: f64| (c / -u.ln()).powf(1.0 / alpha);
    let (z1, z2) = (z(u1), z(u2));
    let (h1, h2) = (1e-4 * z1, 1e-4 * z2);
    let v1 = (v(z1 + h1, z2) - v(z1 - h1, z2)) / (2.0 * h1);
    let v2 = (v(z1, z2 + h2) - v(z1, z2 - h2)) / (2.0 * h2);
    let v12 = (v(z1 + h1, z2 + h2) - v(z1 + h1, z2 - h2) - v(z1 - h1, z2 + h2) + v(z1 - h1, z2 - h2)) / (4.0 * h1 * h2);
    let log_joint = -v(z1, z2) + (v1 * v2 - v12).ln();
    // Marginal log densities: V(z) = c z^{−α}.
    let lm = |z: f64| -c * z.powf(-alpha) + (alpha * c * z.powf(-alpha - 1.0)).ln();
    log_joint - lm(z1) - lm(z2)
}

#[test]
fn small_beta_matches_extremal_t_per_term() {
    let n = 15;
    let design = line_design(4, n);
    let data = random_uniform(n, 4, 2);
    let p = DependenceParams { alpha: 2.0, beta: 1e-5, lambda0: -1.0, ..Default::default() };
    for spec in [ModelSpec::numbered(1).unwrap(), ModelSpec::numbered(3).unwrap()] {
        let obj = PairwiseObjective::new(&data, &design, &PairWeights::all_ones(4), spec).unwrap();
        for t in obj.terms(&p).unwrap() {
            let rho = (-design.distance(t.site1, t.site2) * (-p.lambda0).exp()).exp();
            for (&k, &v) in t.replicates.iter().zip(&t.log_density) {
                let oracle =
                    extremal_t_log_copula(data.get(k, t.site1).unwrap(), data.get(k, t.site2).unwrap(), p.alpha, rho);
                assert!((v - oracle).abs() < 1e-3, "{:?}: {v} vs {oracle}", spec.family);
            }
        }
    }
}

#[test]
fn gaussian_objective_matches_hand_sum() {
    let n = 12;
    let design = line_design(3, n);
    let data = random_uniform(n, 3, 3);
    let p = DependenceParams { lambda0: -0.7, lambda1: 0.3, lambda2: -0.2, ..Default::default() };
    let spec = ModelSpec::numbered(8).unwrap();
    let v = negative_log_pl(&p, &data, &design, &PairWeights::all_ones(3), &spec).unwrap();
    let mut hand = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for k in 0..n {
            let t = design.times[k];
            let l1 = (p.lambda0 + p.lambda1 * design.sites[i].alt + p.lambda2 * t).exp();
            let l2 = (p.lambda0 + p.lambda1 * design.sites[j].alt + p.lambda2 * t).exp();
            let s2 = l1 * l1 + l2 * l2;
            let rho = 2.0 * l1 * l2 / s2 * (-(2.0 * design.distance(i, j).powi(2) / s2).sqrt()).exp();
            let (x1, x2) = (std_normal_quantile(data.raw(k, i)), std_normal_quantile(data.raw(k, j)));
            hand += -0.5 * (1.0 - rho * rho).ln()
                - (rho * rho * (x1 * x1 + x2 * x2) - 2.0 * rho * x1 * x2) / (2.0 * (1.0 - rho * rho));
        }
    }
    assert!((v + hand).abs() < 1e-10 * hand.abs().max(1.0), "{v} vs {hand}");
}

#[test]
fn fast_objective_matches_reference() {
    let n = 6;
    let design = line_design(4, n);
    let data = random_uniform(n, 4, 4);
    let spec = ModelSpec::numbered(6).unwrap();
    let quad = QuadratureSpec { rel_tol: 1e-10, abs_tol: 1e-14, max_subdivisions: 2000, ..Default::default() };
    for p in [
        DependenceParams { alpha: 1.0, beta: 0.5, lambda0: -0.5, lambda1: -0.25, lambda2: 0.3, nu: 0.25, ..Default::default() },
        DependenceParams { alpha: 3.0, beta: 2.0, lambda0: 0.2, lambda1: 0.1, lambda2: 0.0, nu: 1.5, ..Default::default() },
    ] {
        let obj = PairwiseObjective::new(&data, &design, &PairWeights::all_ones(4), spec).unwrap();
        let fast = obj.evaluate(&p).unwrap();
        let reference = obj.clone().with_mode(EvalMode::Reference(quad)).evaluate(&p).unwrap();
        assert!((fast - reference).abs() < 1e-6 * reference.abs().max(1.0), "{fast} vs {reference}");
    }
}

#[test]
fn relabeling_and_replicate_permutation_are_exact() {
    let n = 10;
    let design = line_design(5, n);
    let data = random_uniform(n, 5, 5);
    let p = DependenceParams { alpha: 1.2, beta: 0.5, lambda0: -0.5, lambda1: -0.3, lambda2: 0.4, nu: 0.3, ..Default::default() };
    for k in [6, 8] {
        let spec = ModelSpec::numbered(k).unwrap();
        let base = negative_log_pl(&p, &data, &design, &PairWeights::all_ones(5), &spec).unwrap();
        // Station relabeling.
        let perm = [3, 0, 4, 2, 1];
        let d2 = data.select_stations(&perm);
        let g2 = cv::select_sites(&design, &perm);
        let relabeled = negative_log_pl(&p, &d2, &g2, &PairWeights::all_ones(5), &spec).unwrap();
        assert_eq!(base.to_bits(), relabeled.to_bits(), "model {k}");
        // Replicate permutation together with the times.
        let order: Vec<usize> = (0..n).rev().collect();
        let rows: Vec<Vec<f64>> = order.iter().map(|&r| data.row(r).to_vec()).collect();
        let d3 = MaximaDataset::from_rows(&rows, DataScale::Uniform).unwrap();
        let mut g3 = design.clone();
        g3.times = order.iter().map(|&r| design.times[r]).collect();
        let permuted = negative_log_pl(&p, &d3, &g3, &PairWeights::all_ones(5), &spec).unwrap();
        assert_eq!(base.to_bits(), permuted.to_bits(), "model {k}");
    }
}

#[test]
fn deleting_a_cell_changes_only_its_terms() {
    let n = 10;
    let design = line_design(4, n);
    let data = random_uniform(n, 4, 6);
    let mut cut = data.clone();
    // A cell with a central value, so the quadrature lattice stays put.
    cut.set(3, 2, None);
    let p = DependenceParams { alpha: 1.0, beta: 0.5, lambda0: -0.5, nu: 0.25, ..Default::default() };
    let spec = ModelSpec::numbered(5).unwrap();
    let w = PairWeights::all_ones(4);
    let a = PairwiseObjective::new(&data, &design, &w, spec).unwrap().terms(&p).unwrap();
    let b = PairwiseObjective::new(&cut, &design, &w, spec).unwrap().terms(&p).unwrap();
    for (ta, tb) in a.iter().zip(&b) {
        let touches = ta.site1 == 2 || ta.site2 == 2;
        for (idx, &k) in ta.replicates.iter().enumerate() {
            match tb.replicates.iter().position(|&r| r == k) {
                Some(jdx) => assert!((ta.log_density[idx] - tb.log_density[jdx]).abs() <= 1e-12),
                None => assert!(touches && k == 3),
            }
        }
        assert_eq!(tb.replicates.len() + usize::from(touches), ta.replicates.len());
    }
}

#[test]
fn fit_recovers_gaussian_copula_range() {
    let n = 80;
    let design = line_design(8, n);
    let truth = DependenceParams { lambda0: -1.0, ..Default::default() };
    let data = simulate_gaussian_copula(&design, &truth, n, 9).unwrap();
    let spec = ModelSpec::numbered(7).unwrap();
    let init = DependenceParams { lambda0: 0.0, ..Default::default() };
    let fit = fit_dependence(&data, &design, &spec, &PairWeights::all_ones(8), &init, &quiet_fit(2)).unwrap();
    assert!(fit.converged);
    assert_eq!(fit.free, vec!["lambda0".to_string()]);
    assert!((fit.params.lambda0 - truth.lambda0).abs() < 0.25, "{:?}", fit.params);
    assert!(fit.restarts.len() == 2 && fit.objective <= fit.restarts[0].objective);
}

#[test]
fn fit_recovers_max_stable_parameters() {
    let n = 60;
    let design = line_design(6, n);
    let truth = DependenceParams { alpha: 2.0, beta: 0.0, lambda0: -1.0, ..Default::default() };
    let spec = SimulationSpec { replicates: n, seed: 4, scale: OutputScale::Uniform, ..Default::default() };
    let data = simulate_maxid(&design, &truth, &spec).unwrap();
    let init = DependenceParams { alpha: 1.0, beta: 0.0, lambda0: 0.0, ..Default::default() };
    let model = ModelSpec::numbered(1).unwrap();
    let fit = fit_dependence(&data, &design, &model, &PairWeights::all_ones(6), &init, &quiet_fit(1)).unwrap();
    assert!(fit.converged);
    assert!((fit.params.alpha.ln() - truth.alpha.ln()).abs() < 0.5, "{:?}", fit.params);
    assert!((fit.params.lambda0 - truth.lambda0).abs() < 0.5, "{:?}", fit.params);
    assert_eq!(fit.params.beta, 0.0);
}

#[test]
fn nested_warm_start_never_fits_worse() {
    let n = 20;
    let design = line_design(5, n);
    let data = simulate_gaussian_copula(&design, &DependenceParams { lambda0: -1.0, ..Default::default() }, n, 5).unwrap();
    let w = PairWeights::all_ones(5);
    let opts = FitOptions { restarts: 1, optimizer: crate::numerics::NelderMeadOptions { max_iter: 150, ..Default::default() }, ..Default::default() };
    let init = DependenceParams { alpha: 1.0, beta: 0.5, lambda0: -0.5, ..Default::default() };
    let m3 = fit_dependence(&data, &design, &ModelSpec::numbered(3).unwrap(), &w, &init, &opts).unwrap();
    let m4 = fit_dependence(&data, &design, &ModelSpec::numbered(4).unwrap(), &w, &m3.params, &opts).unwrap();
    assert!(m4.objective <= m3.objective + 1e-9, "{} > {}", m4.objective, m3.objective);
}

#[test]
fn fit_input_checks() {
    let design = line_design(3, 5);
    let data = random_uniform(5, 3, 1);
    let spec = ModelSpec::numbered(7).unwrap();
    let r = fit_dependence(&data, &design, &spec, &PairWeights::all_ones(3), &DependenceParams::default(), &quiet_fit(1));
    assert!(matches!(r, Err(crate::Error::InvalidInput(_))));
    let bad = ModelSpec::numbered(1).unwrap().set_free(crate::model::ParamId::Nu, true);
    let data = random_uniform(12, 3, 1);
    let design = line_design(3, 12);
    assert!(fit_dependence(&data, &design, &bad, &PairWeights::all_ones(3), &DependenceParams::default(), &quiet_fit(1)).is_err());
}

#[test]
fn bootstrap_smoke_and_determinism() {
    let n = 15;
    let design = line_design(4, n);
    let mut data = simulate_gaussian_copula(&design, &DependenceParams { lambda0: -0.8, ..Default::default() }, n, 2).unwrap();
    data.set(0, 1, None);
    let w = PairWeights::all_ones(4);
    let spec = ModelSpec::numbered(7).unwrap();
    let fit = fit_dependence(&data, &design, &spec, &w, &DependenceParams::default(), &quiet_fit(1)).unwrap();
    let a = parametric_bootstrap(&fit, &data, &design, &w, 2, 77, &quiet_fit(1)).unwrap();
    let b = parametric_bootstrap(&fit, &data, &design, &w, 2, 77, &quiet_fit(1)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.replicates.len(), 2);
    let iv = &a.intervals[0];
    assert!(iv.lower.is_finite() && iv.lower <= iv.upper);
    // The missing cell is carried over: one fewer term than a full dataset.
    assert_eq!(a.replicates[0].n_terms, fit.n_terms);
    assert!(parametric_bootstrap(&fit, &data, &design, &w, 1, 77, &quiet_fit(1)).is_err());
}

#[test]
fn cv_scores_unroll_by_hand() {
    let n = 15;
    let design = line_design(3, n);
    let data = simulate_gaussian_copula(&design, &DependenceParams { lambda0: -0.8, ..Default::default() }, n, 8).unwrap();
    let w = PairWeights::all_ones(3);
    let spec = ModelSpec::numbered(7).unwrap();
    let opts = quiet_fit(1);
    let full = fit_dependence(&data, &design, &spec, &w, &DependenceParams::default(), &opts).unwrap();
    let cv = cv_logscore(&data, &design, &spec, &w, &full, &opts).unwrap();
    assert_eq!(cv.stations.len(), 3);
    for j0 in 0..3 {
        let keep: Vec<usize> = (0..3).filter(|&j| j != j0).collect();
        let refit = fit_dependence(
            &data.select_stations(&keep),
            &select_sites(&design, &keep),
            &spec,
            &w.select(&keep),
            &full.params,
            &opts,
        )
        .unwrap();
        let lam = refit.params.lambda0.exp();
        let mut hand = 0.0;
        for &j in &keep {
            let rho = (-design.distance(j0, j) / lam).exp();
            for k in 0..n {
                hand -= gaussian_pair_copula_logdensity(data.raw(k, j0), data.raw(k, j), rho);
            }
        }
        let s = cv.stations[j0].score.unwrap();
        assert!((s - hand).abs() < 1e-9 * hand.abs().max(1.0), "{s} vs {hand}");
        assert_eq!(cv.stations[j0].n_terms, 2 * n);
    }
    let total: f64 = cv.stations.iter().map(|s| s.score.unwrap()).sum();
    assert_eq!(cv.total, total);
}

#[test]
fn empirical_theta_examples() {
    let n = 4000;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(0.0001..0.9999);
            vec![u, u, rng.random_range(0.0001..0.9999)]
        })
        .collect();
    let data = MaximaDataset::from_rows(&rows, DataScale::Uniform).unwrap();
    assert_eq!(empirical_theta_d(&data, &[0, 1], 2.0).unwrap(), 1.0);
    let z = -1.0 / 0.5f64.ln();
    let t = empirical_theta_d(&data, &[0, 2], z).unwrap();
    // p = 1/4 under independence; delta-method SE of θ = −z log p̂.
    let se = z * (0.25f64 * 0.75 / n as f64).sqrt() / 0.25;
    assert!((t - 2.0).abs() < 3.0 * se, "{t}");
    let small = MaximaDataset::from_rows(&rows[..30], DataScale::Uniform).unwrap();
    assert!(matches!(empirical_theta_d(&small, &[0, 2], 1e-3), Err(crate::Error::ZeroEmpiricalProbability)));
    let tiny = MaximaDataset::from_rows(&rows[..10], DataScale::Uniform).unwrap();
    assert!(empirical_theta_d(&tiny, &[0, 1], 1.0).is_err());
    assert!((empirical_chi(&data, 0, 1, 0.9).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn copula_families_reject_non_uniform_data() {
    let design = line_design(2, 3);
    let data = MaximaDataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]], DataScale::Raw).unwrap();
    let spec = ModelSpec::new(Family::GaussianCopula, false, false);
    assert!(negative_log_pl(&DependenceParams::default(), &data, &design, &PairWeights::all_ones(2), &spec).is_err());
}
