//! Divergence laboratory properties: samplers against quadrature laws,
//! slice estimates against the dimension-reduction oracle, and the discrete
//! inequalities on random and structured tables.

mod common;

use abcs_core::divergence::{
    cap_height_for_mass, classical_inequality_suite, conditional_divergence_suite,
    discrete_renyi, equator_trial, renormalization_shift_bound, renyi_mc, renyi_quadrature,
    sample_cap, sample_vmf, total_variation, vmf_equator_mass, BipartiteDensity, DensitySpec,
};
use abcs_core::linalg::{dot, UnitVector};
use abcs_core::numeric::log_sphere_weight_integral;
use abcs_core::rng::StreamRng;

fn e1(n: usize) -> UnitVector {
    UnitVector::standard_basis(n, 0).unwrap()
}

#[test]
fn cap_sampler_passes_a_ks_test_on_the_first_coordinate() {
    // the cap coordinate has density (1 - t^2)^((n-3)/2) on [h, 1]
    let n = 6;
    let h = 0.2;
    let draws = 1_500;
    let mut rng = StreamRng::new(401, 0);
    let center = e1(n);
    let mut ts = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x = sample_cap(&center, h, &mut rng).unwrap();
        ts.push(x[0]);
    }
    let hi = std::f64::consts::FRAC_PI_2;
    let total = log_sphere_weight_integral(n, 0.0, h.asin(), hi);
    let cdf = |t: f64| {
        let t = t.clamp(h, 1.0);
        (log_sphere_weight_integral(n, 0.0, h.asin(), t.asin()) - total).exp()
    };
    let ks = common::ks_statistic(&mut ts, cdf);
    assert!(ks < common::ks_critical_1pct(draws), "ks={ks}");
}

#[test]
fn directional_sampler_passes_a_ks_test_on_the_first_coordinate() {
    let n = 8;
    let kappa = 2.0;
    let draws = 1_500;
    let mut rng = StreamRng::new(402, 0);
    let mu = e1(n);
    let mut ts = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x = sample_vmf(&mu, kappa, &mut rng).unwrap();
        ts.push(x[0]);
    }
    let hi = std::f64::consts::FRAC_PI_2;
    let total = log_sphere_weight_integral(n, kappa, -hi, hi);
    let cdf = |t: f64| {
        let t = t.clamp(-1.0, 1.0);
        (log_sphere_weight_integral(n, kappa, -hi, t.asin()) - total).exp()
    };
    let ks = common::ks_statistic(&mut ts, cdf);
    assert!(ks < common::ks_critical_1pct(draws), "ks={ks}");
}

#[test]
fn quarter_cap_divergence_is_ln_four_by_monte_carlo() {
    let spec = DensitySpec::cap_with_mass(e1(16), 0.25).unwrap();
    let target = 4.0f64.ln();
    for (i, alpha) in [1.0, 2.0, 4.0].into_iter().enumerate() {
        let mut rng = StreamRng::new(403, i as u64);
        let est = renyi_mc(&spec, alpha, 20_000, &mut rng).unwrap();
        let tol = (4.0 * est.stderr).max(0.05 * target);
        assert!((est.value - target).abs() < tol, "alpha={alpha} value={}", est.value);
    }
}

#[test]
fn directional_divergences_match_frozen_references() {
    // quadrature pinned against an independent arbitrary-precision oracle
    let spec = DensitySpec::von_mises_fisher(e1(32), 2.0).unwrap();
    assert!((renyi_quadrature(&spec, 2.0).unwrap() - 0.123423702352525).abs() < 1e-9);
    assert!((renyi_quadrature(&spec, 4.0).unwrap() - 0.241009704963713).abs() < 1e-9);
    assert!((renyi_quadrature(&spec, 1.0).unwrap() - 0.0621579673451453).abs() < 1e-7);
    let mut rng = StreamRng::new(404, 0);
    let est = renyi_mc(&spec, 2.0, 40_000, &mut rng).unwrap();
    assert!((est.value - 0.123423702352525).abs() < 4.0 * est.stderr + 0.01);
}

#[test]
fn slice_masses_match_the_dimension_reduction_oracle() {
    let n = 16;
    let kappa = 2.0;
    let spec = DensitySpec::von_mises_fisher(e1(n), kappa).unwrap();
    let mut rng = StreamRng::new(405, 0);
    let trials = 40;
    let mut mean = 0.0;
    for _ in 0..trials {
        let trial = equator_trial(&spec, 2.0, 2_000, &mut rng).unwrap();
        assert!(!trial.degenerate);
        let overlap = dot(e1(n).as_slice(), trial.normal.as_slice());
        let exact = vmf_equator_mass(n, kappa, overlap).unwrap();
        assert!(
            (trial.mass - exact).abs() < 6.0 * trial.mass_stderr,
            "mass={} exact={exact}",
            trial.mass
        );
        mean += trial.mass;
    }
    mean /= trials as f64;
    // the slice mass integrates to one over the random normal
    assert!((mean - 1.0).abs() < 0.05, "mean={mean}");
}

#[test]
fn renormalization_shift_obeys_the_mass_bound() {
    let spec = DensitySpec::von_mises_fisher(e1(16), 2.0).unwrap();
    for (i, alpha) in [2.0, 4.0].into_iter().enumerate() {
        let mut rng = StreamRng::new(406, i as u64);
        for _ in 0..30 {
            let trial = equator_trial(&spec, alpha, 1_000, &mut rng).unwrap();
            if trial.degenerate || trial.mass < 0.5 {
                continue;
            }
            let shift =
                trial.divergence_unnormalized.unwrap() - trial.divergence_restricted.unwrap().value;
            let bound = renormalization_shift_bound(alpha, trial.mass).unwrap();
            assert!(shift.abs() <= bound + 1e-12, "shift={shift} bound={bound}");
        }
    }
}

#[test]
fn pinsker_bound_matches_frozen_value_in_the_tight_case() {
    // p = (0, 1), q = (1/2, 1/2): tv = 1/2, KL = ln 2
    let tv = total_variation(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
    assert!((tv - 0.5).abs() < 1e-15);
    let kl = discrete_renyi(&[0.0, 1.0], &[0.5, 0.5], 1.0).unwrap();
    let bound = (kl / 2.0).sqrt();
    assert!((bound - 0.588705011258).abs() < 1e-10);
    assert!(tv <= bound);
}

#[test]
fn classical_suite_passes_on_random_pairs() {
    let mut rng = StreamRng::new(407, 0);
    for _ in 0..50 {
        let p = random_distribution(8, &mut rng);
        let q = random_distribution(8, &mut rng);
        let report = classical_inequality_suite(&p, &q, 20, &mut rng).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.comparisons, 80);
    }
}

#[test]
fn conditional_suite_passes_on_random_pairs_at_all_orders() {
    let mut rng = StreamRng::new(408, 0);
    for trial in 0..100 {
        let f = BipartiteDensity::sample_positive(4, 4, &mut rng).unwrap();
        let g = BipartiteDensity::sample_positive(4, 4, &mut rng).unwrap();
        for alpha in [2.0, 4.0, 64.0] {
            let report = conditional_divergence_suite(&f, &g, alpha, 2.0).unwrap();
            assert!(report.passed, "trial {trial} alpha {alpha}: {report:?}");
            assert_eq!(report.subsets_checked, 15);
        }
    }
}

#[test]
fn conditional_mean_is_tight_for_product_with_matching_marginal() {
    // f = u x v against g = u' x v with the same second marginal: the
    // average conditional divergence equals the joint divergence exactly
    let fa = [0.7, 0.3];
    let ga = [0.4, 0.6];
    let b = [0.25, 0.75];
    let f_table: Vec<f64> = fa.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
    let g_table: Vec<f64> = ga.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
    let f = BipartiteDensity::new(2, 2, f_table).unwrap();
    let g = BipartiteDensity::new(2, 2, g_table).unwrap();
    let report = conditional_divergence_suite(&f, &g, 2.0, 1.5).unwrap();
    assert!(report.passed, "{report:?}");
    assert!(
        (report.conditional_mean - report.joint).abs() < 1e-12,
        "mean={} joint={}",
        report.conditional_mean,
        report.joint
    );
}

#[test]
fn quarter_mass_height_matches_frozen_value() {
    let h = cap_height_for_mass(16, 0.25).unwrap();
    assert!((h - 0.175690327927015).abs() < 1e-8);
}

fn random_distribution(len: usize, rng: &mut StreamRng) -> Vec<f64> {
    use rand::Rng;
    let mut p: Vec<f64> = (0..len).map(|_| rng.gen_range(0.01..1.0)).collect();
    let sum: f64 = p.iter().sum();
    for v in &mut p {
        *v /= sum;
    }
    p
}
