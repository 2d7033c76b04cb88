//! Distributional checks on the geometry samplers: orthogonal draws must be
//! rotation invariant and cap masses must match quadrature.

mod common;

use abcs_core::divergence::cap_mass;
use abcs_core::linalg::{
    cap_tail_lower_bound, dot, estimate_cap_mass, exact_bilinear, make_promise_instance,
    sample_haar_orthogonal, sample_on_equator, sample_unit_vector, Label, UnitVector,
};
use abcs_core::rng::StreamRng;

/// CDF of the first coordinate of a uniform point on the (n-1)-sphere.
fn first_coordinate_cdf(n: usize, t: f64) -> f64 {
    1.0 - cap_mass(n, t.clamp(-1.0, 1.0)).unwrap()
}

#[test]
fn orthogonal_first_column_is_uniform_on_sphere() {
    let n = 8;
    let draws = 1_500;
    let mut rng = StreamRng::new(101, 0);
    let u = sample_unit_vector(n, &mut rng).unwrap();
    let mut overlaps = Vec::with_capacity(draws);
    for _ in 0..draws {
        let b = sample_haar_orthogonal(n, &mut rng).unwrap();
        let e1 = UnitVector::standard_basis(n, 0).unwrap();
        let col = b.apply(e1.as_slice()).unwrap();
        overlaps.push(dot(u.as_slice(), &col));
    }
    let ks = common::ks_statistic(&mut overlaps, |t| first_coordinate_cdf(n, t));
    assert!(ks < common::ks_critical_1pct(draws), "ks={ks}");
}

#[test]
fn equator_samples_are_uniform_on_the_slice() {
    // relative to a fixed orthonormal direction, an equator point projects
    // like the first coordinate of a uniform point one dimension down
    let n = 9;
    let draws = 1_500;
    let mut rng = StreamRng::new(102, 0);
    let axis = UnitVector::standard_basis(n, 0).unwrap();
    let probe = UnitVector::standard_basis(n, 1).unwrap();
    let mut overlaps = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x = sample_on_equator(&axis, &mut rng).unwrap();
        assert!(dot(axis.as_slice(), x.as_slice()).abs() < 1e-12);
        overlaps.push(dot(probe.as_slice(), x.as_slice()));
    }
    let ks = common::ks_statistic(&mut overlaps, |t| first_coordinate_cdf(n - 1, t));
    assert!(ks < common::ks_critical_1pct(draws), "ks={ks}");
}

#[test]
fn uniform_vector_second_moment_is_one_over_n() {
    let n = 16;
    let draws = 4_000;
    let mut rng = StreamRng::new(103, 0);
    let mut mean = 0.0;
    let mut second = 0.0;
    for _ in 0..draws {
        let x = sample_unit_vector(n, &mut rng).unwrap();
        mean += x[0];
        second += x[0] * x[0];
    }
    mean /= draws as f64;
    second /= draws as f64;
    assert!(mean.abs() < 0.02, "mean={mean}");
    assert!((second - 1.0 / n as f64).abs() < 0.006, "second={second}");
}

#[test]
fn promise_instances_evaluate_to_their_label() {
    for n in [4, 16, 33] {
        for (s, label) in [(1u64, Label::Plus), (2, Label::Minus), (3, Label::Plus)] {
            let mut rng = StreamRng::new(100 + s, n as u64);
            let inst = make_promise_instance(n, label, &mut rng).unwrap();
            let v = exact_bilinear(inst.a.as_slice(), &inst.b, inst.c.as_slice()).unwrap();
            assert!((v - label.value()).abs() < 1e-10, "n={n} v={v}");
        }
    }
}

#[test]
fn cap_tail_fractions_match_quadrature_and_clear_the_bound() {
    // P(<v, w>^2 >= k/n) for independent uniform v, w, n = 100
    let n = 100;
    let trials = 200_000;
    let expected = [(1.0, 0.319748474139), (2.0, 0.15833990566), (4.0, 0.0449347252126)];
    for (i, (k, truth)) in expected.iter().enumerate() {
        let mut rng = StreamRng::new(104, i as u64);
        let est = estimate_cap_mass(n, *k, trials, &mut rng).unwrap();
        assert!(est.bound_applies);
        let frac = est.fraction();
        let sd = (truth * (1.0 - truth) / trials as f64).sqrt();
        assert!((frac - truth).abs() < 5.0 * sd, "k={k} frac={frac} truth={truth}");
        assert!(frac >= cap_tail_lower_bound(*k), "k={k} frac={frac}");
    }
}

#[test]
fn cap_tail_threshold_and_bound_range() {
    let mut rng = StreamRng::new(105, 0);
    let est = estimate_cap_mass(64, 4.0, 100, &mut rng).unwrap();
    assert_eq!(est.threshold, 4.0 / 64.0);
    assert_eq!(est.trials, 100);
    assert!(est.bound_applies);
    // the reference bound covers only k up to n/4
    let wide = estimate_cap_mass(64, 20.0, 10, &mut rng).unwrap();
    assert!(!wide.bound_applies);
}
