//! Streaming estimator properties: exact unbiasedness over whole seed
//! spaces, the heavy-coordinate selector against a sorting oracle, and the
//! decider's space accounting.

use abcs_core::hashing::{exhaustive_sign_gram, SignFamily};
use abcs_core::linalg::{exact_bilinear, make_promise_instance, Label};
use abcs_core::rng::StreamRng;
use abcs_core::sketch::{
    capacity_for, copies_per_group, field_degree_for, instance_values,
    naive_bilinear_estimate, naive_bilinear_estimate_with_families, streaming_abc_decide,
    HeavyCoords, MOM_GROUPS,
};
use proptest::prelude::*;

/// Stream for the instance B = I, c = a = e1, emitted without materializing
/// the matrix.
fn identity_stream(n: usize) -> impl Iterator<Item = f64> {
    let c = (0..n).map(|j| if j == 0 { 1.0 } else { 0.0 });
    let b = (0..n * n).map(move |ij| if ij % n == ij / n { 1.0 } else { 0.0 });
    let a = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 });
    c.chain(b).chain(a)
}

#[test]
fn joint_seed_mean_is_exact_and_factorizes() {
    // average the estimator over the entire joint seed space (k = 2, m = 2:
    // 16 x 16 seeds) and compare against both the true bilinear form and
    // the gram-factorized closed form a^T G B G c
    let n = 4;
    let mut rng = StreamRng::new(201, 0);
    let inst = make_promise_instance(n, Label::Plus, &mut rng).unwrap();
    let vals: Vec<f64> = instance_values(&inst).collect();

    let mut total = 0.0;
    for sv in 0..16u64 {
        for sw in 0..16u64 {
            let v = SignFamily::from_seed_index(2, 2, sv).unwrap();
            let w = SignFamily::from_seed_index(2, 2, sw).unwrap();
            total +=
                naive_bilinear_estimate_with_families(n, vals.iter().copied(), &v, &w).unwrap();
        }
    }
    let joint_mean = total / 256.0;

    let truth = exact_bilinear(inst.a.as_slice(), &inst.b, inst.c.as_slice()).unwrap();
    assert!((joint_mean - truth).abs() < 1e-12, "mean={joint_mean} truth={truth}");

    let gram = exhaustive_sign_gram(2, 2, n).unwrap();
    let mut factored = 0.0;
    for i in 0..n {
        for ii in 0..n {
            for jj in 0..n {
                for j in 0..n {
                    factored += inst.a.as_slice()[i]
                        * gram[[i, ii]]
                        * inst.b.row(ii)[jj]
                        * gram[[jj, j]]
                        * inst.c.as_slice()[j];
                }
            }
        }
    }
    assert!((joint_mean - factored).abs() < 1e-12, "mean={joint_mean} factored={factored}");
}

#[test]
fn eight_wise_gram_is_identity_even_on_tiny_fields() {
    // the naive estimator's own independence level, on the smallest field
    let gram = exhaustive_sign_gram(8, 2, 2).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert_eq!(gram[[i, j]], if i == j { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn naive_variance_grows_linearly() {
    let n = 32;
    let draws = 20_000;
    let mut rng = StreamRng::new(202, 0);
    let inst = make_promise_instance(n, Label::Plus, &mut rng).unwrap();
    let vals: Vec<f64> = instance_values(&inst).collect();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..draws {
        let est = naive_bilinear_estimate(n, vals.iter().copied(), &mut rng).unwrap();
        sum += est;
        sumsq += est * est;
    }
    let mean = sum / draws as f64;
    let var = sumsq / draws as f64 - mean * mean;
    assert!((mean - 1.0).abs() < 0.2, "mean={mean}");
    assert!(var > 0.4 * n as f64 && var < 3.0 * n as f64, "var={var}");
}

#[test]
fn decider_is_exact_on_the_identity_instance() {
    let n = 256;
    let mut rng = StreamRng::new(203, 0);
    let out = streaming_abc_decide(n, identity_stream(n), 100.0, None, &mut rng).unwrap();
    assert_eq!(out.label, Label::Plus);
    assert!((out.estimate - 1.0).abs() < 1e-12, "estimate={}", out.estimate);
    assert!((out.alpha - 1.0).abs() < 1e-12);
    // space formulas: all mass sits on one retained coordinate
    let capacity = capacity_for(n, 100.0);
    assert_eq!(capacity, n);
    let copies = MOM_GROUPS * copies_per_group(1.0).unwrap();
    assert_eq!(out.space.capacity, capacity);
    assert_eq!(out.space.copies, copies);
    assert_eq!(out.space.stored_reals, capacity + 2 * copies + 2);
    let m = field_degree_for(n) as u64;
    assert_eq!(out.space.aux_bits, n as u64 + copies as u64 * 4 * m + capacity as u64 * 64);
}

#[test]
fn decider_labels_a_real_instance() {
    let n = 64;
    let mut rng = StreamRng::new(204, 0);
    let inst = make_promise_instance(n, Label::Minus, &mut rng).unwrap();
    let out =
        streaming_abc_decide(n, instance_values(&inst), 2.0, None, &mut rng).unwrap();
    assert_eq!(out.label, Label::Minus);
    // the median-of-means estimate targets label * alpha
    assert!(out.alpha > 0.0 && out.alpha <= 1.0 + 1e-12);
    let dev = (out.estimate - inst.label.value() * out.alpha).abs();
    assert!(dev < 0.5 * out.alpha, "estimate={} alpha={}", out.estimate, out.alpha);
}

#[test]
fn stream_length_is_enforced_both_ways() {
    let n = 8;
    let total = n * n + 2 * n;
    let mut rng = StreamRng::new(205, 0);
    let short = streaming_abc_decide(n, (0..total - 1).map(|_| 0.5), 1.0, None, &mut rng);
    assert!(short.is_err());
    let long = streaming_abc_decide(n, (0..total + 1).map(|_| 0.5), 1.0, None, &mut rng);
    assert!(long.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(192))]

    /// The streaming top-magnitude selector agrees with sorting the whole
    /// vector: same survivors, same tie-breaks, same normalized weights.
    #[test]
    fn heavy_selector_matches_sort_oracle(
        values in proptest::collection::vec(-100.0f64..100.0, 1..40),
        cap in 1usize..8,
    ) {
        let n = values.len();
        let capacity = cap.min(n);
        let mut hc = HeavyCoords::new(n, capacity).unwrap();
        for (i, v) in values.iter().enumerate() {
            hc.insert(i, *v).unwrap();
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| values[j].abs().total_cmp(&values[i].abs()).then(i.cmp(&j)));
        let mut kept: Vec<usize> = order[..capacity].to_vec();
        kept.sort_unstable();
        let l2: f64 = kept.iter().map(|&i| values[i] * values[i]).sum::<f64>().sqrt();
        match hc.into_sparse() {
            Ok((alpha, sparse)) => {
                prop_assert!(l2 > 0.0);
                prop_assert!((alpha - l2).abs() <= 1e-12 * l2.max(1.0));
                let got: Vec<usize> = sparse.entries().map(|(i, _)| i).collect();
                prop_assert_eq!(&got, &kept);
                for (i, weight) in sparse.entries() {
                    prop_assert!((weight - values[i] / l2).abs() < 1e-12);
                }
            }
            Err(_) => prop_assert!(l2 < 1e-6, "selector refused mass {l2}"),
        }
    }
}
