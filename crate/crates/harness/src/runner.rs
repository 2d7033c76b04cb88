//! Subcommand implementations. Every handler prints deterministic
//! `key: value` lines (floats at 12 significant digits) so identical
//! invocations produce identical bytes, and returns whether the run was
//! clean or tripped the degenerate-result flag.

use std::path::Path;

use abcs_core::divergence::{
    classical_inequality_suite, conditional_divergence_suite, equator_trial, renyi_mc,
    renyi_quadrature, BipartiteDensity, DensitySpec,
};
use abcs_core::hashing::{exhaustive_kwise_check, exhaustive_kwise_check_variant, FamilyVariant};
use abcs_core::linalg::{
    exact_bilinear, make_promise_instance, sample_haar_orthogonal, sample_unit_vector, Label,
    UnitVector,
};
use abcs_core::protocol::{
    run_protocol_approx, run_protocol_decision, tradeoff_sweep, Player, SharedRandomness,
    NET_CAP_DEFAULT,
};
use abcs_core::rng::StreamRng;
use abcs_core::sketch::streaming_abc_decide;

use crate::csvout::{format_float, write_csv, Field};
use crate::parallel::{run_indexed, thread_cap};
use crate::stream::StreamFile;
use crate::{HarnessError, Outcome, Result};

/// Orders used by the bipartite verification campaigns.
pub const BIPARTITE_ORDERS: [f64; 3] = [2.0, 4.0, 64.0];
/// Heavy-column threshold factor for the bipartite campaigns.
pub const BIPARTITE_ELL: f64 = 2.0;
const BIPARTITE_PARTITIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Family {
    /// Uniform density on a spherical cap around the first axis.
    Cap,
    /// Von Mises-Fisher density with mean direction on the first axis.
    Vmf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Mode {
    /// Promised-sign decision.
    #[default]
    Decide,
    /// Approximate the bilinear form for an arbitrary unit pair.
    Approx,
}

pub fn label_from_str(s: &str) -> Result<Label> {
    match s {
        "+1" | "1" | "plus" => Ok(Label::Plus),
        "-1" | "minus" => Ok(Label::Minus),
        other => Err(HarnessError::Usage(format!(
            "label must be +1 or -1, got {other:?}"
        ))),
    }
}

fn first_axis(n: usize) -> Result<UnitVector> {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    Ok(UnitVector::new(v)?)
}

/// Density named on the command line: cap by target measure, von
/// Mises-Fisher by concentration, both centered on the first axis.
pub fn build_density(family: Family, n: usize, cap_measure: f64, kappa: f64) -> Result<DensitySpec> {
    let center = first_axis(n)?;
    let spec = match family {
        Family::Cap => DensitySpec::cap_with_mass(center, cap_measure)?,
        Family::Vmf => DensitySpec::von_mises_fisher(center, kappa)?,
    };
    Ok(spec)
}

pub fn gen_instance(n: usize, label: Label, seed: u64, out: &Path) -> Result<Outcome> {
    let mut rng = StreamRng::new(seed, 0);
    let inst = make_promise_instance(n, label, &mut rng)?;
    let file = StreamFile::from_instance(&inst);
    file.write_to(out)?;
    println!("n: {n}");
    println!("label: {label}");
    println!("seed: {seed}");
    println!("values: {}", file.values().len());
    println!("out: {}", out.display());
    Ok(Outcome::Clean)
}

pub fn import_text(n: usize, input: &Path, out: &Path) -> Result<Outcome> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| HarnessError::Io(input.to_path_buf(), e))?;
    let file = StreamFile::from_text(n as u32, &text)?;
    file.write_to(out)?;
    println!("n: {n}");
    println!("values: {}", file.values().len());
    println!("out: {}", out.display());
    Ok(Outcome::Clean)
}

pub fn run_streaming(input: &Path, capacity_factor: f64, seed: u64) -> Result<Outcome> {
    let file = StreamFile::read_from(input)?;
    let mut rng = StreamRng::new(seed, 0);
    let outcome = streaming_abc_decide(
        file.n(),
        file.values().iter().copied(),
        capacity_factor,
        None,
        &mut rng,
    )?;
    println!("n: {}", file.n());
    println!("label: {}", outcome.label);
    println!("estimate: {}", format_float(outcome.estimate));
    println!("alpha: {}", format_float(outcome.alpha));
    println!("capacity: {}", outcome.space.capacity);
    println!("copies: {}", outcome.space.copies);
    println!("stored_reals: {}", outcome.space.stored_reals);
    println!("aux_bits: {}", outcome.space.aux_bits);
    Ok(Outcome::Clean)
}

pub fn run_protocol(n: usize, k: u32, eps: f64, seed: u64, mode: Mode) -> Result<Outcome> {
    let mut rng = StreamRng::new(seed, 0);
    match mode {
        Mode::Decide => {
            let truth = if seed % 2 == 0 { Label::Plus } else { Label::Minus };
            let inst = make_promise_instance(n, truth, &mut rng)?;
            let shared = SharedRandomness::new(rng.derive_seed());
            let run = run_protocol_decision(&inst, k, NET_CAP_DEFAULT, &shared)?;
            println!("mode: decide");
            println!("n: {n}");
            println!("k: {k}");
            println!("truth: {truth}");
            println!("label: {}", run.label);
            println!("correct: {}", run.label == truth);
            println!("estimate: {}", format_float(run.estimate));
            println!("charlie_bits: {}", run.transcript.bits_from(Player::Charlie));
            println!("bob_bits: {}", run.transcript.bits_from(Player::Bob));
            println!("total_bits: {}", run.transcript.total_bits());
        }
        Mode::Approx => {
            let c = sample_unit_vector(n, &mut rng)?;
            let b = sample_haar_orthogonal(n, &mut rng)?;
            let a = sample_unit_vector(n, &mut rng)?;
            let shared = SharedRandomness::new(rng.derive_seed());
            let exact = exact_bilinear(a.as_slice(), &b, c.as_slice())?;
            let run = run_protocol_approx(&a, &b, &c, k, eps, NET_CAP_DEFAULT, &shared)?;
            let err = (run.estimate - exact).abs();
            println!("mode: approx");
            println!("n: {n}");
            println!("k: {k}");
            println!("eps: {}", format_float(eps));
            println!("exact: {}", format_float(exact));
            println!("estimate: {}", format_float(run.estimate));
            println!("abs_error: {}", format_float(err));
            println!("within_eps: {}", err <= eps);
            println!("overlap: {}", format_float(run.overlap));
            println!("quantized_overlap: {}", format_float(run.quantized_overlap));
            println!("charlie_bits: {}", run.transcript.bits_from(Player::Charlie));
            println!("bob_bits: {}", run.transcript.bits_from(Player::Bob));
            println!("total_bits: {}", run.transcript.total_bits());
        }
    }
    Ok(Outcome::Clean)
}

pub fn parse_k_list(raw: &str) -> Result<Vec<u32>> {
    let ks: Vec<u32> = raw
        .split(',')
        .map(|s| s.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| HarnessError::Usage(format!("bad k list {raw:?}, expected e.g. 1,2,3")))?;
    if ks.is_empty() {
        return Err(HarnessError::Usage("k list is empty".into()));
    }
    Ok(ks)
}

pub fn sweep_tradeoff(n: usize, ks: &[u32], trials: usize, seed: u64, out: &Path) -> Result<Outcome> {
    let rows = tradeoff_sweep(n, ks, trials, NET_CAP_DEFAULT, seed)?;
    let csv_rows: Vec<Vec<Field>> = rows
        .iter()
        .map(|r| {
            vec![
                Field::UInt(r.k as u64),
                Field::UInt(r.net),
                Field::UInt(r.charlie_bits as u64),
                Field::UInt(r.bob_bits as u64),
                Field::UInt(r.trials as u64),
                Field::Float(r.error_rate()),
            ]
        })
        .collect();
    write_csv(
        out,
        &["k", "net_size", "charlie_bits", "bob_bits", "trials", "error_rate"],
        &csv_rows,
    )?;
    println!("n: {n}");
    println!(
        "k_list: {}",
        ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
    );
    println!("trials: {trials}");
    println!("rows: {}", rows.len());
    println!("out: {}", out.display());
    Ok(Outcome::Clean)
}

#[allow(clippy::too_many_arguments)]
pub fn divergence(
    family: Family,
    n: usize,
    alpha: f64,
    samples: usize,
    cap_measure: f64,
    kappa: f64,
    seed: u64,
) -> Result<Outcome> {
    let spec = build_density(family, n, cap_measure, kappa)?;
    let exact = renyi_quadrature(&spec, alpha)?;
    let mut rng = StreamRng::new(seed, 0);
    let est = renyi_mc(&spec, alpha, samples, &mut rng)?;
    println!("family: {}", family_name(family));
    println!("n: {n}");
    println!("alpha: {}", format_float(alpha));
    println!("samples: {samples}");
    println!("value: {}", format_float(est.value));
    println!("stderr: {}", format_float(est.stderr));
    println!("exact: {}", format_float(exact));
    Ok(Outcome::Clean)
}

fn family_name(family: Family) -> &'static str {
    match family {
        Family::Cap => "cap",
        Family::Vmf => "vmf",
    }
}

#[allow(clippy::too_many_arguments)]
pub fn equator(
    family: Family,
    n: usize,
    alpha: f64,
    threshold: f64,
    trials: usize,
    samples: usize,
    cap_measure: f64,
    kappa: f64,
    seed: u64,
    out: &Path,
) -> Result<Outcome> {
    if trials == 0 {
        return Err(HarnessError::Usage("--trials must be positive".into()));
    }
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(HarnessError::Usage(format!(
            "--t must be a positive finite threshold, got {threshold}"
        )));
    }
    if !(alpha >= 1.0) {
        return Err(HarnessError::Usage(format!(
            "tail experiments need order >= 1, got {alpha}"
        )));
    }
    let spec = build_density(family, n, cap_measure, kappa)?;
    let reference = renyi_quadrature(&spec, alpha)?;
    let reference_double = renyi_quadrature(&spec, 2.0 * alpha)?;
    let relative = alpha == 1.0;
    if relative && reference < 0.1 {
        return Err(HarnessError::Core(abcs_core::Error::Parameter(format!(
            "relative deviation needs reference divergence >= 0.1, got {reference}"
        ))));
    }

    let cap = thread_cap()?;
    let results = run_indexed(trials, cap, |i| {
        let mut rng = StreamRng::new(seed, i as u64);
        equator_trial(&spec, alpha, samples, &mut rng)
    });

    let mut rows = Vec::with_capacity(trials);
    let mut degenerate = 0usize;
    let mut exceedances = 0usize;
    for (i, res) in results.into_iter().enumerate() {
        let trial = res?;
        let restricted = trial.divergence_restricted.as_ref().map(|d| d.value);
        let exceeded = if trial.degenerate {
            degenerate += 1;
            true
        } else {
            let r = restricted.expect("non-degenerate trial has an estimate");
            let dev = if relative {
                (r - reference).abs() / reference
            } else {
                (r - reference).abs()
            };
            dev >= threshold
        };
        if exceeded {
            exceedances += 1;
        }
        rows.push(vec![
            Field::UInt(i as u64),
            Field::Float(trial.mass),
            restricted.map_or(Field::Empty, Field::Float),
            Field::Float(reference),
            Field::UInt(u64::from(trial.degenerate)),
        ]);
    }
    write_csv(
        out,
        &["trial", "mass", "d_alpha_restricted", "d_alpha_full", "degenerate"],
        &rows,
    )?;

    let exponent_context =
        n as f64 * threshold * (alpha - 1.0) / (alpha * (reference_double + 1.0));
    println!("family: {}", family_name(family));
    println!("n: {n}");
    println!("alpha: {}", format_float(alpha));
    println!("threshold: {}", format_float(threshold));
    println!("trials: {trials}");
    println!("samples: {samples}");
    println!("degenerate: {degenerate}");
    println!("exceedances: {exceedances}");
    println!("fraction: {}", format_float(exceedances as f64 / trials as f64));
    println!("reference: {}", format_float(reference));
    println!("reference_double_alpha: {}", format_float(reference_double));
    println!("exponent_context: {}", format_float(exponent_context));
    println!("out: {}", out.display());
    Ok(if degenerate > 0 { Outcome::Degenerate } else { Outcome::Clean })
}

pub fn verify_hash(k: u32, m: u32) -> Result<Outcome> {
    if k < 2 {
        return Err(HarnessError::Usage(
            "the zeroed-coefficient control needs k >= 2".into(),
        ));
    }
    let full = exhaustive_kwise_check(k, m)?;
    let control = exhaustive_kwise_check_variant(k, m, FamilyVariant::TopCoefficientZeroed)?;
    println!("k: {k}");
    println!("m: {m}");
    println!("tuples: {}", full.tuples_checked);
    println!("seeds_per_tuple: {}", full.seeds_per_tuple);
    println!("max_bias: {}", format_float(full.max_abs_bias));
    println!("control_bias: {}", format_float(control.max_abs_bias));
    println!("control_rejected: {}", !control.passed);
    let ok = full.passed && !control.passed;
    println!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(if ok { Outcome::Clean } else { Outcome::Degenerate })
}

pub fn verify_bipartite(size: usize, campaigns: usize, seed: u64) -> Result<Outcome> {
    if campaigns == 0 {
        return Err(HarnessError::Usage("--campaigns must be positive".into()));
    }
    let cap = thread_cap()?;
    let results = run_indexed(campaigns, cap, |i| -> Result<(usize, usize)> {
        let mut rng = StreamRng::new(seed, i as u64);
        let f = BipartiteDensity::sample_positive(size, size, &mut rng)?;
        let g = BipartiteDensity::sample_positive(size, size, &mut rng)?;
        let mut conditional_violations = 0usize;
        for alpha in BIPARTITE_ORDERS {
            let report = conditional_divergence_suite(&f, &g, alpha, BIPARTITE_ELL)?;
            if !report.passed {
                conditional_violations += 1;
            }
        }
        let classical =
            classical_inequality_suite(f.joint(), g.joint(), BIPARTITE_PARTITIONS, &mut rng)?;
        let classical_violations = usize::from(!classical.passed);
        Ok((conditional_violations, classical_violations))
    });

    let mut conditional_violations = 0usize;
    let mut classical_violations = 0usize;
    for res in results {
        let (cond, class) = res?;
        conditional_violations += cond;
        classical_violations += class;
    }
    println!("size: {size}");
    println!("campaigns: {campaigns}");
    println!(
        "orders: {}",
        BIPARTITE_ORDERS
            .iter()
            .map(|a| format!("{a}"))
            .collect::<Vec<_>>()
            .join(",")
    );
    println!("conditional_checks: {}", campaigns * BIPARTITE_ORDERS.len());
    println!("conditional_violations: {conditional_violations}");
    println!("classical_checks: {campaigns}");
    println!("classical_violations: {classical_violations}");
    let ok = conditional_violations == 0 && classical_violations == 0;
    println!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(if ok { Outcome::Clean } else { Outcome::Degenerate })
}
