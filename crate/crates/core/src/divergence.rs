//! Renyi divergences for spherical and discrete densities.
//!
//! Continuous densities live on the unit sphere and are expressed relative to
//! the uniform probability measure, so a cap of mass m has divergence
//! ln(1/m) from uniform at every order. Reference values come from adaptive
//! quadrature over the polar angle; Monte Carlo estimators mirror them and
//! extend to hyperplane slices that quadrature does not reach directly.

use crate::linalg::{dot, rotate_e1_to, sample_on_equator, sample_unit_vector, UnitVector};
use crate::numeric::{bisect, log_sphere_weight_integral, mean_stderr};
use crate::rng::StreamRng;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1};

/// Largest order accepted by the Monte Carlo estimators; higher powers of the
/// density make the uniform-proposal second moment blow up.
pub const MAX_MC_ORDER: f64 = 8.0;

/// Orders exercised by the classical inequality suite.
pub const CLASSICAL_ALPHAS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Additive slack for exact inequality checks.
pub const INEQUALITY_SLACK: f64 = 1e-12;

/// Largest side of a bipartite table; subset checks enumerate 2^cols sets.
pub const MAX_BIPARTITE_SIDE: usize = 12;

const DIST_TOL: f64 = 1e-9;
const MIN_RELATIVE_REFERENCE: f64 = 0.1;
const MAX_REJECTION_ROUNDS: usize = 1_000_000;
const DEGENERATE_AXIS_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// density specifications
// ---------------------------------------------------------------------------

/// Shape of a reference density.
#[derive(Clone, Debug)]
pub enum DensityKind {
    /// Uniform density on the cap `{x : <center, x> >= height}`.
    CapUniform { center: UnitVector, height: f64 },
    /// Density proportional to `exp(kappa * <mu, x>)`.
    VonMisesFisher { mu: UnitVector, kappa: f64 },
    /// Probability table over finitely many atoms.
    DiscreteTable { probabilities: Vec<f64> },
}

/// A density together with its cached log prefactor, so evaluation never
/// repeats quadrature.
#[derive(Clone, Debug)]
pub struct DensitySpec {
    kind: DensityKind,
    log_norm: f64,
}

impl DensitySpec {
    /// Uniform density on the cap of the given height, `height` in [-1, 1).
    pub fn cap_uniform(center: UnitVector, height: f64) -> Result<DensitySpec> {
        if center.dim() < 2 {
            return Err(Error::Parameter("cap needs ambient dimension >= 2".into()));
        }
        if !height.is_finite() || !(-1.0..1.0).contains(&height) {
            return Err(Error::Parameter(format!("cap height {height} outside [-1, 1)")));
        }
        let mass = cap_mass(center.dim(), height)?;
        if mass <= 0.0 {
            return Err(Error::Degenerate(format!("cap of height {height} has zero mass")));
        }
        Ok(DensitySpec {
            kind: DensityKind::CapUniform { center, height },
            log_norm: -mass.ln(),
        })
    }

    /// Cap whose uniform mass equals `mass`, `mass` in (0, 1].
    pub fn cap_with_mass(center: UnitVector, mass: f64) -> Result<DensitySpec> {
        if !(mass > 0.0 && mass <= 1.0) {
            return Err(Error::Parameter(format!("cap mass {mass} outside (0, 1]")));
        }
        let height = cap_height_for_mass(center.dim(), mass)?;
        DensitySpec::cap_uniform(center, height)
    }

    /// Directional density `exp(kappa * <mu, x>) / Z`. The concentration is
    /// capped at n/4 so slice experiments keep bounded density powers.
    pub fn von_mises_fisher(mu: UnitVector, kappa: f64) -> Result<DensitySpec> {
        let n = mu.dim();
        if n < 2 {
            return Err(Error::Parameter("directional density needs dimension >= 2".into()));
        }
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(Error::Parameter(format!("concentration {kappa} must be finite and >= 0")));
        }
        if kappa > n as f64 / 4.0 {
            return Err(Error::Parameter(format!(
                "concentration {kappa} exceeds ambient/4 = {}",
                n as f64 / 4.0
            )));
        }
        let log_z = vmf_log_normalizer(n, kappa)?;
        Ok(DensitySpec {
            kind: DensityKind::VonMisesFisher { mu, kappa },
            log_norm: -log_z,
        })
    }

    /// Finite probability table; atom masses must sum to 1 within 1e-9.
    pub fn discrete(probabilities: Vec<f64>) -> Result<DensitySpec> {
        validate_distribution(&probabilities)?;
        Ok(DensitySpec {
            kind: DensityKind::DiscreteTable { probabilities },
            log_norm: 0.0,
        })
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// Sphere dimension for the continuous shapes, `None` for tables.
    pub fn ambient_dim(&self) -> Option<usize> {
        match &self.kind {
            DensityKind::CapUniform { center, .. } => Some(center.dim()),
            DensityKind::VonMisesFisher { mu, .. } => Some(mu.dim()),
            DensityKind::DiscreteTable { .. } => None,
        }
    }

    /// Log density relative to the uniform probability measure; negative
    /// infinity outside the support.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        match &self.kind {
            DensityKind::CapUniform { center, height } => {
                check_dim(center.dim(), x.len())?;
                if dot(center.as_slice(), x) >= *height {
                    Ok(self.log_norm)
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            }
            DensityKind::VonMisesFisher { mu, kappa } => {
                check_dim(mu.dim(), x.len())?;
                Ok(kappa * dot(mu.as_slice(), x) + self.log_norm)
            }
            DensityKind::DiscreteTable { .. } => Err(Error::Unsupported(
                "pointwise evaluation applies to spherical densities only".into(),
            )),
        }
    }

    /// Density relative to the uniform probability measure.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.log_density(x).map(f64::exp)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

// ---------------------------------------------------------------------------
// quadrature references
// ---------------------------------------------------------------------------

fn log_sphere_total(n: usize) -> f64 {
    log_sphere_weight_integral(n, 0.0, -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)
}

/// Uniform mass of the cap `{x1 >= height}` on the (n-1)-sphere.
pub fn cap_mass(n: usize, height: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Parameter("cap mass needs ambient dimension >= 2".into()));
    }
    if !height.is_finite() {
        return Err(Error::Parameter(format!("cap height {height} must be finite")));
    }
    if height >= 1.0 {
        return Ok(0.0);
    }
    if height <= -1.0 {
        return Ok(1.0);
    }
    let lo = height.asin();
    let hi = std::f64::consts::FRAC_PI_2;
    Ok((log_sphere_weight_integral(n, 0.0, lo, hi) - log_sphere_total(n)).exp())
}

/// Height whose cap carries the requested uniform mass, `mass` in (0, 1].
pub fn cap_height_for_mass(n: usize, mass: f64) -> Result<f64> {
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(Error::Parameter(format!("cap mass {mass} outside (0, 1]")));
    }
    if mass == 1.0 {
        return Ok(-1.0);
    }
    bisect(|h| cap_mass(n, h).expect("cap mass on [-1, 1]") - mass, -1.0, 1.0, 1e-13)
}

/// Log of `E_uniform[exp(kappa * x1)]` on the (n-1)-sphere.
pub fn vmf_log_normalizer(n: usize, kappa: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Parameter("normalizer needs ambient dimension >= 2".into()));
    }
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::Parameter(format!("concentration {kappa} must be finite and >= 0")));
    }
    let hi = std::f64::consts::FRAC_PI_2;
    Ok(log_sphere_weight_integral(n, kappa, -hi, hi) - log_sphere_total(n))
}

/// Mean first coordinate under the directional density, computed as the
/// derivative of the log normalizer by Richardson extrapolated differences.
/// The normalizer is even in the concentration, which keeps the stencil valid
/// near zero.
pub fn vmf_mean_overlap(n: usize, kappa: f64) -> Result<f64> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::Parameter(format!("concentration {kappa} must be finite and >= 0")));
    }
    if kappa == 0.0 {
        return Ok(0.0);
    }
    let l = |x: f64| vmf_log_normalizer(n, x.abs());
    let h = 1e-3 * (1.0 + kappa);
    let d1 = (l(kappa + h)? - l(kappa - h)?) / (2.0 * h);
    let d2 = (l(kappa + 0.5 * h)? - l(kappa - 0.5 * h)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Mass that the directional density assigns, on average, to the equator of a
/// unit vector whose overlap with the mean direction is `axis_overlap`; the
/// slice of the density is again directional, one dimension down, with
/// concentration scaled by the tangential part of the mean direction.
pub fn vmf_equator_mass(n: usize, kappa: f64, axis_overlap: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Parameter("equator slices need ambient dimension >= 3".into()));
    }
    if !(-1.0..=1.0).contains(&axis_overlap) {
        return Err(Error::Parameter(format!("overlap {axis_overlap} outside [-1, 1]")));
    }
    let tangent = (1.0 - axis_overlap * axis_overlap).max(0.0).sqrt();
    Ok((vmf_log_normalizer(n - 1, kappa * tangent)? - vmf_log_normalizer(n, kappa)?).exp())
}

/// Exact divergence of the density from the uniform measure at the given
/// order; `f64::INFINITY` selects the max-log-ratio order.
pub fn renyi_quadrature(spec: &DensitySpec, alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::Parameter(format!("order {alpha} must be >= 0")));
    }
    match &spec.kind {
        DensityKind::CapUniform { .. } => Ok(spec.log_norm),
        DensityKind::VonMisesFisher { mu, kappa } => {
            let n = mu.dim();
            let l1 = vmf_log_normalizer(n, *kappa)?;
            if alpha == f64::INFINITY {
                return Ok(kappa - l1);
            }
            if alpha == 1.0 {
                return Ok(kappa * vmf_mean_overlap(n, *kappa)? - l1);
            }
            let la = vmf_log_normalizer(n, alpha * kappa)?;
            Ok((la - alpha * l1) / (alpha - 1.0))
        }
        DensityKind::DiscreteTable { probabilities } => {
            let k = probabilities.len();
            let uniform = vec![1.0 / k as f64; k];
            discrete_renyi(probabilities, &uniform, alpha)
        }
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo estimation
// ---------------------------------------------------------------------------

/// A Monte Carlo divergence estimate with its delta-method standard error.
#[derive(Clone, Copy, Debug)]
pub struct DivergenceEstimate {
    pub alpha: f64,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn check_mc_order(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 || alpha > MAX_MC_ORDER {
        return Err(Error::Parameter(format!(
            "Monte Carlo order {alpha} outside [0, {MAX_MC_ORDER}]"
        )));
    }
    Ok(())
}

/// Divergence from the power mean of sampled density values; `vals` holds
/// `f(x)^alpha` for proposal points x.
fn power_mean_divergence(alpha: f64, vals: &[f64]) -> Result<DivergenceEstimate> {
    let (mean, se) = mean_stderr(vals);
    if !(mean > 0.0) {
        return Err(Error::Degenerate("every sampled density power was zero".into()));
    }
    Ok(DivergenceEstimate {
        alpha,
        value: mean.ln() / (alpha - 1.0),
        stderr: se / (mean * (alpha - 1.0).abs()),
        samples: vals.len(),
    })
}

/// Monte Carlo divergence from uniform. Orders other than 1 average
/// `f(x)^alpha` over the uniform proposal; order 1 averages `ln f(x)` over
/// points drawn from the density itself.
pub fn renyi_mc(
    spec: &DensitySpec,
    alpha: f64,
    samples: usize,
    rng: &mut StreamRng,
) -> Result<DivergenceEstimate> {
    check_mc_order(alpha)?;
    if samples < 2 {
        return Err(Error::Parameter("estimation needs at least 2 samples".into()));
    }
    if alpha == 1.0 {
        let mut logs = Vec::with_capacity(samples);
        match &spec.kind {
            DensityKind::DiscreteTable { probabilities } => {
                let k = probabilities.len() as f64;
                for _ in 0..samples {
                    let i = sample_discrete_index(probabilities, rng);
                    logs.push((probabilities[i] * k).ln());
                }
            }
            _ => {
                for _ in 0..samples {
                    let x = sample_from_density(spec, rng)?;
                    logs.push(spec.log_density(x.as_slice())?);
                }
            }
        }
        let (mean, se) = mean_stderr(&logs);
        if !mean.is_finite() {
            return Err(Error::Degenerate("log density diverged under its own samples".into()));
        }
        return Ok(DivergenceEstimate { alpha, value: mean, stderr: se, samples });
    }
    let mut powers = Vec::with_capacity(samples);
    match &spec.kind {
        DensityKind::DiscreteTable { probabilities } => {
            let k = probabilities.len();
            for _ in 0..samples {
                let i = rng.gen_range(0..k);
                powers.push((probabilities[i] * k as f64).powf(alpha));
            }
        }
        _ => {
            let n = spec.ambient_dim().expect("continuous kinds carry a dimension");
            for _ in 0..samples {
                let x = sample_unit_vector(n, rng)?;
                powers.push(spec.density(x.as_slice())?.powf(alpha));
            }
        }
    }
    power_mean_divergence(alpha, &powers)
}

/// Mean and standard error of the density under its proposal measure; the
/// expectation is exactly 1 for every valid density.
pub fn density_total_mass_mc(
    spec: &DensitySpec,
    samples: usize,
    rng: &mut StreamRng,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::Parameter("estimation needs at least 2 samples".into()));
    }
    let mut vals = Vec::with_capacity(samples);
    match &spec.kind {
        DensityKind::DiscreteTable { probabilities } => {
            let k = probabilities.len();
            for _ in 0..samples {
                let i = rng.gen_range(0..k);
                vals.push(probabilities[i] * k as f64);
            }
        }
        _ => {
            let n = spec.ambient_dim().expect("continuous kinds carry a dimension");
            for _ in 0..samples {
                let x = sample_unit_vector(n, rng)?;
                vals.push(spec.density(x.as_slice())?);
            }
        }
    }
    Ok(mean_stderr(&vals))
}

// ---------------------------------------------------------------------------
// samplers
// ---------------------------------------------------------------------------

fn sample_discrete_index(probabilities: &[f64], rng: &mut StreamRng) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, p) in probabilities.iter().enumerate() {
        if *p > 0.0 {
            last_positive = i;
        }
        cum += p;
        if u < cum {
            return i;
        }
    }
    last_positive
}

/// First coordinate of a uniform cap point, density on [height, 1]
/// proportional to (1 - t^2)^((n-3)/2), by rejection against the flat
/// envelope through the mode.
fn sample_cap_coordinate(n: usize, height: f64, rng: &mut StreamRng) -> Result<f64> {
    let e = 0.5 * (n as f64 - 3.0);
    if e == 0.0 {
        return Ok(rng.gen_range(height..1.0));
    }
    let mode = height.max(0.0);
    let log_env = e * (1.0 - mode * mode).ln();
    for _ in 0..MAX_REJECTION_ROUNDS {
        let t = rng.gen_range(height..1.0);
        let u: f64 = 1.0 - rng.gen::<f64>();
        if u.ln() <= e * (1.0 - t * t).ln() - log_env {
            return Ok(t);
        }
    }
    Err(Error::Degenerate("cap coordinate sampler failed to accept".into()))
}

/// Uniform point on the cap `{x : <center, x> >= height}`.
pub fn sample_cap(center: &UnitVector, height: f64, rng: &mut StreamRng) -> Result<UnitVector> {
    let n = center.dim();
    if n < 2 {
        return Err(Error::Parameter("cap sampling needs ambient dimension >= 2".into()));
    }
    if !height.is_finite() || !(-1.0..1.0).contains(&height) {
        return Err(Error::Parameter(format!("cap height {height} outside [-1, 1)")));
    }
    let local = if n == 2 {
        let phi0 = height.acos();
        let phi = rng.gen_range(-phi0..=phi0);
        vec![phi.cos(), phi.sin()]
    } else {
        let t = sample_cap_coordinate(n, height, rng)?;
        let v = sample_unit_vector(n - 1, rng)?;
        let r = (1.0 - t * t).max(0.0).sqrt();
        let mut loc = Vec::with_capacity(n);
        loc.push(t);
        loc.extend(v.as_slice().iter().map(|vi| r * vi));
        loc
    };
    UnitVector::new(rotate_e1_to(center.as_slice(), &local)?)
}

/// Directional sample with mean direction `mu`; rejection sampler on the
/// first coordinate with a rational envelope, exact for every kappa >= 0.
pub fn sample_vmf(mu: &UnitVector, kappa: f64, rng: &mut StreamRng) -> Result<UnitVector> {
    let n = mu.dim();
    if n < 2 {
        return Err(Error::Parameter("directional sampling needs dimension >= 2".into()));
    }
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::Parameter(format!("concentration {kappa} must be finite and >= 0")));
    }
    let d = (n - 1) as f64;
    let b = (-2.0 * kappa + (4.0 * kappa * kappa + d * d).sqrt()) / d;
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + d * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * d, 0.5 * d)
        .map_err(|e| Error::Parameter(format!("envelope shape: {e}")))?;
    let mut w = f64::NAN;
    for _ in 0..MAX_REJECTION_ROUNDS {
        let z: f64 = beta.sample(rng);
        let cand = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = 1.0 - rng.gen::<f64>();
        if kappa * cand + d * (1.0 - x0 * cand).ln() - c >= u.ln() {
            w = cand;
            break;
        }
    }
    if w.is_nan() {
        return Err(Error::Degenerate("directional sampler failed to accept".into()));
    }
    let v = sample_unit_vector(n - 1, rng)?;
    let r = (1.0 - w * w).max(0.0).sqrt();
    let mut local = Vec::with_capacity(n);
    local.push(w);
    local.extend(v.as_slice().iter().map(|vi| r * vi));
    UnitVector::new(rotate_e1_to(mu.as_slice(), &local)?)
}

/// Draw from a continuous density; tables are rejected.
pub fn sample_from_density(spec: &DensitySpec, rng: &mut StreamRng) -> Result<UnitVector> {
    match &spec.kind {
        DensityKind::CapUniform { center, height } => sample_cap(center, *height, rng),
        DensityKind::VonMisesFisher { mu, kappa } => sample_vmf(mu, *kappa, rng),
        DensityKind::DiscreteTable { .. } => Err(Error::Unsupported(
            "spherical sampling applies to spherical densities only".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// equator slices
// ---------------------------------------------------------------------------

/// One slice experiment: a random equator, the empirical mass the density
/// leaves on it, and divergence estimates for the renormalized slice.
#[derive(Clone, Debug)]
pub struct EquatorTrial {
    /// Unit normal of the slicing hyperplane.
    pub normal: UnitVector,
    /// Mean density over the equator; expectation over the normal is 1.
    pub mass: f64,
    pub mass_stderr: f64,
    /// Divergence of the mass-renormalized slice from uniform on the equator.
    pub divergence_restricted: Option<DivergenceEstimate>,
    /// Same power mean without renormalization; `None` at order 1.
    pub divergence_unnormalized: Option<f64>,
    /// Set when the slice misses the support or the mass estimate is zero.
    pub degenerate: bool,
}

/// Upper bound on the renormalization shift of the order-alpha divergence
/// when the slice mass estimate is at least 1/2. The exact shift is
/// `alpha/(alpha-1) * |ln mass|`, and `|ln m| <= 2|m - 1|` on [1/2, inf).
pub fn renormalization_shift_bound(alpha: f64, mass: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::Parameter(format!("shift bound needs order > 1, got {alpha}")));
    }
    if !(mass >= 0.5) {
        return Err(Error::Parameter(format!("shift bound needs mass >= 1/2, got {mass}")));
    }
    Ok(2.0 * alpha / (alpha - 1.0) * (mass - 1.0).abs())
}

enum SliceShape {
    Empty,
    Full,
    Cap { axis: Vec<f64>, height: f64 },
}

/// Intersection of a cap with the equator of `normal`, described in the
/// equator's own coordinates (the last n-1 entries of the reflected frame).
fn cap_slice(center: &UnitVector, height: f64, normal: &UnitVector) -> Result<SliceShape> {
    let image = rotate_e1_to(normal.as_slice(), center.as_slice())?;
    let tail = &image[1..];
    let w = dot(tail, tail).sqrt();
    if w < DEGENERATE_AXIS_TOL {
        return Ok(if height <= 0.0 { SliceShape::Full } else { SliceShape::Empty });
    }
    let local = height / w;
    if local <= -1.0 {
        Ok(SliceShape::Full)
    } else if local >= 1.0 {
        Ok(SliceShape::Empty)
    } else {
        Ok(SliceShape::Cap {
            axis: tail.iter().map(|t| t / w).collect(),
            height: local,
        })
    }
}

/// Lift a point of the (n-2)-sphere into the equator of `normal`.
fn embed_in_equator(normal: &UnitVector, v: &[f64]) -> Result<UnitVector> {
    let mut z = Vec::with_capacity(v.len() + 1);
    z.push(0.0);
    z.extend_from_slice(v);
    UnitVector::new(rotate_e1_to(normal.as_slice(), &z)?)
}

/// Slice the density along a uniformly random equator and estimate the
/// divergence of the renormalized restriction from uniform on that equator.
/// Orders other than 1 reuse one uniform equator sample set for the mass and
/// both divergences; order 1 additionally draws from the restriction itself.
pub fn equator_trial(
    spec: &DensitySpec,
    alpha: f64,
    samples: usize,
    rng: &mut StreamRng,
) -> Result<EquatorTrial> {
    let n = spec
        .ambient_dim()
        .ok_or_else(|| Error::Unsupported("slice experiments need a spherical density".into()))?;
    if n < 3 {
        return Err(Error::Parameter("slice experiments need ambient dimension >= 3".into()));
    }
    check_mc_order(alpha)?;
    if samples < 2 {
        return Err(Error::Parameter("estimation needs at least 2 samples".into()));
    }
    let normal = sample_unit_vector(n, rng)?;
    let mut fs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = sample_on_equator(&normal, rng)?;
        fs.push(spec.density(x.as_slice())?);
    }
    let (mass, mass_stderr) = mean_stderr(&fs);
    if alpha == 1.0 {
        return equator_trial_kl(spec, samples, normal, mass, mass_stderr, rng);
    }
    if !(mass > 0.0) {
        return Ok(EquatorTrial {
            normal,
            mass,
            mass_stderr,
            divergence_restricted: None,
            divergence_unnormalized: None,
            degenerate: true,
        });
    }
    let powers: Vec<f64> = fs.iter().map(|f| f.powf(alpha)).collect();
    let unnormalized = power_mean_divergence(alpha, &powers)?;
    let scaled: Vec<f64> = fs.iter().map(|f| (f / mass).powf(alpha)).collect();
    let restricted = power_mean_divergence(alpha, &scaled)?;
    Ok(EquatorTrial {
        normal,
        mass,
        mass_stderr,
        divergence_restricted: Some(restricted),
        divergence_unnormalized: Some(unnormalized.value),
        degenerate: false,
    })
}

fn equator_trial_kl(
    spec: &DensitySpec,
    samples: usize,
    normal: UnitVector,
    mass: f64,
    mass_stderr: f64,
    rng: &mut StreamRng,
) -> Result<EquatorTrial> {
    let degenerate = |normal: UnitVector| EquatorTrial {
        normal,
        mass,
        mass_stderr,
        divergence_restricted: None,
        divergence_unnormalized: None,
        degenerate: true,
    };
    if !(mass > 0.0) {
        return Ok(degenerate(normal));
    }
    let mut logs = Vec::with_capacity(samples);
    match &spec.kind {
        DensityKind::CapUniform { center, height } => match cap_slice(center, *height, &normal)? {
            SliceShape::Empty => return Ok(degenerate(normal)),
            SliceShape::Full => {
                for _ in 0..samples {
                    let x = sample_on_equator(&normal, rng)?;
                    logs.push(spec.log_density(x.as_slice())?);
                }
            }
            SliceShape::Cap { axis, height } => {
                let local_center = UnitVector::normalized(axis)?;
                for _ in 0..samples {
                    let v = sample_cap(&local_center, height, rng)?;
                    let x = embed_in_equator(&normal, v.as_slice())?;
                    logs.push(spec.log_density(x.as_slice())?);
                }
            }
        },
        DensityKind::VonMisesFisher { mu, kappa } => {
            let image = rotate_e1_to(normal.as_slice(), mu.as_slice())?;
            let tail = &image[1..];
            let w = dot(tail, tail).sqrt();
            for _ in 0..samples {
                let v = if w < DEGENERATE_AXIS_TOL {
                    sample_unit_vector(mu.dim() - 1, rng)?
                } else {
                    let dir = UnitVector::normalized(tail.to_vec())?;
                    sample_vmf(&dir, kappa * w, rng)?
                };
                let x = embed_in_equator(&normal, v.as_slice())?;
                logs.push(spec.log_density(x.as_slice())?);
            }
        }
        DensityKind::DiscreteTable { .. } => unreachable!("ambient_dim gated above"),
    }
    let (log_mean, log_se) = mean_stderr(&logs);
    if !log_mean.is_finite() {
        return Ok(degenerate(normal));
    }
    Ok(EquatorTrial {
        normal,
        mass,
        mass_stderr,
        divergence_restricted: Some(DivergenceEstimate {
            alpha: 1.0,
            value: log_mean - mass.ln(),
            stderr: log_se,
            samples,
        }),
        divergence_unnormalized: None,
        degenerate: false,
    })
}

/// Outcome of repeated slice trials compared against the exact full-sphere
/// divergence.
#[derive(Clone, Copy, Debug)]
pub struct TailReport {
    pub alpha: f64,
    pub threshold: f64,
    pub trials: usize,
    /// Trials whose deviation reached the threshold; degenerate trials count.
    pub exceedances: usize,
    pub degenerate_trials: usize,
    /// Exact divergence of the density from uniform.
    pub reference_divergence: f64,
    /// Exact divergence at twice the order, for the exponent context.
    pub reference_double_alpha: f64,
    /// n * t * (alpha - 1) / (alpha * (reference_double_alpha + 1)).
    pub exponent_context: f64,
    /// Order 1 measures relative deviation, other orders absolute.
    pub relative: bool,
}

impl TailReport {
    pub fn fraction(&self) -> f64 {
        self.exceedances as f64 / self.trials as f64
    }
}

/// Fraction of random slices whose restricted divergence deviates from the
/// full-sphere value by at least `threshold`; absolute deviation for orders
/// above 1, relative deviation at order 1.
pub fn equator_tail_experiment(
    spec: &DensitySpec,
    alpha: f64,
    threshold: f64,
    trials: usize,
    samples: usize,
    rng: &mut StreamRng,
) -> Result<TailReport> {
    let n = spec
        .ambient_dim()
        .ok_or_else(|| Error::Unsupported("slice experiments need a spherical density".into()))?;
    if !(alpha >= 1.0) {
        return Err(Error::Parameter(format!("tail experiment needs order >= 1, got {alpha}")));
    }
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::Parameter(format!("threshold {threshold} must be positive")));
    }
    if trials == 0 {
        return Err(Error::Parameter("tail experiment needs at least one trial".into()));
    }
    let reference = renyi_quadrature(spec, alpha)?;
    let reference_double = renyi_quadrature(spec, 2.0 * alpha)?;
    let relative = alpha == 1.0;
    if relative && reference < MIN_RELATIVE_REFERENCE {
        return Err(Error::Parameter(format!(
            "relative deviations need a reference of at least {MIN_RELATIVE_REFERENCE}, got {reference}"
        )));
    }
    let mut exceedances = 0;
    let mut degenerate_trials = 0;
    for _ in 0..trials {
        let trial = equator_trial(spec, alpha, samples, rng)?;
        if trial.degenerate {
            degenerate_trials += 1;
            exceedances += 1;
            continue;
        }
        let est = trial
            .divergence_restricted
            .expect("non-degenerate trials carry an estimate")
            .value;
        let deviation = if relative {
            (est / reference - 1.0).abs()
        } else {
            (est - reference).abs()
        };
        if deviation >= threshold {
            exceedances += 1;
        }
    }
    Ok(TailReport {
        alpha,
        threshold,
        trials,
        exceedances,
        degenerate_trials,
        reference_divergence: reference,
        reference_double_alpha: reference_double,
        exponent_context: n as f64 * threshold * (alpha - 1.0)
            / (alpha * (reference_double + 1.0)),
        relative,
    })
}

// ---------------------------------------------------------------------------
// discrete divergences
// ---------------------------------------------------------------------------

fn validate_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Parameter("distribution must have at least one atom".into()));
    }
    let mut sum = 0.0;
    for (i, v) in p.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            return Err(Error::Parameter(format!("atom {i} has invalid mass {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > DIST_TOL {
        return Err(Error::Parameter(format!("atom masses sum to {sum}, not 1")));
    }
    Ok(())
}

/// Renyi divergence between probability tables. Order 1 is the KL
/// divergence, `f64::INFINITY` the max log ratio. Mass of `p` outside the
/// support of `q` makes orders >= 1 infinite; power sums run in log space so
/// extreme ratios cannot overflow.
pub fn discrete_renyi(p: &[f64], q: &[f64], alpha: f64) -> Result<f64> {
    validate_distribution(p)?;
    validate_distribution(q)?;
    if p.len() != q.len() {
        return Err(Error::Dimension { expected: p.len(), got: q.len() });
    }
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::Parameter(format!("order {alpha} must be >= 0")));
    }
    if alpha == f64::INFINITY {
        let mut worst = f64::NEG_INFINITY;
        for (pi, qi) in p.iter().zip(q) {
            if *pi > 0.0 {
                worst = worst.max((pi / qi).ln());
            }
        }
        return Ok(worst);
    }
    if alpha == 1.0 {
        let mut kl = 0.0;
        for (pi, qi) in p.iter().zip(q) {
            if *pi > 0.0 {
                if *qi <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                kl += pi * (pi / qi).ln();
            }
        }
        return Ok(kl);
    }
    // log-sum-exp over terms alpha*ln(p) + (1-alpha)*ln(q)
    let mut terms = Vec::with_capacity(p.len());
    let mut peak = f64::NEG_INFINITY;
    for (pi, qi) in p.iter().zip(q) {
        if *pi <= 0.0 {
            continue;
        }
        if *qi <= 0.0 {
            if alpha > 1.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        let t = alpha * pi.ln() + (1.0 - alpha) * qi.ln();
        peak = peak.max(t);
        terms.push(t);
    }
    if peak == f64::NEG_INFINITY {
        // no common support
        return Ok(f64::INFINITY);
    }
    let log_sum = peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln();
    Ok(log_sum / (alpha - 1.0))
}

/// Total variation distance between probability tables.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    validate_distribution(p)?;
    validate_distribution(q)?;
    if p.len() != q.len() {
        return Err(Error::Dimension { expected: p.len(), got: q.len() });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Image distribution under a cell assignment; `assignment[i]` names the
/// cell receiving atom i.
pub fn push_forward(p: &[f64], assignment: &[usize], cells: usize) -> Result<Vec<f64>> {
    validate_distribution(p)?;
    if assignment.len() != p.len() {
        return Err(Error::Dimension { expected: p.len(), got: assignment.len() });
    }
    if cells == 0 {
        return Err(Error::Parameter("push forward needs at least one cell".into()));
    }
    let mut out = vec![0.0; cells];
    for (pi, cell) in p.iter().zip(assignment) {
        if *cell >= cells {
            return Err(Error::Parameter(format!("cell index {cell} outside 0..{cells}")));
        }
        out[*cell] += pi;
    }
    Ok(out)
}

/// Outcome of the classical checks: the Pinsker bound and coarsening
/// monotonicity under random partitions at several orders.
#[derive(Clone, Copy, Debug)]
pub struct ClassicalReport {
    pub tv: f64,
    pub kl: f64,
    pub pinsker_bound: f64,
    pub pinsker_holds: bool,
    pub partitions_checked: usize,
    pub comparisons: usize,
    pub violations: usize,
    pub passed: bool,
}

/// Checks `tv <= sqrt(kl/2)` and, for random partitions, that coarsening
/// never increases the divergence at any order in `CLASSICAL_ALPHAS`.
pub fn classical_inequality_suite(
    p: &[f64],
    q: &[f64],
    partitions: usize,
    rng: &mut StreamRng,
) -> Result<ClassicalReport> {
    let tv = total_variation(p, q)?;
    let kl = discrete_renyi(p, q, 1.0)?;
    let pinsker_bound = (kl / 2.0).sqrt();
    let pinsker_holds = tv <= pinsker_bound + INEQUALITY_SLACK;
    let fine: Vec<f64> = CLASSICAL_ALPHAS
        .iter()
        .map(|&a| discrete_renyi(p, q, a))
        .collect::<Result<_>>()?;
    let mut comparisons = 0;
    let mut violations = 0;
    for _ in 0..partitions {
        let cells = rng.gen_range(1..=p.len());
        let assignment: Vec<usize> = (0..p.len()).map(|_| rng.gen_range(0..cells)).collect();
        let pp = push_forward(p, &assignment, cells)?;
        let qq = push_forward(q, &assignment, cells)?;
        for (a, f) in CLASSICAL_ALPHAS.iter().zip(&fine) {
            let coarse = discrete_renyi(&pp, &qq, *a)?;
            comparisons += 1;
            if !(coarse <= f + INEQUALITY_SLACK) {
                violations += 1;
            }
        }
    }
    Ok(ClassicalReport {
        tv,
        kl,
        pinsker_bound,
        pinsker_holds,
        partitions_checked: partitions,
        comparisons,
        violations,
        passed: pinsker_holds && violations == 0,
    })
}

// ---------------------------------------------------------------------------
// bipartite tables and conditional divergence
// ---------------------------------------------------------------------------

/// Joint probability table over a product of two finite alphabets, stored
/// row-major with rows indexing the first coordinate.
#[derive(Clone, Debug)]
pub struct BipartiteDensity {
    rows: usize,
    cols: usize,
    table: Vec<f64>,
}

impl BipartiteDensity {
    pub fn new(rows: usize, cols: usize, table: Vec<f64>) -> Result<BipartiteDensity> {
        if rows == 0 || cols == 0 || rows > MAX_BIPARTITE_SIDE || cols > MAX_BIPARTITE_SIDE {
            return Err(Error::Parameter(format!(
                "table sides {rows}x{cols} outside 1..={MAX_BIPARTITE_SIDE}"
            )));
        }
        if table.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, got: table.len() });
        }
        validate_distribution(&table)?;
        Ok(BipartiteDensity { rows, cols, table })
    }

    /// Strictly positive random table with independent exponential weights.
    pub fn sample_positive(rows: usize, cols: usize, rng: &mut StreamRng) -> Result<BipartiteDensity> {
        if rows == 0 || cols == 0 || rows > MAX_BIPARTITE_SIDE || cols > MAX_BIPARTITE_SIDE {
            return Err(Error::Parameter(format!(
                "table sides {rows}x{cols} outside 1..={MAX_BIPARTITE_SIDE}"
            )));
        }
        let mut table: Vec<f64> = (0..rows * cols).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let sum: f64 = table.iter().sum();
        for v in &mut table {
            *v /= sum;
        }
        BipartiteDensity::new(rows, cols, table)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn joint(&self) -> &[f64] {
        &self.table
    }

    /// Marginal of the second coordinate.
    pub fn b_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for a in 0..self.rows {
            for b in 0..self.cols {
                out[b] += self.table[a * self.cols + b];
            }
        }
        out
    }

    /// Conditional law of the first coordinate given column `b`; `None` when
    /// the column carries no mass.
    pub fn conditional_a_given_b(&self, b: usize) -> Option<Vec<f64>> {
        if b >= self.cols {
            return None;
        }
        let mass: f64 = (0..self.rows).map(|a| self.table[a * self.cols + b]).sum();
        if mass <= 0.0 {
            return None;
        }
        Some((0..self.rows).map(|a| self.table[a * self.cols + b] / mass).collect())
    }
}

/// Outcome of the conditional divergence checks on one table pair.
#[derive(Clone, Copy, Debug)]
pub struct ConditionalReport {
    pub alpha: f64,
    pub ell: f64,
    /// Divergence of the joint tables.
    pub joint: f64,
    /// Average conditional divergence under the first table's B-marginal.
    pub conditional_mean: f64,
    pub mean_holds: bool,
    /// Nonempty B-subsets with positive marginal mass that were checked.
    pub subsets_checked: usize,
    pub subset_violations: usize,
    /// Marginal mass of columns whose conditional divergence reaches
    /// `ell` times the joint divergence.
    pub heavy_mass: f64,
    pub heavy_bound: f64,
    pub heavy_holds: bool,
    pub passed: bool,
}

/// Checks three facts about conditioning at order `alpha > 1`:
/// the B-average of conditional divergences is at most the joint divergence;
/// for every B-subset E with positive mass, the conditional average over E
/// is at most `ln g_B(E) - alpha/(alpha-1) * ln f_B(E)` plus the joint
/// divergence; and columns whose conditional divergence reaches `ell` times
/// the joint one carry marginal mass at most
/// `exp(-(alpha-1)/alpha * (ell-1) * joint)`.
pub fn conditional_divergence_suite(
    f: &BipartiteDensity,
    g: &BipartiteDensity,
    alpha: f64,
    ell: f64,
) -> Result<ConditionalReport> {
    if f.rows != g.rows || f.cols != g.cols {
        return Err(Error::Dimension { expected: f.table.len(), got: g.table.len() });
    }
    if !alpha.is_finite() || !(alpha > 1.0) {
        return Err(Error::Parameter(format!("conditional checks need finite order > 1, got {alpha}")));
    }
    if !(ell > 1.0) {
        return Err(Error::Parameter(format!("threshold factor {ell} must exceed 1")));
    }
    let joint = discrete_renyi(&f.table, &g.table, alpha)?;
    if !joint.is_finite() {
        return Err(Error::Degenerate(
            "joint divergence is infinite; conditional checks need overlapping supports".into(),
        ));
    }
    let fb = f.b_marginal();
    let gb = g.b_marginal();
    // conditional divergences for columns with positive f-marginal; the
    // finite joint rules out infinite entries here
    let mut cond = vec![0.0; f.cols];
    for b in 0..f.cols {
        if fb[b] <= 0.0 {
            continue;
        }
        let fa = f.conditional_a_given_b(b).expect("positive marginal");
        let ga = g
            .conditional_a_given_b(b)
            .ok_or_else(|| Error::Degenerate(format!("column {b} has f-mass but no g-mass")))?;
        cond[b] = discrete_renyi(&fa, &ga, alpha)?;
    }
    let conditional_mean: f64 = (0..f.cols)
        .filter(|&b| fb[b] > 0.0)
        .map(|b| fb[b] * cond[b])
        .sum();
    let mean_holds = conditional_mean <= joint + INEQUALITY_SLACK;
    let coef = alpha / (alpha - 1.0);
    let mut subsets_checked = 0;
    let mut subset_violations = 0;
    for mask in 1u32..(1u32 << f.cols) {
        let mut fe = 0.0;
        let mut ge = 0.0;
        let mut weighted = 0.0;
        for b in 0..f.cols {
            if mask & (1 << b) != 0 {
                fe += fb[b];
                ge += gb[b];
                weighted += fb[b] * cond[b];
            }
        }
        if fe <= 0.0 {
            continue;
        }
        subsets_checked += 1;
        let lhs = weighted / fe;
        let rhs = ge.ln() - coef * fe.ln() + joint;
        if !(lhs <= rhs + INEQUALITY_SLACK) {
            subset_violations += 1;
        }
    }
    let mut heavy_mass = 0.0;
    for b in 0..f.cols {
        if fb[b] > 0.0 && cond[b] >= ell * joint {
            heavy_mass += fb[b];
        }
    }
    let heavy_bound = (-(alpha - 1.0) / alpha * (ell - 1.0) * joint).exp();
    let heavy_holds = heavy_mass <= heavy_bound + INEQUALITY_SLACK;
    Ok(ConditionalReport {
        alpha,
        ell,
        joint,
        conditional_mean,
        mean_holds,
        subsets_checked,
        subset_violations,
        heavy_mass,
        heavy_bound,
        heavy_holds,
        passed: mean_holds && subset_violations == 0 && heavy_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1(n: usize) -> UnitVector {
        UnitVector::standard_basis(n, 0).unwrap()
    }

    #[test]
    fn cap_mass_matches_closed_form_on_two_sphere() {
        // on the 2-sphere the cap above height h has mass (1-h)/2
        for h in [-0.75, -0.25, 0.0, 0.5, 0.9] {
            let m = cap_mass(3, h).unwrap();
            assert!((m - (1.0 - h) / 2.0).abs() < 1e-12, "h={h} m={m}");
        }
        assert_eq!(cap_mass(5, 1.0).unwrap(), 0.0);
        assert_eq!(cap_mass(5, -1.0).unwrap(), 1.0);
    }

    #[test]
    fn cap_height_inverts_mass() {
        let h = cap_height_for_mass(16, 0.25).unwrap();
        assert!((h - 0.175690327927015).abs() < 1e-8, "h={h}");
        let m = cap_mass(16, h).unwrap();
        assert!((m - 0.25).abs() < 1e-10);
    }

    #[test]
    fn log_normalizer_matches_reference_values() {
        let l16 = vmf_log_normalizer(16, 2.0).unwrap();
        assert!((l16 - 0.12414610449282428).abs() < 1e-11, "l16={l16}");
        let l32 = vmf_log_normalizer(32, 2.0).unwrap();
        assert!((l32 - 0.062385638895438667).abs() < 1e-11, "l32={l32}");
        assert!(vmf_log_normalizer(8, 0.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn quadrature_divergences_match_reference_values() {
        let spec32 = DensitySpec::von_mises_fisher(e1(32), 2.0).unwrap();
        let d2 = renyi_quadrature(&spec32, 2.0).unwrap();
        assert!((d2 - 0.123423702352525).abs() < 1e-9, "d2={d2}");
        let d4 = renyi_quadrature(&spec32, 4.0).unwrap();
        assert!((d4 - 0.241009704963713).abs() < 1e-9, "d4={d4}");
        let d1 = renyi_quadrature(&spec32, 1.0).unwrap();
        assert!((d1 - 0.0621579673451453).abs() < 1e-7, "d1={d1}");
        let spec16 = DensitySpec::von_mises_fisher(e1(16), 2.0).unwrap();
        let d2s = renyi_quadrature(&spec16, 2.0).unwrap();
        assert!((d2s - 0.238671354593286).abs() < 1e-9, "d2s={d2s}");
        let spec64 = DensitySpec::von_mises_fisher(e1(64), 2.0).unwrap();
        let d2l = renyi_quadrature(&spec64, 2.0).unwrap();
        assert!((d2l - 0.0622939669190405).abs() < 1e-9, "d2l={d2l}");
    }

    #[test]
    fn mean_overlap_matches_reference_value() {
        let m = vmf_mean_overlap(32, 2.0).unwrap();
        assert!((m - 0.0622718031203).abs() < 1e-7, "m={m}");
        assert_eq!(vmf_mean_overlap(8, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn cap_divergence_is_log_inverse_mass_at_every_order() {
        let spec = DensitySpec::cap_with_mass(e1(16), 0.25).unwrap();
        for alpha in [0.0, 0.5, 1.0, 2.0, 4.0, f64::INFINITY] {
            let d = renyi_quadrature(&spec, alpha).unwrap();
            assert!((d - 4.0f64.ln()).abs() < 1e-9, "alpha={alpha} d={d}");
        }
    }

    #[test]
    fn concentration_guard_rejects_large_kappa() {
        assert!(DensitySpec::von_mises_fisher(e1(8), 2.0).is_ok());
        assert!(DensitySpec::von_mises_fisher(e1(8), 2.1).is_err());
    }

    #[test]
    fn cap_sampler_stays_in_cap() {
        let mut rng = StreamRng::new(11, 0);
        let center = UnitVector::normalized(vec![1.0, -2.0, 0.5, 3.0, -1.0]).unwrap();
        for _ in 0..500 {
            let x = sample_cap(&center, 0.4, &mut rng).unwrap();
            assert!(dot(center.as_slice(), x.as_slice()) >= 0.4 - 1e-12);
        }
        // circle case uses the exact arc
        let c2 = UnitVector::normalized(vec![0.6, -0.8]).unwrap();
        for _ in 0..200 {
            let x = sample_cap(&c2, 0.2, &mut rng).unwrap();
            assert!(dot(c2.as_slice(), x.as_slice()) >= 0.2 - 1e-12);
        }
    }

    #[test]
    fn directional_sampler_matches_quadrature_mean() {
        let mut rng = StreamRng::new(12, 0);
        let mu = e1(8);
        let kappa = 2.0;
        let draws = 40_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let x = sample_vmf(&mu, kappa, &mut rng).unwrap();
            sum += x[0];
        }
        let mean = sum / draws as f64;
        let exact = vmf_mean_overlap(8, kappa).unwrap();
        // first coordinate has variance below 1/(n-1) plus concentration terms
        assert!((mean - exact).abs() < 0.012, "mean={mean} exact={exact}");
        // kappa = 0 degenerates to the uniform sphere
        let mut s0 = 0.0;
        for _ in 0..20_000 {
            s0 += sample_vmf(&mu, 0.0, &mut rng).unwrap()[0];
        }
        assert!((s0 / 20_000.0).abs() < 0.02);
    }

    #[test]
    fn monte_carlo_matches_quadrature_for_cap_and_directional() {
        let mut rng = StreamRng::new(13, 0);
        let cap = DensitySpec::cap_with_mass(e1(16), 0.25).unwrap();
        for alpha in [1.0, 2.0, 4.0] {
            let est = renyi_mc(&cap, alpha, 40_000, &mut rng).unwrap();
            let err = (est.value - 4.0f64.ln()).abs();
            let tol = (3.0 * est.stderr).max(0.05 * 4.0f64.ln());
            assert!(err < tol, "alpha={alpha} value={} stderr={}", est.value, est.stderr);
        }
        let vmf = DensitySpec::von_mises_fisher(e1(16), 2.0).unwrap();
        let est = renyi_mc(&vmf, 2.0, 40_000, &mut rng).unwrap();
        let exact = renyi_quadrature(&vmf, 2.0).unwrap();
        assert!((est.value - exact).abs() < 4.0 * est.stderr + 0.01);
    }

    #[test]
    fn total_mass_is_one_in_expectation() {
        let mut rng = StreamRng::new(14, 0);
        let vmf = DensitySpec::von_mises_fisher(e1(8), 2.0).unwrap();
        let (mass, se) = density_total_mass_mc(&vmf, 40_000, &mut rng).unwrap();
        assert!((mass - 1.0).abs() < 4.0 * se, "mass={mass} se={se}");
    }

    #[test]
    fn equator_trial_matches_slice_oracle() {
        let mut rng = StreamRng::new(15, 0);
        let mu = e1(32);
        let spec = DensitySpec::von_mises_fisher(mu.clone(), 2.0).unwrap();
        let trial = equator_trial(&spec, 2.0, 20_000, &mut rng).unwrap();
        assert!(!trial.degenerate);
        let overlap = dot(mu.as_slice(), trial.normal.as_slice());
        let exact_mass = vmf_equator_mass(32, 2.0, overlap).unwrap();
        assert!(
            (trial.mass - exact_mass).abs() < 5.0 * trial.mass_stderr,
            "mass={} exact={exact_mass} se={}",
            trial.mass,
            trial.mass_stderr
        );
        // renormalized slice is directional one dimension down
        let tangent = (1.0 - overlap * overlap).sqrt();
        let sliced = DensitySpec::von_mises_fisher(e1(31), 2.0 * tangent).unwrap();
        let exact_d = renyi_quadrature(&sliced, 2.0).unwrap();
        let est = trial.divergence_restricted.unwrap();
        assert!(
            (est.value - exact_d).abs() < 5.0 * est.stderr + 0.01,
            "est={} exact={exact_d}",
            est.value
        );
    }

    #[test]
    fn renormalization_shift_is_exact_and_bounded() {
        let mut rng = StreamRng::new(16, 0);
        let spec = DensitySpec::von_mises_fisher(e1(16), 2.0).unwrap();
        let alpha = 2.0;
        let trial = equator_trial(&spec, alpha, 5_000, &mut rng).unwrap();
        let restricted = trial.divergence_restricted.unwrap().value;
        let unnorm = trial.divergence_unnormalized.unwrap();
        let shift = alpha / (alpha - 1.0) * trial.mass.ln();
        assert!((unnorm - restricted - shift).abs() < 1e-10);
        if trial.mass >= 0.5 {
            let bound = renormalization_shift_bound(alpha, trial.mass).unwrap();
            assert!(shift.abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn kl_equator_trial_agrees_with_slice_oracle() {
        let mut rng = StreamRng::new(17, 0);
        let spec = DensitySpec::von_mises_fisher(e1(32), 2.0).unwrap();
        let trial = equator_trial(&spec, 1.0, 20_000, &mut rng).unwrap();
        assert!(!trial.degenerate);
        assert!(trial.divergence_unnormalized.is_none());
        let overlap = dot(e1(32).as_slice(), trial.normal.as_slice());
        let tangent = (1.0 - overlap * overlap).sqrt();
        let sliced = DensitySpec::von_mises_fisher(e1(31), 2.0 * tangent).unwrap();
        let exact = renyi_quadrature(&sliced, 1.0).unwrap();
        let est = trial.divergence_restricted.unwrap();
        assert!(
            (est.value - exact).abs() < 5.0 * est.stderr + 0.01,
            "est={} exact={exact}",
            est.value
        );
    }

    #[test]
    fn narrow_cap_slices_degenerate() {
        // a cap of height 0.9 in dimension 4 misses most equators
        let mut rng = StreamRng::new(18, 0);
        let spec = DensitySpec::cap_uniform(e1(4), 0.9).unwrap();
        let mut saw_degenerate = false;
        for _ in 0..20 {
            let trial = equator_trial(&spec, 2.0, 64, &mut rng).unwrap();
            if trial.degenerate {
                assert!(trial.divergence_restricted.is_none());
                saw_degenerate = true;
            }
        }
        assert!(saw_degenerate);
    }

    #[test]
    fn tail_experiment_counts_degenerates_as_exceedances() {
        let mut rng = StreamRng::new(19, 0);
        let spec = DensitySpec::cap_uniform(e1(4), 0.9).unwrap();
        let report = equator_tail_experiment(&spec, 2.0, 0.3, 30, 64, &mut rng).unwrap();
        assert!(report.exceedances >= report.degenerate_trials);
        assert!(report.degenerate_trials > 0);
        assert!(report.fraction() <= 1.0);
        assert!(!report.relative);
    }

    #[test]
    fn relative_tail_mode_requires_visible_reference() {
        let mut rng = StreamRng::new(20, 0);
        let weak = DensitySpec::von_mises_fisher(e1(64), 1.0).unwrap();
        // reference KL is about 0.008, below the relative-mode floor
        assert!(equator_tail_experiment(&weak, 1.0, 0.3, 5, 64, &mut rng).is_err());
        let strong = DensitySpec::von_mises_fisher(e1(8), 2.0).unwrap();
        let report = equator_tail_experiment(&strong, 1.0, 0.5, 5, 2_000, &mut rng).unwrap();
        assert!(report.relative);
        assert!(report.exponent_context.abs() < 1e-15);
    }

    #[test]
    fn discrete_divergence_hand_values() {
        let d2 = discrete_renyi(&[1.0, 0.0], &[0.5, 0.5], 2.0).unwrap();
        assert!((d2 - 2.0f64.ln()).abs() < 1e-12);
        let kl = discrete_renyi(&[0.5, 0.5], &[0.25, 0.75], 1.0).unwrap();
        let expect = 0.5 * (2.0f64).ln() + 0.5 * (2.0 / 3.0f64).ln();
        assert!((kl - expect).abs() < 1e-12);
        let dinf = discrete_renyi(&[0.5, 0.5], &[0.25, 0.75], f64::INFINITY).unwrap();
        assert!((dinf - 2.0f64.ln()).abs() < 1e-12);
        // support violation at order >= 1
        assert_eq!(discrete_renyi(&[0.5, 0.5], &[1.0, 0.0], 2.0).unwrap(), f64::INFINITY);
        assert_eq!(discrete_renyi(&[0.5, 0.5], &[1.0, 0.0], 1.0).unwrap(), f64::INFINITY);
        // below order 1 the missing atom just loses mass
        let dh = discrete_renyi(&[0.5, 0.5], &[1.0, 0.0], 0.5).unwrap();
        assert!((dh - -2.0 * 0.5f64.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn discrete_divergence_is_monotone_in_order() {
        let p = [0.1, 0.4, 0.2, 0.3];
        let q = [0.3, 0.2, 0.4, 0.1];
        let orders = [0.0, 0.5, 1.0, 2.0, 4.0, 64.0, f64::INFINITY];
        let mut prev = f64::NEG_INFINITY;
        for a in orders {
            let d = discrete_renyi(&p, &q, a).unwrap();
            assert!(d >= prev - 1e-12, "order {a} broke monotonicity");
            prev = d;
        }
    }

    #[test]
    fn extreme_ratios_do_not_overflow() {
        let p = [0.5, 0.5 - 1e-12, 1e-12];
        let q = [0.5, 1e-12, 0.5 - 1e-12];
        let d = discrete_renyi(&p, &q, 64.0).unwrap();
        assert!(d.is_finite());
        // dominant term is (p/q)^64 scaled back by q
        assert!(d > 20.0);
    }

    #[test]
    fn pinsker_and_partition_checks_pass() {
        let mut rng = StreamRng::new(21, 0);
        let p = [0.25, 0.75];
        let q = [0.75, 0.25];
        let report = classical_inequality_suite(&p, &q, 50, &mut rng).unwrap();
        assert!(report.passed);
        assert!((report.tv - 0.5).abs() < 1e-12);
        let bound = (0.5 * 3.0f64.ln() / 2.0).sqrt();
        assert!((report.pinsker_bound - bound).abs() < 1e-12);
        assert_eq!(report.comparisons, 50 * CLASSICAL_ALPHAS.len());
    }

    #[test]
    fn push_forward_preserves_mass() {
        let p = [0.2, 0.3, 0.5];
        let img = push_forward(&p, &[1, 1, 0], 2).unwrap();
        assert_eq!(img, vec![0.5, 0.5]);
        assert!(push_forward(&p, &[0, 1], 2).is_err());
        assert!(push_forward(&p, &[0, 1, 2], 2).is_err());
    }

    #[test]
    fn bipartite_marginals_and_conditionals() {
        let f = BipartiteDensity::new(2, 2, vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        assert_eq!(f.b_marginal(), vec![0.6000000000000001, 0.4]);
        let c0 = f.conditional_a_given_b(0).unwrap();
        assert!((c0[0] - 4.0 / 6.0).abs() < 1e-12);
        let zero_col = BipartiteDensity::new(2, 2, vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        assert!(zero_col.conditional_a_given_b(1).is_none());
    }

    #[test]
    fn conditional_suite_point_mass_example() {
        // f concentrated at one cell, g uniform: joint divergence ln 4,
        // single conditional ln 2, subset {0} is tight
        let f = BipartiteDensity::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let g = BipartiteDensity::new(2, 2, vec![0.25; 4]).unwrap();
        for alpha in [2.0, 4.0, 64.0] {
            let report = conditional_divergence_suite(&f, &g, alpha, 2.0).unwrap();
            assert!((report.joint - 4.0f64.ln()).abs() < 1e-12);
            assert!((report.conditional_mean - 2.0f64.ln()).abs() < 1e-12);
            assert!(report.passed, "alpha={alpha}: {report:?}");
        }
    }

    #[test]
    fn conditional_suite_rejects_disjoint_supports() {
        let f = BipartiteDensity::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let g = BipartiteDensity::new(2, 2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        assert!(conditional_divergence_suite(&f, &g, 2.0, 2.0).is_err());
    }

    #[test]
    fn conditional_suite_holds_on_random_tables() {
        let mut rng = StreamRng::new(22, 0);
        for trial in 0..50 {
            let f = BipartiteDensity::sample_positive(3, 3, &mut rng).unwrap();
            let g = BipartiteDensity::sample_positive(3, 3, &mut rng).unwrap();
            let report = conditional_divergence_suite(&f, &g, 2.0, 2.0).unwrap();
            assert!(report.passed, "trial {trial}: {report:?}");
            assert_eq!(report.subsets_checked, 7);
        }
    }

    #[test]
    fn distribution_validation_rejects_bad_tables() {
        assert!(validate_distribution(&[]).is_err());
        assert!(validate_distribution(&[0.5, 0.6]).is_err());
        assert!(validate_distribution(&[0.5, -0.5, 1.0]).is_err());
        assert!(validate_distribution(&[0.5, f64::NAN]).is_err());
        assert!(validate_distribution(&[0.25; 4]).is_ok());
    }

    #[test]
    fn discrete_spec_supports_exact_and_sampled_divergence() {
        let mut rng = StreamRng::new(23, 0);
        let spec = DensitySpec::discrete(vec![0.7, 0.1, 0.1, 0.1]).unwrap();
        let exact = renyi_quadrature(&spec, 2.0).unwrap();
        let direct = discrete_renyi(&[0.7, 0.1, 0.1, 0.1], &[0.25; 4], 2.0).unwrap();
        assert!((exact - direct).abs() < 1e-12);
        let est = renyi_mc(&spec, 2.0, 60_000, &mut rng).unwrap();
        assert!((est.value - exact).abs() < 4.0 * est.stderr + 0.01);
        let kl = renyi_mc(&spec, 1.0, 60_000, &mut rng).unwrap();
        let exact_kl = renyi_quadrature(&spec, 1.0).unwrap();
        assert!((kl.value - exact_kl).abs() < 4.0 * kl.stderr + 0.01);
        assert!(spec.density(&[1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(sample_from_density(&spec, &mut rng).is_err());
    }

    #[test]
    fn order_guards_reject_out_of_range_requests() {
        let mut rng = StreamRng::new(24, 0);
        let spec = DensitySpec::von_mises_fisher(e1(8), 1.0).unwrap();
        assert!(renyi_mc(&spec, 9.0, 100, &mut rng).is_err());
        assert!(renyi_mc(&spec, -1.0, 100, &mut rng).is_err());
        assert!(renyi_mc(&spec, 2.0, 1, &mut rng).is_err());
        assert!(renyi_quadrature(&spec, -0.5).is_err());
        assert!(equator_trial(&spec, 2.0, 1, &mut rng).is_err());
        assert!(equator_tail_experiment(&spec, 0.5, 0.1, 2, 16, &mut rng).is_err());
    }
}
