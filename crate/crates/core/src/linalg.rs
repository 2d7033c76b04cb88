//! Vectors on the unit sphere, orthogonal matrices, and the promise
//! instances built from them: a = +-(B c) with B orthogonal and c unit.
//!
//! Sampling is rotation invariant: unit vectors come from normalized
//! Gaussians, matrices from QR of a Gaussian matrix with the R-diagonal
//! sign fix, so both are uniform under the invariant measure.

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::StreamRng;

/// Acceptable deviation of a squared norm or of Q^T Q from the identity.
const UNIT_TOL: f64 = 1e-8;
/// Below this norm a Gaussian draw is considered degenerate and redrawn.
const MIN_NORM: f64 = 1e-6;

/// Sign of the promised bilinear form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Plus,
    Minus,
}

impl Label {
    /// Sign as a real number. Zero maps to Plus so every real has a label.
    pub fn from_sign(x: f64) -> Label {
        if x < 0.0 {
            Label::Minus
        } else {
            Label::Plus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Label::Plus => 1.0,
            Label::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Plus => Label::Minus,
            Label::Minus => Label::Plus,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Plus => "+1",
            Label::Minus => "-1",
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A vector with Euclidean norm 1 (within `UNIT_TOL` of 1 at construction).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn new(v: Vec<f64>) -> crate::Result<UnitVector> {
        if v.is_empty() {
            return Err(crate::Error::Parameter("empty vector".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(crate::Error::Parameter("non-finite entry in vector".into()));
        }
        let sq = dot(&v, &v);
        if (sq - 1.0).abs() > UNIT_TOL {
            return Err(crate::Error::Parameter(format!(
                "vector norm^2 = {sq} is not 1"
            )));
        }
        Ok(UnitVector(v))
    }

    /// Scale to unit norm. Errors if the norm is too small to divide by.
    pub fn normalized(mut v: Vec<f64>) -> crate::Result<UnitVector> {
        if v.is_empty() {
            return Err(crate::Error::Parameter("empty vector".into()));
        }
        let norm = dot(&v, &v).sqrt();
        if !norm.is_finite() || norm < MIN_NORM {
            return Err(crate::Error::Degenerate(format!(
                "cannot normalize vector with norm {norm}"
            )));
        }
        for x in &mut v {
            *x /= norm;
        }
        Ok(UnitVector(v))
    }

    pub fn standard_basis(n: usize, i: usize) -> crate::Result<UnitVector> {
        if i >= n {
            return Err(crate::Error::Parameter(format!("basis index {i} >= dim {n}")));
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Ok(UnitVector(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for UnitVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A square matrix B with B^T B = I (within `UNIT_TOL` entrywise at
/// construction). Stored row-major so streaming row access is a slice.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix(Array2<f64>);

impl OrthogonalMatrix {
    pub fn new(m: Array2<f64>) -> crate::Result<OrthogonalMatrix> {
        let (r, c) = m.dim();
        if r != c || r == 0 {
            return Err(crate::Error::Dimension { expected: r * r, got: r * c });
        }
        let gram = m.t().dot(&m);
        for i in 0..r {
            for j in 0..r {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = gram[(i, j)];
                if !got.is_finite() || (got - want).abs() > UNIT_TOL {
                    return Err(crate::Error::Parameter(format!(
                        "matrix is not orthogonal: (B^T B)[{i},{j}] = {got}"
                    )));
                }
            }
        }
        let m = if m.is_standard_layout() { m } else { m.as_standard_layout().into_owned() };
        Ok(OrthogonalMatrix(m))
    }

    pub fn identity(n: usize) -> OrthogonalMatrix {
        OrthogonalMatrix(Array2::eye(n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0
            .row(i)
            .to_slice()
            .expect("rows of a standard-layout matrix are contiguous")
    }

    /// B * v.
    pub fn apply(&self, v: &[f64]) -> crate::Result<Vec<f64>> {
        if v.len() != self.n() {
            return Err(crate::Error::Dimension { expected: self.n(), got: v.len() });
        }
        Ok(self.0.dot(&ArrayView1::from(v)).to_vec())
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }
}

pub fn sample_gaussian_vec(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform on the unit sphere S^{n-1}.
pub fn sample_unit_vector(n: usize, rng: &mut StreamRng) -> crate::Result<UnitVector> {
    if n == 0 {
        return Err(crate::Error::Parameter("dimension 0".into()));
    }
    loop {
        if let Ok(u) = UnitVector::normalized(sample_gaussian_vec(n, rng)) {
            return Ok(u);
        }
    }
}

/// Uniform over the orthogonal group O(n): QR of an iid Gaussian matrix,
/// with columns flipped so diag(R) > 0. The sign fix is what removes the
/// factorization ambiguity; without it the distribution is not invariant.
pub fn sample_haar_orthogonal(n: usize, rng: &mut StreamRng) -> crate::Result<OrthogonalMatrix> {
    if n == 0 {
        return Err(crate::Error::Parameter("dimension 0".into()));
    }
    // column-major buffer for lapack; iid entries make the layout immaterial
    let mut buf = sample_gaussian_vec(n * n, rng);
    crate::lapack::qr_orthonormal_inplace(&mut buf, n)?;
    let m = Array2::from_shape_fn((n, n), |(i, j)| buf[j * n + i]);
    OrthogonalMatrix::new(m)
}

/// One instance of the promise: c unit, B orthogonal, a = label * (B c).
#[derive(Debug, Clone)]
pub struct PromiseInstance {
    pub a: UnitVector,
    pub b: OrthogonalMatrix,
    pub c: UnitVector,
    pub label: Label,
}

impl PromiseInstance {
    pub fn n(&self) -> usize {
        self.c.dim()
    }
}

pub fn make_promise_instance(
    n: usize,
    label: Label,
    rng: &mut StreamRng,
) -> crate::Result<PromiseInstance> {
    let b = sample_haar_orthogonal(n, rng)?;
    let c = sample_unit_vector(n, rng)?;
    let mut a = b.apply(c.as_slice())?;
    if label == Label::Minus {
        for x in &mut a {
            *x = -*x;
        }
    }
    Ok(PromiseInstance { a: UnitVector::new(a)?, b, c, label })
}

/// a^T B c computed directly.
pub fn exact_bilinear(a: &[f64], b: &OrthogonalMatrix, c: &[f64]) -> crate::Result<f64> {
    if a.len() != b.n() {
        return Err(crate::Error::Dimension { expected: b.n(), got: a.len() });
    }
    let bc = b.apply(c)?;
    Ok(dot(a, &bc))
}

/// Apply the reflection that swaps e_1 and `mu` (identity when mu = e_1).
/// Used to move samples built around the north pole onto the axis `mu`.
pub fn rotate_e1_to(mu: &[f64], v: &[f64]) -> crate::Result<Vec<f64>> {
    if mu.len() != v.len() {
        return Err(crate::Error::Dimension { expected: mu.len(), got: v.len() });
    }
    // u = e_1 - mu; H = I - 2 u u^T / |u|^2
    let mut u: Vec<f64> = mu.iter().map(|&x| -x).collect();
    u[0] += 1.0;
    let usq = dot(&u, &u);
    if usq < 1e-24 {
        return Ok(v.to_vec());
    }
    let scale = 2.0 * dot(&u, v) / usq;
    Ok(v.iter().zip(&u).map(|(&vi, &ui)| vi - scale * ui).collect())
}

/// Uniform on the great subsphere orthogonal to `axis`.
pub fn sample_on_equator(axis: &UnitVector, rng: &mut StreamRng) -> crate::Result<UnitVector> {
    let n = axis.dim();
    if n < 2 {
        return Err(crate::Error::Parameter("equator needs dimension >= 2".into()));
    }
    loop {
        let mut g = sample_gaussian_vec(n, rng);
        let proj = dot(&g, axis.as_slice());
        for (gi, &mi) in g.iter_mut().zip(axis.as_slice()) {
            *gi -= proj * mi;
        }
        if let Ok(u) = UnitVector::normalized(g) {
            return Ok(u);
        }
    }
}

/// Monte Carlo tally of Pr[ <v, w>^2 >= k/n ] for independent uniform unit
/// vectors v, w.
#[derive(Debug, Clone, Copy)]
pub struct CapTailEstimate {
    pub hits: u64,
    pub trials: u64,
    /// k/n, the squared-overlap threshold.
    pub threshold: f64,
    /// Whether k lies in [1, n/4], the range the reference lower bound covers.
    pub bound_applies: bool,
}

impl CapTailEstimate {
    pub fn fraction(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }
}

/// Reference lower bound e^{-k} / (16 sqrt(k)) for the overlap tail, valid
/// for 1 <= k <= n/4.
pub fn cap_tail_lower_bound(k: f64) -> f64 {
    (-k).exp() / (16.0 * k.sqrt())
}

pub fn estimate_cap_mass(
    n: usize,
    k: f64,
    trials: u64,
    rng: &mut StreamRng,
) -> crate::Result<CapTailEstimate> {
    if n < 2 {
        return Err(crate::Error::Parameter("dimension must be >= 2".into()));
    }
    if !(k > 0.0 && k <= n as f64) {
        return Err(crate::Error::Parameter(format!("k = {k} outside (0, n]")));
    }
    if trials == 0 {
        return Err(crate::Error::Parameter("trials must be positive".into()));
    }
    let threshold = k / n as f64;
    let mut hits = 0u64;
    for _ in 0..trials {
        let v = sample_unit_vector(n, rng)?;
        let w = sample_unit_vector(n, rng)?;
        let ip = dot(v.as_slice(), w.as_slice());
        if ip * ip >= threshold {
            hits += 1;
        }
    }
    Ok(CapTailEstimate { hits, trials, threshold, bound_applies: k >= 1.0 && k <= n as f64 / 4.0 })
}
