//! One-way three-player protocol for the bilinear form a^T B c.
//!
//! Charlie holds c, Bob holds B, Alice holds a; messages flow Charlie ->
//! Bob -> Alice and every bit is materialized in the transcript so the
//! communication cost is countable, not estimated.
//!
//! Charlie scans a shared net of unit vectors and names the one most
//! aligned with c (one index, ceil(log2 |T|) bits). Bob rebuilds that
//! vector, applies B, and answers with one sign bit per shared random
//! hyperplane. Alice compares those bits against her own side's signs:
//! the agreement rate recovers the angle, hence <a, B w*>.
//!
//! With the promise a = +-(B c), the chosen w* satisfies
//! <a, B w*> = label * <c, w*>, so the sign of the estimate is the label.
//! Without the promise the same transcript plus a quantized copy of
//! alpha = <c, w*> yields an additive approximation of a^T B c.

use crate::linalg::{
    dot, sample_gaussian_vec, sample_unit_vector, Label, OrthogonalMatrix, PromiseInstance,
    UnitVector,
};
use crate::numeric::ceil_log2;
use crate::rng::StreamRng;

/// Default ceiling on the net size.
pub const NET_CAP_DEFAULT: u64 = 1 << 24;
/// Ceiling on sign-bit repetitions per run.
pub const MAX_KNR_REPS: usize = 1 << 26;
/// Extra fixed-point bits past ceil(log2 n) when Charlie ships alpha.
pub const OVERLAP_EXTRA_BITS: u32 = 20;

const HYPERPLANE_STREAM_BASE: u64 = 1 << 40;

/// Net size min(ceil(32 sqrt(k) e^{2k}), cap). The growth rate matches the
/// inverse of the overlap tail bound, so the net contains a well-aligned
/// vector with probability 1 - e^{-Omega(k)}.
pub fn net_size(k: u32, cap: u64) -> crate::Result<u64> {
    if k == 0 {
        return Err(crate::Error::Parameter("k must be >= 1".into()));
    }
    if cap == 0 {
        return Err(crate::Error::Parameter("net cap must be >= 1".into()));
    }
    let kf = f64::from(k);
    let raw = (32.0 * kf.sqrt() * (2.0 * kf).exp()).ceil();
    if !raw.is_finite() || raw >= cap as f64 {
        Ok(cap)
    } else {
        Ok((raw as u64).max(1))
    }
}

/// Accuracy target of the promise decision at block size k: a third of the
/// overlap floor sqrt(k/n).
pub fn decision_eps(n: usize, k: u32) -> crate::Result<f64> {
    if n == 0 || k == 0 {
        return Err(crate::Error::Parameter("need n >= 1 and k >= 1".into()));
    }
    Ok((f64::from(k) / n as f64).sqrt() / 3.0)
}

/// Sign bits needed for additive accuracy eps: ceil(16 / eps^2).
/// Every bit-count assertion must go through this one function; the
/// ceiling of a float ratio is not something to recompute ad hoc.
pub fn knr_repetitions(eps: f64) -> crate::Result<usize> {
    if !(eps.is_finite() && eps > 0.0 && eps <= 2.0) {
        return Err(crate::Error::Parameter(format!("accuracy eps = {eps} outside (0, 2]")));
    }
    let t = (16.0 / (eps * eps)).ceil();
    if t > MAX_KNR_REPS as f64 {
        return Err(crate::Error::Parameter(format!(
            "eps = {eps} needs {t:.0} sign bits, over the cap"
        )));
    }
    Ok(t as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Charlie,
    Bob,
    Alice,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub from: Player,
    pub bits: Vec<bool>,
}

#[derive(Debug, Clone, Default)]
pub struct Transcript {
    pub messages: Vec<Message>,
}

impl Transcript {
    pub fn total_bits(&self) -> usize {
        self.messages.iter().map(|m| m.bits.len()).sum()
    }

    pub fn bits_from(&self, who: Player) -> usize {
        self.messages.iter().filter(|m| m.from == who).map(|m| m.bits.len()).sum()
    }
}

/// Little-endian fixed-width encoding of an index.
pub fn index_to_bits(index: u64, width: u32) -> crate::Result<Vec<bool>> {
    if width > 63 {
        return Err(crate::Error::Parameter(format!("index width {width} > 63")));
    }
    if width < 64 && index >> width != 0 {
        return Err(crate::Error::Parameter(format!(
            "index {index} does not fit in {width} bits"
        )));
    }
    Ok((0..width).map(|b| index >> b & 1 == 1).collect())
}

pub fn bits_to_index(bits: &[bool]) -> crate::Result<u64> {
    if bits.len() > 63 {
        return Err(crate::Error::Parameter(format!("index width {} > 63", bits.len())));
    }
    Ok(bits.iter().enumerate().fold(0u64, |acc, (b, &bit)| acc | (u64::from(bit) << b)))
}

/// A real in (0, 1] rounded onto the grid {1, ..., 2^bits} / 2^bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizedReal {
    level: u64,
    bits: u32,
}

impl QuantizedReal {
    pub fn encode(x: f64, bits: u32) -> crate::Result<QuantizedReal> {
        if bits == 0 || bits > 52 {
            return Err(crate::Error::Parameter(format!("quantizer width {bits} outside [1, 52]")));
        }
        if !(x.is_finite() && x > 0.0 && x <= 1.0) {
            return Err(crate::Error::Parameter(format!("value {x} outside (0, 1]")));
        }
        let scale = (1u64 << bits) as f64;
        let level = (x * scale).round().clamp(1.0, scale) as u64;
        Ok(QuantizedReal { level, bits })
    }

    pub fn value(&self) -> f64 {
        self.level as f64 / (1u64 << self.bits) as f64
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// level - 1, little-endian, in exactly `bits` bits.
    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.bits).map(|b| (self.level - 1) >> b & 1 == 1).collect()
    }

    pub fn from_bits(bits: &[bool]) -> crate::Result<QuantizedReal> {
        if bits.is_empty() || bits.len() > 52 {
            return Err(crate::Error::Parameter(format!(
                "quantizer width {} outside [1, 52]",
                bits.len()
            )));
        }
        let level = bits_to_index(bits)? + 1;
        Ok(QuantizedReal { level, bits: bits.len() as u32 })
    }
}

/// Charlie's fixed-point width for alpha at dimension n.
pub fn overlap_quantizer_bits(n: usize) -> u32 {
    ceil_log2(n as u64) + OVERLAP_EXTRA_BITS
}

/// The shared random objects both ends derive independently: net vector j
/// lives on stream j, hyperplane l on stream 2^40 + l, so the two
/// namespaces cannot collide while the net stays below its cap.
#[derive(Debug, Clone, Copy)]
pub struct SharedRandomness {
    seed: u64,
}

impl SharedRandomness {
    pub fn new(seed: u64) -> SharedRandomness {
        SharedRandomness { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn net_vector(&self, n: usize, j: u64) -> crate::Result<UnitVector> {
        sample_unit_vector(n, &mut StreamRng::new(self.seed, j))
    }

    pub fn hyperplane(&self, n: usize, l: u64) -> Vec<f64> {
        sample_gaussian_vec(n, &mut StreamRng::new(self.seed, HYPERPLANE_STREAM_BASE + l))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NetSelection {
    pub index: u64,
    /// <c, w_index>, the signed overlap of the winner.
    pub overlap: f64,
}

/// Scan the whole net and keep the first index attaining the maximum
/// signed overlap with c. Strictly-greater comparison keeps ties, and
/// therefore the transcript, deterministic.
pub fn charlie_select(
    c: &UnitVector,
    net: u64,
    shared: &SharedRandomness,
) -> crate::Result<NetSelection> {
    if net == 0 {
        return Err(crate::Error::Parameter("empty net".into()));
    }
    let n = c.dim();
    let mut best = NetSelection { index: 0, overlap: f64::NEG_INFINITY };
    for j in 0..net {
        let w = shared.net_vector(n, j)?;
        let ov = dot(c.as_slice(), w.as_slice());
        if ov > best.overlap {
            best = NetSelection { index: j, overlap: ov };
        }
    }
    Ok(best)
}

/// One sign per hyperplane: bit l says <x, z_l> >= 0.
pub fn hyperplane_sign_bits(x: &[f64], t: usize, shared: &SharedRandomness) -> Vec<bool> {
    (0..t as u64).map(|l| dot(x, &shared.hyperplane(x.len(), l)) >= 0.0).collect()
}

/// Agreement rate of two equal-length sign strings mapped back to an inner
/// product estimate: two unit vectors at angle theta disagree on a random
/// hyperplane with probability theta / pi, so cos(pi (1 - phat)) is the
/// estimator of <x, y>.
pub fn sign_agreement_estimate(xs: &[bool], ys: &[bool]) -> crate::Result<f64> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(crate::Error::Parameter(format!(
            "sign strings of lengths {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let matches = xs.iter().zip(ys).filter(|(x, y)| x == y).count();
    let phat = matches as f64 / xs.len() as f64;
    Ok((std::f64::consts::PI * (1.0 - phat)).cos())
}

fn bob_respond(
    b: &OrthogonalMatrix,
    charlie_index_bits: &[bool],
    t: usize,
    shared: &SharedRandomness,
) -> crate::Result<Message> {
    let index = bits_to_index(charlie_index_bits)?;
    let w = shared.net_vector(b.n(), index)?;
    let bw = b.apply(w.as_slice())?;
    Ok(Message { from: Player::Bob, bits: hyperplane_sign_bits(&bw, t, shared) })
}

fn alice_estimate(a: &UnitVector, bob: &Message, shared: &SharedRandomness) -> crate::Result<f64> {
    let own = hyperplane_sign_bits(a.as_slice(), bob.bits.len(), shared);
    sign_agreement_estimate(&own, &bob.bits)
}

#[derive(Debug, Clone)]
pub struct DecisionRun {
    pub label: Label,
    /// Alice's estimate of <a, B w*>; its sign is the answer.
    pub estimate: f64,
    /// Charlie's private overlap <c, w*>. Diagnostic only, never sent.
    pub overlap: f64,
    pub transcript: Transcript,
}

/// Decide the promised sign. Bits on the wire: ceil(log2 |T|) from Charlie
/// plus ceil(16 / eps^2) from Bob with eps = sqrt(k/n)/3. Alpha itself is
/// never communicated; only the sign of the estimate matters.
pub fn run_protocol_decision(
    inst: &PromiseInstance,
    k: u32,
    net_cap: u64,
    shared: &SharedRandomness,
) -> crate::Result<DecisionRun> {
    let n = inst.n();
    let net = net_size(k, net_cap)?;
    let eps = decision_eps(n, k)?;
    let t = knr_repetitions(eps)?;

    let selection = charlie_select(&inst.c, net, shared)?;
    let charlie =
        Message { from: Player::Charlie, bits: index_to_bits(selection.index, ceil_log2(net))? };
    let bob = bob_respond(&inst.b, &charlie.bits, t, shared)?;
    let estimate = alice_estimate(&inst.a, &bob, shared)?;

    Ok(DecisionRun {
        label: Label::from_sign(estimate),
        estimate,
        overlap: selection.overlap,
        transcript: Transcript { messages: vec![charlie, bob] },
    })
}

#[derive(Debug, Clone)]
pub struct ApproxRun {
    /// Alice's output: estimate of a^T B c.
    pub estimate: f64,
    pub overlap: f64,
    pub quantized_overlap: f64,
    pub transcript: Transcript,
}

/// Approximate a^T B c for arbitrary unit a, orthogonal B, unit c.
/// Charlie appends alpha = <c, w*> in fixed point; Alice runs the sign
/// protocol at accuracy alpha_q * eps / 3 and outputs estimate / alpha_q.
/// Writing w* = alpha c + sqrt(1 - alpha^2) s with s orthogonal to c, the
/// output misses a^T B c by the residual sqrt(1-alpha^2)/alpha * <a, B s>
/// plus the sign-protocol noise; under the promise the residual vanishes.
pub fn run_protocol_approx(
    a: &UnitVector,
    b: &OrthogonalMatrix,
    c: &UnitVector,
    k: u32,
    eps: f64,
    net_cap: u64,
    shared: &SharedRandomness,
) -> crate::Result<ApproxRun> {
    let n = c.dim();
    if a.dim() != n || b.n() != n {
        return Err(crate::Error::Dimension { expected: n, got: a.dim().max(b.n()) });
    }
    if !(eps.is_finite() && eps > 0.0 && eps <= 2.0) {
        return Err(crate::Error::Parameter(format!("accuracy eps = {eps} outside (0, 2]")));
    }
    let net = net_size(k, net_cap)?;
    let selection = charlie_select(c, net, shared)?;
    if selection.overlap <= 0.0 {
        // the net holds antipodal directions in distribution, so a
        // nonpositive maximum means it failed to cover c at all
        return Err(crate::Error::NetFailure);
    }
    let alpha_q = QuantizedReal::encode(selection.overlap.min(1.0), overlap_quantizer_bits(n))?;

    let mut charlie_bits = index_to_bits(selection.index, ceil_log2(net))?;
    let index_width = charlie_bits.len();
    charlie_bits.extend(alpha_q.to_bits());
    let charlie = Message { from: Player::Charlie, bits: charlie_bits };

    let alpha_received = QuantizedReal::from_bits(&charlie.bits[index_width..])?;
    let t = knr_repetitions(alpha_received.value() * eps / 3.0)?;
    let bob = bob_respond(b, &charlie.bits[..index_width], t, shared)?;
    let raw = alice_estimate(a, &bob, shared)?;

    Ok(ApproxRun {
        estimate: raw / alpha_received.value(),
        overlap: selection.overlap,
        quantized_overlap: alpha_received.value(),
        transcript: Transcript { messages: vec![charlie, bob] },
    })
}

#[derive(Debug, Clone, Copy)]
pub struct TradeoffRow {
    pub k: u32,
    pub net: u64,
    pub charlie_bits: usize,
    pub bob_bits: usize,
    pub trials: usize,
    pub errors: usize,
}

impl TradeoffRow {
    pub fn error_rate(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }
}

/// Decision error rate as k sweeps: Charlie's index grows with the net,
/// Bob's sign count shrinks as the overlap floor rises.
pub fn tradeoff_sweep(
    n: usize,
    ks: &[u32],
    trials: usize,
    net_cap: u64,
    master_seed: u64,
) -> crate::Result<Vec<TradeoffRow>> {
    if trials == 0 {
        return Err(crate::Error::Parameter("trials must be positive".into()));
    }
    let mut rows = Vec::with_capacity(ks.len());
    for (ki, &k) in ks.iter().enumerate() {
        let mut errors = 0usize;
        let mut charlie_bits = 0usize;
        let mut bob_bits = 0usize;
        for trial in 0..trials {
            let run_seed = master_seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add((ki as u64) << 32 | trial as u64);
            let mut rng = StreamRng::new(run_seed, 0);
            let label = if trial % 2 == 0 { Label::Plus } else { Label::Minus };
            let inst = crate::linalg::make_promise_instance(n, label, &mut rng)?;
            let shared = SharedRandomness::new(rng.derive_seed());
            let run = run_protocol_decision(&inst, k, net_cap, &shared)?;
            charlie_bits = run.transcript.bits_from(Player::Charlie);
            bob_bits = run.transcript.bits_from(Player::Bob);
            if run.label != label {
                errors += 1;
            }
        }
        rows.push(TradeoffRow { k, net: net_size(k, net_cap)?, charlie_bits, bob_bits, trials, errors });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizing_formulas() {
        assert_eq!(net_size(1, NET_CAP_DEFAULT).unwrap(), 237);
        // the cap engages once 32 sqrt(k) e^{2k} passes 2^24
        assert_eq!(net_size(9, NET_CAP_DEFAULT).unwrap(), NET_CAP_DEFAULT);
        assert_eq!(net_size(500, NET_CAP_DEFAULT).unwrap(), NET_CAP_DEFAULT);
        assert!(net_size(0, NET_CAP_DEFAULT).is_err());

        let eps = decision_eps(64, 4).unwrap();
        assert!((eps - 2.0 / 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(knr_repetitions(0.5).unwrap(), 64);
        assert!(knr_repetitions(0.0).is_err());
        assert!(knr_repetitions(1e-9).is_err());
    }

    #[test]
    fn index_bits_round_trip() {
        for width in [0u32, 1, 5, 17] {
            let max = if width == 0 { 0 } else { (1u64 << width) - 1 };
            for index in [0, max / 2, max] {
                let bits = index_to_bits(index, width).unwrap();
                assert_eq!(bits.len(), width as usize);
                assert_eq!(bits_to_index(&bits).unwrap(), index);
            }
        }
        assert!(index_to_bits(4, 2).is_err());
    }

    #[test]
    fn quantized_real_round_trip() {
        for x in [1e-9, 0.125, 0.3141592653589793, 0.999999, 1.0] {
            let q = QuantizedReal::encode(x, 28).unwrap();
            assert!(q.value() > 0.0 && q.value() <= 1.0);
            assert!((q.value() - x).abs() <= 1.0 / (1u64 << 28) as f64);
            let rt = QuantizedReal::from_bits(&q.to_bits()).unwrap();
            assert_eq!(rt, q);
        }
        assert!(QuantizedReal::encode(0.0, 28).is_err());
        assert!(QuantizedReal::encode(1.5, 28).is_err());
    }

    #[test]
    fn sign_agreement_endpoints() {
        let ones = vec![true; 100];
        let zeros = vec![false; 100];
        assert_eq!(sign_agreement_estimate(&ones, &ones).unwrap(), 1.0);
        assert_eq!(sign_agreement_estimate(&ones, &zeros).unwrap(), -1.0);
        let mut half = vec![true; 100];
        for b in half.iter_mut().take(50) {
            *b = false;
        }
        let est = sign_agreement_estimate(&half, &ones).unwrap();
        assert!(est.abs() < 1e-12);
        assert!(sign_agreement_estimate(&ones, &zeros[..99]).is_err());
    }

    #[test]
    fn shared_randomness_is_identical_across_derivations() {
        let s1 = SharedRandomness::new(42);
        let s2 = SharedRandomness::new(42);
        assert_eq!(s1.net_vector(8, 3).unwrap(), s2.net_vector(8, 3).unwrap());
        assert_eq!(s1.hyperplane(8, 7), s2.hyperplane(8, 7));
        assert_ne!(s1.hyperplane(8, 7), s1.hyperplane(8, 8));
    }

    #[test]
    fn overlap_quantizer_widths() {
        assert_eq!(overlap_quantizer_bits(256), 28);
        assert_eq!(overlap_quantizer_bits(64), 26);
    }
}
