//! Joint types, epsilon-typicality, and the probability that a permuted
//! pair of value sequences still looks jointly drawn.
//!
//! A pair of sequences is epsilon-typical for a distribution when every
//! cell of its empirical matrix sits within epsilon of the true cell
//! probability, in absolute terms, zero cells included. The interesting
//! quantity downstream is how likely typicality is to survive permuting
//! one sequence: [`exact_permutation_typicality`] enumerates it, a Monte
//! Carlo estimator brackets it at sizes enumeration cannot reach, and
//! [`typicality_bound`] gives the exponential upper bound the estimates
//! are compared against.

use rayon::prelude::*;

use crate::dist::{JointDist, Symbol};
use crate::perm::{CycleType, Permutation};
use crate::rng::{derive_seed, rng_from_seed, streams};

/// Cap on enumerated sequence pairs, `(l^2)^n`. The dense binary case on
/// twelve coordinates (about 1.7e7 states) stays enumerable; the next
/// size up is deferred to sampling.
pub const MAX_ENUM_STATES: u64 = 20_000_000;

#[derive(Debug, thiserror::Error)]
pub enum TypicalityError {
    #[error("enumeration needs {states} sequence pairs, over the cap of {max}")]
    EnumerationTooLarge { states: u128, max: u64 },
    #[error("cycle-length parameter t must be at least 2, got {0}")]
    BadT(usize),
}

/// Empirical cell counts of a paired sequence, with a fixed denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointType {
    l: usize,
    total: usize,
    counts: Vec<u32>,
}

impl JointType {
    /// All-zero counts that will be divided by `total` once filled.
    pub fn empty(l: usize, total: usize) -> Self {
        JointType { l, total, counts: vec![0; l * l] }
    }

    pub fn from_sequences(l: usize, xs: &[Symbol], ys: &[Symbol]) -> Self {
        assert_eq!(xs.len(), ys.len(), "sequence length mismatch");
        let mut jt = JointType::empty(l, xs.len());
        for (&x, &y) in xs.iter().zip(ys) {
            jt.record(x as usize, y as usize);
        }
        jt
    }

    pub fn record(&mut self, x: usize, y: usize) {
        self.counts[x * self.l + y] += 1;
    }

    pub fn unrecord(&mut self, x: usize, y: usize) {
        self.counts[x * self.l + y] -= 1;
    }

    pub fn count(&self, x: usize, y: usize) -> u32 {
        self.counts[x * self.l + y]
    }

    /// Empirical frequency of a cell; an empty sequence has frequency zero
    /// everywhere.
    pub fn fraction(&self, x: usize, y: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(x, y) as f64 / self.total as f64
        }
    }

    /// Per-cell absolute deviation from `dist`, row-major.
    pub fn deviations(&self, dist: &JointDist) -> Vec<f64> {
        assert_eq!(dist.alphabet_size(), self.l, "alphabet mismatch");
        let mut out = Vec::with_capacity(self.l * self.l);
        for x in 0..self.l {
            for y in 0..self.l {
                out.push((self.fraction(x, y) - dist.prob(x, y)).abs());
            }
        }
        out
    }

    pub fn max_deviation(&self, dist: &JointDist) -> f64 {
        self.deviations(dist).into_iter().fold(0.0, f64::max)
    }
}

/// The verdict of one typicality check, with the evidence.
#[derive(Debug, Clone)]
pub struct TypicalityReport {
    pub epsilon: f64,
    /// Per-cell absolute deviations, row-major.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub typical: bool,
}

impl TypicalityReport {
    /// Checks every cell, zero-probability cells included; the comparison
    /// is non-strict, so a deviation of exactly `epsilon` passes.
    pub fn evaluate(dist: &JointDist, xs: &[Symbol], ys: &[Symbol], epsilon: f64) -> Self {
        assert!(epsilon >= 0.0, "epsilon must be nonnegative");
        let jt = JointType::from_sequences(dist.alphabet_size(), xs, ys);
        let deviations = jt.deviations(dist);
        let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
        TypicalityReport { epsilon, deviations, max_deviation, typical: max_deviation <= epsilon }
    }
}

/// Probability that `n` i.i.d. draws from `dist`, with the second
/// coordinates rearranged by `perm`, land jointly epsilon-typical.
/// Computed by exhaustive enumeration of all `(l^2)^n` sequence pairs;
/// sizes over [`MAX_ENUM_STATES`] are refused.
///
/// The reduction runs in fixed chunks summed in index order, so the
/// result is bit-identical no matter how many threads participate.
pub fn exact_permutation_typicality(
    dist: &JointDist,
    perm: &Permutation,
    epsilon: f64,
) -> Result<f64, TypicalityError> {
    assert!(epsilon >= 0.0, "epsilon must be nonnegative");
    let n = perm.n();
    let l = dist.alphabet_size();
    let q = l * l;
    let states = (q as u128)
        .checked_pow(n as u32)
        .filter(|&s| s <= MAX_ENUM_STATES as u128)
        .ok_or(TypicalityError::EnumerationTooLarge {
            states: (q as u128).saturating_pow(n as u32),
            max: MAX_ENUM_STATES,
        })?;
    let total = states as u64;

    // cell_p doubles as the weight table: digit d encodes the value pair
    // (d / l, d % l) at one coordinate.
    let cell_p: Vec<f64> = (0..q).map(|d| dist.prob(d / l, d % l)).collect();
    let pi = perm.images();

    const CHUNK: u64 = 1 << 14;
    let chunks = total.div_ceil(CHUNK).max(1);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            // Little-endian digits of the state in base l^2, advanced as
            // an odometer instead of re-divided each step.
            let mut digits = vec![0usize; n];
            let mut k = start;
            for d in digits.iter_mut() {
                *d = (k % q as u64) as usize;
                k /= q as u64;
            }
            let mut ys = vec![0usize; n];
            let mut counts = vec![0u32; q];
            let mut sum = 0.0;
            for state in start..end {
                if state != start {
                    for d in digits.iter_mut() {
                        *d += 1;
                        if *d == q {
                            *d = 0;
                        } else {
                            break;
                        }
                    }
                }
                let mut w = 1.0;
                for i in 0..n {
                    w *= cell_p[digits[i]];
                    ys[i] = digits[i] % l;
                }
                counts.fill(0);
                for i in 0..n {
                    let x = digits[i] / l;
                    counts[x * l + ys[pi[i]]] += 1;
                }
                let typical = counts
                    .iter()
                    .zip(&cell_p)
                    .all(|(&c, &p)| (c as f64 / n as f64 - p).abs() <= epsilon);
                if typical {
                    sum += w;
                }
            }
            sum
        })
        .collect();
    Ok(partials.iter().sum())
}

/// A sampled estimate with its exact (Clopper-Pearson) 95% interval.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
    pub successes: u64,
}

/// Monte Carlo counterpart of [`exact_permutation_typicality`] for sizes
/// the enumeration cap refuses. Deterministic per seed.
pub fn mc_permutation_typicality(
    dist: &JointDist,
    perm: &Permutation,
    epsilon: f64,
    trials: u64,
    seed: u64,
) -> McEstimate {
    assert!(epsilon >= 0.0, "epsilon must be nonnegative");
    assert!(trials > 0, "need at least one trial");
    let n = perm.n();
    let l = dist.alphabet_size();
    let pi = perm.images();
    let mut rng = rng_from_seed(derive_seed(seed, &[streams::MC]));
    let mut successes = 0u64;
    for _ in 0..trials {
        let draws = dist.sample_pairs_with(n, &mut rng);
        let mut jt = JointType::empty(l, n);
        for i in 0..n {
            jt.record(draws[i].0 as usize, draws[pi[i]].1 as usize);
        }
        if jt.max_deviation(dist) <= epsilon {
            successes += 1;
        }
    }
    let estimate = successes as f64 / trials as f64;
    let (ci_lo, ci_hi) = clopper_pearson95(successes, trials);
    McEstimate { estimate, ci_lo, ci_hi, trials, successes }
}

/// Inverse of the regularized incomplete beta in its x argument, by plain
/// bisection. A fixed iteration count takes the bracket below f64 spacing
/// and keeps the result deterministic.
fn beta_inv(a: f64, b: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if statrs::function::beta::beta_reg(a, b, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided 95% binomial interval. All successes or none pin the
/// corresponding endpoint at 1 or 0.
pub fn clopper_pearson95(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let (k, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 { 0.0 } else { beta_inv(k, n - k + 1.0, 0.025) };
    let hi = if successes == trials { 1.0 } else { beta_inv(k + 1.0, n - k, 0.975) };
    (lo, hi)
}

/// The exponential decay bound on permuted-pair typicality, with the
/// conditions it needs spelled out.
#[derive(Debug, Clone)]
pub struct TypicalityBound {
    pub n: usize,
    pub epsilon: f64,
    /// Cycle-length scale in the exponent: the permutation decomposes
    /// into at least `n / t` independent blocks.
    pub t: usize,
    pub mi_nats: f64,
    /// Number of cells, `l^2`; scales epsilon in the decay rate.
    pub alphabet_product: usize,
    /// `exp(-(n / t) (I - l^2 epsilon))` when valid, the vacuous 1
    /// otherwise.
    pub bound: f64,
    /// Whether the bound's hypotheses hold; when false, `bound` is 1 and
    /// `note` says why.
    pub valid: bool,
    pub note: Option<String>,
}

/// Evaluates the decay bound for permutations of the given cycle type.
///
/// `t` defaults to the longest cycle length (2 for the identity) and may
/// be overridden; values below 2 are a hard error. Failing any other
/// hypothesis is not an error but makes the bound vacuous: epsilon must
/// lie strictly inside `(0, I/l^2)` and the permutation must move every
/// point. A positive fixed-point count below `sqrt(n)` can be vouched
/// for with `trust_positive_m`, which keeps the bound but records the
/// leap of faith in `note`.
pub fn typicality_bound(
    dist: &JointDist,
    ct: &CycleType,
    epsilon: f64,
    t_override: Option<usize>,
    trust_positive_m: bool,
) -> Result<TypicalityBound, TypicalityError> {
    let t = t_override.unwrap_or_else(|| ct.lengths.first().copied().unwrap_or(2).max(2));
    if t < 2 {
        return Err(TypicalityError::BadT(t));
    }
    let n = ct.n();
    let m = ct.fixed_points;
    let l = dist.alphabet_size();
    let alphabet_product = l * l;
    let mi_nats = dist.mutual_information(crate::dist::LogBase::E);
    let rate = mi_nats - alphabet_product as f64 * epsilon;

    let mut valid = true;
    let mut note = None;
    if epsilon <= 0.0 || rate <= 0.0 {
        valid = false;
        note = Some(format!(
            "epsilon must lie in (0, I/l^2) = (0, {}); got {epsilon}",
            mi_nats / alphabet_product as f64
        ));
    } else if m > 0 {
        if trust_positive_m && (m * m) < n {
            note = Some(format!("{m} fixed points accepted on request"));
        } else {
            valid = false;
            note = Some(format!(
                "decay is established for fixed-point-free permutations, got {m} fixed points"
            ));
        }
    }

    let bound = if valid { (-(n as f64 / t as f64) * rate).exp() } else { 1.0 };
    Ok(TypicalityBound { n, epsilon, t, mi_nats, alphabet_product, bound, valid, note })
}
