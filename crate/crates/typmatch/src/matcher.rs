//! Recovering the hidden labeling of an anonymized graph pair.
//!
//! A candidate labeling `sigma` is scored by how far the edge values of
//! the first graph, read through `sigma`, sit from joint typicality with
//! the anonymized partner. The exhaustive matcher enumerates all `n!`
//! labelings, keeps the typical ones, and answers with a uniform draw
//! from that set; the greedy matcher hill-climbs the score with pairwise
//! swaps from random starts and is honest about being a heuristic.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::dist::JointDist;
use crate::graph::{pair_count, LabeledGraph, MatchInstance};
use crate::perm::{factorial, Permutation};
use crate::rng::{derive_seed, rng_from_seed, streams};
use crate::typicality::JointType;

#[derive(Debug, thiserror::Error)]
pub enum MatchError {
    #[error("exhaustive search over {n}! labelings refused; cap is n <= {max}")]
    TooLargeForExhaustive { n: usize, max: usize },
    #[error("exhaustive cap {0} too large; ranks are enumerated in 64 bits, keep it <= 20")]
    CapTooLarge(usize),
    #[error("epsilon must be positive, got {0}")]
    EpsilonRange(f64),
    #[error("greedy search needs at least one restart and one pass")]
    DegenerateSearch,
}

/// How the typicality threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonChoice {
    /// The shrinking schedule [`epsilon_auto`].
    Auto,
    Fixed(f64),
}

impl EpsilonChoice {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            EpsilonChoice::Auto => epsilon_auto(n),
            EpsilonChoice::Fixed(e) => e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone)]
pub struct MatchConfig {
    pub epsilon: EpsilonChoice,
    pub mode: SearchMode,
    /// Exhaustive search is refused above this vertex count.
    pub max_exhaustive_n: usize,
    /// Master seed for the candidate draw and the greedy restarts.
    pub seed: u64,
    /// Greedy only: number of independent random starts.
    pub restarts: usize,
    /// Greedy only: cap on full sweeps per start.
    pub max_passes: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            epsilon: EpsilonChoice::Auto,
            mode: SearchMode::Exhaustive,
            max_exhaustive_n: 10,
            seed: 0,
            restarts: 32,
            max_passes: 50,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        if let EpsilonChoice::Fixed(e) = self.epsilon {
            if !(e > 0.0) {
                return Err(MatchError::EpsilonRange(e));
            }
        }
        if self.max_exhaustive_n > 20 {
            return Err(MatchError::CapTooLarge(self.max_exhaustive_n));
        }
        if self.restarts == 0 || self.max_passes == 0 {
            return Err(MatchError::DegenerateSearch);
        }
        Ok(())
    }

    fn resolve_epsilon(&self, n: usize) -> f64 {
        self.epsilon.resolve(n)
    }
}

/// Default threshold schedule over the `N = n(n-1)/2` vertex pairs:
/// `4 ln(N) / N`, floored so the tiniest graphs keep a positive value.
/// Shrinks slowly enough that the true labeling stays typical with high
/// probability, fast enough that wrong labelings stop being typical as
/// `n` grows.
pub fn epsilon_auto(n: usize) -> f64 {
    let pairs = pair_count(n);
    4.0 * ((pairs.max(2) as f64).ln()) / pairs.max(1) as f64
}

/// Joint empirical counts of the pair `(g1 read through sigma, g2a)`:
/// cell `(x, y)` counts vertex pairs `{i, j}` with
/// `g1.value(sigma(i), sigma(j)) = x` and `g2a.value(i, j) = y`.
pub fn relabeled_joint_type(
    g1: &LabeledGraph,
    g2a: &LabeledGraph,
    sigma: &Permutation,
) -> JointType {
    let n = g1.n();
    assert_eq!(g2a.n(), n, "vertex count mismatch");
    assert_eq!(sigma.n(), n, "labeling size mismatch");
    assert_eq!(g1.alphabet_size(), g2a.alphabet_size(), "alphabet mismatch");
    let mut jt = JointType::empty(g1.alphabet_size(), pair_count(n));
    for i in 0..n {
        for j in (i + 1)..n {
            jt.record(
                g1.value(sigma.image(i), sigma.image(j)) as usize,
                g2a.value(i, j) as usize,
            );
        }
    }
    jt
}

/// Worst-cell deviation of the relabeled pair from `dist`; the labeling
/// is typical at threshold `epsilon` iff this is at most `epsilon`.
pub fn typicality_score(
    g1: &LabeledGraph,
    g2a: &LabeledGraph,
    dist: &JointDist,
    sigma: &Permutation,
) -> f64 {
    relabeled_joint_type(g1, g2a, sigma).max_deviation(dist)
}

/// All labelings typical at `epsilon`, in lexicographic order of their
/// image tables. Work is sharded over rank blocks; each block walks its
/// labelings by successor stepping, so the order is deterministic.
pub fn candidate_set_exhaustive(
    g1: &LabeledGraph,
    g2a: &LabeledGraph,
    dist: &JointDist,
    epsilon: f64,
    max_n: usize,
) -> Result<Vec<Permutation>, MatchError> {
    let n = g1.n();
    if n > max_n {
        return Err(MatchError::TooLargeForExhaustive { n, max: max_n });
    }
    if max_n > 20 {
        return Err(MatchError::CapTooLarge(max_n));
    }
    let total = factorial(n) as u64;
    const BLOCK: u64 = 1 << 12;
    let blocks = total.div_ceil(BLOCK);
    let found: Vec<Vec<Permutation>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(total);
            let mut sigma = Permutation::nth(n, start as u128).expect("rank below n!");
            let mut out = Vec::new();
            for rank in start..end {
                if rank != start {
                    sigma.advance();
                }
                if typicality_score(g1, g2a, dist, &sigma) <= epsilon {
                    out.push(sigma.clone());
                }
            }
            out
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}

/// What one matching run found.
#[derive(Debug, Clone)]
pub struct MatchResult {
    /// The labeling answered with.
    pub chosen: Permutation,
    /// Exhaustive: size of the typical set. Greedy: distinct typical
    /// labelings among the restart endpoints.
    pub candidate_count: usize,
    /// Fraction of vertices the chosen labeling places correctly.
    pub correct_fraction: f64,
    /// Vertices placed incorrectly, `n - agreement`.
    pub mismatch_count: usize,
    /// Typicality score of the chosen labeling.
    pub max_deviation: f64,
    /// Candidates other than the truth that relabel the anonymized graph
    /// to exactly the same graph as the truth does. Such ties are
    /// unwinnable by any structure-based matcher.
    pub automorphism_ties: usize,
    /// True when the answer came from the greedy heuristic, whose
    /// candidate pool is not the full typical set.
    pub heuristic: bool,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub enum MatchOutcome {
    Matched(MatchResult),
    /// The search found no labeling typical at the threshold it ran with.
    NoTypicalLabeling { epsilon: f64 },
}

/// Runs the configured matcher on one instance.
pub fn match_instance(
    inst: &MatchInstance,
    config: &MatchConfig,
) -> Result<MatchOutcome, MatchError> {
    config.validate()?;
    let n = inst.g1.n();
    let epsilon = config.resolve_epsilon(n);
    let started = Instant::now();
    let (candidates, heuristic) = match config.mode {
        SearchMode::Exhaustive => (
            candidate_set_exhaustive(
                &inst.g1,
                &inst.g2_anon,
                &inst.dist,
                epsilon,
                config.max_exhaustive_n,
            )?,
            false,
        ),
        SearchMode::Greedy => (greedy_candidates(inst, epsilon, config), true),
    };
    if candidates.is_empty() {
        return Ok(MatchOutcome::NoTypicalLabeling { epsilon });
    }
    let chosen = if heuristic {
        // Greedy endpoints arrive best-first; answer with the best.
        candidates[0].clone()
    } else {
        let mut rng = rng_from_seed(derive_seed(config.seed, &[streams::PICK]));
        candidates[rng.gen_range(0..candidates.len())].clone()
    };

    let mismatch_count = chosen.mismatch_count(&inst.secret);
    let truth_graph = inst.g2_anon.relabel(&inst.secret);
    let automorphism_ties = candidates
        .iter()
        .filter(|c| **c != inst.secret && inst.g2_anon.relabel(c) == truth_graph)
        .count();
    Ok(MatchOutcome::Matched(MatchResult {
        max_deviation: typicality_score(&inst.g1, &inst.g2_anon, &inst.dist, &chosen),
        candidate_count: candidates.len(),
        correct_fraction: (n - mismatch_count) as f64 / n as f64,
        mismatch_count,
        automorphism_ties,
        heuristic,
        elapsed: started.elapsed(),
        chosen,
    }))
}

/// (max deviation, total deviation) of a joint type. The search compares
/// these lexicographically: the max alone is piecewise constant under
/// most swaps, and the L1 term breaks those plateaus while never letting
/// the max grow.
fn deviation_scores(jt: &JointType, dist: &JointDist) -> (f64, f64) {
    let devs = jt.deviations(dist);
    let max = devs.iter().copied().fold(0.0, f64::max);
    (max, devs.iter().sum())
}

/// Hill-climbs the typicality score from `start` by pairwise swaps,
/// first improvement in a fixed scan order, until a full sweep finds no
/// strictly better swap or `max_passes` sweeps elapse. Improvement is
/// judged on (max deviation, total deviation) lexicographically; the
/// returned score is the max deviation. A start that is already a local
/// minimum, an exactly aligned labeling included, is returned unchanged.
pub fn greedy_descend(
    g1: &LabeledGraph,
    g2a: &LabeledGraph,
    dist: &JointDist,
    start: &Permutation,
    max_passes: usize,
) -> (Permutation, f64) {
    let n = g1.n();
    let mut images: Vec<usize> = start.images().to_vec();
    let mut jt = relabeled_joint_type(g1, g2a, start);
    let mut score = deviation_scores(&jt, dist);
    for _ in 0..max_passes {
        let mut improved = false;
        for a in 0..n.saturating_sub(1) {
            for b in (a + 1)..n {
                swap_shift(&mut jt, g1, g2a, &images, a, b, true);
                let trial = deviation_scores(&jt, dist);
                if trial < score {
                    score = trial;
                    images.swap(a, b);
                    improved = true;
                } else {
                    swap_shift(&mut jt, g1, g2a, &images, a, b, false);
                }
            }
        }
        if !improved {
            break;
        }
    }
    (Permutation::from_images(images).expect("swaps preserve bijectivity"), score.0)
}

/// Moves the joint type from labeling `images` to the one with positions
/// `a` and `b` swapped (`forward`), or back. Only pairs touching `a` or
/// `b` shift cells; the `(a, b)` pair itself is unordered and stays put.
fn swap_shift(
    jt: &mut JointType,
    g1: &LabeledGraph,
    g2a: &LabeledGraph,
    images: &[usize],
    a: usize,
    b: usize,
    forward: bool,
) {
    for k in 0..images.len() {
        if k == a || k == b {
            continue;
        }
        let ya = g2a.value(a, k) as usize;
        let yb = g2a.value(b, k) as usize;
        let xa = g1.value(images[a], images[k]) as usize;
        let xb = g1.value(images[b], images[k]) as usize;
        if forward {
            jt.unrecord(xa, ya);
            jt.record(xb, ya);
            jt.unrecord(xb, yb);
            jt.record(xa, yb);
        } else {
            jt.unrecord(xb, ya);
            jt.record(xa, ya);
            jt.unrecord(xa, yb);
            jt.record(xb, yb);
        }
    }
}

/// Runs the restarts in parallel and returns the distinct typical
/// endpoints, best score first (ties by restart index), so index 0 is
/// the answer. Restart `r` seeds its own stream, which keeps the whole
/// search independent of thread scheduling.
fn greedy_candidates(
    inst: &MatchInstance,
    epsilon: f64,
    config: &MatchConfig,
) -> Vec<Permutation> {
    let n = inst.g1.n();
    let endpoints: Vec<(Permutation, f64)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng =
                rng_from_seed(derive_seed(config.seed, &[streams::GREEDY, r as u64]));
            let start = Permutation::random(n, &mut rng);
            greedy_descend(&inst.g1, &inst.g2_anon, &inst.dist, &start, config.max_passes)
        })
        .collect();
    let mut order: Vec<usize> = (0..endpoints.len()).collect();
    order.sort_by(|&i, &j| {
        endpoints[i].1.partial_cmp(&endpoints[j].1).expect("scores are finite").then(i.cmp(&j))
    });
    let mut out: Vec<Permutation> = Vec::new();
    for i in order {
        let (sigma, score) = &endpoints[i];
        if *score <= epsilon && !out.contains(sigma) {
            out.push(sigma.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typicality::JointType;
    use approx::assert_abs_diff_eq;

    fn instance(rho: f64, n: usize, seed: u64) -> MatchInstance {
        let dist = JointDist::correlated_uniform(2, rho).unwrap();
        MatchInstance::generate(&dist, n, seed).unwrap()
    }

    #[test]
    fn auto_epsilon_shrinks_but_stays_positive() {
        assert!(epsilon_auto(1).is_finite() && epsilon_auto(1) > 0.0);
        assert_abs_diff_eq!(epsilon_auto(2), 4.0 * 2f64.ln(), epsilon = 1e-15);
        let n8 = epsilon_auto(8);
        assert_abs_diff_eq!(n8, 4.0 * 28f64.ln() / 28.0, epsilon = 1e-15);
        for n in 3..40 {
            assert!(epsilon_auto(n + 1) < epsilon_auto(n));
        }
    }

    #[test]
    fn joint_type_of_the_truth_matches_the_aligned_pair() {
        let inst = instance(0.8, 8, 3);
        let aligned = inst.aligned_partner();
        let via_sigma = relabeled_joint_type(&inst.g1, &inst.g2_anon, &inst.secret);
        let direct = JointType::from_sequences(2, inst.g1.ut(), aligned.ut());
        assert_eq!(via_sigma, direct);
    }

    #[test]
    fn exhaustive_at_full_correlation_recovers_the_graph() {
        // At rho = 1 and eps below 1/21 the off-diagonal cells must be
        // empty, so every candidate relabels the anonymized graph to g1
        // itself and being right up to automorphism is guaranteed. The
        // set is nonempty only when the instance's own edge count is
        // balanced enough, so some seeds legitimately come up empty.
        let mut matched = 0;
        for seed in 0..30 {
            let inst = instance(1.0, 7, seed);
            let config = MatchConfig {
                epsilon: EpsilonChoice::Fixed(0.03),
                seed,
                ..MatchConfig::default()
            };
            match match_instance(&inst, &config).unwrap() {
                MatchOutcome::Matched(r) => {
                    matched += 1;
                    assert!(!r.heuristic);
                    assert!(r.candidate_count >= 1);
                    assert!(r.max_deviation <= 0.03);
                    assert_eq!(inst.g2_anon.relabel(&r.chosen), inst.g1);
                    // Every candidate maps to the same graph, so all but
                    // the truth are ties.
                    assert_eq!(r.automorphism_ties, r.candidate_count - 1);
                    assert_abs_diff_eq!(
                        r.correct_fraction,
                        (7 - r.mismatch_count) as f64 / 7.0,
                        epsilon = 1e-15
                    );
                }
                MatchOutcome::NoTypicalLabeling { .. } => {
                    // Consistency: empty means even the truth deviates.
                    let jt = relabeled_joint_type(&inst.g1, &inst.g2_anon, &inst.secret);
                    assert!(jt.max_deviation(&inst.dist) > 0.03);
                }
            }
        }
        assert!(matched >= 1, "no seed in 0..30 produced a typical instance");
    }

    #[test]
    fn truth_is_a_candidate_exactly_when_the_set_is_nonempty() {
        // At rho = 1 with eps below 1/21 every candidate has the same
        // joint type as the truth, so membership is all-or-nothing.
        let mut nonempty = 0;
        for seed in 0..20 {
            let inst = instance(1.0, 7, seed);
            let cands =
                candidate_set_exhaustive(&inst.g1, &inst.g2_anon, &inst.dist, 0.03, 10).unwrap();
            if !cands.is_empty() {
                nonempty += 1;
                assert!(cands.contains(&inst.secret));
            }
        }
        assert!(nonempty >= 1, "no seed in 0..20 produced candidates");
    }

    #[test]
    fn candidates_come_out_in_lexicographic_order() {
        // A threshold of 1 admits all n! labelings, so this checks the
        // block-parallel enumeration end to end.
        let inst = instance(0.5, 6, 2);
        let cands =
            candidate_set_exhaustive(&inst.g1, &inst.g2_anon, &inst.dist, 1.0, 10).unwrap();
        assert_eq!(cands.len(), 720);
        for w in cands.windows(2) {
            assert!(w[0].images() < w[1].images());
        }
    }

    #[test]
    fn impossible_threshold_reports_empty() {
        let inst = instance(0.0, 7, 5);
        let config = MatchConfig {
            epsilon: EpsilonChoice::Fixed(0.001),
            seed: 5,
            ..MatchConfig::default()
        };
        match match_instance(&inst, &config).unwrap() {
            MatchOutcome::NoTypicalLabeling { epsilon } => assert_eq!(epsilon, 0.001),
            MatchOutcome::Matched(r) => panic!("unexpected match with {} candidates", r.candidate_count),
        }
    }

    #[test]
    fn exhaustive_cap_is_enforced() {
        let inst = instance(0.5, 11, 1);
        let err = match_instance(&inst, &MatchConfig::default());
        assert!(matches!(err, Err(MatchError::TooLargeForExhaustive { n: 11, max: 10 })));
        let config = MatchConfig { max_exhaustive_n: 25, ..MatchConfig::default() };
        assert!(matches!(config.validate(), Err(MatchError::CapTooLarge(25))));
    }

    #[test]
    fn config_validation_catches_nonsense() {
        let bad_eps = MatchConfig {
            epsilon: EpsilonChoice::Fixed(0.0),
            ..MatchConfig::default()
        };
        assert!(matches!(bad_eps.validate(), Err(MatchError::EpsilonRange(_))));
        let no_restarts = MatchConfig { restarts: 0, ..MatchConfig::default() };
        assert!(matches!(no_restarts.validate(), Err(MatchError::DegenerateSearch)));
    }

    #[test]
    fn matching_is_deterministic() {
        let inst = instance(0.9, 8, 21);
        let config = MatchConfig { seed: 21, ..MatchConfig::default() };
        let a = match_instance(&inst, &config).unwrap();
        let b = match_instance(&inst, &config).unwrap();
        match (a, b) {
            (MatchOutcome::Matched(x), MatchOutcome::Matched(y)) => {
                assert_eq!(x.chosen, y.chosen);
                assert_eq!(x.candidate_count, y.candidate_count);
                assert_eq!(x.automorphism_ties, y.automorphism_ties);
            }
            _ => panic!("rho=0.9 at n=8 with auto epsilon should match"),
        }
    }

    #[test]
    fn pick_seed_varies_the_draw_when_candidates_abound() {
        // Independent graphs with a generous threshold leave many typical
        // labelings; different seeds should not always agree.
        let inst = instance(0.0, 6, 2);
        let mut seen = std::collections::HashSet::new();
        for seed in 0..20 {
            let config = MatchConfig { seed, ..MatchConfig::default() };
            if let MatchOutcome::Matched(r) = match_instance(&inst, &config).unwrap() {
                seen.insert(r.chosen.clone());
            }
        }
        assert!(seen.len() > 1, "20 seeds all drew the same candidate");
    }

    /// An instance whose aligned pair has exactly balanced cell counts,
    /// so the hidden labeling scores exactly 0.
    fn balanced_instance(n: usize) -> MatchInstance {
        let pairs = n * (n - 1) / 2;
        assert_eq!(pairs % 2, 0, "need an even number of vertex pairs");
        let ut: Vec<u8> = (0..pairs).map(|i| (i % 2) as u8).collect();
        let g1 = LabeledGraph::new(n, 2, ut).unwrap();
        let images: Vec<usize> = (0..n).map(|i| (i + 3) % n).collect();
        let rho_perm = Permutation::from_images(images).unwrap();
        let g2_anon = g1.relabel(&rho_perm);
        MatchInstance {
            g1,
            g2_anon,
            secret: rho_perm.invert(),
            dist: JointDist::correlated_uniform(2, 1.0).unwrap(),
        }
    }

    #[test]
    fn greedy_descent_never_worsens_and_respects_local_minima() {
        // A zero-score start has nowhere to go: it must come back as is.
        let balanced = balanced_instance(12);
        assert_eq!(
            typicality_score(&balanced.g1, &balanced.g2_anon, &balanced.dist, &balanced.secret),
            0.0
        );
        let (end, score) = greedy_descend(
            &balanced.g1,
            &balanced.g2_anon,
            &balanced.dist,
            &balanced.secret,
            50,
        );
        assert_eq!(end, balanced.secret);
        assert_eq!(score, 0.0);
        // Arbitrary starts only descend.
        let inst = instance(1.0, 12, 9);
        let mut rng = crate::rng::rng_from_seed(14);
        for _ in 0..5 {
            let start = Permutation::random(12, &mut rng);
            let before = typicality_score(&inst.g1, &inst.g2_anon, &inst.dist, &start);
            let (end, after) =
                greedy_descend(&inst.g1, &inst.g2_anon, &inst.dist, &start, 50);
            assert!(after <= before);
            assert_abs_diff_eq!(
                after,
                typicality_score(&inst.g1, &inst.g2_anon, &inst.dist, &end),
                epsilon = 0.0
            );
        }
    }

    #[test]
    fn greedy_matches_are_flagged_heuristic_and_deterministic() {
        // Not every seed's instance admits a typical labeling, and hill
        // climbing may miss one that exists; what is guaranteed is that
        // repeated runs agree, and that some seed in a short scan works.
        let mut matched = 0;
        for seed in 0..10 {
            let inst = instance(1.0, 16, seed);
            let config = MatchConfig {
                mode: SearchMode::Greedy,
                epsilon: EpsilonChoice::Fixed(0.05),
                seed,
                ..MatchConfig::default()
            };
            let a = match_instance(&inst, &config).unwrap();
            let b = match_instance(&inst, &config).unwrap();
            match (a, b) {
                (MatchOutcome::Matched(x), MatchOutcome::Matched(y)) => {
                    matched += 1;
                    assert!(x.heuristic && y.heuristic);
                    assert_eq!(x.chosen, y.chosen);
                    assert_eq!(x.candidate_count, y.candidate_count);
                    assert!(x.max_deviation <= 0.05);
                }
                (
                    MatchOutcome::NoTypicalLabeling { .. },
                    MatchOutcome::NoTypicalLabeling { .. },
                ) => {}
                _ => panic!("greedy must be deterministic"),
            }
        }
        assert!(matched >= 1, "no seed in 0..10 found a typical labeling");
    }

    #[test]
    fn greedy_reports_empty_when_nothing_is_typical() {
        let inst = instance(0.0, 10, 6);
        let config = MatchConfig {
            mode: SearchMode::Greedy,
            epsilon: EpsilonChoice::Fixed(0.001),
            seed: 6,
            ..MatchConfig::default()
        };
        assert!(matches!(
            match_instance(&inst, &config).unwrap(),
            MatchOutcome::NoTypicalLabeling { .. }
        ));
    }
}
