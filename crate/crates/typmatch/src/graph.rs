//! Complete labeled graphs on `n` vertices and their relabelings.
//!
//! Every unordered vertex pair carries a value from `0..l`, value `0`
//! meaning "no edge", so a graph is just its upper triangle: a vector of
//! `n(n-1)/2` values, row-major over pairs `(i, j)` with `i < j`. Vertices
//! are numbered `0..n` in code; files and messages print them 1-based.

use crate::dist::{JointDist, Symbol, MAX_ALPHABET};
use crate::perm::Permutation;
use crate::rng::{derive_seed, rng_from_seed, streams};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("alphabet size must be in 2..={MAX_ALPHABET}, got {0}")]
    AlphabetSize(usize),
    #[error("vertex count must be at least 1, got 0")]
    NoVertices,
    #[error("upper triangle for n={n} needs {expected} values, got {got}")]
    TriangleLength { n: usize, expected: usize, got: usize },
    #[error("pair {pos} carries value {value}, outside alphabet 0..{l}")]
    ValueRange { pos: usize, value: usize, l: usize },
    #[error("graph file: {0}")]
    Format(String),
}

/// Number of unordered vertex pairs, `n(n-1)/2`.
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Position of pair `(i, j)`, `i < j`, in the row-major upper triangle.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + j - i - 1
}

/// A complete graph on `0..n` with a value from `0..l` on every pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    n: usize,
    l: usize,
    ut: Vec<Symbol>,
}

impl LabeledGraph {
    pub fn new(n: usize, l: usize, ut: Vec<Symbol>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::NoVertices);
        }
        if !(2..=MAX_ALPHABET).contains(&l) {
            return Err(GraphError::AlphabetSize(l));
        }
        if ut.len() != pair_count(n) {
            return Err(GraphError::TriangleLength { n, expected: pair_count(n), got: ut.len() });
        }
        if let Some(pos) = ut.iter().position(|&v| (v as usize) >= l) {
            return Err(GraphError::ValueRange { pos, value: ut[pos] as usize, l });
        }
        Ok(LabeledGraph { n, l, ut })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.l
    }

    /// The upper triangle, row-major over pairs `(i, j)` with `i < j`.
    pub fn ut(&self) -> &[Symbol] {
        &self.ut
    }

    /// Value on the unordered pair `{i, j}`; the order of the arguments
    /// does not matter. Panics on `i == j` or an out-of-range vertex.
    pub fn value(&self, i: usize, j: usize) -> Symbol {
        assert!(i != j, "no value on a vertex with itself");
        assert!(i < self.n && j < self.n, "vertex outside 0..{}", self.n);
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.ut[pair_index(self.n, a, b)]
    }

    /// Renames vertex `i` to `rho(i)`: the result `h` satisfies
    /// `h.value(rho(i), rho(j)) == g.value(i, j)` for every pair.
    pub fn relabel(&self, rho: &Permutation) -> LabeledGraph {
        assert_eq!(rho.n(), self.n, "permutation size mismatch");
        let mut ut = vec![0; self.ut.len()];
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let (a, b) = {
                    let (ri, rj) = (rho.image(i), rho.image(j));
                    if ri < rj { (ri, rj) } else { (rj, ri) }
                };
                ut[pair_index(self.n, a, b)] = self.ut[pair_index(self.n, i, j)];
            }
        }
        LabeledGraph { n: self.n, l: self.l, ut }
    }

    /// Serializes as a graph file: `n` and `l` on the first line, then the
    /// upper triangle on one line.
    pub fn file_string(&self) -> String {
        let vals: Vec<String> = self.ut.iter().map(|v| v.to_string()).collect();
        format!("{} {}\n{}\n", self.n, self.l, vals.join(" "))
    }

    /// Parses the [`file_string`](Self::file_string) format. Whitespace in
    /// the triangle is free-form; the value count is not.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().filter(|s| !s.trim().is_empty());
        let header = lines.next().ok_or_else(|| GraphError::Format("empty file".into()))?;
        let mut head = header.split_whitespace();
        let n: usize = head
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GraphError::Format("header must start with the vertex count".into()))?;
        let l: usize = head
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GraphError::Format("header must give the alphabet size".into()))?;
        if head.next().is_some() {
            return Err(GraphError::Format("header has trailing tokens".into()));
        }
        let mut ut = Vec::with_capacity(pair_count(n));
        for line in lines {
            for tok in line.split_whitespace() {
                let v: usize = tok
                    .parse()
                    .map_err(|_| GraphError::Format(format!("bad value {tok:?}")))?;
                if v >= MAX_ALPHABET {
                    return Err(GraphError::ValueRange { pos: ut.len(), value: v, l });
                }
                ut.push(v as Symbol);
            }
        }
        Self::new(n, l, ut)
    }
}

/// Draws a correlated graph pair on the same vertex set: the values on
/// each pair of vertices are one draw from `dist`, independent across
/// vertex pairs, first coordinate to the first graph. Panics on `n == 0`.
pub fn generate_correlated_pair<R: rand::Rng>(
    dist: &JointDist,
    n: usize,
    rng: &mut R,
) -> (LabeledGraph, LabeledGraph) {
    assert!(n > 0, "need at least one vertex");
    let draws = dist.sample_pairs_with(pair_count(n), rng);
    let l = dist.alphabet_size();
    let (mut ut1, mut ut2) = (Vec::with_capacity(draws.len()), Vec::with_capacity(draws.len()));
    for (x, y) in draws {
        ut1.push(x);
        ut2.push(y);
    }
    (
        LabeledGraph::new(n, l, ut1).expect("sampled values lie in the alphabet"),
        LabeledGraph::new(n, l, ut2).expect("sampled values lie in the alphabet"),
    )
}

/// Hides the vertex names behind a uniformly random relabeling, returning
/// the relabeled graph and the relabeling used.
pub fn anonymize<R: rand::Rng>(g: &LabeledGraph, rng: &mut R) -> (LabeledGraph, Permutation) {
    let rho = Permutation::random(g.n(), rng);
    (g.relabel(&rho), rho)
}

/// One matching problem: a graph, the anonymized version of its correlated
/// partner, and the labeling that undoes the anonymization.
#[derive(Debug, Clone)]
pub struct MatchInstance {
    pub g1: LabeledGraph,
    pub g2_anon: LabeledGraph,
    /// Ground truth: `g2_anon.relabel(&secret)` is aligned with `g1`.
    pub secret: Permutation,
    pub dist: JointDist,
}

impl MatchInstance {
    /// Generates a full instance from one seed. The pair draw and the
    /// anonymization use separate streams derived from it, so instances
    /// are reproducible and distinct seeds decorrelate.
    pub fn generate(dist: &JointDist, n: usize, seed: u64) -> Result<MatchInstance, GraphError> {
        if n == 0 {
            return Err(GraphError::NoVertices);
        }
        let mut pair_rng = rng_from_seed(derive_seed(seed, &[streams::PAIR]));
        let (g1, g2) = generate_correlated_pair(dist, n, &mut pair_rng);
        let mut anon_rng = rng_from_seed(derive_seed(seed, &[streams::ANON]));
        let (g2_anon, rho) = anonymize(&g2, &mut anon_rng);
        Ok(MatchInstance { g1, g2_anon, secret: rho.invert(), dist: dist.clone() })
    }

    /// The partner graph with the anonymization undone; pair `(i, j)` here
    /// was drawn jointly with pair `(i, j)` of `g1`.
    pub fn aligned_partner(&self) -> LabeledGraph {
        self.g2_anon.relabel(&self.secret)
    }
}
