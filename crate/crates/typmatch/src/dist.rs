//! Joint distributions over pairs of edge values.
//!
//! Edges carry values from the alphabet `0..l`, with `0` read as "no edge".
//! A [`JointDist`] is an `l x l` matrix `p[x][y]`, the probability that a
//! vertex pair carries value `x` in the first graph and `y` in the second.
//! Entry validation is strict: probabilities must be nonnegative and sum to
//! one within a small tolerance, and nothing is ever renormalized behind the
//! caller's back.
//!
//! The file format is one line holding the alphabet size followed by one
//! line per matrix row:
//!
//! ```text
//! 2
//! 0.4 0.1
//! 0.1 0.4
//! ```

use rand::Rng;

use crate::rng::rng_from_seed;

/// An edge value. Alphabets are capped at 256 symbols so values fit in one
/// byte; desk-scale experiments use far fewer.
pub type Symbol = u8;

/// Largest supported alphabet.
pub const MAX_ALPHABET: usize = 256;

/// Sum tolerance for matrices built in code.
pub const SUM_TOL_CONSTRUCT: f64 = 1e-12;

/// Sum tolerance for matrices parsed from decimal text.
pub const SUM_TOL_PARSE: f64 = 1e-9;

/// Cells below this are legal but worth flagging: the asymptotic matching
/// guarantees assume probabilities bounded away from zero.
pub const NEAR_ZERO_WARN: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum DistError {
    #[error("alphabet size must be in 2..={MAX_ALPHABET}, got {0}")]
    AlphabetSize(usize),
    #[error("expected {expected} rows, got {got}")]
    RowCount { expected: usize, got: usize },
    #[error("row {row}: expected {expected} entries, got {got}")]
    RowLength { row: usize, expected: usize, got: usize },
    #[error("entry ({row},{col}) is negative: {value}")]
    Negative { row: usize, col: usize, value: f64 },
    #[error("entries sum to {sum}, outside tolerance {tol} of 1")]
    Unnormalized { sum: f64, tol: f64 },
    #[error("line {line}: cannot parse {token:?} as a number")]
    Number { line: usize, token: String },
    #[error("missing header line with the alphabet size")]
    MissingHeader,
    #[error("correlation must lie in [0,1], got {0}")]
    Correlation(f64),
}

/// Which logarithm mutual information is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    /// Bits.
    Two,
    /// Nats.
    E,
}

/// A validated joint distribution over pairs of edge values.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    l: usize,
    p: Vec<f64>, // row-major l x l
}

impl JointDist {
    /// Builds a distribution from matrix rows, validating shape, sign, and
    /// normalization (tolerance [`SUM_TOL_CONSTRUCT`]).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, DistError> {
        Self::from_rows_with_tol(rows, SUM_TOL_CONSTRUCT)
    }

    fn from_rows_with_tol(rows: &[Vec<f64>], tol: f64) -> Result<Self, DistError> {
        let l = rows.len();
        if !(2..=MAX_ALPHABET).contains(&l) {
            return Err(DistError::AlphabetSize(l));
        }
        let mut p = Vec::with_capacity(l * l);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != l {
                return Err(DistError::RowLength { row: i, expected: l, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0) {
                    return Err(DistError::Negative { row: i, col: j, value: v });
                }
                p.push(v);
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(DistError::Unnormalized { sum, tol });
        }
        Ok(JointDist { l, p })
    }

    /// Parses the text file format. Decimal text carries rounding the code
    /// path does not, so the sum tolerance is the looser [`SUM_TOL_PARSE`];
    /// a matrix outside it is rejected, never renormalized.
    ///
    /// ```
    /// use typmatch::dist::JointDist;
    /// let p = JointDist::parse("2\n0.4 0.1\n0.1 0.4\n").unwrap();
    /// assert_eq!(p.alphabet_size(), 2);
    /// assert_eq!(p.prob(0, 1), 0.1);
    /// ```
    pub fn parse(text: &str) -> Result<Self, DistError> {
        let mut lines = text.lines().enumerate().filter(|(_, s)| !s.trim().is_empty());
        let (hline, header) = lines.next().ok_or(DistError::MissingHeader)?;
        let l: usize = header
            .trim()
            .parse()
            .map_err(|_| DistError::Number { line: hline + 1, token: header.trim().to_string() })?;
        if !(2..=MAX_ALPHABET).contains(&l) {
            return Err(DistError::AlphabetSize(l));
        }
        let mut rows = Vec::with_capacity(l);
        for (lineno, line) in &mut lines {
            let mut row = Vec::with_capacity(l);
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| DistError::Number { line: lineno + 1, token: tok.to_string() })?;
                row.push(v);
            }
            rows.push(row);
        }
        if rows.len() != l {
            return Err(DistError::RowCount { expected: l, got: rows.len() });
        }
        Self::from_rows_with_tol(&rows, SUM_TOL_PARSE)
    }

    /// Serializes in the file format. Values print in shortest round-trip
    /// form, so `parse(p.file_string())` reproduces `p` exactly.
    pub fn file_string(&self) -> String {
        let mut out = format!("{}\n", self.l);
        for i in 0..self.l {
            let row: Vec<String> = (0..self.l).map(|j| format!("{}", self.prob(i, j))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// The one-parameter family `rho * diagonal(uniform) + (1 - rho) *
    /// product(uniform)`: independent at `rho = 0`, perfectly correlated at
    /// `rho = 1`, mutual information strictly increasing in between.
    pub fn correlated_uniform(l: usize, rho: f64) -> Result<Self, DistError> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(DistError::Correlation(rho));
        }
        if !(2..=MAX_ALPHABET).contains(&l) {
            return Err(DistError::AlphabetSize(l));
        }
        let off = (1.0 - rho) / (l * l) as f64;
        let diag = rho / l as f64 + off;
        let mut p = vec![off; l * l];
        for a in 0..l {
            p[a * l + a] = diag;
        }
        // Mixtures of exactly normalized parts stay within construct tolerance.
        let sum: f64 = p.iter().sum();
        debug_assert!((sum - 1.0).abs() <= SUM_TOL_CONSTRUCT);
        Ok(JointDist { l, p })
    }

    /// Uniform product distribution: the two values are independent.
    pub fn independent_uniform(l: usize) -> Result<Self, DistError> {
        Self::correlated_uniform(l, 0.0)
    }

    /// Uniform diagonal distribution: the two values always agree.
    pub fn perfectly_correlated(l: usize) -> Result<Self, DistError> {
        Self::correlated_uniform(l, 1.0)
    }

    pub fn alphabet_size(&self) -> usize {
        self.l
    }

    /// Cell probability. Panics if an index is outside the alphabet.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        assert!(x < self.l && y < self.l, "symbol outside alphabet");
        self.p[x * self.l + y]
    }

    /// Row and column marginals, in that order.
    pub fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let mut px = vec![0.0; self.l];
        let mut py = vec![0.0; self.l];
        for x in 0..self.l {
            for y in 0..self.l {
                px[x] += self.p[x * self.l + y];
                py[y] += self.p[x * self.l + y];
            }
        }
        (px, py)
    }

    /// Smallest cell probability. Cells below [`NEAR_ZERO_WARN`] deserve a
    /// warning at the tool level.
    pub fn min_cell(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Mutual information of the pair, `sum p log(p / (px py))`, with the
    /// `0 log 0 = 0` convention. Nonnegative; zero exactly when the matrix
    /// is a product of its marginals.
    ///
    /// ```
    /// use typmatch::dist::{JointDist, LogBase};
    /// let p = JointDist::perfectly_correlated(2).unwrap();
    /// assert_eq!(p.mutual_information(LogBase::Two), 1.0);
    /// ```
    pub fn mutual_information(&self, base: LogBase) -> f64 {
        let (px, py) = self.marginals();
        let mut nats = 0.0;
        for x in 0..self.l {
            for y in 0..self.l {
                let p = self.p[x * self.l + y];
                if p > 0.0 {
                    // p > 0 forces both marginals positive. The ratio form
                    // keeps exact product matrices at exactly log(1) = 0.
                    nats += p * (p / (px[x] * py[y])).ln();
                }
            }
        }
        let nats = nats.max(0.0);
        match base {
            LogBase::E => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }

    /// Draws `count` i.i.d. value pairs. The same seed yields the same
    /// sequence on every platform.
    pub fn sample_pairs(&self, count: usize, seed: u64) -> Vec<(Symbol, Symbol)> {
        let mut rng = rng_from_seed(seed);
        self.sample_pairs_with(count, &mut rng)
    }

    /// As [`sample_pairs`](Self::sample_pairs) but drawing from a caller
    /// supplied generator, for callers that split one seed across stages.
    pub fn sample_pairs_with<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<(Symbol, Symbol)> {
        // Inverse CDF over the flattened matrix.
        let mut cum = Vec::with_capacity(self.l * self.l);
        let mut acc = 0.0;
        for &v in &self.p {
            acc += v;
            cum.push(acc);
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let u: f64 = rng.gen();
            let mut cell = cum.partition_point(|&c| c <= u);
            if cell >= cum.len() {
                cell = cum.len() - 1;
            }
            out.push(((cell / self.l) as Symbol, (cell % self.l) as Symbol));
        }
        out
    }
}
