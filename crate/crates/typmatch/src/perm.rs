//! Permutations of `n` points, their cycle structure, and enumeration order.
//!
//! Internally a permutation is its image table on `0..n`. Everything a
//! human reads or writes (cycle notation, cycle types, labeling files)
//! numbers the points `1..=n`; the conversion happens at those boundaries
//! and nowhere else.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, thiserror::Error)]
pub enum PermError {
    #[error("image table is not a permutation of 0..{n}: {reason}")]
    NotBijective { n: usize, reason: String },
    #[error("point {point} outside 1..={n}")]
    PointRange { point: usize, n: usize },
    #[error("point {0} appears in two cycles")]
    DuplicatePoint(usize),
    #[error("cycle type needs every length >= 2, got {0}")]
    ShortCycle(usize),
    #[error("rank {rank} out of range for n={n}")]
    RankRange { rank: u128, n: usize },
    #[error("cannot parse cycle type {0:?}, expected e.g. \"m=1;3,2\"")]
    CycleTypeSyntax(String),
    #[error("labeling file: {0}")]
    LabelingFormat(String),
}

/// A permutation of the points `0..n`, stored as its image table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    // invariant: images is a bijection on 0..images.len()
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    /// Validates that `images` is a bijection on `0..images.len()`.
    pub fn from_images(images: Vec<usize>) -> Result<Self, PermError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &im in &images {
            if im >= n {
                return Err(PermError::NotBijective {
                    n,
                    reason: format!("image {im} out of range"),
                });
            }
            if seen[im] {
                return Err(PermError::NotBijective {
                    n,
                    reason: format!("image {im} repeated"),
                });
            }
            seen[im] = true;
        }
        Ok(Permutation { images })
    }

    /// Uniformly random permutation from the supplied generator.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mut images: Vec<usize> = (0..n).collect();
        images.shuffle(rng);
        Permutation { images }
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    /// Image of a 0-based point.
    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// Sends position `i` of the output to entry `self(i)` of the input:
    /// the output reads `(s[p(0)], s[p(1)], ...)`.
    ///
    /// ```
    /// use typmatch::perm::Permutation;
    /// // (1 2 3)(4 5) on seven points, written 1-based.
    /// let p = Permutation::from_cycles(7, &[vec![1, 2, 3], vec![4, 5]]).unwrap();
    /// let s = [10, 20, 30, 40, 50, 60, 70];
    /// assert_eq!(p.apply(&s), vec![20, 30, 10, 50, 40, 60, 70]);
    /// assert_eq!(p.apply_inverse(&s), vec![30, 10, 20, 50, 40, 60, 70]);
    /// ```
    pub fn apply<T: Clone>(&self, s: &[T]) -> Vec<T> {
        assert_eq!(s.len(), self.n(), "sequence length mismatch");
        self.images.iter().map(|&im| s[im].clone()).collect()
    }

    /// Inverse convention of [`apply`](Self::apply): entry `i` of the input
    /// lands at position `self(i)` of the output.
    pub fn apply_inverse<T: Clone>(&self, s: &[T]) -> Vec<T> {
        assert_eq!(s.len(), self.n(), "sequence length mismatch");
        let mut out: Vec<T> = s.to_vec();
        for (i, &im) in self.images.iter().enumerate() {
            out[im] = s[i].clone();
        }
        out
    }

    /// Function composition: `(self.compose(other))(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.n(), other.n(), "size mismatch");
        Permutation { images: other.images.iter().map(|&i| self.images[i]).collect() }
    }

    pub fn invert(&self) -> Permutation {
        let mut images = vec![0; self.n()];
        for (i, &im) in self.images.iter().enumerate() {
            images[im] = i;
        }
        Permutation { images }
    }

    /// The conjugate `sigma self sigma^-1`, which has the same cycle type
    /// with every point renamed through `sigma`.
    pub fn conjugate_by(&self, sigma: &Permutation) -> Permutation {
        assert_eq!(self.n(), sigma.n(), "size mismatch");
        let mut images = vec![0; self.n()];
        for i in 0..self.n() {
            images[sigma.images[i]] = sigma.images[self.images[i]];
        }
        Permutation { images }
    }

    pub fn fixed_point_count(&self) -> usize {
        self.images.iter().enumerate().filter(|&(i, &im)| i == im).count()
    }

    /// Number of points the two permutations send to different images.
    pub fn mismatch_count(&self, other: &Permutation) -> usize {
        assert_eq!(self.n(), other.n(), "size mismatch");
        self.images.iter().zip(&other.images).filter(|(a, b)| a != b).count()
    }

    /// Disjoint cycles, 1-based, each rotated to start at its smallest
    /// point, listed longest first (ties by smallest point). Fixed points
    /// appear as singletons.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i + 1);
                i = self.images[i];
            }
            cycles.push(cycle);
        }
        cycles.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        cycles
    }

    pub fn cycle_type(&self) -> CycleType {
        let mut fixed_points = 0;
        let mut lengths = Vec::new();
        for cycle in self.cycles() {
            if cycle.len() == 1 {
                fixed_points += 1;
            } else {
                lengths.push(cycle.len());
            }
        }
        CycleType { fixed_points, lengths }
    }

    /// Builds a permutation from disjoint 1-based cycles; points not
    /// mentioned stay fixed.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self, PermError> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut seen = vec![false; n];
        for cycle in cycles {
            for k in 0..cycle.len() {
                let point = cycle[k];
                if point == 0 || point > n {
                    return Err(PermError::PointRange { point, n });
                }
                if seen[point - 1] {
                    return Err(PermError::DuplicatePoint(point));
                }
                seen[point - 1] = true;
                let next = cycle[(k + 1) % cycle.len()];
                if next == 0 || next > n {
                    return Err(PermError::PointRange { point: next, n });
                }
                images[point - 1] = next - 1;
            }
        }
        Self::from_images(images)
    }

    /// The permutation of lexicographic rank `rank` among all `n!` image
    /// tables, counting from zero. Rank 0 is the identity.
    pub fn nth(n: usize, rank: u128) -> Result<Self, PermError> {
        let total = factorial(n);
        if rank >= total {
            return Err(PermError::RankRange { rank, n });
        }
        let mut pool: Vec<usize> = (0..n).collect();
        let mut images = Vec::with_capacity(n);
        let mut r = rank;
        for k in (1..=n).rev() {
            let block = factorial(k - 1);
            let idx = (r / block) as usize;
            r %= block;
            images.push(pool.remove(idx));
        }
        Ok(Permutation { images })
    }

    /// Advances to the lexicographic successor in place. Returns `false`
    /// and leaves the table untouched when already at the last (fully
    /// descending) permutation.
    pub fn advance(&mut self) -> bool {
        let a = &mut self.images;
        let n = a.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && a[i - 1] >= a[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while a[j] <= a[i - 1] {
            j -= 1;
        }
        a.swap(i - 1, j);
        a[i..].reverse();
        true
    }

    /// Serializes as a labeling file: the point count, then the 1-based
    /// images of points `1..=n` on one line.
    pub fn labeling_file_string(&self) -> String {
        let images: Vec<String> = self.images.iter().map(|&im| (im + 1).to_string()).collect();
        format!("{}\n{}\n", self.n(), images.join(" "))
    }

    /// Parses the [`labeling_file_string`](Self::labeling_file_string) format.
    pub fn parse_labeling(text: &str) -> Result<Self, PermError> {
        let mut lines = text.lines().filter(|s| !s.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| PermError::LabelingFormat("empty file".into()))?
            .trim()
            .parse()
            .map_err(|_| PermError::LabelingFormat("first line must be the point count".into()))?;
        let body = lines.next().ok_or_else(|| PermError::LabelingFormat("missing image line".into()))?;
        if lines.next().is_some() {
            return Err(PermError::LabelingFormat("trailing content after image line".into()));
        }
        let mut images = Vec::with_capacity(n);
        for tok in body.split_whitespace() {
            let im: usize = tok
                .parse()
                .map_err(|_| PermError::LabelingFormat(format!("bad image {tok:?}")))?;
            if im == 0 || im > n {
                return Err(PermError::PointRange { point: im, n });
            }
            images.push(im - 1);
        }
        if images.len() != n {
            return Err(PermError::LabelingFormat(format!(
                "expected {n} images, got {}",
                images.len()
            )));
        }
        Self::from_images(images)
    }
}

impl fmt::Display for Permutation {
    /// Cycle notation with singletons shown, e.g. `(1 2 3)(4 5)(6)(7)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for cycle in self.cycles() {
            let body: Vec<String> = cycle.iter().map(|p| p.to_string()).collect();
            write!(f, "({})", body.join(" "))?;
        }
        Ok(())
    }
}

pub fn factorial(n: usize) -> u128 {
    assert!(n <= 34, "factorial overflows u128 beyond 34");
    (1..=n as u128).product()
}

/// The conjugacy class data of a permutation: how many fixed points, and
/// the lengths of the nontrivial cycles in decreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycleType {
    pub fixed_points: usize,
    pub lengths: Vec<usize>,
}

impl CycleType {
    /// Validates lengths (each at least 2) and puts them in canonical
    /// decreasing order.
    pub fn new(fixed_points: usize, mut lengths: Vec<usize>) -> Result<Self, PermError> {
        for &len in &lengths {
            if len < 2 {
                return Err(PermError::ShortCycle(len));
            }
        }
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        Ok(CycleType { fixed_points, lengths })
    }

    /// Total number of points.
    pub fn n(&self) -> usize {
        self.fixed_points + self.lengths.iter().sum::<usize>()
    }

    /// The representative that walks each cycle over consecutive points,
    /// longest cycle on `1..=i_1`, the next on the following block, with
    /// the fixed points last.
    ///
    /// ```
    /// use typmatch::perm::CycleType;
    /// let ct: CycleType = "m=2;3,2".parse().unwrap();
    /// assert_eq!(ct.standard_permutation().to_string(), "(1 2 3)(4 5)(6)(7)");
    /// ```
    pub fn standard_permutation(&self) -> Permutation {
        let n = self.n();
        let mut images: Vec<usize> = (0..n).collect();
        let mut base = 0;
        for &len in &self.lengths {
            for k in 0..len {
                images[base + k] = base + (k + 1) % len;
            }
            base += len;
        }
        Permutation::from_images(images).expect("blocks are disjoint by construction")
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lens: Vec<String> = self.lengths.iter().map(|l| l.to_string()).collect();
        write!(f, "m={};{}", self.fixed_points, lens.join(","))
    }
}

impl FromStr for CycleType {
    type Err = PermError;

    /// Parses `"m=<fixed>;<len>,<len>,..."`; the length list may be empty,
    /// so the identity on three points is `"m=3;"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || PermError::CycleTypeSyntax(s.to_string());
        let rest = s.trim().strip_prefix("m=").ok_or_else(syntax)?;
        let (m_str, lens_str) = rest.split_once(';').ok_or_else(syntax)?;
        let fixed_points: usize = m_str.trim().parse().map_err(|_| syntax())?;
        let mut lengths = Vec::new();
        for tok in lens_str.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            lengths.push(tok.parse().map_err(|_| syntax())?);
        }
        CycleType::new(fixed_points, lengths)
    }
}
