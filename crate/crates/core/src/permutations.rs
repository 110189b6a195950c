//! Permutations of {1..n}: rankings, relative ranks, uniform sampling,
//! lexicographic enumeration and the forest predicate for families of
//! relative ranks.
//!
//! All public indices and images are 1-based.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::seeding;

/// A bijection σ of {1..n}, stored as its image `(σ(1), …, σ(n))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

/// How [`ranks_of`] treats equal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// Refuse tied input.
    #[default]
    Error,
    /// Order tied values by independent uniform keys drawn from this seed.
    Random(u64),
}

impl Permutation {
    /// Validates that `image` is a bijection of {1..n}.
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty image".into()));
        }
        let mut seen = vec![false; n];
        for &v in &image {
            if v == 0 || v > n {
                return Err(Error::InvalidPermutation(format!(
                    "value {v} outside 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(Error::InvalidPermutation(format!("value {v} repeated")));
            }
        }
        Ok(Self { image })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            image: (1..=n).collect(),
        }
    }

    /// σ(k) = n + 1 − k.
    pub fn reversal(n: usize) -> Self {
        Self {
            image: (1..=n).rev().collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.image.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    #[inline]
    pub fn image(&self) -> &[usize] {
        &self.image
    }

    /// σ(k) for 1-based `k`.
    #[inline]
    pub fn apply(&self, k: usize) -> usize {
        self.image[k - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| v == i + 1)
    }

    /// `self ∘ other`, i.e. k ↦ self(other(k)).
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        check_len(self, other)?;
        Ok(Self {
            image: other.image.iter().map(|&k| self.image[k - 1]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &v) in self.image.iter().enumerate() {
            inv[v - 1] = i + 1;
        }
        Self { image: inv }
    }

    /// Relative rank Rⱼ ∘ Rᵢ⁻¹ with `self = Rᵢ`, `other = Rⱼ`.
    pub fn relative_to(&self, other: &Permutation) -> Result<Permutation> {
        relative_rank(self, other)
    }

    /// Index of this permutation in lexicographic order of images, 0-based.
    pub fn lex_rank(&self) -> usize {
        let n = self.len();
        let mut rank = 0;
        let mut used = vec![false; n];
        let mut fact: usize = (1..n).product();
        for (pos, &v) in self.image.iter().enumerate() {
            let smaller = (1..v).filter(|&w| !used[w - 1]).count();
            rank += smaller * fact;
            used[v - 1] = true;
            if pos + 1 < n {
                fact /= n - pos - 1;
            }
        }
        rank
    }
}

impl std::fmt::Display for Permutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.image.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

fn check_len(a: &Permutation, b: &Permutation) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Relative rank `rj ∘ ri⁻¹`.
pub fn relative_rank(ri: &Permutation, rj: &Permutation) -> Result<Permutation> {
    check_len(ri, rj)?;
    let mut image = vec![0; ri.len()];
    for (k, &r) in ri.image.iter().enumerate() {
        image[r - 1] = rj.image[k];
    }
    Ok(Permutation { image })
}

/// Ranking R with R(k) = #{i : sample[i] ≤ sample[k]}.
pub fn ranks_of(sample: &[f64], ties: TiePolicy) -> Result<Permutation> {
    let order = sort_order(sample, ties)?;
    let mut image = vec![0; sample.len()];
    for (r, &k) in order.iter().enumerate() {
        image[k] = r + 1;
    }
    Ok(Permutation { image })
}

/// Indices of `sample` in increasing order of value, i.e. R⁻¹ shifted to
/// 0-based positions.
pub(crate) fn sort_order(sample: &[f64], ties: TiePolicy) -> Result<Vec<usize>> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InvalidSample(format!(
            "need at least 2 values, got {n}"
        )));
    }
    if let Some(k) = sample.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidSample(format!(
            "non-finite value at position {}",
            k + 1
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    match ties {
        TiePolicy::Error => {
            order.sort_unstable_by(|&a, &b| sample[a].total_cmp(&sample[b]));
            for w in order.windows(2) {
                if sample[w[0]] == sample[w[1]] {
                    let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                    return Err(Error::TiesPresent {
                        first: a + 1,
                        second: b + 1,
                    });
                }
            }
        }
        TiePolicy::Random(seed) => {
            let mut rng = seeding::stream(seed, &[seeding::tags::TIES]);
            let keys: Vec<u64> = (0..n).map(|_| rng.next_u64()).collect();
            // -0.0 and 0.0 compare equal as data.
            order.sort_unstable_by(|&a, &b| {
                sample[a]
                    .partial_cmp(&sample[b])
                    .expect("finite")
                    .then(keys[a].cmp(&keys[b]))
                    .then(a.cmp(&b))
            });
        }
    }
    Ok(order)
}

/// Fisher–Yates shuffle of the identity.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    let mut image: Vec<usize> = (1..=n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        image.swap(i, j);
    }
    Permutation { image }
}

/// Largest ground set [`enumerate_all`] accepts.
pub const MAX_ENUMERATION_N: usize = 8;

/// All n! permutations in lexicographic order of their images.
pub fn enumerate_all(n: usize) -> Result<Lexicographic> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if n > MAX_ENUMERATION_N {
        return Err(Error::EnumerationTooLarge(format!(
            "{n}! permutations (limit n ≤ {MAX_ENUMERATION_N})"
        )));
    }
    Ok(Lexicographic {
        next: Some((1..=n).collect()),
    })
}

/// Iterator returned by [`enumerate_all`].
#[derive(Debug, Clone)]
pub struct Lexicographic {
    next: Option<Vec<usize>>,
}

impl Iterator for Lexicographic {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if next_permutation(&mut succ) {
            self.next = Some(succ);
        }
        Some(Permutation { image: current })
    }
}

fn next_permutation(a: &mut [usize]) -> bool {
    let Some(i) = (1..a.len()).rev().find(|&i| a[i - 1] < a[i]) else {
        return false;
    };
    let j = (i..a.len()).rev().find(|&j| a[j] > a[i - 1]).unwrap();
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Directed multigraph Δ on vertices {1..vertex_count} without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependenceGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
}

impl DependenceGraph {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidGraph("no vertices".into()));
        }
        for &(u, v) in &edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            if u == 0 || v == 0 || u > vertex_count || v > vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) outside 1..={vertex_count}"
                )));
            }
        }
        Ok(Self {
            vertex_count,
            edges,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

impl std::fmt::Display for DependenceGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, (u, v)) in self.edges.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "({u},{v})")?;
        }
        write!(f, "}}")
    }
}

/// Whether the relative ranks σᵥ∘σᵤ⁻¹ over the edges of `graph` are mutually
/// independent: true iff the underlying undirected multigraph is a forest.
/// Repeated pairs, in either orientation, count as a cycle.
pub fn is_independent_family(graph: &DependenceGraph) -> bool {
    let mut parent: Vec<usize> = (0..=graph.vertex_count).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(u, v) in &graph.edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            return false;
        }
        parent[ru] = rv;
    }
    true
}
