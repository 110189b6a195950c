//! Rank correlations and the correlation matrices built from them.
//!
//! Chatterjee's ξₙ between columns i and j is the functional
//! `f_ξ(Rⱼ ∘ Rᵢ⁻¹)` of the relative rank, so every rank-based matrix here is
//! computed from the p column rankings alone. Each column is sorted once;
//! each ordered pair then costs O(n) for ξₙ and O(n log n) for Kendall's τ.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::permutations::{ranks_of, relative_rank, Permutation, TiePolicy};

/// n × p observations, one column per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    columns: Vec<Vec<f64>>,
}

impl DataMatrix {
    pub const MIN_ROWS: usize = 3;
    pub const MIN_COLS: usize = 2;

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if n < Self::MIN_ROWS || p < Self::MIN_COLS {
            return Err(Error::InvalidData(format!(
                "need n ≥ {} and p ≥ {}, got n = {n}, p = {p}",
                Self::MIN_ROWS,
                Self::MIN_COLS
            )));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidData(format!(
                    "column {} has {} rows, expected {n}",
                    j + 1,
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "non-finite value at row {}, column {}",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(Self { n, columns })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::InvalidData(format!(
                    "row {} has {} values, expected {p}",
                    i + 1,
                    row.len()
                )));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(columns)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Applies `f` to every entry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_columns(
            self.columns
                .iter()
                .map(|c| c.iter().map(|&v| f(v)).collect())
                .collect(),
        )
    }

    /// Column rankings R₁, …, R_p.
    pub fn ranks(&self, ties: TiePolicy) -> Result<Vec<Permutation>> {
        self.columns
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let policy = match ties {
                    TiePolicy::Error => TiePolicy::Error,
                    TiePolicy::Random(seed) => {
                        TiePolicy::Random(crate::seeding::derive_seed(seed, &[j as u64]))
                    }
                };
                ranks_of(c, policy)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Xi,
    Phi,
    Psi,
    Spearman,
    Kendall,
    Pearson,
}

/// A p × p correlation-type matrix tagged with how it was built.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    kind: MatrixKind,
    matrix: DenseMatrix,
}

impl CorrelationMatrix {
    /// Wraps an arbitrary square matrix, e.g. a theoretical Ξ.
    pub fn new(kind: MatrixKind, matrix: DenseMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::SizeMismatch {
                left: matrix.rows(),
                right: matrix.cols(),
            });
        }
        Ok(Self { kind, matrix })
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }

    /// Σ over off-diagonal entries of the squared values.
    pub fn off_diagonal_sum_sq(&self) -> f64 {
        let p = self.dim();
        let mut s = 0.0;
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    s += self.get(i, j).powi(2);
                }
            }
        }
        s
    }
}

#[inline]
fn xi_from_increment_sum(sum: u64, n: usize) -> f64 {
    1.0 - 3.0 * sum as f64 / (n * n - 1) as f64
}

/// Σ |σ(k+1) − σ(k)|.
pub fn xi_increment_sum(sigma: &Permutation) -> u64 {
    sigma
        .image()
        .windows(2)
        .map(|w| w[0].abs_diff(w[1]) as u64)
        .sum()
}

/// f_ξ(σ) = 1 − 3/(n²−1) Σ |σ(k+1) − σ(k)|.
pub fn f_xi(sigma: &Permutation) -> f64 {
    xi_from_increment_sum(xi_increment_sum(sigma), sigma.len())
}

/// f_ρ(σ) = 1 − 6 Σ (σ(k) − k)² / (n(n²−1)).
pub fn f_rho(sigma: &Permutation) -> f64 {
    let n = sigma.len() as f64;
    let d2: u64 = sigma
        .image()
        .iter()
        .enumerate()
        .map(|(k, &v)| (v.abs_diff(k + 1) as u64).pow(2))
        .sum();
    1.0 - 6.0 * d2 as f64 / (n * (n * n - 1.0))
}

/// f_τ(σ) = 2/(n(n−1)) Σ_{i<j} sgn(i−j) sgn(σ(i)−σ(j)), via inversion counting.
pub fn f_tau(sigma: &Permutation) -> f64 {
    let mut seq: Vec<u32> = sigma.image().iter().map(|&v| v as u32).collect();
    tau_from_inversions(count_inversions(&mut seq), sigma.len())
}

#[inline]
fn tau_from_inversions(inversions: u64, n: usize) -> f64 {
    let pairs = (n * (n - 1) / 2) as f64;
    1.0 - 2.0 * inversions as f64 / pairs
}

/// Number of pairs i < j with a[i] > a[j]; sorts `a` as a side effect.
pub fn count_inversions(a: &mut [u32]) -> u64 {
    let mut scratch = vec![0; a.len()];
    merge_count(a, &mut scratch)
}

fn merge_count(a: &mut [u32], scratch: &mut [u32]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (lo, hi) = a.split_at_mut(mid);
        let (slo, shi) = scratch.split_at_mut(mid);
        merge_count(lo, slo) + merge_count(hi, shi)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[i] <= a[j] {
            scratch[k] = a[i];
            i += 1;
        } else {
            scratch[k] = a[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&a[i..mid]);
    k += mid - i;
    scratch[k..k + n - j].copy_from_slice(&a[j..n]);
    a.copy_from_slice(&scratch[..n]);
    inv
}

/// ξₙ(x, y): how well y is a function of x. Asymmetric.
pub fn chatterjee_xi(x: &[f64], y: &[f64], ties: TiePolicy) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < DataMatrix::MIN_ROWS {
        return Err(Error::InvalidSample(format!(
            "need at least {} observations, got {}",
            DataMatrix::MIN_ROWS,
            x.len()
        )));
    }
    let (ty, tx) = match ties {
        TiePolicy::Error => (TiePolicy::Error, TiePolicy::Error),
        TiePolicy::Random(s) => (
            TiePolicy::Random(crate::seeding::derive_seed(s, &[1])),
            TiePolicy::Random(crate::seeding::derive_seed(s, &[0])),
        ),
    };
    let rx = ranks_of(x, tx)?;
    let ry = ranks_of(y, ty)?;
    Ok(f_xi(&relative_rank(&rx, &ry)?))
}

/// Column rankings in a layout suited to pairwise sweeps.
struct RankTable {
    n: usize,
    /// `ranks[j][k]`: rank of row k in column j, 1-based.
    ranks: Vec<Vec<u32>>,
    /// `order[j][r]`: row holding rank r + 1 in column j.
    order: Vec<Vec<u32>>,
}

impl RankTable {
    fn new(ranks: &[Permutation]) -> Result<Self> {
        let n = ranks.first().map_or(0, Permutation::len);
        if ranks.len() < DataMatrix::MIN_COLS || n < DataMatrix::MIN_ROWS {
            return Err(Error::InvalidData(format!(
                "need at least {} rankings of length ≥ {}",
                DataMatrix::MIN_COLS,
                DataMatrix::MIN_ROWS
            )));
        }
        let mut table = Self {
            n,
            ranks: Vec::with_capacity(ranks.len()),
            order: Vec::with_capacity(ranks.len()),
        };
        for r in ranks {
            if r.len() != n {
                return Err(Error::SizeMismatch {
                    left: r.len(),
                    right: n,
                });
            }
            table
                .ranks
                .push(r.image().iter().map(|&v| v as u32).collect());
            table
                .order
                .push(r.inverse().image().iter().map(|&k| (k - 1) as u32).collect());
        }
        Ok(table)
    }

    fn p(&self) -> usize {
        self.ranks.len()
    }

    /// Rⱼ ∘ Rᵢ⁻¹ as a rank sequence.
    fn relative(&self, i: usize, j: usize, out: &mut Vec<u32>) {
        out.clear();
        let rj = &self.ranks[j];
        out.extend(self.order[i].iter().map(|&k| rj[k as usize]));
    }
}

/// Ξₙ from data: unit diagonal, Ξᵢⱼ = ξₙ(column i, column j).
pub fn xi_matrix(data: &DataMatrix, ties: TiePolicy) -> Result<CorrelationMatrix> {
    xi_matrix_from_ranks(&data.ranks(ties)?)
}

/// Ξₙ from column rankings.
pub fn xi_matrix_from_ranks(ranks: &[Permutation]) -> Result<CorrelationMatrix> {
    let table = RankTable::new(ranks)?;
    let (n, p) = (table.n, table.p());
    let rows: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|i| {
            let order = &table.order[i];
            (0..p)
                .map(|j| {
                    if i == j {
                        return 1.0;
                    }
                    let rj = &table.ranks[j];
                    let mut prev = rj[order[0] as usize];
                    let mut sum = 0u64;
                    for &k in &order[1..] {
                        let cur = rj[k as usize];
                        sum += cur.abs_diff(prev) as u64;
                        prev = cur;
                    }
                    xi_from_increment_sum(sum, n)
                })
                .collect()
        })
        .collect();
    Ok(CorrelationMatrix {
        kind: MatrixKind::Xi,
        matrix: DenseMatrix::from_rows(&rows)?,
    })
}

fn expect_kind(m: &CorrelationMatrix, kind: MatrixKind) -> Result<()> {
    if m.kind != kind {
        return Err(Error::InvalidArgument(format!(
            "expected a {kind:?} matrix, got {:?}",
            m.kind
        )));
    }
    Ok(())
}

/// Φₙ = (Ξₙ + Ξₙᵀ)/2 with the diagonal set to exactly 1.
pub fn phi_matrix(xi: &CorrelationMatrix) -> Result<CorrelationMatrix> {
    expect_kind(xi, MatrixKind::Xi)?;
    let p = xi.dim();
    let mut m = DenseMatrix::identity(p);
    for i in 0..p {
        for j in (i + 1)..p {
            let v = 0.5 * (xi.get(i, j) + xi.get(j, i));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(CorrelationMatrix {
        kind: MatrixKind::Phi,
        matrix: m,
    })
}

/// Ψₙ = (Ξₙ − I)(Ξₙ − I)ᵀ.
pub fn psi_matrix(xi: &CorrelationMatrix) -> Result<CorrelationMatrix> {
    expect_kind(xi, MatrixKind::Xi)?;
    let p = xi.dim();
    let centred = DenseMatrix::from_fn(p, p, |i, j| if i == j { 0.0 } else { xi.get(i, j) });
    Ok(CorrelationMatrix {
        kind: MatrixKind::Psi,
        matrix: centred.gram(),
    })
}

/// Spearman's ρ matrix: Pearson correlation of the rank vectors.
pub fn spearman_matrix(data: &DataMatrix, ties: TiePolicy) -> Result<CorrelationMatrix> {
    spearman_matrix_from_ranks(&data.ranks(ties)?)
}

pub fn spearman_matrix_from_ranks(ranks: &[Permutation]) -> Result<CorrelationMatrix> {
    let table = RankTable::new(ranks)?;
    let n = table.n as f64;
    let mid = (n + 1.0) / 2.0;
    let norm = n * (n * n - 1.0) / 12.0;
    let centred = DenseMatrix::from_fn(table.p(), table.n, |j, k| table.ranks[j][k] as f64 - mid);
    let mut m = centred.gram();
    let p = table.p();
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] = if i == j { 1.0 } else { m[(i, j)] / norm };
        }
    }
    Ok(CorrelationMatrix {
        kind: MatrixKind::Spearman,
        matrix: m,
    })
}

/// Kendall's τ matrix by merge-sort inversion counting.
pub fn kendall_matrix(data: &DataMatrix, ties: TiePolicy) -> Result<CorrelationMatrix> {
    kendall_matrix_from_ranks(&data.ranks(ties)?)
}

pub fn kendall_matrix_from_ranks(ranks: &[Permutation]) -> Result<CorrelationMatrix> {
    let table = RankTable::new(ranks)?;
    let (n, p) = (table.n, table.p());
    let upper: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|i| {
            let mut seq = Vec::with_capacity(n);
            let mut scratch = vec![0u32; n];
            ((i + 1)..p)
                .map(|j| {
                    table.relative(i, j, &mut seq);
                    tau_from_inversions(merge_count(&mut seq, &mut scratch), n)
                })
                .collect()
        })
        .collect();
    let mut m = DenseMatrix::identity(p);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(CorrelationMatrix {
        kind: MatrixKind::Kendall,
        matrix: m,
    })
}

/// Pearson's sample correlation matrix.
pub fn pearson_matrix(data: &DataMatrix) -> Result<CorrelationMatrix> {
    let (n, p) = (data.n(), data.p());
    let mut standardized = DenseMatrix::zeros(p, n);
    for j in 0..p {
        let col = data.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
        let scale = ss.sqrt();
        if !(scale > 0.0) || scale <= 1e-300 {
            return Err(Error::DegenerateColumn(j + 1));
        }
        for (k, &v) in col.iter().enumerate() {
            standardized[(j, k)] = (v - mean) / scale;
        }
    }
    let mut m = standardized.gram();
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] = if i == j { 1.0 } else { m[(i, j)].clamp(-1.0, 1.0) };
        }
    }
    Ok(CorrelationMatrix {
        kind: MatrixKind::Pearson,
        matrix: m,
    })
}
