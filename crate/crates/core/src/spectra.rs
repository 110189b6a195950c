//! Spectra of symmetric matrices: eigenvalues, trace powers, empirical
//! spectral distributions and histograms.
//!
//! Eigenvalues come from Householder reduction to tridiagonal form followed
//! by implicit QL iterations with Wilkinson-type shifts. Only eigenvalues are
//! computed.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Default tolerance for [`sym_eigenvalues`] post-checks.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues of a symmetric matrix, sorted λ₁ ≥ … ≥ λ_p.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    eigenvalues: Vec<f64>,
}

impl SpectralSummary {
    /// Wraps (and sorts) a list of eigenvalues.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Self { eigenvalues }
    }

    /// Pools several spectra into one empirical distribution.
    pub fn pooled<'a>(parts: impl IntoIterator<Item = &'a SpectralSummary>) -> Self {
        Self::from_eigenvalues(
            parts
                .into_iter()
                .flat_map(|s| s.eigenvalues.iter().copied())
                .collect(),
        )
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    /// Σ λᵢᵏ.
    pub fn power_sum(&self, k: u32) -> f64 {
        self.eigenvalues.iter().map(|l| l.powi(k as i32)).sum()
    }

    /// F(x) = #{λᵢ ≤ x} / p.
    pub fn esd_cdf(&self, x: f64) -> f64 {
        if self.eigenvalues.is_empty() {
            return f64::NAN;
        }
        // Descending order: count the suffix of values ≤ x.
        let above = self.eigenvalues.partition_point(|&l| l > x);
        (self.eigenvalues.len() - above) as f64 / self.eigenvalues.len() as f64
    }

    /// sup_x |F(x) − G(x)| for a continuous reference CDF G.
    ///
    /// Both one-sided gaps are checked at every distinct eigenvalue. The
    /// left gap uses the reference just below the atom, so a step reference
    /// equal to the ESD itself gives distance zero.
    pub fn ks_distance(&self, reference_cdf: impl Fn(f64) -> f64) -> f64 {
        let p = self.eigenvalues.len();
        if p == 0 {
            return f64::NAN;
        }
        let total = p as f64;
        let mut worst = 0.0f64;
        let mut below = 0usize;
        let ascending: Vec<f64> = self.eigenvalues.iter().rev().copied().collect();
        let mut i = 0;
        while i < p {
            let x = ascending[i];
            let mut j = i;
            while j < p && ascending[j] == x {
                j += 1;
            }
            let left = below as f64 / total;
            let right = j as f64 / total;
            let g_left = reference_cdf(x.next_down());
            let g = reference_cdf(x);
            worst = worst.max((left - g_left).abs()).max((right - g).abs());
            below = j;
            i = j;
        }
        worst
    }

    /// Equal-width histogram over `range`; values outside it are counted in
    /// the end bins and reported in [`Histogram::clipped`].
    pub fn histogram(&self, bins: usize, range: (f64, f64)) -> Result<Histogram> {
        Histogram::from_values(&self.eigenvalues, bins, range)
    }

    /// [`histogram`](Self::histogram) over the span of the eigenvalues padded
    /// by 5% on each side.
    pub fn default_histogram(&self, bins: usize) -> Result<Histogram> {
        self.histogram(bins, default_range(self.min(), self.max()))
    }
}

/// `[lo − 0.05·span, hi + 0.05·span]`, widened to unit span when degenerate.
pub fn default_range(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Density-normalized histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bin_edges: Vec<f64>,
    densities: Vec<f64>,
    clipped: usize,
}

impl Histogram {
    pub const DEFAULT_BINS: usize = 50;

    pub fn from_values(values: &[f64], bins: usize, (lo, hi): (f64, f64)) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "histogram range ({lo}, {hi}) is empty"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument("histogram of no values".into()));
        }
        let width = (hi - lo) / bins as f64;
        let bin_edges: Vec<f64> = (0..=bins)
            .map(|b| if b == bins { hi } else { lo + b as f64 * width })
            .collect();
        let mut counts = vec![0usize; bins];
        let mut clipped = 0;
        for &v in values {
            if v < lo || v > hi {
                clipped += 1;
            }
            let b = ((v - lo) / width).floor();
            let b = if b < 0.0 {
                0
            } else {
                (b as usize).min(bins - 1)
            };
            counts[b] += 1;
        }
        let total = values.len() as f64;
        let densities = counts
            .iter()
            .zip(bin_edges.windows(2))
            .map(|(&c, w)| c as f64 / (total * (w[1] - w[0])))
            .collect();
        Ok(Self {
            bin_edges,
            densities,
            clipped,
        })
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn bins(&self) -> usize {
        self.densities.len()
    }

    /// Values that fell outside the range and were folded into an end bin.
    pub fn clipped(&self) -> usize {
        self.clipped
    }

    /// Σ density · width.
    pub fn total_mass(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum()
    }

    /// CSV with header `bin_lo,bin_hi,density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,density\n");
        for (d, w) in self.densities.iter().zip(self.bin_edges.windows(2)) {
            out.push_str(&format!("{},{},{}\n", w[0], w[1], d));
        }
        out
    }
}

/// Full spectrum of a symmetric matrix.
///
/// Fails with [`Error::NotSymmetric`] when some `|a_ij − a_ji|` exceeds
/// `1e-12 · max(1, max|a|)`, and with [`Error::EigenFailure`] when the
/// iteration stalls or the trace/Frobenius identities miss by more than
/// `tol · p · ‖A‖` (resp. `tol · p · ‖A‖²`).
pub fn sym_eigenvalues(a: &DenseMatrix, tol: f64) -> Result<SpectralSummary> {
    if !a.is_square() {
        return Err(Error::SizeMismatch {
            left: a.rows(),
            right: a.cols(),
        });
    }
    let p = a.rows();
    if p == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let norm = a.max_abs();
    if !norm.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let asym = a.max_asymmetry();
    if asym > 1e-12 * norm.max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }

    let mut work: Vec<f64> = a.as_slice().to_vec();
    let (mut diag, mut off) = tridiagonalize(&mut work, p);
    tridiagonal_ql(&mut diag, &mut off)?;
    let summary = SpectralSummary::from_eigenvalues(diag);

    let fro = a.frobenius_sq();
    let scale = fro.sqrt().max(f64::MIN_POSITIVE);
    let trace_gap = (summary.power_sum(1) - a.trace()).abs();
    let fro_gap = (summary.power_sum(2) - fro).abs();
    if trace_gap > tol * p as f64 * scale || fro_gap > tol * p as f64 * scale * scale {
        return Err(Error::EigenFailure(format!(
            "identity check failed (trace gap {trace_gap:e}, Frobenius gap {fro_gap:e})"
        )));
    }
    Ok(summary)
}

/// Householder reduction of the symmetric row-major `a` (lower triangle
/// used, overwritten). Returns the diagonal and the sub-diagonal, the latter
/// stored in positions `0..p-1` with a trailing zero.
fn tridiagonalize(a: &mut [f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |i: usize, j: usize| i * p + j;
    let mut d = vec![0.0; p];
    let mut e = vec![0.0; p];
    for i in (1..p).rev() {
        let l = i - 1;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[at(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = a[at(i, l)];
                continue;
            }
            let mut h = 0.0;
            for k in 0..=l {
                a[at(i, k)] /= scale;
                h += a[at(i, k)] * a[at(i, k)];
            }
            let f = a[at(i, l)];
            let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
            e[i] = scale * g;
            h -= f * g;
            a[at(i, l)] = f - g;
            let mut f_acc = 0.0;
            for j in 0..=l {
                let mut g = 0.0;
                for k in 0..=j {
                    g += a[at(j, k)] * a[at(i, k)];
                }
                for k in (j + 1)..=l {
                    g += a[at(k, j)] * a[at(i, k)];
                }
                e[j] = g / h;
                f_acc += e[j] * a[at(i, j)];
            }
            let hh = f_acc / (h + h);
            for j in 0..=l {
                let f = a[at(i, j)];
                let g = e[j] - hh * f;
                e[j] = g;
                for k in 0..=j {
                    a[at(j, k)] -= f * e[k] + g * a[at(i, k)];
                }
            }
        } else {
            e[i] = a[at(i, l)];
        }
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[at(i, i)];
    }
    e.rotate_left(1);
    e[p - 1] = 0.0;
    (d, e)
}

/// Implicit QL on a symmetric tridiagonal matrix; eigenvalues land in `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::EigenFailure(format!(
                    "no convergence for eigenvalue {l} after {MAX_QL_SWEEPS} sweeps"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut shift) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= shift;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - shift;
                r = (d[i] - g) * s + 2.0 * c * b;
                shift = s * r;
                d[i + 1] = g + shift;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= shift;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// How [`trace_power`] evaluates tr(Aᵏ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMethod {
    /// Repeated matrix products.
    Product,
    /// Σ λᵢᵏ from the spectrum.
    Spectral,
}

/// tr(Aᵏ) for symmetric `a`.
pub fn trace_power(a: &DenseMatrix, k: u32, method: TraceMethod) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("trace power needs k ≥ 1".into()));
    }
    match method {
        TraceMethod::Spectral => Ok(sym_eigenvalues(a, DEFAULT_TOL)?.power_sum(k)),
        TraceMethod::Product => {
            if !a.is_square() {
                return Err(Error::SizeMismatch {
                    left: a.rows(),
                    right: a.cols(),
                });
            }
            match k {
                1 => Ok(a.trace()),
                // tr(A²) = ‖A‖²_F for symmetric A.
                2 => Ok(a.frobenius_sq()),
                _ => {
                    // tr(Aᵏ) = ⟨A^⌈k/2⌉, A^⌊k/2⌋⟩.
                    let half = k / 2;
                    let mut low = a.clone();
                    for _ in 1..half {
                        low = low.matmul(a)?;
                    }
                    let high = if k % 2 == 1 { low.matmul(a)? } else { low.clone() };
                    Ok(low
                        .as_slice()
                        .iter()
                        .zip(high.transpose().as_slice())
                        .map(|(x, y)| x * y)
                        .sum())
                }
            }
        }
    }
}
