//! Simulation models and experiment drivers.
//!
//! Models (a) and (b) are null models with Gaussian and Cauchy marginals.
//! Models (c) to (f) carry banded linear, cubic moving-average, oscillatory
//! and W-shaped dependence. Every replication draws from its own seeded
//! stream, so tables are reproducible bit for bit at any thread count.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hightest::{Calibration, CalibrationMode, CenteringSource, StatContext, StatId, TestConfig};
use crate::limitlaws::{self, LssGaussian, MPLaw, SemicircleLaw};
use crate::matrix::DenseMatrix;
use crate::permutations::{sample_uniform, Permutation, TiePolicy};
use crate::rankcorr::{phi_matrix, psi_matrix, xi_matrix_from_ranks, DataMatrix};
use crate::seeding::{self, open_unit, tags, SimRng};
use crate::spectra::{sym_eigenvalues, trace_power, Histogram, SpectralSummary, TraceMethod, DEFAULT_TOL};

/// Level used for table reproduction.
pub const TABLE_ALPHA: f64 = 0.05;
/// Smallest replication count for size and power tables.
pub const MIN_TABLE_REPS: usize = 100;
/// Smallest replication count for the CLT experiment.
pub const MIN_CLT_REPS: usize = 200;

/// Banded covariance of model (c): ρ^{|i−j|} for |i−j| ≤ BAND.
pub const MODEL_C_RHO: f64 = 0.25;
pub const MODEL_C_BAND: usize = 4;
/// Weights (r₁, r₂, r₃, r₄) of model (d).
pub const MODEL_D_WEIGHTS: [f64; 4] = [0.1, 0.05, 0.02, 0.5];
/// Noise scale of models (e) and (f).
pub const MODEL_EF_NOISE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl ModelId {
    pub const ALL: [ModelId; 6] = [
        ModelId::A,
        ModelId::B,
        ModelId::C,
        ModelId::D,
        ModelId::E,
        ModelId::F,
    ];

    pub fn is_null(self) -> bool {
        matches!(self, ModelId::A | ModelId::B)
    }

    pub fn letter(self) -> char {
        match self {
            ModelId::A => 'a',
            ModelId::B => 'b',
            ModelId::C => 'c',
            ModelId::D => 'd',
            ModelId::E => 'e',
            ModelId::F => 'f',
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| s.len() == 1 && s.starts_with(m.letter()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model '{s}' (expected a-f)")))
    }
}

/// A model at a fixed size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub id: ModelId,
    pub n: usize,
    pub p: usize,
}

impl ModelSpec {
    pub fn new(id: ModelId, n: usize, p: usize) -> Result<Self> {
        if n < DataMatrix::MIN_ROWS || p < DataMatrix::MIN_COLS {
            return Err(Error::InvalidArgument(format!(
                "model sizes need n ≥ {} and p ≥ {}, got ({n}, {p})",
                DataMatrix::MIN_ROWS,
                DataMatrix::MIN_COLS
            )));
        }
        if matches!(id, ModelId::E | ModelId::F) && p % 2 == 1 {
            return Err(Error::OddDimension(p));
        }
        Ok(Self { id, n, p })
    }
}

/// Draws data sets from one model; holds the Cholesky factor for model (c).
#[derive(Debug, Clone)]
pub struct ModelSampler {
    spec: ModelSpec,
    factor: Option<DenseMatrix>,
}

impl ModelSampler {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let spec = ModelSpec::new(spec.id, spec.n, spec.p)?;
        let factor = match spec.id {
            ModelId::C => Some(psd_factor(&banded_covariance(spec.p, MODEL_C_RHO, MODEL_C_BAND))?),
            _ => None,
        };
        Ok(Self { spec, factor })
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<DataMatrix> {
        let ModelSpec { id, n, p } = self.spec;
        let mut normals = |count: usize| -> Vec<f64> { (0..count).map(|_| standard_normal(rng)).collect() };
        let columns: Vec<Vec<f64>> = match id {
            ModelId::A => (0..p).map(|_| normals(n)).collect(),
            ModelId::B => {
                let mut cols = vec![Vec::with_capacity(n); p];
                for col in cols.iter_mut() {
                    for _ in 0..n {
                        col.push(standard_cauchy(rng));
                    }
                }
                cols
            }
            ModelId::C => {
                let l = self.factor.as_ref().expect("factor built for model (c)");
                let mut cols = vec![vec![0.0; n]; p];
                for row in 0..n {
                    let z = normals(p);
                    for (i, col) in cols.iter_mut().enumerate() {
                        col[row] = l.row(i)[..=i].iter().zip(&z).map(|(a, b)| a * b).sum();
                    }
                }
                cols
            }
            ModelId::D => {
                let [r1, r2, r3, r4] = MODEL_D_WEIGHTS;
                // Z₁..Z_{p+2} so every column has three cubic terms.
                let z: Vec<Vec<f64>> = (0..p + 2).map(|_| normals(n)).collect();
                let e: Vec<Vec<f64>> = (0..p).map(|_| normals(n)).collect();
                (0..p)
                    .map(|i| {
                        (0..n)
                            .map(|k| {
                                r1 * z[i][k].powi(3)
                                    + r2 * z[i + 1][k].powi(3)
                                    + r3 * z[i + 2][k].powi(3)
                                    + r4 * e[i][k]
                            })
                            .collect()
                    })
                    .collect()
            }
            ModelId::E | ModelId::F => {
                let half = p / 2;
                let u: Vec<Vec<f64>> = (0..half).map(|_| normals(n)).collect();
                let z: Vec<Vec<f64>> = (0..half).map(|_| normals(n)).collect();
                let link = |x: f64| match id {
                    ModelId::E => (2.0 * std::f64::consts::PI * x).sin(),
                    _ if x < 0.0 => (x + 0.5).abs(),
                    _ => (x - 0.5).abs(),
                };
                let v: Vec<Vec<f64>> = u
                    .iter()
                    .zip(&z)
                    .map(|(uc, zc)| {
                        uc.iter()
                            .zip(zc)
                            .map(|(&x, &e)| link(x) + MODEL_EF_NOISE * e)
                            .collect()
                    })
                    .collect();
                u.into_iter().chain(v).collect()
            }
        };
        DataMatrix::from_columns(columns)
    }
}

/// One data set from `spec`.
pub fn sample_model<R: RngCore + ?Sized>(spec: ModelSpec, rng: &mut R) -> Result<DataMatrix> {
    ModelSampler::new(spec)?.sample(rng)
}

/// Standard normal by the polar Box–Muller method; the second variate of
/// each accepted pair is discarded.
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = 2.0 * open_unit(rng) - 1.0;
        let v = 2.0 * open_unit(rng) - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Standard Cauchy by inversion, tan(π(u − ½)).
pub fn standard_cauchy<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (std::f64::consts::PI * (open_unit(rng) - 0.5)).tan()
}

/// Σᵢⱼ = ρ^{|i−j|}·1(|i−j| ≤ band).
pub fn banded_covariance(p: usize, rho: f64, band: usize) -> DenseMatrix {
    DenseMatrix::from_fn(p, p, |i, j| {
        let d = i.abs_diff(j);
        if d <= band {
            rho.powi(d as i32)
        } else {
            0.0
        }
    })
}

/// Lower-triangular L with L·Lᵀ = Σ for symmetric positive semi-definite Σ.
///
/// Pivots within `1e-10·max Σᵢᵢ` of zero are treated as zero (the column
/// of L is left empty); more negative pivots give [`Error::NotPsd`].
pub fn psd_factor(sigma: &DenseMatrix) -> Result<DenseMatrix> {
    if !sigma.is_square() {
        return Err(Error::SizeMismatch {
            left: sigma.rows(),
            right: sigma.cols(),
        });
    }
    let p = sigma.rows();
    let scale = sigma.max_abs().max(f64::MIN_POSITIVE);
    let asym = sigma.max_asymmetry();
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let tol = 1e-10 * scale;
    let mut l = DenseMatrix::zeros(p, p);
    for j in 0..p {
        let pivot = sigma[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if pivot < -tol {
            return Err(Error::NotPsd(pivot));
        }
        if pivot <= tol {
            for i in (j + 1)..p {
                let r = sigma[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
                if r.abs() > tol.sqrt() {
                    return Err(Error::NotPsd(pivot));
                }
            }
            continue;
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..p {
            let r = sigma[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = r / d;
        }
    }
    Ok(l)
}

/// Settings for size and power tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub models: Vec<ModelId>,
    pub stats: Vec<StatId>,
    pub grid: Vec<(usize, usize)>,
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Null replications for Monte-Carlo thresholds and the Q_{ξ,4} centering.
    pub calibration_reps: usize,
}

impl SimConfig {
    /// n = p ∈ {50, 100}, 500 replications.
    pub fn desk(models: Vec<ModelId>, seed: u64) -> Self {
        Self {
            models,
            stats: StatId::ALL.to_vec(),
            grid: vec![(50, 50), (100, 100)],
            reps: 500,
            seed,
            alpha: TABLE_ALPHA,
            calibration_reps: 1000,
        }
    }

    /// n = p ∈ {50, 70, 100, 200, 300}, 1000 replications.
    pub fn full(models: Vec<ModelId>, seed: u64) -> Self {
        Self {
            grid: vec![(50, 50), (70, 70), (100, 100), (200, 200), (300, 300)],
            reps: 1000,
            ..Self::desk(models, seed)
        }
    }

    fn test_config(&self) -> TestConfig {
        let seed = seeding::derive_seed(self.seed, &[tags::NULL]);
        TestConfig {
            alpha: self.alpha,
            calibration: CalibrationMode::Auto {
                reps: self.calibration_reps,
                seed,
            },
            xi4_centering: CenteringSource::Simulated {
                reps: self.calibration_reps,
                seed,
            },
            ..TestConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub model: ModelId,
    pub n: usize,
    pub p: usize,
    pub stat: StatId,
    pub rejection_rate: f64,
}

/// Rejection rates keyed by (model, n, p, statistic).
#[derive(Debug, Clone, PartialEq)]
pub struct SimTable {
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub rows: Vec<SimRow>,
}

impl SimTable {
    pub fn rate(&self, model: ModelId, n: usize, p: usize, stat: StatId) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.n == n && r.p == p && r.stat == stat)
            .map(|r| r.rejection_rate)
    }

    /// CSV with header `model,n,p,stat,reps,rejection_rate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,n,p,stat,reps,rejection_rate\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.model, r.n, r.p, r.stat, self.reps, r.rejection_rate
            ));
        }
        out
    }
}

/// Empirical sizes under the null models (a) and (b).
pub fn run_size(cfg: &SimConfig) -> Result<SimTable> {
    if let Some(m) = cfg.models.iter().find(|m| !m.is_null()) {
        return Err(Error::InvalidArgument(format!(
            "size tables use models a and b, got {m}"
        )));
    }
    run_table(cfg)
}

/// Empirical powers under the alternatives (c) to (f).
pub fn run_power(cfg: &SimConfig) -> Result<SimTable> {
    if let Some(m) = cfg.models.iter().find(|m| m.is_null()) {
        return Err(Error::InvalidArgument(format!(
            "power tables use models c-f, got {m}"
        )));
    }
    run_table(cfg)
}

/// Rejection rates for any mix of models.
pub fn run_table(cfg: &SimConfig) -> Result<SimTable> {
    if cfg.reps < MIN_TABLE_REPS {
        return Err(Error::CalibrationTooSmall(cfg.reps));
    }
    if cfg.models.is_empty() || cfg.stats.is_empty() || cfg.grid.is_empty() {
        return Err(Error::InvalidArgument(
            "simulation needs at least one model, statistic and grid point".into(),
        ));
    }
    let test_cfg = cfg.test_config();
    let mut rows = Vec::new();
    for &(n, p) in &cfg.grid {
        let samplers: Vec<ModelSampler> = cfg
            .models
            .iter()
            .map(|&m| ModelSampler::new(ModelSpec::new(m, n, p)?))
            .collect::<Result<_>>()?;
        // One calibration per size, shared by all models.
        let cal = Calibration::prepare(n, p, &cfg.stats, &test_cfg)?;
        for sampler in &samplers {
            let model = sampler.spec().id;
            let decisions: Vec<Vec<bool>> = (0..cfg.reps)
                .into_par_iter()
                .map(|r| {
                    let mut rng = seeding::stream(
                        cfg.seed,
                        &[tags::MODEL, model.index(), n as u64, p as u64, r as u64],
                    );
                    let data = sampler.sample(&mut rng)?;
                    let ctx = StatContext::new(&data, TiePolicy::Error)?;
                    Ok(cal.evaluate(&ctx)?.into_iter().map(|t| t.reject).collect())
                })
                .collect::<Result<_>>()?;
            for (k, &stat) in cfg.stats.iter().enumerate() {
                let hits = decisions.iter().filter(|d| d[k]).count();
                rows.push(SimRow {
                    model,
                    n,
                    p,
                    stat,
                    rejection_rate: hits as f64 / cfg.reps as f64,
                });
            }
        }
    }
    Ok(SimTable {
        reps: cfg.reps,
        seed: cfg.seed,
        alpha: cfg.alpha,
        rows,
    })
}

/// Matrix whose spectrum is studied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EsdKind {
    Phi,
    Psi,
}

impl FromStr for EsdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi" => Ok(EsdKind::Phi),
            "psi" => Ok(EsdKind::Psi),
            other => Err(Error::InvalidArgument(format!(
                "unknown matrix kind '{other}' (expected phi or psi)"
            ))),
        }
    }
}

/// Limit law the pooled spectrum is compared with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitLaw {
    Semicircle(SemicircleLaw),
    MarchenkoPastur(MPLaw),
}

impl LimitLaw {
    /// W(1, 2√(γ/5)) for Φ, MP(1, 2γ/5) for Ψ.
    pub fn for_kind(kind: EsdKind, gamma: f64) -> Result<Self> {
        Ok(match kind {
            EsdKind::Phi => LimitLaw::Semicircle(SemicircleLaw::for_ratio(gamma)?),
            EsdKind::Psi => LimitLaw::MarchenkoPastur(MPLaw::for_ratio(gamma)?),
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            LimitLaw::Semicircle(w) => w.cdf(x),
            LimitLaw::MarchenkoPastur(m) => m.cdf(x),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            LimitLaw::Semicircle(w) => format!("W({}, {})", w.center(), w.radius()),
            LimitLaw::MarchenkoPastur(m) => format!("MP({}, {})", m.y(), m.sigma2()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsdResult {
    pub kind: EsdKind,
    pub law: LimitLaw,
    pub pooled: SpectralSummary,
    pub histogram: Histogram,
    pub ks: f64,
}

/// Column rankings of a null data set: independent uniform permutations.
fn null_ranks(n: usize, p: usize, rng: &mut SimRng) -> Vec<Permutation> {
    (0..p).map(|_| sample_uniform(n, rng)).collect()
}

/// Pools the spectra of Φ or Ψ over `reps` null data sets and compares the
/// result with its limit law at γ̂ = p/n.
pub fn run_esd(
    kind: EsdKind,
    n: usize,
    p: usize,
    reps: usize,
    bins: usize,
    seed: u64,
) -> Result<EsdResult> {
    if reps == 0 {
        return Err(Error::InvalidArgument("ESD needs at least one replication".into()));
    }
    ModelSpec::new(ModelId::A, n, p)?;
    let spectra: Vec<SpectralSummary> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeding::stream(seed, &[tags::ESD, n as u64, p as u64, r as u64]);
            let xi = xi_matrix_from_ranks(&null_ranks(n, p, &mut rng))?;
            let m = match kind {
                EsdKind::Phi => phi_matrix(&xi)?,
                EsdKind::Psi => psi_matrix(&xi)?,
            };
            sym_eigenvalues(m.matrix(), DEFAULT_TOL)
        })
        .collect::<Result<_>>()?;
    let pooled = SpectralSummary::pooled(&spectra);
    let law = LimitLaw::for_kind(kind, p as f64 / n as f64)?;
    let ks = pooled.ks_distance(|x| law.cdf(x));
    let histogram = pooled.default_histogram(bins)?;
    Ok(EsdResult {
        kind,
        law,
        pooled,
        histogram,
        ks,
    })
}

/// Distribution of tr Ψᵏ over null replications for one k.
#[derive(Debug, Clone, PartialEq)]
pub struct CltSummary {
    pub k: u32,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Monte-Carlo standard error of `mean`.
    pub std_error: f64,
    /// Limiting variance Cov(G_k, G_k) at γ̂ = p/n.
    pub limit_variance: f64,
    /// Exact null mean where available (k = 1).
    pub exact_mean: Option<f64>,
    /// Draws centered by their sample mean.
    pub centered: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltResult {
    pub n: usize,
    pub p: usize,
    pub reps: usize,
    pub per_k: Vec<CltSummary>,
}

impl CltResult {
    /// CSV with header `k,replication,value` holding the centered draws.
    pub fn draws_csv(&self) -> String {
        let mut out = String::from("k,replication,value\n");
        for s in &self.per_k {
            for (r, v) in s.centered.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", s.k, r, v));
            }
        }
        out
    }
}

/// tr Ψᵏ for each k in `ks` over `reps` null replications.
pub fn run_clt(ks: &[u32], n: usize, p: usize, reps: usize, seed: u64) -> Result<CltResult> {
    if reps < MIN_CLT_REPS {
        return Err(Error::CalibrationTooSmall(reps));
    }
    if ks.is_empty() || ks.iter().any(|&k| k == 0 || k > limitlaws::MAX_LSS_INDEX) {
        return Err(Error::InvalidArgument(format!(
            "k values must lie in 1..={}",
            limitlaws::MAX_LSS_INDEX
        )));
    }
    ModelSpec::new(ModelId::A, n, p)?;
    let draws: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeding::stream(seed, &[tags::CLT, n as u64, p as u64, r as u64]);
            let ctx = StatContext::from_ranks(null_ranks(n, p, &mut rng))?;
            ks.iter()
                .map(|&k| match k {
                    1 => ctx.tr_psi(),
                    2 => ctx.tr_psi_sq(),
                    _ => trace_power(ctx.psi()?.matrix(), k, TraceMethod::Product),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let lss = LssGaussian::new(p as f64 / n as f64)?;
    let exact_mean = limitlaws::to_f64(&limitlaws::exact_mean_tr_psi(n as u64, p as u64)?);
    let per_k = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let values: Vec<f64> = draws.iter().map(|d| d[i]).collect();
            let (mean, variance, skewness) = moments(&values);
            Ok(CltSummary {
                k,
                mean,
                variance,
                skewness,
                std_error: (variance / reps as f64).sqrt(),
                limit_variance: lss.cov(k, k)?,
                exact_mean: (k == 1).then_some(exact_mean),
                centered: values.iter().map(|v| v - mean).collect(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(CltResult { n, p, reps, per_k })
}

/// Sample mean, unbiased variance and moment skewness.
pub fn moments(values: &[f64]) -> (f64, f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let (mut s2, mut s3) = (0.0, 0.0);
    for v in values {
        let d = v - mean;
        s2 += d * d;
        s3 += d * d * d;
    }
    let variance = s2 / (m - 1.0);
    let biased = s2 / m;
    let skewness = if biased > 0.0 {
        (s3 / m) / biased.powf(1.5)
    } else {
        0.0
    };
    (mean, variance, skewness)
}
