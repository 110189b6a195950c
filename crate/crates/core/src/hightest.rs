//! Tests of complete independence for high-dimensional data.
//!
//! Each statistic is reported in the form `value = (raw − centering) / scale`
//! and rejects for large values. Critical values come from a normal limit,
//! an extreme-value limit, or a Monte-Carlo null distribution. Rank-based
//! statistics are distribution-free under the null, so their Monte-Carlo
//! calibration is exact up to simulation error.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limitlaws::{self, LssGaussian};
use crate::normal;
use crate::permutations::{Permutation, TiePolicy};
use crate::rankcorr::{
    kendall_matrix_from_ranks, pearson_matrix, psi_matrix, spearman_matrix_from_ranks,
    xi_matrix_from_ranks, CorrelationMatrix, DataMatrix,
};
use crate::seeding::{self, open_unit, tags};
use crate::spectra::{trace_power, TraceMethod};

/// Smallest replication count accepted for simulated centerings and thresholds.
pub const MIN_CALIBRATION_REPS: usize = 100;

/// The nine statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StatId {
    /// Q_{ξ,2}: standardized tr Ψ.
    Xi2,
    /// Q_{ξ,4}: standardized tr Ψ².
    Xi4,
    /// Schott's Pearson sum of squares.
    SchottR2,
    /// Leung–Drton Spearman sum of squares.
    LeungRho2,
    /// Leung–Drton Kendall sum of squares.
    LeungTau2,
    /// Han–Chen–Liu Spearman maximum.
    HanRho,
    /// Han–Chen–Liu Kendall maximum.
    HanTau,
    /// Bao et al. fourth Spearman spectral moment.
    BaoRho4,
    /// Li–Xue fourth Kendall spectral moment.
    LiTau4,
}

impl StatId {
    pub const ALL: [StatId; 9] = [
        StatId::SchottR2,
        StatId::LeungRho2,
        StatId::BaoRho4,
        StatId::HanRho,
        StatId::LeungTau2,
        StatId::LiTau4,
        StatId::HanTau,
        StatId::Xi2,
        StatId::Xi4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StatId::Xi2 => "q_xi2",
            StatId::Xi4 => "q_xi4",
            StatId::SchottR2 => "q_r2",
            StatId::LeungRho2 => "q_rho2",
            StatId::LeungTau2 => "q_tau2",
            StatId::HanRho => "m_rho",
            StatId::HanTau => "m_tau",
            StatId::BaoRho4 => "q_rho4",
            StatId::LiTau4 => "q_tau4",
        }
    }

    /// Everything except Schott depends on the data only through ranks.
    pub fn is_rank_based(self) -> bool {
        self != StatId::SchottR2
    }

    /// Limit law used by [`CalibrationMode::Auto`], if any.
    fn asymptotic_null(self) -> Option<NullRule> {
        match self {
            StatId::Xi2 | StatId::Xi4 | StatId::SchottR2 => Some(NullRule::Normal),
            StatId::HanRho | StatId::HanTau => Some(NullRule::ExtremeValue),
            _ => None,
        }
    }
}

impl fmt::Display for StatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown statistic '{s}' (expected one of {})",
                    StatId::ALL.map(StatId::name).join(", ")
                ))
            })
    }
}

/// Where critical values come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationMode {
    /// Limit laws only; statistics without one need a variance override.
    Asymptotic,
    /// Empirical null quantiles for every statistic.
    MonteCarlo { reps: usize, seed: u64 },
    /// Limit laws where available, Monte Carlo otherwise.
    Auto { reps: usize, seed: u64 },
}

/// Source of E tr Ψ² for Q_{ξ,4}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenteringSource {
    Simulated { reps: usize, seed: u64 },
    Provided(f64),
}

/// Null marginal used for simulated null data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NullMarginal {
    #[default]
    Gaussian,
    Cauchy,
}

impl NullMarginal {
    /// Both marginals are increasing functions of the same uniform draw, so
    /// they yield identical rankings for a given stream.
    #[inline]
    fn transform(self, u: f64) -> f64 {
        match self {
            NullMarginal::Gaussian => normal::quantile(u),
            NullMarginal::Cauchy => (std::f64::consts::PI * (u - 0.5)).tan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub alpha: f64,
    pub calibration: CalibrationMode,
    pub xi4_centering: CenteringSource,
    /// Asymptotic null variances for statistics that have no built-in limit.
    pub variance_overrides: BTreeMap<StatId, f64>,
    /// Permit Monte-Carlo calibration of Schott under a Gaussian null.
    pub allow_model_dependent_null: bool,
    pub null_marginal: NullMarginal,
    pub ties: TiePolicy,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            calibration: CalibrationMode::Auto { reps: 1000, seed: 0 },
            xi4_centering: CenteringSource::Simulated { reps: 1000, seed: 0 },
            variance_overrides: BTreeMap::new(),
            allow_model_dependent_null: false,
            null_marginal: NullMarginal::Gaussian,
            ties: TiePolicy::Error,
        }
    }
}

impl TestConfig {
    /// Default configuration with every simulated quantity seeded by `seed`.
    pub fn seeded(seed: u64) -> Self {
        Self {
            calibration: CalibrationMode::Auto { reps: 1000, seed },
            xi4_centering: CenteringSource::Simulated { reps: 1000, seed },
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if let CalibrationMode::MonteCarlo { reps, .. } | CalibrationMode::Auto { reps, .. } =
            self.calibration
        {
            check_reps(reps)?;
        }
        if let CenteringSource::Simulated { reps, .. } = self.xi4_centering {
            check_reps(reps)?;
        }
        for (id, &v) in &self.variance_overrides {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "variance override for {id} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_CALIBRATION_REPS {
        Err(Error::CalibrationTooSmall(reps))
    } else {
        Ok(())
    }
}

/// Outcome of one test on one data set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub value: f64,
    pub centering: f64,
    pub scale: f64,
    pub threshold: f64,
    pub p_value: Option<f64>,
    pub reject: bool,
}

/// Lazily computed matrices of one data set.
pub struct StatContext<'a> {
    data: Option<&'a DataMatrix>,
    n: usize,
    p: usize,
    ranks: Vec<Permutation>,
    xi: OnceCell<CorrelationMatrix>,
    psi: OnceCell<CorrelationMatrix>,
    spearman: OnceCell<CorrelationMatrix>,
    kendall: OnceCell<CorrelationMatrix>,
    pearson: OnceCell<CorrelationMatrix>,
}

impl<'a> StatContext<'a> {
    pub fn new(data: &'a DataMatrix, ties: TiePolicy) -> Result<Self> {
        let mut ctx = Self::from_ranks(data.ranks(ties)?)?;
        ctx.data = Some(data);
        Ok(ctx)
    }

    /// Context without raw values; Pearson-based statistics are unavailable.
    pub fn from_ranks(ranks: Vec<Permutation>) -> Result<StatContext<'static>> {
        let p = ranks.len();
        let n = ranks.first().map_or(0, Permutation::len);
        if p < DataMatrix::MIN_COLS || n < DataMatrix::MIN_ROWS {
            return Err(Error::InvalidData(format!(
                "need n ≥ {} and p ≥ {}, got n = {n}, p = {p}",
                DataMatrix::MIN_ROWS,
                DataMatrix::MIN_COLS
            )));
        }
        Ok(StatContext {
            data: None,
            n,
            p,
            ranks,
            xi: OnceCell::new(),
            psi: OnceCell::new(),
            spearman: OnceCell::new(),
            kendall: OnceCell::new(),
            pearson: OnceCell::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn ranks(&self) -> &[Permutation] {
        &self.ranks
    }

    fn cached(
        cell: &OnceCell<CorrelationMatrix>,
        build: impl FnOnce() -> Result<CorrelationMatrix>,
    ) -> Result<&CorrelationMatrix> {
        if let Some(m) = cell.get() {
            return Ok(m);
        }
        let m = build()?;
        Ok(cell.get_or_init(|| m))
    }

    pub fn xi(&self) -> Result<&CorrelationMatrix> {
        Self::cached(&self.xi, || xi_matrix_from_ranks(&self.ranks))
    }

    pub fn psi(&self) -> Result<&CorrelationMatrix> {
        Self::cached(&self.psi, || psi_matrix(self.xi()?))
    }

    pub fn spearman(&self) -> Result<&CorrelationMatrix> {
        Self::cached(&self.spearman, || spearman_matrix_from_ranks(&self.ranks))
    }

    pub fn kendall(&self) -> Result<&CorrelationMatrix> {
        Self::cached(&self.kendall, || kendall_matrix_from_ranks(&self.ranks))
    }

    pub fn pearson(&self) -> Result<&CorrelationMatrix> {
        Self::cached(&self.pearson, || {
            let data = self.data.ok_or_else(|| {
                Error::InvalidArgument("Pearson statistics need the raw data".into())
            })?;
            pearson_matrix(data)
        })
    }

    /// tr Ψ = Σ_{i≠j} Ξᵢⱼ².
    pub fn tr_psi(&self) -> Result<f64> {
        Ok(self.xi()?.off_diagonal_sum_sq())
    }

    /// tr Ψ² = ‖Ψ‖²_F.
    pub fn tr_psi_sq(&self) -> Result<f64> {
        Ok(self.psi()?.matrix().frobenius_sq())
    }

    /// The statistic before centering and scaling.
    pub fn raw(&self, stat: StatId) -> Result<f64> {
        let (n, p) = (self.n as f64, self.p as f64);
        Ok(match stat {
            StatId::Xi2 => self.tr_psi()?,
            StatId::Xi4 => self.tr_psi_sq()?,
            StatId::SchottR2 => 0.5 * self.pearson()?.off_diagonal_sum_sq(),
            StatId::LeungRho2 => 0.5 * self.spearman()?.off_diagonal_sum_sq(),
            StatId::LeungTau2 => 0.5 * self.kendall()?.off_diagonal_sum_sq(),
            StatId::HanRho => (n - 1.0) * max_off_diagonal_sq(self.spearman()?),
            StatId::HanTau => {
                9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0)) * max_off_diagonal_sq(self.kendall()?)
            }
            StatId::BaoRho4 => {
                (n / p).powi(4) * trace_power(self.spearman()?.matrix(), 4, TraceMethod::Product)?
            }
            StatId::LiTau4 => trace_power(self.kendall()?.matrix(), 4, TraceMethod::Product)?,
        })
    }
}

fn max_off_diagonal_sq(m: &CorrelationMatrix) -> f64 {
    let p = m.dim();
    let mut best = 0.0f64;
    for i in 0..p {
        for j in (i + 1)..p {
            best = best.max(m.get(i, j).powi(2));
        }
    }
    best
}

/// Centering of the statistics whose null mean is available in closed form.
pub fn closed_form_centering(stat: StatId, n: usize, p: usize) -> Option<f64> {
    let (nf, pf) = (n as f64, p as f64);
    Some(match stat {
        StatId::Xi2 => limitlaws::to_f64(&limitlaws::exact_mean_tr_psi(n as u64, p as u64).ok()?),
        StatId::Xi4 => return None,
        StatId::SchottR2 => pf * (pf - 1.0) / (2.0 * nf),
        StatId::LeungRho2 => pf * (pf - 1.0) / (2.0 * (nf - 1.0)),
        StatId::LeungTau2 => pf * (pf - 1.0) * (2.0 * nf + 5.0) / (9.0 * nf * (nf - 1.0)),
        StatId::HanRho | StatId::HanTau => 4.0 * pf.ln() - pf.ln().ln(),
        StatId::BaoRho4 => {
            let n4 = nf.powi(4);
            n4 / (nf - 1.0).powi(3)
                + n4 / pf.powi(3)
                + 6.0 * n4 / ((nf - 1.0) * pf * pf)
                + 6.0 * n4 / (pf * (nf - 1.0).powi(2))
        }
        StatId::LiTau4 => {
            pf + 8.0 * pf * pf / (3.0 * nf)
                + 128.0 * pf.powi(3) / (nf * nf)
                + 16.0 * pf.powi(4) / (81.0 * nf.powi(3))
        }
    })
}

/// Default scale: √Var(G_k) for the ξ statistics with γ̂ = p/n, Schott's
/// normalizing factor, and 1 elsewhere.
fn default_scale(stat: StatId, n: usize, p: usize) -> Result<f64> {
    let (nf, pf) = (n as f64, p as f64);
    Ok(match stat {
        StatId::Xi2 => LssGaussian::new(pf / nf)?.cov(1, 1)?.sqrt(),
        StatId::Xi4 => LssGaussian::new(pf / nf)?.cov(2, 2)?.sqrt(),
        StatId::SchottR2 => (pf * (pf - 1.0) * (nf - 1.0) / (nf * nf * (nf + 2.0))).sqrt(),
        _ => 1.0,
    })
}

/// Extreme-value threshold y_α = −2·log(−√(8π)·log(1−α)).
pub fn extreme_value_threshold(alpha: f64) -> f64 {
    -2.0 * (-(8.0 * std::f64::consts::PI).sqrt() * (1.0 - alpha).ln()).ln()
}

/// 1 − exp(−(8π)^{−1/2}·e^{−y/2}).
pub fn extreme_value_p_value(y: f64) -> f64 {
    -(-(-y / 2.0).exp() / (8.0 * std::f64::consts::PI).sqrt()).exp_m1()
}

/// Empirical (1−α) quantile: the ⌈(1−α)B⌉-th order statistic.
pub fn empirical_upper_quantile(sorted: &[f64], alpha: f64) -> f64 {
    let b = sorted.len();
    let k = ((1.0 - alpha) * b as f64).ceil() as usize;
    sorted[k.clamp(1, b) - 1]
}

#[derive(Debug, Clone, PartialEq)]
enum NullRule {
    Normal,
    ExtremeValue,
    /// Sorted standardized null values.
    Empirical(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
struct StatPlan {
    stat: StatId,
    centering: f64,
    scale: f64,
    threshold: f64,
    rule: NullRule,
}

/// Raw statistic values over `reps` independent null data sets at (n, p).
///
/// Row r holds the values of `stats` for replication r. Each replication
/// draws from its own stream, so the result does not depend on scheduling.
pub fn null_raw_values(
    stats: &[StatId],
    n: usize,
    p: usize,
    reps: usize,
    seed: u64,
    marginal: NullMarginal,
) -> Result<Vec<Vec<f64>>> {
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeding::stream(seed, &[tags::NULL, n as u64, p as u64, r as u64]);
            let columns: Vec<Vec<f64>> = (0..p)
                .map(|_| (0..n).map(|_| marginal.transform(open_unit(&mut rng))).collect())
                .collect();
            let data = DataMatrix::from_columns(columns)?;
            let ctx = StatContext::new(&data, TiePolicy::Error)?;
            stats.iter().map(|&s| ctx.raw(s)).collect()
        })
        .collect()
}

/// Centerings, scales and critical values for a fixed (n, p), reusable
/// across data sets of that shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    n: usize,
    p: usize,
    alpha: f64,
    plans: Vec<StatPlan>,
}

impl Calibration {
    pub fn prepare(n: usize, p: usize, stats: &[StatId], cfg: &TestConfig) -> Result<Self> {
        cfg.validate()?;
        if n < DataMatrix::MIN_ROWS || p < DataMatrix::MIN_COLS {
            return Err(Error::InvalidData(format!(
                "need n ≥ {} and p ≥ {}, got n = {n}, p = {p}",
                DataMatrix::MIN_ROWS,
                DataMatrix::MIN_COLS
            )));
        }

        // Decide each statistic's null rule before simulating anything.
        let mut rules: Vec<Option<NullRule>> = Vec::with_capacity(stats.len());
        let mut mc: Vec<StatId> = Vec::new();
        for &stat in stats {
            let asymptotic = stat.asymptotic_null().or_else(|| {
                cfg.variance_overrides
                    .contains_key(&stat)
                    .then_some(NullRule::Normal)
            });
            let rule = match cfg.calibration {
                CalibrationMode::Asymptotic => Some(asymptotic.ok_or_else(|| {
                    Error::NoAsymptoticNull(format!(
                        "{stat} has no built-in limit law; supply a variance override or use Monte-Carlo calibration"
                    ))
                })?),
                CalibrationMode::Auto { .. } => asymptotic,
                CalibrationMode::MonteCarlo { .. } => None,
            };
            if rule.is_none() {
                if !stat.is_rank_based() && !cfg.allow_model_dependent_null {
                    return Err(Error::NotDistributionFree(format!(
                        "{stat} depends on the marginal law; its Monte-Carlo null is only valid for Gaussian data"
                    )));
                }
                mc.push(stat);
            }
            rules.push(rule);
        }

        // One simulated batch serves both the Q_{ξ,4} centering and the
        // Monte-Carlo thresholds when their settings coincide.
        let mc_settings = match cfg.calibration {
            CalibrationMode::MonteCarlo { reps, seed } | CalibrationMode::Auto { reps, seed } => {
                Some((reps, seed))
            }
            CalibrationMode::Asymptotic => None,
        };
        let needs_xi4_centering = stats.contains(&StatId::Xi4);
        let mut batch_stats = mc.clone();
        let mut xi4_mean = None;
        if needs_xi4_centering {
            match cfg.xi4_centering {
                CenteringSource::Provided(v) => xi4_mean = Some(v),
                CenteringSource::Simulated { reps, seed } => {
                    if !mc.is_empty() && mc_settings == Some((reps, seed)) {
                        if !batch_stats.contains(&StatId::Xi4) {
                            batch_stats.push(StatId::Xi4);
                        }
                    } else {
                        let rows =
                            null_raw_values(&[StatId::Xi4], n, p, reps, seed, cfg.null_marginal)?;
                        xi4_mean = Some(mean(rows.iter().map(|r| r[0])));
                    }
                }
            }
        }
        let batch = if mc.is_empty() {
            Vec::new()
        } else {
            let (reps, seed) = mc_settings.expect("Monte-Carlo statistics imply a setting");
            null_raw_values(&batch_stats, n, p, reps, seed, cfg.null_marginal)?
        };
        let column = |stat: StatId| -> Option<Vec<f64>> {
            let k = batch_stats.iter().position(|&s| s == stat)?;
            Some(batch.iter().map(|row| row[k]).collect())
        };
        if needs_xi4_centering && xi4_mean.is_none() {
            xi4_mean = Some(mean(column(StatId::Xi4).expect("batched").into_iter()));
        }

        let mut plans = Vec::with_capacity(stats.len());
        for (&stat, rule) in stats.iter().zip(rules) {
            let centering = match stat {
                StatId::Xi4 => xi4_mean.expect("computed above"),
                _ => closed_form_centering(stat, n, p).expect("closed form exists"),
            };
            let scale = match cfg.variance_overrides.get(&stat) {
                Some(&v) => v.sqrt(),
                None => default_scale(stat, n, p)?,
            };
            let (rule, threshold) = match rule {
                Some(NullRule::Normal) => (NullRule::Normal, normal::quantile(1.0 - cfg.alpha)),
                Some(NullRule::ExtremeValue) => {
                    (NullRule::ExtremeValue, extreme_value_threshold(cfg.alpha))
                }
                Some(NullRule::Empirical(_)) => unreachable!("not chosen before simulation"),
                None => {
                    let mut values: Vec<f64> = column(stat)
                        .expect("batched")
                        .into_iter()
                        .map(|raw| (raw - centering) / scale)
                        .collect();
                    values.sort_by(f64::total_cmp);
                    let t = empirical_upper_quantile(&values, cfg.alpha);
                    (NullRule::Empirical(values), t)
                }
            };
            plans.push(StatPlan {
                stat,
                centering,
                scale,
                threshold,
                rule,
            });
        }
        Ok(Self {
            n,
            p,
            alpha: cfg.alpha,
            plans,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn stats(&self) -> Vec<StatId> {
        self.plans.iter().map(|pl| pl.stat).collect()
    }

    /// Critical value of `stat`, if calibrated.
    pub fn threshold(&self, stat: StatId) -> Option<f64> {
        self.plans.iter().find(|pl| pl.stat == stat).map(|pl| pl.threshold)
    }

    /// Centering of `stat`, if calibrated.
    pub fn centering(&self, stat: StatId) -> Option<f64> {
        self.plans.iter().find(|pl| pl.stat == stat).map(|pl| pl.centering)
    }

    /// Sorted standardized null values of a Monte-Carlo calibrated statistic.
    pub fn null_distribution(&self, stat: StatId) -> Option<&[f64]> {
        self.plans.iter().find(|pl| pl.stat == stat).and_then(|pl| match &pl.rule {
            NullRule::Empirical(v) => Some(v.as_slice()),
            _ => None,
        })
    }

    pub fn evaluate(&self, ctx: &StatContext<'_>) -> Result<Vec<TestReport>> {
        if ctx.n() != self.n || ctx.p() != self.p {
            return Err(Error::InvalidArgument(format!(
                "calibrated for n = {}, p = {} but data has n = {}, p = {}",
                self.n,
                self.p,
                ctx.n(),
                ctx.p()
            )));
        }
        self.plans
            .iter()
            .map(|pl| {
                let value = (ctx.raw(pl.stat)? - pl.centering) / pl.scale;
                let p_value = match &pl.rule {
                    NullRule::Normal => normal::sf(value),
                    NullRule::ExtremeValue => extreme_value_p_value(value),
                    NullRule::Empirical(null) => {
                        let at_least = null.len() - null.partition_point(|&x| x < value);
                        (1 + at_least) as f64 / (null.len() + 1) as f64
                    }
                };
                Ok(TestReport {
                    name: pl.stat.name().to_string(),
                    value,
                    centering: pl.centering,
                    scale: pl.scale,
                    threshold: pl.threshold,
                    p_value: Some(p_value),
                    reject: value > pl.threshold,
                })
            })
            .collect()
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

/// Runs `stats` on `data`, sharing one calibration.
pub fn run_tests(data: &DataMatrix, stats: &[StatId], cfg: &TestConfig) -> Result<Vec<TestReport>> {
    let ctx = StatContext::new(data, cfg.ties)?;
    let cal = Calibration::prepare(data.n(), data.p(), stats, cfg)?;
    cal.evaluate(&ctx)
}

fn single(data: &DataMatrix, stat: StatId, cfg: &TestConfig) -> Result<TestReport> {
    Ok(run_tests(data, &[stat], cfg)?.remove(0))
}

pub fn q_xi2(data: &DataMatrix, cfg: &TestConfig) -> Result<TestReport> {
    single(data, StatId::Xi2, cfg)
}

pub fn q_xi4(data: &DataMatrix, cfg: &TestConfig) -> Result<TestReport> {
    single(data, StatId::Xi4, cfg)
}

pub fn schott_q_r2(data: &DataMatrix, cfg: &TestConfig) -> Result<TestReport> {
    single(data, StatId::SchottR2, cfg)
}

pub fn leung_q_rho2(data: &DataMatrix, cfg: &TestConfig) -> Result<TestReport> {
    single(data, StatId::LeungRho2, cfg)
}

pub fn leung_q_tau2(data: &DataMatrix, cfg: &TestConfig) -> Result<TestReport> {
    single(data, StatId::LeungTau2, cfg)
}

pub fn han_m_rho(data: &DataMatrix, cfg: &TestConfig) -> Result<TestReport> {
    single(data, StatId::HanRho, cfg)
}

pub fn han_m_tau(data: &DataMatrix, cfg: &TestConfig) -> Result<TestReport> {
    single(data, StatId::HanTau, cfg)
}

pub fn bao_q_rho4(data: &DataMatrix, cfg: &TestConfig) -> Result<TestReport> {
    single(data, StatId::BaoRho4, cfg)
}

pub fn li_q_tau4(data: &DataMatrix, cfg: &TestConfig) -> Result<TestReport> {
    single(data, StatId::LiTau4, cfg)
}

/// Monte-Carlo (1−α) critical value of `stat` at (n, p) from `reps` null
/// replications.
pub fn calibrate_null(
    stat: StatId,
    n: usize,
    p: usize,
    reps: usize,
    seed: u64,
    alpha: f64,
) -> Result<f64> {
    let cfg = TestConfig {
        alpha,
        calibration: CalibrationMode::MonteCarlo { reps, seed },
        xi4_centering: CenteringSource::Simulated { reps, seed },
        ..TestConfig::default()
    };
    let cal = Calibration::prepare(n, p, &[stat], &cfg)?;
    Ok(cal.threshold(stat).expect("calibrated"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::SimRng;
    use rand::SeedableRng;

    fn gaussian(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = SimRng::seed_from_u64(seed);
        DataMatrix::from_columns(
            (0..p)
                .map(|_| (0..n).map(|_| normal::quantile(open_unit(&mut rng))).collect())
                .collect(),
        )
        .unwrap()
    }

    fn fast_cfg(seed: u64) -> TestConfig {
        TestConfig {
            calibration: CalibrationMode::Auto { reps: 200, seed },
            xi4_centering: CenteringSource::Simulated { reps: 200, seed },
            ..TestConfig::default()
        }
    }

    #[test]
    fn names_round_trip() {
        for id in StatId::ALL {
            assert_eq!(id.name().parse::<StatId>().unwrap(), id);
        }
        assert!("nope".parse::<StatId>().is_err());
    }

    #[test]
    fn xi2_scale_and_centering() {
        let data = gaussian(50, 50, 1);
        let r = q_xi2(&data, &TestConfig::default()).unwrap();
        assert!((r.scale * r.scale - 0.32).abs() < 1e-12);
        let exact = limitlaws::to_f64(&limitlaws::exact_mean_tr_psi(50, 50).unwrap());
        assert_eq!(r.centering, exact);
        assert!((r.threshold - 1.644_853_626_951_472_2).abs() < 1e-12);
        assert_eq!(r.reject, r.value > r.threshold);
    }

    #[test]
    fn duplicated_column_rejects() {
        let base = gaussian(40, 2, 3).column(0).to_vec();
        let data = DataMatrix::from_columns(vec![base.clone(), base]).unwrap();
        let ctx = StatContext::new(&data, TiePolicy::Error).unwrap();
        let expected = 2.0 * (38.0f64 / 41.0).powi(2);
        assert!((ctx.tr_psi().unwrap() - expected).abs() < 1e-12);
        assert!(q_xi2(&data, &TestConfig::default()).unwrap().reject);
    }

    #[test]
    fn xi4_scale_and_provided_centering() {
        let data = gaussian(30, 30, 4);
        let cfg = TestConfig {
            xi4_centering: CenteringSource::Provided(7.5),
            calibration: CalibrationMode::Asymptotic,
            ..TestConfig::default()
        };
        let r = q_xi4(&data, &cfg).unwrap();
        assert_eq!(r.centering, 7.5);
        assert!((r.scale * r.scale - 0.9216).abs() < 1e-12);
    }

    #[test]
    fn simulated_centering_is_deterministic() {
        let data = gaussian(20, 10, 5);
        let a = q_xi4(&data, &fast_cfg(9)).unwrap();
        let b = q_xi4(&data, &fast_cfg(9)).unwrap();
        assert_eq!(a.centering, b.centering);
        let c = q_xi4(&data, &fast_cfg(10)).unwrap();
        assert_ne!(a.centering, c.centering);
    }

    #[test]
    fn too_few_reps_rejected() {
        let data = gaussian(20, 10, 5);
        let cfg = TestConfig {
            xi4_centering: CenteringSource::Simulated { reps: 99, seed: 0 },
            ..TestConfig::default()
        };
        assert_eq!(q_xi4(&data, &cfg), Err(Error::CalibrationTooSmall(99)));
        assert_eq!(
            calibrate_null(StatId::LeungRho2, 20, 5, 50, 0, 0.05),
            Err(Error::CalibrationTooSmall(50))
        );
    }

    #[test]
    fn schott_refuses_monte_carlo_unless_allowed() {
        assert!(matches!(
            calibrate_null(StatId::SchottR2, 20, 5, 200, 0, 0.05),
            Err(Error::NotDistributionFree(_))
        ));
        let cfg = TestConfig {
            calibration: CalibrationMode::MonteCarlo { reps: 200, seed: 1 },
            allow_model_dependent_null: true,
            ..TestConfig::default()
        };
        assert!(Calibration::prepare(20, 5, &[StatId::SchottR2], &cfg).is_ok());
    }

    #[test]
    fn asymptotic_mode_needs_a_limit() {
        let data = gaussian(20, 5, 2);
        let cfg = TestConfig {
            calibration: CalibrationMode::Asymptotic,
            ..TestConfig::default()
        };
        assert!(matches!(
            leung_q_rho2(&data, &cfg),
            Err(Error::NoAsymptoticNull(_))
        ));
        let mut cfg = cfg;
        cfg.variance_overrides.insert(StatId::LeungRho2, 4.0);
        let r = leung_q_rho2(&data, &cfg).unwrap();
        assert_eq!(r.scale, 2.0);
    }

    #[test]
    fn statistic_formulas() {
        let data = gaussian(25, 6, 8);
        let ctx = StatContext::new(&data, TiePolicy::Error).unwrap();
        let (n, p) = (25.0f64, 6.0f64);
        let s = ctx.spearman().unwrap();
        let k = ctx.kendall().unwrap();
        let mut sum_rho = 0.0;
        let mut max_tau: f64 = 0.0;
        for i in 0..6 {
            for j in (i + 1)..6 {
                sum_rho += s.get(i, j).powi(2);
                max_tau = max_tau.max(k.get(i, j).powi(2));
            }
        }
        assert!((ctx.raw(StatId::LeungRho2).unwrap() - sum_rho).abs() < 1e-12);
        let m_tau = ctx.raw(StatId::HanTau).unwrap() - closed_form_centering(StatId::HanTau, 25, 6).unwrap();
        let direct = 9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0)) * max_tau - 4.0 * p.ln() + p.ln().ln();
        assert!((m_tau - direct).abs() < 1e-10);
        // M_τ centering at p = 2.
        let c2 = closed_form_centering(StatId::HanTau, 10, 2).unwrap();
        assert_eq!(c2, 4.0 * 2f64.ln() - 2f64.ln().ln());
        // tr S⁴ against a naive quadruple product.
        let mut naive = 0.0;
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..6 {
                    for d in 0..6 {
                        naive += s.get(a, b) * s.get(b, c) * s.get(c, d) * s.get(d, a);
                    }
                }
            }
        }
        let bao = ctx.raw(StatId::BaoRho4).unwrap() / (n / p).powi(4);
        assert!((bao - naive).abs() < 1e-10 * naive);
    }

    #[test]
    fn monotone_invariance() {
        let data = gaussian(30, 8, 11);
        let moved = data.map(f64::exp).unwrap();
        let stats: Vec<StatId> = StatId::ALL.into_iter().filter(|s| s.is_rank_based()).collect();
        let cfg = fast_cfg(3);
        let a = run_tests(&data, &stats, &cfg).unwrap();
        let b = run_tests(&moved, &stats, &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.value - y.value).abs() <= 1e-12 * x.value.abs().max(1.0), "{}", x.name);
        }
    }

    #[test]
    fn extreme_value_calibration() {
        let y = extreme_value_threshold(0.05);
        assert!((extreme_value_p_value(y) - 0.05).abs() < 1e-12);
        assert!(extreme_value_p_value(y + 1.0) < 0.05);
    }

    #[test]
    fn empirical_quantile_definition() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(empirical_upper_quantile(&v, 0.05), 95.0);
        assert_eq!(empirical_upper_quantile(&v, 0.5), 50.0);
    }

    #[test]
    fn gaussian_and_cauchy_nulls_give_identical_rank_statistics() {
        let stats: Vec<StatId> = StatId::ALL.into_iter().filter(|s| s.is_rank_based()).collect();
        let g = null_raw_values(&stats, 15, 6, 50, 4, NullMarginal::Gaussian).unwrap();
        let c = null_raw_values(&stats, 15, 6, 50, 4, NullMarginal::Cauchy).unwrap();
        assert_eq!(g, c);
    }

    #[test]
    fn p_values_decrease_with_value() {
        let data = gaussian(30, 10, 12);
        let cfg = fast_cfg(5);
        let cal = Calibration::prepare(30, 10, &[StatId::LeungTau2, StatId::Xi2], &cfg).unwrap();
        let ctx = StatContext::new(&data, TiePolicy::Error).unwrap();
        let reports = cal.evaluate(&ctx).unwrap();
        for r in &reports {
            let p = r.p_value.unwrap();
            assert!(p > 0.0 && p <= 1.0);
            assert_eq!(r.reject, r.value > r.threshold);
        }
        let null = cal.null_distribution(StatId::LeungTau2).unwrap();
        assert_eq!(null.len(), 200);
        assert!(null.windows(2).all(|w| w[0] <= w[1]));
        assert!(normal::sf(1.0) > normal::sf(2.0));
    }

    #[test]
    fn report_serializes_with_spec_fields() {
        let r = TestReport {
            name: "q_xi2".into(),
            value: 1.0,
            centering: 0.5,
            scale: 2.0,
            threshold: 1.6,
            p_value: None,
            reject: false,
        };
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"name":"q_xi2","value":1.0,"centering":0.5,"scale":2.0,"threshold":1.6,"p_value":null,"reject":false}"#
        );
    }
}
