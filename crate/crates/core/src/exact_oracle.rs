//! Exact enumeration over ranking tuples in rational arithmetic.
//!
//! Under complete independence each column's ranking is a uniform element of
//! 𝒮ₙ, independent across columns, so every rank-measurable expectation at
//! small n is a finite average over all `(n!)^p` tuples. The checks here pin
//! closed-form constants to exact values.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::limitlaws;
use crate::permutations::{
    enumerate_all, is_independent_family, relative_rank, DependenceGraph, Permutation,
};
use crate::rankcorr::xi_increment_sum;
use crate::Rational;

/// Largest number of tuples [`oracle_expectation`] will visit.
pub const MAX_TUPLES: u128 = 10_000_000;

/// One exact comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub quantity: String,
    pub exact: Rational,
    pub reference: Rational,
    pub matches: bool,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, exact: Rational, reference: Rational) -> Self {
        let matches = exact == reference;
        Self {
            quantity: quantity.into(),
            exact,
            reference,
            matches,
        }
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}, {}, {}, {}",
            self.quantity,
            self.exact,
            self.reference,
            if self.matches { "MATCH" } else { "MISMATCH" }
        )
    }
}

fn q(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn int(v: u128) -> Rational {
    BigRational::from_integer(BigInt::from(v))
}

/// ξ value of a relative rank as an exact rational.
pub fn xi_exact(sigma: &Permutation) -> Rational {
    let n = sigma.len() as i64;
    let d = n * n - 1;
    q(d - 3 * xi_increment_sum(sigma) as i64, d)
}

/// Ξ_ij = f_ξ(R_j ∘ R_i⁻¹) for 0-based column indices.
pub fn xi_entry(ranks: &[&Permutation], i: usize, j: usize) -> Rational {
    xi_exact(&relative_rank(ranks[i], ranks[j]).expect("tuple lengths agree"))
}

/// (1/(n!)^p) Σ over all p-tuples of rankings of `f`, exactly.
pub fn oracle_expectation<F>(n: usize, p: usize, f: F) -> Result<Rational>
where
    F: Fn(&[&Permutation]) -> Rational + Sync,
{
    let perms: Vec<Permutation> = enumerate_all(n)?.collect();
    let base = perms.len() as u128;
    let total = base.checked_pow(p as u32).filter(|&t| t <= MAX_TUPLES).ok_or_else(|| {
        Error::EnumerationTooLarge(format!(
            "({n}!)^{p} tuples exceed the limit of {MAX_TUPLES}"
        ))
    })?;
    let sum = (0..total as u64)
        .into_par_iter()
        .fold(Rational::zero, |acc, idx| {
            let mut rest = idx as u128;
            let tuple: Vec<&Permutation> = (0..p)
                .map(|_| {
                    let k = (rest % base) as usize;
                    rest /= base;
                    &perms[k]
                })
                .collect();
            acc + f(&tuple)
        })
        .reduce(Rational::zero, |a, b| a + b);
    Ok(sum / int(total))
}

/// (1/n!) Σ_σ f(σ) over a single uniform permutation.
///
/// Any pairwise quantity depends on (R_i, R_j) only through R_j ∘ R_i⁻¹,
/// which is itself uniform, so this replaces an (n!)² enumeration.
pub fn single_permutation_expectation<F>(n: usize, f: F) -> Result<Rational>
where
    F: Fn(&Permutation) -> Rational,
{
    let mut sum = Rational::zero();
    let mut count = 0u128;
    for sigma in enumerate_all(n)? {
        sum += f(&sigma);
        count += 1;
    }
    Ok(sum / int(count))
}

/// E Ξ₁₂ᵏ.
pub fn xi_moment(n: usize, k: u32) -> Result<Rational> {
    single_permutation_expectation(n, |s| num_traits::pow(xi_exact(s), k as usize))
}

/// Joint expectation and product of marginals for the triangle n = 3 example.
pub fn verify_counterexample() -> Result<Vec<OracleReport>> {
    let phi = |r: &[&Permutation], a: usize, b: usize| {
        let x = xi_entry(r, a, b);
        let y = xi_entry(r, b, a);
        &x * &x + &y * &y
    };
    let joint = oracle_expectation(3, 3, |r| phi(r, 0, 1) * phi(r, 0, 2) * phi(r, 1, 2))?;
    let marginal = oracle_expectation(3, 2, |r| phi(r, 0, 1))?;
    let product = num_traits::pow(marginal.clone(), 3);
    Ok(vec![
        OracleReport::new("triangle joint expectation n=3", joint, q(5, 16384)),
        OracleReport::new("triangle product of marginals n=3", product, q(1, 4096)),
        OracleReport::new("pair marginal E[Xi12^2+Xi21^2] n=3", marginal, q(1, 16)),
    ])
}

/// P(σ(a₁)+1 = σ(a₂), σ(d₁)+1 = σ(d₂)) for a uniform σ ∈ 𝒮ₙ (1-based positions).
pub fn arrow_probability(n: usize, a: (usize, usize), d: (usize, usize)) -> Result<Rational> {
    for v in [a.0, a.1, d.0, d.1] {
        if v == 0 || v > n {
            return Err(Error::InvalidArgument(format!(
                "position {v} outside 1..={n}"
            )));
        }
    }
    single_permutation_expectation(n, |s| {
        let hit = |(x, y): (usize, usize)| s.apply(x) + 1 == s.apply(y);
        if hit(a) && hit(d) {
            Rational::one()
        } else {
            Rational::zero()
        }
    })
}

/// The six rows of the arrow table at size n.
pub fn verify_arrow_probabilities(n: usize) -> Result<Vec<OracleReport>> {
    if !(4..=8).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "arrow table needs 4 ≤ n ≤ 8, got {n}"
        )));
    }
    let nn = n as i64;
    let pair = q(1, nn * (nn - 1));
    let rows: [(&str, (usize, usize), (usize, usize), Rational); 6] = [
        ("disjoint arrows", (1, 2), (3, 4), pair.clone()),
        ("chained arrows", (1, 2), (2, 3), pair),
        ("identical arrows", (1, 2), (1, 2), q(1, nn)),
        ("shared tail", (1, 2), (1, 3), Rational::zero()),
        ("shared head", (1, 3), (2, 3), Rational::zero()),
        ("opposite arrows", (1, 2), (2, 1), Rational::zero()),
    ];
    rows.into_iter()
        .map(|(name, a, d, reference)| {
            Ok(OracleReport::new(
                format!("arrow {name} n={n}"),
                arrow_probability(n, a, d)?,
                reference,
            ))
        })
        .collect()
}

/// tr Ψ = Σ_{i≠j} Ξ_ij² for a ranking tuple.
pub fn tr_psi_exact(ranks: &[&Permutation]) -> Rational {
    let p = ranks.len();
    let mut acc = Rational::zero();
    for i in 0..p {
        for j in 0..p {
            if i != j {
                let x = xi_entry(ranks, i, j);
                acc += &x * &x;
            }
        }
    }
    acc
}

/// Enumerated E tr Ψ against the closed form, plus the single-permutation
/// shortcut p(p−1)·E Ξ₁₂².
pub fn verify_mean_tr_psi(n: usize, p: usize) -> Result<Vec<OracleReport>> {
    let formula = limitlaws::exact_mean_tr_psi(n as u64, p as u64)?;
    let enumerated = oracle_expectation(n, p, tr_psi_exact)?;
    let shortcut = xi_moment(n, 2)? * int((p * (p - 1)) as u128);
    Ok(vec![
        OracleReport::new(
            format!("E tr Psi n={n} p={p} (enumeration)"),
            enumerated,
            formula.clone(),
        ),
        OracleReport::new(
            format!("E tr Psi n={n} p={p} (single permutation)"),
            shortcut,
            formula,
        ),
    ])
}

/// Exact ingredients of the third-moment limit of J_ξ at n = 3.
#[derive(Debug, Clone, PartialEq)]
pub struct JxiComponents {
    /// E[φ₁₂ φ₂₃ φ₁₃].
    pub e3: Rational,
    /// Var[(Ξ₁₂)²] by enumeration.
    pub var_enumerated: Rational,
    /// Var[(Ξ₁₂)²] from the closed form at n = 3.
    pub var_display: Rational,
    /// Cov[(Ξ₁₂)², (Ξ₂₁)²] by enumeration.
    pub cov: Rational,
    /// E φ₁₂.
    pub mean_phi: Rational,
}

impl JxiComponents {
    /// ½·E₃ / (V + C) with the given V.
    pub fn ratio(&self, var: &Rational) -> Rational {
        &self.e3 / (q(2, 1) * (var + &self.cov))
    }
}

pub fn jxi_components() -> Result<JxiComponents> {
    let n = 3;
    let m2 = xi_moment(n, 2)?;
    let phi = |r: &[&Permutation], a: usize, b: usize| {
        let x = xi_entry(r, a, b);
        let y = xi_entry(r, b, a);
        &x * &x + &y * &y - q(2, 1) * &m2
    };
    let e3 = oracle_expectation(n, 3, |r| phi(r, 0, 1) * phi(r, 1, 2) * phi(r, 0, 2))?;
    let mean_phi = oracle_expectation(n, 2, |r| phi(r, 0, 1))?;
    let var_enumerated = xi_moment(n, 4)? - &m2 * &m2;
    let cross = oracle_expectation(n, 2, |r| {
        let x = xi_entry(r, 0, 1);
        let y = xi_entry(r, 1, 0);
        &x * &x * &y * &y
    })?;
    Ok(JxiComponents {
        e3,
        var_enumerated,
        var_display: limitlaws::exact_var_xi_sq(n as u64)?,
        cov: cross - &m2 * &m2,
        mean_phi,
    })
}

/// ½·E₃/(V+C) at n = 3 with V from the closed form, against 5/2752.
pub fn verify_jxi_third_moment() -> Result<Vec<OracleReport>> {
    let c = jxi_components()?;
    Ok(vec![
        OracleReport::new("E phi12 n=3", c.mean_phi.clone(), Rational::zero()),
        OracleReport::new(
            "J_xi third moment limit n=3",
            c.ratio(&c.var_display),
            q(5, 2752),
        ),
    ])
}

/// Granularity of the factorization check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorLevel {
    /// Joint law of the ξ values along the edges.
    Xi,
    /// Joint law of the relative-rank permutations themselves.
    Permutation,
}

/// Whether the relative ranks along the edges of `graph` have a joint law
/// equal to the product of their marginals, by exact enumeration.
pub fn factorizes(n: usize, graph: &DependenceGraph, level: FactorLevel) -> Result<bool> {
    let edges = graph.edges();
    if edges.is_empty() {
        return Ok(true);
    }
    let p = graph.vertex_count();
    let perms: Vec<Permutation> = enumerate_all(n)?.collect();
    let base = perms.len() as u128;
    let total = base
        .checked_pow(p as u32)
        .filter(|&t| t <= MAX_TUPLES)
        .ok_or_else(|| {
            Error::EnumerationTooLarge(format!("({n}!)^{p} tuples exceed {MAX_TUPLES}"))
        })?;
    let key = |sigma: &Permutation| -> u64 {
        match level {
            FactorLevel::Xi => xi_increment_sum(sigma),
            FactorLevel::Permutation => sigma.lex_rank() as u64,
        }
    };
    let joint: HashMap<Vec<u64>, u128> = (0..total as u64)
        .into_par_iter()
        .fold(HashMap::new, |mut acc: HashMap<Vec<u64>, u128>, idx| {
            let mut rest = idx as u128;
            let tuple: Vec<&Permutation> = (0..p)
                .map(|_| {
                    let k = (rest % base) as usize;
                    rest /= base;
                    &perms[k]
                })
                .collect();
            let values: Vec<u64> = edges
                .iter()
                .map(|&(a, b)| {
                    key(&relative_rank(tuple[a - 1], tuple[b - 1]).expect("equal lengths"))
                })
                .collect();
            *acc.entry(values).or_default() += 1;
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });

    let m = edges.len();
    let mut marginals: Vec<HashMap<u64, u128>> = vec![HashMap::new(); m];
    for (values, &count) in &joint {
        for (e, v) in values.iter().enumerate() {
            *marginals[e].entry(*v).or_default() += count;
        }
    }
    // Compare P(joint) = Π P(marginal) over the full product of supports,
    // scaled by totalᵐ to stay in integers.
    let supports: Vec<Vec<(u64, u128)>> = marginals
        .iter()
        .map(|h| {
            let mut v: Vec<_> = h.iter().map(|(&k, &c)| (k, c)).collect();
            v.sort_unstable();
            v
        })
        .collect();
    let total_big = BigInt::from(total);
    let scale = num_traits::pow(total_big.clone(), m - 1);
    let mut odometer = vec![0usize; m];
    loop {
        let values: Vec<u64> = odometer
            .iter()
            .enumerate()
            .map(|(e, &i)| supports[e][i].0)
            .collect();
        let joint_count = joint.get(&values).copied().unwrap_or(0);
        let product: BigInt = odometer
            .iter()
            .enumerate()
            .map(|(e, &i)| BigInt::from(supports[e][i].1))
            .product();
        if BigInt::from(joint_count) * &scale != product {
            return Ok(false);
        }
        let mut e = 0;
        loop {
            if e == m {
                return Ok(true);
            }
            odometer[e] += 1;
            if odometer[e] < supports[e].len() {
                break;
            }
            odometer[e] = 0;
            e += 1;
        }
    }
}

/// For each graph: ξ-level factorization (1/0) against the forest prediction (1/0).
pub fn verify_tree_independence(
    n: usize,
    graphs: &[DependenceGraph],
) -> Result<Vec<OracleReport>> {
    if n > 4 {
        return Err(Error::EnumerationTooLarge(format!(
            "tree checks enumerate at n ≤ 4, got {n}"
        )));
    }
    graphs
        .iter()
        .map(|g| {
            if g.vertex_count() > 4 {
                return Err(Error::EnumerationTooLarge(format!(
                    "tree checks use at most 4 vertices, got {}",
                    g.vertex_count()
                )));
            }
            let observed = factorizes(n, g, FactorLevel::Xi)?;
            let predicted = is_independent_family(g);
            Ok(OracleReport::new(
                format!("factorizes n={n} edges {g}"),
                int(observed as u128),
                int(predicted as u128),
            ))
        })
        .collect()
}

/// Star, path, triangle and empty graphs on three vertices.
pub fn standard_graphs() -> Vec<DependenceGraph> {
    [
        vec![(1, 2), (1, 3)],
        vec![(1, 2), (2, 3)],
        vec![(1, 2), (2, 3), (3, 1)],
        vec![],
    ]
    .into_iter()
    .map(|e| DependenceGraph::new(3, e).expect("valid graph"))
    .collect()
}

/// Finite-n moments of Ξ₁₂ by enumeration against the closed forms.
pub fn verify_xi_moments(n: usize) -> Result<Vec<OracleReport>> {
    let nn = n as u64;
    let m1 = xi_moment(n, 1)?;
    let m2 = xi_moment(n, 2)?;
    let m4 = xi_moment(n, 4)?;
    let full_m2 = oracle_expectation(n, 2, |r| {
        let x = xi_entry(r, 0, 1);
        &x * &x
    })?;
    let var_sqrtn = (&m2 - &m1 * &m1) * int(n as u128);
    let var_sq = &m4 - &m2 * &m2;
    Ok(vec![
        OracleReport::new(format!("E Xi n={n}"), m1, Rational::zero()),
        OracleReport::new(
            format!("E Xi^2 n={n} (enumeration p=2)"),
            full_m2,
            limitlaws::exact_mean_xi_sq(nn)?,
        ),
        OracleReport::new(
            format!("E Xi^2 n={n} (single permutation)"),
            m2,
            limitlaws::exact_mean_xi_sq(nn)?,
        ),
        OracleReport::new(
            format!("Var(sqrt(n) Xi) n={n}"),
            var_sqrtn,
            limitlaws::exact_var_sqrtn_xi(nn)?,
        ),
        OracleReport::new(
            format!("Var(Xi^2) n={n}"),
            var_sq,
            limitlaws::exact_var_xi_sq(nn)?,
        ),
    ])
}

/// Groups of checks selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Counterexample,
    Arrows,
    TrPsi,
    Jxi,
    Trees,
    Moments,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "counterexample" => Suite::Counterexample,
            "arrows" => Suite::Arrows,
            "trpsi" => Suite::TrPsi,
            "jxi" => Suite::Jxi,
            "trees" => Suite::Trees,
            "moments" => Suite::Moments,
            other => {
                return Err(Error::InvalidArgument(format!("unknown suite '{other}'")))
            }
        })
    }
}

impl Suite {
    pub const NAMES: [&'static str; 7] =
        ["all", "counterexample", "arrows", "trpsi", "jxi", "trees", "moments"];
}

/// Runs the selected group of checks.
pub fn run_suite(suite: Suite) -> Result<Vec<OracleReport>> {
    let wants = |s: Suite| suite == Suite::All || suite == s;
    let mut out = Vec::new();
    if wants(Suite::Counterexample) {
        out.extend(verify_counterexample()?);
    }
    if wants(Suite::Arrows) {
        for n in 4..=6 {
            out.extend(verify_arrow_probabilities(n)?);
        }
    }
    if wants(Suite::TrPsi) {
        for (n, p) in [(3, 2), (4, 2), (3, 3)] {
            out.extend(verify_mean_tr_psi(n, p)?);
        }
    }
    if wants(Suite::Jxi) {
        out.extend(verify_jxi_third_moment()?);
    }
    if wants(Suite::Trees) {
        out.extend(verify_tree_independence(3, &standard_graphs())?);
    }
    if wants(Suite::Moments) {
        for n in 3..=5 {
            out.extend(verify_xi_moments(n)?);
        }
    }
    Ok(out)
}
