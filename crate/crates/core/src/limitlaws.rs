//! Limiting spectral laws, their moments, the Gaussian covariance of the
//! linear spectral statistics tr Ψᵏ, exact finite-n moments, and Catalan
//! number helpers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::Rational;

/// Largest moment order accepted by the moment functions.
pub const MAX_MOMENT_ORDER: u32 = 20;
/// Largest index accepted by [`LssGaussian::cov`].
pub const MAX_LSS_INDEX: u32 = 12;
/// Largest argument accepted by the Catalan helpers.
pub const MAX_CATALAN_ARG: u32 = 30;

/// Absolute tolerance of the numerical MP distribution function.
pub const MP_CDF_TOL: f64 = 1e-9;

/// Semicircle law W(u, r) with density 2/(πr²)·√(r² − (x−u)²) on [u−r, u+r].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemicircleLaw {
    center: f64,
    radius: f64,
}

impl SemicircleLaw {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !center.is_finite() || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "semicircle needs finite center and positive radius, got ({center}, {radius})"
            )));
        }
        Ok(Self { center, radius })
    }

    /// Limit of the ESD of (√(n/p))·Φ-type matrices: W(1, 2√(γ/5)).
    pub fn for_ratio(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Self::new(1.0, 2.0 * (gamma / 5.0).sqrt())
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let d = x - self.center;
        let r2 = self.radius * self.radius;
        if d * d >= r2 {
            return 0.0;
        }
        2.0 / (PI * r2) * (r2 - d * d).sqrt()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.radius;
        if t <= -1.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            0.5 + (t * (1.0 - t * t).sqrt() + t.asin()) / PI
        }
    }

    /// E(X − u)^order: zero for odd orders, C_m·(r/2)^{2m} for order 2m.
    pub fn central_moment(&self, order: u32) -> Result<f64> {
        if order > MAX_MOMENT_ORDER {
            return Err(Error::RangeExceeded(format!(
                "moment order {order} exceeds {MAX_MOMENT_ORDER}"
            )));
        }
        if order % 2 == 1 {
            return Ok(0.0);
        }
        let m = order / 2;
        Ok(catalan(m)? as f64 * (self.radius / 2.0).powi(order as i32))
    }
}

/// Marchenko–Pastur law MP(y, σ²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MPLaw {
    y: f64,
    sigma2: f64,
}

impl MPLaw {
    pub fn new(y: f64, sigma2: f64) -> Result<Self> {
        if !(y > 0.0) || !y.is_finite() || !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "MP law needs positive finite y and σ², got ({y}, {sigma2})"
            )));
        }
        Ok(Self { y, sigma2 })
    }

    /// Limit of the ESD of Ψ/p type matrices: MP(1, 2γ/5).
    pub fn for_ratio(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Self::new(1.0, 2.0 * gamma / 5.0)
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// a = σ²(1 − √y)².
    pub fn lower(&self) -> f64 {
        self.sigma2 * (1.0 - self.y.sqrt()).powi(2)
    }

    /// b = σ²(1 + √y)².
    pub fn upper(&self) -> f64 {
        self.sigma2 * (1.0 + self.y.sqrt()).powi(2)
    }

    /// Mass of the point at zero, 1 − 1/y when y > 1.
    pub fn atom(&self) -> f64 {
        if self.y > 1.0 {
            1.0 - 1.0 / self.y
        } else {
            0.0
        }
    }

    /// Density of the continuous part.
    pub fn pdf(&self, x: f64) -> f64 {
        let (a, b) = (self.lower(), self.upper());
        if x <= a || x >= b || x <= 0.0 {
            return 0.0;
        }
        ((b - x) * (x - a)).sqrt() / (2.0 * PI * x * self.y * self.sigma2)
    }

    /// Integrand of the continuous part after x = a + (b−a)(1−cos θ)/2,
    /// which removes the square-root endpoint singularities.
    fn angular_density(&self, theta: f64) -> f64 {
        let (a, b) = (self.lower(), self.upper());
        let half = 0.5 * (b - a);
        let x = a + half * (1.0 - theta.cos());
        if x <= 0.0 {
            // Only reachable at θ = 0 when y = 1, where the limit is finite.
            return 2.0 * half * half / (2.0 * PI * self.y * self.sigma2 * half);
        }
        let s = theta.sin();
        half * half * s * s / (2.0 * PI * x * self.y * self.sigma2)
    }

    fn theta_of(&self, x: f64) -> f64 {
        let (a, b) = (self.lower(), self.upper());
        let c = 1.0 - 2.0 * (x - a) / (b - a);
        c.clamp(-1.0, 1.0).acos()
    }

    /// Distribution function: atom plus adaptive Simpson integral of the
    /// continuous part, absolute error about [`MP_CDF_TOL`].
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let atom = self.atom();
        let (a, b) = (self.lower(), self.upper());
        if x <= a {
            return atom;
        }
        if x >= b {
            return 1.0;
        }
        let theta = self.theta_of(x);
        let cont = adaptive_simpson(&|t| self.angular_density(t), 0.0, theta, MP_CDF_TOL);
        (atom + cont).min(1.0)
    }

    /// ∫ xᵏ dμ = σ^{2k} Σ_{r<k} yʳ/(r+1)·C(k,r)·C(k−1,r).
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k > MAX_MOMENT_ORDER {
            return Err(Error::RangeExceeded(format!(
                "moment order {k} exceeds {MAX_MOMENT_ORDER}"
            )));
        }
        if k == 0 {
            return Ok(1.0);
        }
        let mut sum = 0.0;
        for r in 0..k {
            let c = binomial(k as u64, r as u64)? * binomial(k as u64 - 1, r as u64)?;
            sum += self.y.powi(r as i32) / (r + 1) as f64 * c as f64;
        }
        Ok(self.sigma2.powi(k as i32) * sum)
    }

    /// ∫ g over the continuous part, computed in the angular variable.
    pub fn integrate_continuous(&self, g: impl Fn(f64) -> f64, tol: f64) -> f64 {
        let (a, b) = (self.lower(), self.upper());
        let half = 0.5 * (b - a);
        adaptive_simpson(
            &|t| g(a + half * (1.0 - t.cos())) * self.angular_density(t),
            0.0,
            PI,
            tol,
        )
    }
}

/// Gaussian limit of the centered statistics G_k = tr Ψᵏ − E tr Ψᵏ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LssGaussian {
    gamma: f64,
}

impl LssGaussian {
    pub fn new(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Cov(G_{k1}, G_{k2}) = (2γ/5)^{k1+k2}·B(k1, k2), with the bracket B
    /// evaluated in exact rational arithmetic.
    pub fn cov(&self, k1: u32, k2: u32) -> Result<f64> {
        let bracket = lss_bracket(k1, k2)?;
        let bracket = bracket.to_f64().ok_or_else(|| {
            Error::RangeExceeded(format!("bracket for ({k1}, {k2}) not representable"))
        })?;
        Ok((2.0 * self.gamma / 5.0).powi((k1 + k2) as i32) * bracket)
    }

    /// Covariance matrix over the index set `ks`.
    pub fn cov_matrix(&self, ks: &[u32]) -> Result<DenseMatrix> {
        let m = ks.len();
        let mut out = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let c = self.cov(ks[i], ks[j])?;
                out[(i, j)] = c;
                out[(j, i)] = c;
            }
        }
        Ok(out)
    }
}

/// The γ-free factor of [`LssGaussian::cov`]:
/// 2·C(2k1,k1+1)·C(2k2,k2+1) + 2·Σ_{t=2}^{min} t(2t−1)²·S(k1,t)·S(k2,t).
pub fn lss_bracket(k1: u32, k2: u32) -> Result<Rational> {
    for k in [k1, k2] {
        if k == 0 || k > MAX_LSS_INDEX {
            return Err(Error::RangeExceeded(format!(
                "LSS index {k} outside 1..={MAX_LSS_INDEX}"
            )));
        }
    }
    let big = |v: u128| BigRational::from_integer(BigInt::from(v));
    let (k1, k2) = (k1 as u64, k2 as u64);
    let head = big(binomial(2 * k1, k1 + 1)? * binomial(2 * k2, k2 + 1)?);
    let mut acc = head * big(2);
    for t in 2..=k1.min(k2) {
        let weight = big((t * (2 * t - 1) * (2 * t - 1)) as u128);
        acc += big(2) * weight * inner_sum(k1, t)? * inner_sum(k2, t)?;
    }
    Ok(acc)
}

/// S(k, t) = Σ_{ℓ=0}^{k−t} C(2k−2ℓ−1, k−ℓ−t)·C(2ℓ+1, ℓ+1)/(2k−2ℓ−1).
fn inner_sum(k: u64, t: u64) -> Result<Rational> {
    let mut s = BigRational::from_integer(BigInt::from(0));
    for l in 0..=(k - t) {
        let top = 2 * k - 2 * l - 1;
        let num = binomial(top, k - l - t)? * binomial(2 * l + 1, l + 1)?;
        s += BigRational::new(BigInt::from(num), BigInt::from(top));
    }
    Ok(s)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("γ must be positive, got {gamma}")))
    }
}

fn ratio(num: i128, den: i128) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn check_n(n: u64) -> Result<()> {
    if n < 3 {
        Err(Error::InvalidArgument(format!("needs n ≥ 3, got {n}")))
    } else {
        Ok(())
    }
}

/// E tr Ψ = p(p−1)(n−2)(4n−7) / (10(n−1)²(n+1)).
pub fn exact_mean_tr_psi(n: u64, p: u64) -> Result<Rational> {
    check_n(n)?;
    if p == 0 {
        return Err(Error::InvalidArgument("needs p ≥ 1".into()));
    }
    let (n, p) = (BigInt::from(n), BigInt::from(p));
    let one = BigInt::from(1);
    let num = &p * (&p - &one) * (&n - 2) * (BigInt::from(4) * &n - 7);
    let den = BigInt::from(10) * (&n - &one) * (&n - &one) * (&n + &one);
    Ok(BigRational::new(num, den))
}

/// E Ξ² = (n−2)(4n−7) / (10(n−1)²(n+1)).
pub fn exact_mean_xi_sq(n: u64) -> Result<Rational> {
    check_n(n)?;
    let n = n as i128;
    Ok(ratio((n - 2) * (4 * n - 7), 10 * (n - 1) * (n - 1) * (n + 1)))
}

/// Var(√n Ξ) = n(n−2)(4n−7) / (10(n+1)(n−1)²).
pub fn exact_var_sqrtn_xi(n: u64) -> Result<Rational> {
    Ok(exact_mean_xi_sq(n)? * BigRational::from_integer(BigInt::from(n)))
}

/// Var(Ξ²) = (224n⁵ − 1792n⁴ + 5051n³ − 4969n² − 2458n + 18128) / (700(n−1)⁴(n+1)³).
pub fn exact_var_xi_sq(n: u64) -> Result<Rational> {
    check_n(n)?;
    let n = BigInt::from(n);
    let pow = |k: u32| num_traits::pow(n.clone(), k as usize);
    let num = BigInt::from(224) * pow(5) - BigInt::from(1792) * pow(4) + BigInt::from(5051) * pow(3)
        - BigInt::from(4969) * pow(2)
        - BigInt::from(2458) * &n
        + BigInt::from(18128);
    let nm1 = &n - 1;
    let np1 = &n + 1;
    let den = BigInt::from(700) * num_traits::pow(nm1, 4) * num_traits::pow(np1, 3);
    Ok(BigRational::new(num, den))
}

/// Lossy conversion at the API boundary.
pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// C(n, k) in u128, failing on overflow.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c·(n−i) is divisible by (i+1) after the multiplication.
        c = c
            .checked_mul((n - i) as u128)
            .ok_or_else(|| Error::RangeExceeded(format!("C({n}, {k}) overflows")))?
            / (i + 1) as u128;
    }
    Ok(c)
}

/// C_m = (2m)! / (m!(m+1)!).
pub fn catalan(m: u32) -> Result<u128> {
    if m > MAX_CATALAN_ARG {
        return Err(Error::RangeExceeded(format!(
            "catalan({m}) beyond {MAX_CATALAN_ARG}"
        )));
    }
    Ok(binomial(2 * m as u64, m as u64)? / (m as u128 + 1))
}

/// Coefficient of zⁿ in C(z)ᵐ, i.e. m/(2n+m)·C(2n+m, n).
pub fn catalan_convolution(n: u32, m: u32) -> Result<u128> {
    if n > MAX_CATALAN_ARG || m > MAX_CATALAN_ARG {
        return Err(Error::RangeExceeded(format!(
            "catalan_convolution({n}, {m}) beyond {MAX_CATALAN_ARG}"
        )));
    }
    if m == 0 {
        return Ok(u128::from(n == 0));
    }
    let total = 2 * n as u64 + m as u64;
    Ok(binomial(total, n as u64)? * m as u128 / total as u128)
}

const MAX_SIMPSON_DEPTH: u32 = 48;
const MIN_SIMPSON_DEPTH: u32 = 5;

/// Adaptive Simpson quadrature with Richardson correction.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_SIMPSON_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // The first few levels always split so coarse panels cannot agree by chance.
    if depth == 0 || (depth <= MAX_SIMPSON_DEPTH - MIN_SIMPSON_DEPTH && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
