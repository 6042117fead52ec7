//! Scalar statistical functions behind the split p-values.
//!
//! The tail approximation for the scaled change-point statistic of a single
//! covariate is
//!
//! ```text
//! p_n(u) = 1 - Phi( sqrt(u) - (ln3(n) + ln 2) / sqrt(2 ln2(n)) )^(2 ln(n/2))
//! ```
//!
//! where `lnk` is the k times iterated natural logarithm. With `d` covariates
//! the Bonferroni bound `d * p_n(u)` is used as the node p-value, and the
//! critical value `u_eps` solves `d * p_n(u_eps) = eps` in closed form.
//!
//! Both directions are evaluated through `expm1`/`ln_1p` and upper-tail
//! quantiles so that p-values far below machine epsilon keep their relative
//! accuracy.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest node size for which the tail approximation is used.
///
/// Below this the stopping layer assigns the sentinel p-value `1.0`.
pub const MIN_APPROX_N: usize = 20;

/// Sample size and covariate dimension of the node being tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PValueParams {
    n: usize,
    d: usize,
}

impl PValueParams {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < MIN_APPROX_N {
            return Err(Error::domain(format!(
                "p-value approximation needs n >= {MIN_APPROX_N}, got n = {n}"
            )));
        }
        if d == 0 {
            return Err(Error::domain("covariate dimension d must be at least 1"));
        }
        Ok(Self { n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Centering constant `(ln3 n + ln 2) / sqrt(2 ln2 n)`.
    fn shift(&self) -> f64 {
        let n = self.n as f64;
        (ln3(n) + LN_2) / (2.0 * ln2(n)).sqrt()
    }

    /// Exponent `2 ln(n/2)`.
    fn power(&self) -> f64 {
        2.0 * (self.n as f64 / 2.0).ln()
    }
}

/// `ln(ln(x))`.
pub fn ln2(x: f64) -> f64 {
    x.ln().ln()
}

/// `ln(ln(ln(x)))`, defined for `x > e^e`.
pub fn ln3(x: f64) -> f64 {
    x.ln().ln().ln()
}

/// Standard normal cdf.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function `1 - Phi(x)`, accurate in the upper tail.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal inverse cdf.
pub fn std_normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("quantile level must lie in (0, 1), got {q}")));
    }
    Ok(if q > 0.5 {
        // 1 - q is exact for q in [0.5, 1).
        -lower_quantile(1.0 - q)
    } else {
        lower_quantile(q)
    })
}

/// `Phi^{-1}(1 - tail)`, computed without forming `1 - tail`.
pub fn std_normal_upper_quantile(tail: f64) -> Result<f64> {
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::domain(format!(
            "tail probability must lie in (0, 1), got {tail}"
        )));
    }
    Ok(if tail > 0.5 {
        lower_quantile(1.0 - tail)
    } else {
        -lower_quantile(tail)
    })
}

// Acklam's rational approximation (relative error ~1.2e-9) followed by one
// Halley step against the erfc based cdf. `q` must lie in (0, 0.5].
#[allow(clippy::excessive_precision)]
fn lower_quantile(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if q < P_LOW {
        let t = (-2.0 * q.ln()).sqrt();
        (((((C[0] * t + C[1]) * t + C[2]) * t + C[3]) * t + C[4]) * t + C[5])
            / ((((D[0] * t + D[1]) * t + D[2]) * t + D[3]) * t + 1.0)
    } else {
        let s = q - 0.5;
        let r = s * s;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * s
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    if x == 0.0 {
        return 0.0;
    }
    // Relative error in the lower tail, so the step also works for tiny q.
    let e = std_normal_cdf(x) - q;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// `ln Phi(a)`, accurate on both sides of zero.
fn ln_cdf(a: f64) -> f64 {
    if a < 0.0 {
        std_normal_cdf(a).ln()
    } else {
        (-std_normal_sf(a)).ln_1p()
    }
}

/// Tail approximation `p_n(u)` for a single covariate.
///
/// Strictly decreasing in `u`; `d` is ignored.
pub fn p_value_approx(u: f64, params: PValueParams) -> Result<f64> {
    if u.is_nan() || u < 0.0 {
        return Err(Error::domain(format!("statistic must be nonnegative, got {u}")));
    }
    let a = u.sqrt() - params.shift();
    Ok(-(params.power() * ln_cdf(a)).exp_m1())
}

/// Bonferroni bound `d * p_n(u)`. Not clamped to 1.
pub fn bonferroni_p(u: f64, params: PValueParams) -> Result<f64> {
    Ok(params.d as f64 * p_value_approx(u, params)?)
}

/// Critical value `u_eps` solving `d * p_n(u_eps) = eps`.
pub fn critical_value(eps: f64, params: PValueParams) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("significance must lie in (0, 1), got {eps}")));
    }
    let ratio = eps / params.d as f64;
    if ratio >= 1.0 {
        return Err(Error::domain(format!("eps / d = {ratio} must be below 1")));
    }
    // Phi(sqrt(u) - shift) = (1 - eps/d)^(1/power); work with the complement.
    let tail = -((-ratio).ln_1p() / params.power()).exp_m1();
    let root = params.shift() + std_normal_upper_quantile(tail)?;
    if root < 0.0 {
        return Err(Error::domain(format!(
            "no critical value: p_n(0) is already below eps / d = {ratio} at n = {}",
            params.n
        )));
    }
    Ok(root * root)
}

/// Penalty family for the single split comparator
/// `MSE_1 - MSE_2 - c * sigma2_hat > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// `c = u_eps`, the p-value rule at significance `eps`.
    PValue { eps: f64 },
    /// Mallows' C_p (coincides with AIC here): `c = 2`.
    Cp,
    /// `c = ln(n)`.
    Bic,
}

/// Multiplier of `sigma2_hat` in the accept-split inequality.
pub fn penalty_constant(kind: Penalty, params: PValueParams) -> Result<f64> {
    match kind {
        Penalty::PValue { eps } => critical_value(eps, params),
        Penalty::Cp => Ok(2.0),
        Penalty::Bic => Ok((params.n as f64).ln()),
    }
}
