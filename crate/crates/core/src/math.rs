//! Scalar helpers shared across the crate.

pub use libm::{exp, log, sqrt};

const SIGN_MASK: u64 = 1 << 63;

/// Hyperbolic tangent, branch-free so batch loops vectorize.
///
/// Uses `tanh|x| = m / (m + 2)` with `m = exp(2|x|) - 1`, where the
/// exponential `2^k * exp(r)` is range-reduced to `|r| <= ln2/2` and
/// expanded to degree 13. For `k = 0` the constant term never appears, so small arguments keep full
/// relative precision. Agrees with `libm::tanh` to a few ulps.
#[inline(always)]
pub fn tanh(x: f64) -> f64 {
    const LOG2E: f64 = core::f64::consts::LOG2_E;
    const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
    let bits = x.to_bits();
    let y = f64::from_bits(bits & !SIGN_MASK) * 2.0;
    let y = if y > 40.0 { 40.0 } else { y };
    // Round y/ln2 to the nearest integer k with the 1.5 * 2^52 shifter; the
    // low mantissa bits of `shifted` then hold k.
    const SHIFTER: f64 = 6_755_399_441_055_744.0;
    let shifted = y * LOG2E + SHIFTER;
    let kf = shifted - SHIFTER;
    let r = (y - kf * LN2_HI) - kf * LN2_LO;
    // Horner over 1/n! for n = 13 down to 1, then times r.
    let mut q = 1.0 / 6_227_020_800.0;
    q = q * r + 1.0 / 479_001_600.0;
    q = q * r + 1.0 / 39_916_800.0;
    q = q * r + 1.0 / 3_628_800.0;
    q = q * r + 1.0 / 362_880.0;
    q = q * r + 1.0 / 40_320.0;
    q = q * r + 1.0 / 5_040.0;
    q = q * r + 1.0 / 720.0;
    q = q * r + 1.0 / 120.0;
    q = q * r + 1.0 / 24.0;
    q = q * r + 1.0 / 6.0;
    q = q * r + 0.5;
    q = q * r + 1.0;
    let p = q * r;
    let scale = f64::from_bits(shifted.to_bits().wrapping_add(1023) << 52);
    let m = scale * p + (scale - 1.0);
    let t = m / (m + 2.0);
    f64::from_bits(t.to_bits() | (bits & SIGN_MASK))
}

/// `log(1 + exp(x))`, using the asymptotes outside `[-30, 30]`.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        exp(x)
    } else {
        libm::log1p(exp(x))
    }
}

/// Derivative of [`softplus`], the logistic sigmoid.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn inverse_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else if y < 1e-12 {
        log(y)
    } else {
        // log(exp(y) - 1) = y + log(1 - exp(-y))
        y + log(-libm::expm1(-y))
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with denominator `n - 1`.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Standard normal quantile (Acklam's rational approximation refined by one
/// Halley step; absolute error well below 1e-12 on (0, 1)).
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    let lo = 0.02425;
    let x = if p < lo {
        let q = sqrt(-2.0 * log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - lo {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = sqrt(-2.0 * log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * sqrt(2.0 * core::f64::consts::PI) * exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_round_trip() {
        let mut x = -20.0;
        while x <= 20.0 {
            let back = inverse_softplus(softplus(x));
            assert!((back - x).abs() < 1e-9, "x={x} back={back}");
            x += 0.25;
        }
    }

    #[test]
    fn softplus_is_positive_and_stable() {
        for &x in &[-800.0, -40.0, -30.5, 0.0, 30.5, 40.0, 800.0] {
            let s = softplus(x);
            assert!(s >= 0.0 && s.is_finite());
        }
        assert!(softplus(-40.0) > 0.0);
        assert_eq!(softplus(40.0), 40.0);
    }

    #[test]
    fn tanh_matches_libm() {
        let mut worst: f64 = 0.0;
        let mut x = -25.0;
        while x < 25.0 {
            let (a, b) = (tanh(x), libm::tanh(x));
            worst = worst.max((a - b).abs() / b.abs().max(1e-300));
            x += 0.000_731;
        }
        for &x in &[1e-300, 1e-12, -3e-8, 0.3465, 0.3467, 700.0, -1e10] {
            let (a, b) = (tanh(x), libm::tanh(x));
            worst = worst.max((a - b).abs() / b.abs().max(1e-300));
        }
        assert!(worst < 1e-15, "worst relative error {worst}");
        assert_eq!(tanh(0.0), 0.0);
        assert!(tanh(f64::NAN).is_nan());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-6, 0.01, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-13);
        }
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
    }
}
