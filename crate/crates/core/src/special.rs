//! Special functions backing the closed-form divergences and quantiles.
//!
//! Everything evaluates in `f64`; generic callers widen through
//! [`Real::as_f64`](crate::float::Real::as_f64) and narrow the result.

/// Lanczos coefficients (g = 7, n = 9), accurate to about 15 significant digits.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x < 0.5 {
        // Reflection keeps the Lanczos series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut series = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + series.ln()
}

/// Natural log of the beta function B(a, b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Digamma function for `x > 0`: shift into the asymptotic region, then the
/// standard Bernoulli-number series.
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    let mut value = 0.0;
    let mut z = x;
    while z < 12.0 {
        value -= 1.0 / z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    value + z.ln() - 0.5 * inv - series
}

/// Standard normal quantile (Wichura's AS 241, double-precision branch).
pub fn std_normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile requires p in (0, 1)");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A_CENTRAL, r) / poly(&B_CENTRAL, r);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let value = if r <= 5.0 {
        let r = r - 1.6;
        poly(&A_TAIL, r) / poly(&B_TAIL, r)
    } else {
        let r = r - 5.0;
        poly(&A_FAR, r) / poly(&B_FAR, r)
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}

/// Standard normal CDF via a Chebyshev fit to the complementary error
/// function (fractional error below 1.2e-7 everywhere).
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc_cheb(-x / std::f64::consts::SQRT_2)
}

fn erfc_cheb(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98
                                    + t * (1.488_515_87
                                        + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Log-density of N(mean, var) at `x`.
pub fn normal_ln_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
}

/// Log-density of Beta(a, b) at `x` in (0, 1).
pub fn beta_ln_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b)
}

fn poly(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

// AS 241 coefficient sets (PPND16).
const A_CENTRAL: [f64; 8] = [
    3.387_132_872_796_366_5e0,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946_1e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const B_CENTRAL: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545_9e3,
];
const A_TAIL: [f64; 8] = [
    1.423_437_110_749_683_5e0,
    4.630_337_846_156_546e0,
    5.769_497_221_460_691e0,
    3.647_848_324_763_204_5e0,
    1.270_458_252_452_368_4e0,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const B_TAIL: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_8e0,
    1.676_384_830_183_803_8e0,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const A_FAR: [f64; 8] = [
    6.657_904_643_501_103e0,
    5.463_784_911_164_114e0,
    1.784_826_539_917_291_3e0,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const B_FAR: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ln_gamma_reference_values() {
        assert_abs_diff_eq!(ln_gamma(0.5), 0.572_364_942_924_700_1, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(5.0), 24.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ln_gamma(10.0), 362_880.0f64.ln(), epsilon = 1e-11);
        assert_abs_diff_eq!(ln_gamma(0.1), 2.252_712_651_734_206, epsilon = 1e-12);
    }

    #[test]
    fn digamma_reference_values() {
        let gamma = 0.577_215_664_901_532_9;
        assert_abs_diff_eq!(digamma(1.0), -gamma, epsilon = 1e-12);
        assert_abs_diff_eq!(digamma(0.5), -gamma - 2.0 * 2.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(digamma(2.0), 1.0 - gamma, epsilon = 1e-12);
        assert_abs_diff_eq!(
            digamma(4.0),
            1.0 + 0.5 + 1.0 / 3.0 - gamma,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ln_beta_matches_closed_form() {
        assert_abs_diff_eq!(ln_beta(1.0, 1.0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_beta(2.0, 2.0), (1.0f64 / 6.0).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_beta(0.5, 0.5), std::f64::consts::PI.ln(), epsilon = 1e-12);
    }

    #[test]
    fn normal_quantile_reference_values() {
        assert_abs_diff_eq!(std_normal_quantile(0.5), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            std_normal_quantile(0.975),
            1.959_963_984_540_054,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            std_normal_quantile(0.95),
            1.644_853_626_951_472_2,
            epsilon = 1e-12
        );
        // Central branch (|p - 0.5| <= 0.425).
        assert_abs_diff_eq!(
            std_normal_quantile(0.3),
            -0.524_400_512_708_040_7,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            std_normal_quantile(0.6),
            0.253_347_103_135_799_7,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            std_normal_quantile(0.025),
            -1.959_963_984_540_054,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(std_normal_quantile(1e-10), -6.361_340_902_404_056, epsilon = 1e-9);
    }

    #[test]
    fn cdf_and_quantile_are_inverse() {
        for &p in &[0.001, 0.05, 0.3, 0.5, 0.7, 0.95, 0.999] {
            let x = std_normal_quantile(p);
            assert_abs_diff_eq!(std_normal_cdf(x), p, epsilon = 5e-7);
        }
    }

    #[test]
    fn beta_ln_pdf_uniform_is_zero() {
        assert_abs_diff_eq!(beta_ln_pdf(0.3, 1.0, 1.0), 0.0, epsilon = 1e-14);
        assert!(beta_ln_pdf(0.0, 2.0, 2.0).is_infinite());
    }
}
