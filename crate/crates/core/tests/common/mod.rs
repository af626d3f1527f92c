#![allow(dead_code)]

use num_complex::Complex64;

const ML_ORACLE: &str = include_str!("../fixtures/mittag_leffler_oracle.csv");
const JACOBI_MOMENTS: &str = include_str!("../fixtures/jacobi_moments.csv");

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|v| v.trim().parse().unwrap()).collect())
        .collect()
}

pub struct MlSample {
    pub alpha: f64,
    pub z: Complex64,
    pub expected: Complex64,
}

/// Brute-force series reference values.
pub fn ml_samples() -> Vec<MlSample> {
    rows(ML_ORACLE)
        .into_iter()
        .map(|r| MlSample {
            alpha: r[0],
            z: Complex64::new(r[1], r[2]),
            expected: Complex64::new(r[3], r[4]),
        })
        .collect()
}

/// `(a, m, ∫ x^m (1-x)^a dx over [-1, 1])`.
pub fn jacobi_moments() -> Vec<(f64, usize, f64)> {
    rows(JACOBI_MOMENTS)
        .into_iter()
        .map(|r| (r[0], r[1] as usize, r[2]))
        .collect()
}

/// Scaled error used for the series comparison: absolute for `|E| ≤ 1`,
/// relative beyond.
pub fn scaled_error(got: Complex64, want: Complex64) -> f64 {
    (got - want).norm() / want.norm().max(1.0)
}

/// Worst relative moment error of `gauss_jacobi(n, a, 0)` over the degrees it
/// integrates exactly. Zero moments are compared absolutely.
pub fn worst_moment_error(moments: &[(f64, usize, f64)], n: usize, a: f64) -> f64 {
    let rule = frac_kansa::quadrature::gauss_jacobi(n, a, 0.0).unwrap();
    moments
        .iter()
        .filter(|&&(ma, m, _)| ma == a && m < 2 * n)
        .map(|&(_, m, want)| {
            let got = rule.integrate(|x| x.powi(m as i32));
            if want == 0.0 {
                got.abs()
            } else {
                ((got - want) / want).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// E_{1/2}(x) = exp(x²) erfc(-x), 50-digit reference values.
pub const ERFC_IDENTITY: [(f64, f64); 12] = [
    (-0.1, 0.896_456_979_969_126_641_93),
    (0.1, 1.123_643_354_199_209_473_2),
    (-0.5, 0.615_690_344_192_925_874_87),
    (0.5, 1.952_360_489_182_557_093_3),
    (-1.0, 0.427_583_576_155_807_004_41),
    (1.0, 5.008_980_080_762_283_466_3),
    (-2.0, 0.255_395_676_310_505_743_87),
    (2.0, 108.940_904_389_977_972_41),
    (-3.5, 0.155_293_655_608_894_297_4),
    (3.5, 417_962.422_445_770_314_13),
    (-5.0, 0.110_704_637_733_068_626_37),
    (5.0, 144_009_798_674.661_040_41),
];
