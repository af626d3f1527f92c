//! Gauss-Jacobi rules for the weighted fractional integrals and a periodic
//! midpoint rule for integrals over the direction angle.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mlf::gamma;

/// Gauss rule for `∫_{-1}^{1} (1-x)^a (1+x)^b f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `∫_{-1}^{1} (1-x)^a (1+x)^b dx = 2^{a+b+1} B(a+1, b+1)`.
pub fn jacobi_mass(a: f64, b: f64) -> Result<f64> {
    Ok(2f64.powf(a + b + 1.0) * gamma(a + 1.0)? * gamma(b + 1.0)? / gamma(a + b + 2.0)?)
}

/// Gauss-Jacobi nodes and weights by Golub-Welsch. The nodes are polished by
/// Newton steps on `P_n^{(a,b)}`; the weights come from the first components
/// of the eigenvectors, which stay accurate next to a singular endpoint where
/// the Christoffel formula loses digits through `1 - x²`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidRuleSize(n));
    }
    if !(a > -1.0 && a.is_finite()) {
        return Err(Error::InvalidExponent { name: "a", value: a });
    }
    if !(b > -1.0 && b.is_finite()) {
        return Err(Error::InvalidExponent { name: "b", value: b });
    }
    let mass = jacobi_mass(a, b)?;

    // symmetric Jacobi matrix of the monic recurrence
    let ab = a + b;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for (k, d) in diag.iter_mut().enumerate() {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        *d = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
    }
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        let beta = if k == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        off[k] = beta.sqrt();
    }
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    tridiagonal_ql(&mut diag, &mut off, &mut first);

    let mut pairs: Vec<(f64, f64)> = diag
        .into_iter()
        .zip(first)
        .map(|(x, v)| (x, mass * v * v))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));

    for (x, _) in pairs.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = jacobi_with_derivative(n, a, b, *x);
            if dp == 0.0 || !dp.is_finite() {
                break;
            }
            let step = p / dp;
            let next = *x - step;
            if next <= -1.0 || next >= 1.0 {
                break;
            }
            *x = next;
            if step.abs() < 1e-16 {
                break;
            }
        }
    }
    let (nodes, weights) = pairs.into_iter().unzip();
    Ok(QuadratureRule {
        a,
        b,
        nodes,
        weights,
    })
}

/// `P_n^{(a,b)}(x)` and its derivative.
pub fn jacobi_with_derivative(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let ab = a + b;
    let mut prev = 1.0;
    let mut cur = (a + 1.0) + (ab + 2.0) * (x - 1.0) / 2.0;
    for k in 2..=n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        let c1 = 2.0 * kf * (kf + ab) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * s;
        let next = (c2 * cur - c3 * prev) / c1;
        prev = cur;
        cur = next;
    }
    let nf = n as f64;
    let s = 2.0 * nf + ab;
    let dp = (nf * ((a - b) - s * x) * cur + 2.0 * (nf + a) * (nf + b) * prev) / (s * (1.0 - x * x));
    (cur, dp)
}

/// Implicit QL iteration on a symmetric tridiagonal matrix. On return `diag`
/// holds the eigenvalues and `first` the first row of the eigenvector matrix
/// (rotated from the initial contents of `first`). `off[0]` is unused.
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], first: &mut [f64]) {
    let n = diag.len();
    if n == 1 {
        return;
    }
    // shift the subdiagonal so that off[i] couples i and i+1
    for i in 1..n {
        off[i - 1] = off[i];
    }
    off[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let fz = first[i + 1];
                first[i + 1] = s * first[i] + c * fz;
                first[i] = c * first[i] - s * fz;
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
}

/// Composite midpoint rule on `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularRule {
    pub angles: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AngularRule {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.angles
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

pub fn angular_rule(count: usize) -> Result<AngularRule> {
    if count < 4 {
        return Err(Error::InvalidRuleSize(count));
    }
    let h = 2.0 * PI / count as f64;
    Ok(AngularRule {
        angles: (0..count).map(|l| (l as f64 + 0.5) * h).collect(),
        weights: vec![h; count],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Moments `∫ (1-x)^a (1+x)^b x^m dx` from the integration-by-parts
    /// recurrence `(a+b+m+2) μ_{m+1} = (b-a) μ_m + m μ_{m-1}`.
    fn jacobi_moments(a: f64, b: f64, count: usize) -> Vec<f64> {
        let mut mu = vec![jacobi_mass(a, b).unwrap()];
        mu.push((b - a) * mu[0] / (a + b + 2.0));
        for m in 1..count {
            let mf = m as f64;
            let next = ((b - a) * mu[m] + mf * mu[m - 1]) / (a + b + mf + 2.0);
            mu.push(next);
        }
        mu.truncate(count);
        mu
    }

    #[test]
    fn one_point_legendre() {
        let r = gauss_jacobi(1, 0.0, 0.0).unwrap();
        assert!(r.nodes[0].abs() < 1e-16);
        assert_relative_eq!(r.weights[0], 2.0, max_relative = 1e-15);
    }

    #[test]
    fn two_point_legendre() {
        let r = gauss_jacobi(2, 0.0, 0.0).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + x).abs() < 1e-15 && (r.nodes[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-14 && (r.weights[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weight_sum_matches_mass() {
        let r = gauss_jacobi(8, -0.6, 0.0).unwrap();
        let s: f64 = r.weights.iter().sum();
        assert_relative_eq!(s, 3.298_769_776_932_235_5, max_relative = 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(gauss_jacobi(0, 0.0, 0.0), Err(Error::InvalidRuleSize(0))));
        assert!(matches!(
            gauss_jacobi(4, -1.0, 0.0),
            Err(Error::InvalidExponent { name: "a", .. })
        ));
        assert!(matches!(
            gauss_jacobi(4, 0.0, -1.5),
            Err(Error::InvalidExponent { name: "b", .. })
        ));
        assert!(angular_rule(3).is_err());
    }

    fn legendre(n: usize, x: f64) -> f64 {
        let (mut p0, mut p1) = (1.0, x);
        if n == 0 {
            return p0;
        }
        for k in 1..n {
            let kf = k as f64;
            let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    #[test]
    fn legendre_nodes_match_bisection_roots() {
        for n in 1..=16 {
            // bracket sign changes on a fine grid, then bisect
            let mut roots = Vec::new();
            let grid = 20_000;
            let mut left = -1.0;
            let mut fl = legendre(n, left);
            for i in 1..=grid {
                let right = -1.0 + 2.0 * i as f64 / grid as f64;
                let fr = legendre(n, right);
                if fl * fr < 0.0 {
                    let (mut lo, mut hi) = (left, right);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if legendre(n, lo) * legendre(n, mid) <= 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    roots.push(0.5 * (lo + hi));
                } else if fr == 0.0 {
                    roots.push(right);
                }
                left = right;
                fl = fr;
            }
            assert_eq!(roots.len(), n, "n = {n}");
            let r = gauss_jacobi(n, 0.0, 0.0).unwrap();
            for (x, y) in r.nodes.iter().zip(&roots) {
                assert!((x - y).abs() < 1e-13, "n = {n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn refinement_reduces_error() {
        // ∫ (1-x)^{-0.6} cos(3x) dx, reference from a 64-point rule
        let f = |x: f64| (3.0 * x).cos();
        let reference = gauss_jacobi(64, -0.6, 0.0).unwrap().integrate(f);
        for n in [2, 3, 4, 5] {
            let coarse = gauss_jacobi(n, -0.6, 0.0).unwrap().integrate(f);
            let fine = gauss_jacobi(2 * n, -0.6, 0.0).unwrap().integrate(f);
            assert!((coarse - reference).abs() > (fine - reference).abs());
        }
    }

    #[test]
    fn angular_rule_values() {
        let r = angular_rule(4).unwrap();
        for (l, t) in r.angles.iter().enumerate() {
            assert!((t - (2 * l + 1) as f64 * PI / 4.0).abs() < 1e-15);
        }
        assert!(r.weights.iter().all(|w| (w - PI / 2.0).abs() < 1e-15));
        assert!(angular_rule(8).unwrap().integrate(f64::cos).abs() < 1e-14);
        let v = angular_rule(16)
            .unwrap()
            .integrate(|t| 2.0 + (3.0 * t).sin());
        assert!((v - 4.0 * PI).abs() < 1e-12);
        let total: f64 = angular_rule(37).unwrap().weights.iter().sum();
        assert!((total - 2.0 * PI).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn moments_exact(n in 1usize..=20, a in -0.95f64..2.0, b in -0.95f64..2.0) {
            let r = gauss_jacobi(n, a, b).unwrap();
            let mu = jacobi_moments(a, b, 2 * n);
            for (m, exact) in mu.iter().enumerate() {
                let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(m as i32)).sum();
                prop_assert!((q - exact).abs() <= 1e-12 * mu[0].max(exact.abs()),
                    "m={} q={} exact={}", m, q, exact);
            }
        }

        #[test]
        fn nodes_sorted_inside_and_weights_positive(n in 1usize..=64, a in -0.99f64..3.0, b in -0.99f64..3.0) {
            let r = gauss_jacobi(n, a, b).unwrap();
            prop_assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(r.nodes.iter().all(|x| *x > -1.0 && *x < 1.0));
            prop_assert!(r.weights.iter().all(|w| *w > 0.0));
            let s: f64 = r.weights.iter().sum();
            let mass = jacobi_mass(a, b).unwrap();
            prop_assert!((s - mass).abs() <= 1e-12 * mass);
        }
    }
}
