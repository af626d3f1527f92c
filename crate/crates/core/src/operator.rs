//! Multiquadric basis and its derivative kernels.
//!
//! The fractional kernels evaluate the Caputo-type directional derivative
//! `D_θ^β φ = I_θ^{2-β} ∂²_θ φ`, integrating from the domain boundary up to the
//! collocation node along `(-cos θ, -sin θ)`. With `ζ = (d/2)(1-ξ)` the
//! integral becomes a Gauss-Jacobi sum with weight `(1-ξ)^{1-β}`:
//!
//! `(d/2)^{2-β} / Γ(2-β) · Σ_k ω_k ∂²_θ φ(p_i - (d/2)(1-ξ_k) e_θ)`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{direction, Domain, Point};
use crate::mlf::gamma;
use crate::quadrature::{gauss_jacobi, AngularRule, QuadratureRule};

/// Hardy's multiquadric `sqrt(r² + c²)`.
#[inline]
pub fn mq(r: f64, c: f64) -> f64 {
    (r * r + c * c).sqrt()
}

#[inline]
fn mq_at(p: Point, center: Point, c: f64) -> f64 {
    let dx = p[0] - center[0];
    let dy = p[1] - center[1];
    (dx * dx + dy * dy + c * c).sqrt()
}

/// `∂φ/∂x` of the basis centred at `center`, evaluated at `p`.
#[inline]
pub fn mq_dx(p: Point, center: Point, c: f64) -> f64 {
    (p[0] - center[0]) / mq_at(p, center, c)
}

/// `∂φ/∂y` of the basis centred at `center`, evaluated at `p`.
#[inline]
pub fn mq_dy(p: Point, center: Point, c: f64) -> f64 {
    (p[1] - center[1]) / mq_at(p, center, c)
}

/// Second derivative along the unit vector `e`: `1/φ - (e·(p-center))²/φ³`.
#[inline]
pub fn mq_second_directional(p: Point, center: Point, e: Point, c: f64) -> f64 {
    let dx = p[0] - center[0];
    let dy = p[1] - center[1];
    let a = e[0] * dx + e[1] * dy;
    let s = dx * dx + dy * dy + c * c;
    let phi = s.sqrt();
    1.0 / phi - a * a / (s * phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Second derivative along a coordinate axis: `((transverse)² + c²) / φ³`.
#[inline]
pub fn mq_second_axis(p: Point, center: Point, axis: Axis, c: f64) -> f64 {
    let dx = p[0] - center[0];
    let dy = p[1] - center[1];
    let t = match axis {
        Axis::X => dy,
        Axis::Y => dx,
    };
    let s = dx * dx + dy * dy + c * c;
    (t * t + c * c) / (s * s.sqrt())
}

/// Multiquadric basis over a fixed set of centres.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfBasis {
    pub centers: Vec<Point>,
    pub shape_c: f64,
}

impl RbfBasis {
    pub fn new(centers: Vec<Point>, shape_c: f64) -> Result<Self> {
        if !(shape_c > 0.0 && shape_c.is_finite()) {
            return Err(Error::InvalidParameter(format!("shape parameter {shape_c}")));
        }
        Ok(RbfBasis { centers, shape_c })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn phi(&self, p: Point, j: usize) -> f64 {
        mq_at(p, self.centers[j], self.shape_c)
    }

    /// `Σ_j λ_j φ(‖p - c_j‖)`.
    pub fn evaluate(&self, coefficients: &[f64], p: Point) -> f64 {
        self.centers
            .iter()
            .zip(coefficients)
            .map(|(&cj, &l)| l * mq_at(p, cj, self.shape_c))
            .sum()
    }
}

/// Gauss-Jacobi rules with exponents `(1-β, 0)`, one per distinct order.
#[derive(Debug, Clone)]
pub struct RuleBook {
    points: usize,
    rules: BTreeMap<u64, QuadratureRule>,
}

impl RuleBook {
    pub fn new(points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::InvalidRuleSize(0));
        }
        Ok(RuleBook {
            points,
            rules: BTreeMap::new(),
        })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Build (once) the rule for order `beta`.
    pub fn prepare(&mut self, beta: f64) -> Result<()> {
        check_order(beta)?;
        if beta < 2.0 && !self.rules.contains_key(&beta.to_bits()) {
            let rule = gauss_jacobi(self.points, 1.0 - beta, 0.0)?;
            self.rules.insert(beta.to_bits(), rule);
        }
        Ok(())
    }

    /// Rule for `beta`; `β = 2` needs no rule and yields an empty one.
    pub fn rule(&self, beta: f64) -> Result<&QuadratureRule> {
        static EMPTY: QuadratureRule = QuadratureRule {
            a: -1.0,
            b: 0.0,
            nodes: Vec::new(),
            weights: Vec::new(),
        };
        check_order(beta)?;
        if beta == 2.0 {
            return Ok(&EMPTY);
        }
        self.rules.get(&beta.to_bits()).ok_or_else(|| {
            Error::InvalidParameter(format!("no quadrature rule prepared for order {beta}"))
        })
    }
}

pub fn check_order(beta: f64) -> Result<()> {
    if beta > 1.0 && beta <= 2.0 {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange(beta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kernel {
    Axis(Axis),
    Directional(Point),
}

impl Kernel {
    #[inline]
    fn eval(self, p: Point, center: Point, c: f64) -> f64 {
        match self {
            Kernel::Axis(axis) => mq_second_axis(p, center, axis, c),
            Kernel::Directional(e) => mq_second_directional(p, center, e, c),
        }
    }
}

/// Sample points and scaled weights of one fractional derivative at one
/// collocation node. Shared across all centres of a matrix row.
#[derive(Debug, Clone)]
pub struct FractionalStencil {
    kernel: Kernel,
    /// `None` for `β = 2` (local second derivative at the node).
    samples: Option<Vec<(Point, f64)>>,
    node: Point,
}

impl FractionalStencil {
    fn build(node: Point, beta: f64, kernel: Kernel, e: Point, domain: &Domain, rule: &QuadratureRule) -> Result<Self> {
        check_order(beta)?;
        if beta == 2.0 {
            return Ok(FractionalStencil {
                kernel,
                samples: None,
                node,
            });
        }
        if (rule.a - (1.0 - beta)).abs() > 1e-12 || rule.b != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "quadrature exponents ({}, {}) do not match order {beta}",
                rule.a, rule.b
            )));
        }
        let d = domain.exit_along(node, e)?;
        if d == 0.0 {
            return Ok(FractionalStencil {
                kernel,
                samples: Some(Vec::new()),
                node,
            });
        }
        let half = 0.5 * d;
        let prefactor = half.powf(2.0 - beta) / gamma(2.0 - beta)?;
        let samples = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&xi, &w)| {
                let s = half * (1.0 - xi);
                ([node[0] - s * e[0], node[1] - s * e[1]], prefactor * w)
            })
            .collect();
        Ok(FractionalStencil {
            kernel,
            samples: Some(samples),
            node,
        })
    }

    pub fn axis(node: Point, beta: f64, axis: Axis, domain: &Domain, rule: &QuadratureRule) -> Result<Self> {
        let e = match axis {
            Axis::X => [1.0, 0.0],
            Axis::Y => [0.0, 1.0],
        };
        Self::build(node, beta, Kernel::Axis(axis), e, domain, rule)
    }

    pub fn directional(node: Point, beta: f64, theta: f64, domain: &Domain, rule: &QuadratureRule) -> Result<Self> {
        let e = direction(theta);
        Self::build(node, beta, Kernel::Directional(e), e, domain, rule)
    }

    /// Entry for the basis function centred at `center`.
    #[inline]
    pub fn entry(&self, center: Point, c: f64) -> f64 {
        match &self.samples {
            None => self.kernel.eval(self.node, center, c),
            Some(samples) => samples
                .iter()
                .map(|&(q, w)| w * self.kernel.eval(q, center, c))
                .sum(),
        }
    }

    /// Apply the derivative to a function given through its second
    /// directional derivative along the stencil direction.
    pub fn apply(&self, second: impl Fn(Point) -> f64) -> f64 {
        match &self.samples {
            None => second(self.node),
            Some(samples) => samples.iter().map(|&(q, w)| w * second(q)).sum(),
        }
    }
}

/// `(∂^β φ_j / ∂axis^β)(p_i)` integrating from the domain edge.
pub fn frac_axis_entry(
    node: Point,
    center: Point,
    beta: f64,
    axis: Axis,
    domain: &Domain,
    rule: &QuadratureRule,
    c: f64,
) -> Result<f64> {
    Ok(FractionalStencil::axis(node, beta, axis, domain, rule)?.entry(center, c))
}

/// `(D_θ^β φ_j)(p_i)`.
pub fn frac_directional_entry(
    node: Point,
    center: Point,
    beta: f64,
    theta: f64,
    domain: &Domain,
    rule: &QuadratureRule,
    c: f64,
) -> Result<f64> {
    Ok(FractionalStencil::directional(node, beta, theta, domain, rule)?.entry(center, c))
}

/// Weighting of directional derivatives over the direction angle.
#[derive(Debug, Clone, PartialEq)]
pub enum MixingMeasure {
    /// `m(θ)` and `β(θ)` sampled at the nodes of an [`AngularRule`]; the rule
    /// weights are folded into `weights`.
    Continuous {
        angles: Vec<f64>,
        weights: Vec<f64>,
        orders: Vec<f64>,
    },
    Discrete {
        angles: Vec<f64>,
        weights: Vec<f64>,
        orders: Vec<f64>,
    },
}

impl MixingMeasure {
    pub fn continuous(
        rule: &AngularRule,
        density: impl Fn(f64) -> f64,
        order: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let m = MixingMeasure::Continuous {
            angles: rule.angles.clone(),
            weights: rule
                .angles
                .iter()
                .zip(&rule.weights)
                .map(|(&t, &w)| density(t) * w)
                .collect(),
            orders: rule.angles.iter().map(|&t| order(t)).collect(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn discrete(angles: Vec<f64>, weights: Vec<f64>, orders: Vec<f64>) -> Result<Self> {
        let m = MixingMeasure::Discrete {
            angles,
            weights,
            orders,
        };
        m.validate()?;
        Ok(m)
    }

    /// `(θ_l, effective weight, β_l)` triples.
    pub fn terms(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let (a, w, o) = match self {
            MixingMeasure::Continuous {
                angles,
                weights,
                orders,
            }
            | MixingMeasure::Discrete {
                angles,
                weights,
                orders,
            } => (angles, weights, orders),
        };
        a.iter()
            .zip(w)
            .zip(o)
            .map(|((&t, &m), &b)| (t, m, b))
    }

    pub fn validate(&self) -> Result<()> {
        let (angles, weights, orders) = match self {
            MixingMeasure::Continuous {
                angles,
                weights,
                orders,
            }
            | MixingMeasure::Discrete {
                angles,
                weights,
                orders,
            } => (angles, weights, orders),
        };
        if angles.len() != weights.len() || angles.len() != orders.len() || angles.is_empty() {
            return Err(Error::InvalidMeasure("length mismatch or empty measure".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidMeasure("weights must be finite and non-negative".into()));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::InvalidMeasure("no positive weight".into()));
        }
        for &b in orders {
            check_order(b).map_err(|_| Error::InvalidMeasure(format!("order {b} outside (1, 2]")))?;
        }
        Ok(())
    }

    pub fn orders(&self) -> Vec<f64> {
        self.terms().map(|(_, _, b)| b).collect()
    }
}

/// `(D_M^β φ_j)(p_i)` for a mixing measure.
pub fn frac_mixed_entry(
    node: Point,
    center: Point,
    measure: &MixingMeasure,
    domain: &Domain,
    rules: &RuleBook,
    c: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for (theta, weight, beta) in measure.terms() {
        if weight == 0.0 {
            continue;
        }
        let rule = rules.rule(beta)?;
        acc += weight * frac_directional_entry(node, center, beta, theta, domain, rule, c)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::angular_rule;
    use std::f64::consts::PI;

    fn rule(beta: f64, k: usize) -> QuadratureRule {
        gauss_jacobi(k, 1.0 - beta, 0.0).unwrap()
    }

    #[test]
    fn mq_values() {
        assert_eq!(mq(0.0, 0.1), 0.1);
        assert_eq!(mq(3.0, 4.0), 5.0);
        assert!((mq(1.0, 0.1) - 1.004_987_562_112_089).abs() < 1e-15);
    }

    #[test]
    fn first_derivatives() {
        let c = 0.1;
        assert_eq!(mq_dx([0.3, 0.2], [0.3, 0.2], c), 0.0);
        assert!((mq_dx([1.0, 0.0], [0.0, 0.0], c) - 0.995_037_190_209_989_1).abs() < 1e-15);
        let (p, q) = ([0.37, 0.81], [0.12, 0.55]);
        let h = 1e-6;
        let fd_x = (mq_at([p[0] + h, p[1]], q, c) - mq_at([p[0] - h, p[1]], q, c)) / (2.0 * h);
        let fd_y = (mq_at([p[0], p[1] + h], q, c) - mq_at([p[0], p[1] - h], q, c)) / (2.0 * h);
        assert!((fd_x - mq_dx(p, q, c)).abs() < 1e-8);
        assert!((fd_y - mq_dy(p, q, c)).abs() < 1e-8);
    }

    #[test]
    fn second_derivatives_match_finite_differences() {
        let (p, q, c) = ([0.37, 0.81], [0.12, 0.55], 0.2);
        let h = 1e-4;
        let e = direction(0.7);
        let f = |s: f64| mq_at([p[0] + s * e[0], p[1] + s * e[1]], q, c);
        let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        assert!((fd - mq_second_directional(p, q, e, c)).abs() < 1e-6);
        let fx = |s: f64| mq_at([p[0] + s, p[1]], q, c);
        let fdx = (fx(h) - 2.0 * fx(0.0) + fx(-h)) / (h * h);
        assert!((fdx - mq_second_axis(p, q, Axis::X, c)).abs() < 1e-6);
    }

    #[test]
    fn classical_order_is_second_derivative() {
        let domain = Domain::rectangle(-1.0, 2.0, -1.0, 1.0).unwrap();
        let r = rule(1.5, 4);
        let v = frac_axis_entry([1.0, 0.0], [0.0, 0.0], 2.0, Axis::X, &domain, &r, 0.1).unwrap();
        assert!((v - 0.01 / 1.01f64.powf(1.5)).abs() < 1e-15);
        assert!((v - 0.009_851_853_368_415_734).abs() < 1e-12);
    }

    #[test]
    fn near_classical_order_is_continuous() {
        // smooth case: the second derivative varies slowly along the ray
        let domain = Domain::rectangle(0.0, 2.0, -1.0, 1.0).unwrap();
        let (p, q, c) = ([1.0, 0.0], [0.2, 0.3], 0.5);
        let exact = frac_axis_entry(p, q, 2.0, Axis::X, &domain, &rule(1.5, 4), c).unwrap();
        let near = frac_axis_entry(p, q, 1.999, Axis::X, &domain, &rule(1.999, 40), c).unwrap();
        assert!((near - exact).abs() < 1e-2, "{near} vs {exact}");
    }

    #[test]
    fn zero_exit_distance_gives_zero() {
        let sq = Domain::unit_square();
        let r = rule(1.6, 10);
        let v = frac_axis_entry([0.0, 0.4], [0.5, 0.5], 1.6, Axis::X, &sq, &r, 0.1).unwrap();
        assert_eq!(v, 0.0);
        let v = frac_directional_entry([0.4, 0.0], [0.5, 0.5], 1.6, PI / 2.0, &sq, &r, 0.1).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn order_and_rule_checked() {
        let sq = Domain::unit_square();
        let r = rule(1.6, 10);
        assert!(matches!(
            frac_axis_entry([0.5, 0.5], [0.5, 0.5], 1.0, Axis::X, &sq, &r, 0.1),
            Err(Error::OrderOutOfRange(_))
        ));
        assert!(frac_axis_entry([0.5, 0.5], [0.5, 0.5], 1.7, Axis::X, &sq, &r, 0.1).is_err());
    }

    #[test]
    fn theta_reduction() {
        let sq = Domain::unit_square();
        let r = rule(1.6, 20);
        for &(p, q) in &[([0.3, 0.6], [0.1, 0.9]), ([0.8, 0.2], [0.5, 0.5]), ([0.05, 0.95], [1.0, 0.0])] {
            let ax = frac_axis_entry(p, q, 1.6, Axis::X, &sq, &r, 0.1).unwrap();
            let dx = frac_directional_entry(p, q, 1.6, 0.0, &sq, &r, 0.1).unwrap();
            let ay = frac_axis_entry(p, q, 1.6, Axis::Y, &sq, &r, 0.1).unwrap();
            let dy = frac_directional_entry(p, q, 1.6, PI / 2.0, &sq, &r, 0.1).unwrap();
            assert!((ax - dx).abs() <= 1e-12 * ax.abs().max(1.0));
            assert!((ay - dy).abs() <= 1e-12 * ay.abs().max(1.0));
        }
    }

    #[test]
    fn rotation_covariance_on_disk() {
        let disk = Domain::disk(1.0, 1.0, 1.0).unwrap();
        let r = rule(1.7, 20);
        let rot = |p: Point, a: f64| {
            let (s, c) = a.sin_cos();
            let (x, y) = (p[0] - 1.0, p[1] - 1.0);
            [1.0 + c * x - s * y, 1.0 + s * x + c * y]
        };
        let (p, q, theta) = ([1.3, 0.8], [0.6, 1.2], 0.4);
        let a = frac_directional_entry(p, q, 1.7, theta, &disk, &r, 0.2).unwrap();
        let b = frac_directional_entry(rot(p, PI / 3.0), rot(q, PI / 3.0), 1.7, theta + PI / 3.0, &disk, &r, 0.2).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn mixed_entry_linearity() {
        let sq = Domain::unit_square();
        let mut book = RuleBook::new(20).unwrap();
        book.prepare(1.6).unwrap();
        book.prepare(1.8).unwrap();
        let (p, q) = ([0.4, 0.7], [0.2, 0.1]);
        let only_x = MixingMeasure::discrete(vec![0.0], vec![1.0], vec![1.6]).unwrap();
        let ax = frac_axis_entry(p, q, 1.6, Axis::X, &sq, book.rule(1.6).unwrap(), 0.1).unwrap();
        let mx = frac_mixed_entry(p, q, &only_x, &sq, &book, 0.1).unwrap();
        assert!((ax - mx).abs() <= 1e-12 * ax.abs().max(1.0));

        let (a, b) = (0.7, 2.5);
        let both = MixingMeasure::discrete(vec![0.0, PI / 2.0], vec![a, b], vec![1.6, 1.8]).unwrap();
        let ay = frac_axis_entry(p, q, 1.8, Axis::Y, &sq, book.rule(1.8).unwrap(), 0.1).unwrap();
        let m = frac_mixed_entry(p, q, &both, &sq, &book, 0.1).unwrap();
        assert!((m - (a * ax + b * ay)).abs() <= 1e-12 * m.abs().max(1.0));
    }

    #[test]
    fn measure_validation() {
        assert!(MixingMeasure::discrete(vec![0.0], vec![-1.0], vec![1.5]).is_err());
        assert!(MixingMeasure::discrete(vec![0.0], vec![0.0], vec![1.5]).is_err());
        assert!(MixingMeasure::discrete(vec![0.0], vec![1.0], vec![2.5]).is_err());
        assert!(MixingMeasure::discrete(vec![0.0, 1.0], vec![1.0], vec![1.5]).is_err());
        let ang = angular_rule(8).unwrap();
        let m = MixingMeasure::continuous(&ang, |_| 1.0, |_| 1.5).unwrap();
        let total: f64 = m.terms().map(|(_, w, _)| w).sum();
        assert!((total - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        let sq = Domain::unit_square();
        let (p, q, c) = ([0.6, 0.4], [0.3, 0.7], 0.2);
        for beta in [1.2, 1.6, 1.8] {
            for theta in [0.0, 0.9, 2.0] {
                let a = frac_directional_entry(p, q, beta, theta, &sq, &rule(beta, 20), c).unwrap();
                let b = frac_directional_entry(p, q, beta, theta, &sq, &rule(beta, 40), c).unwrap();
                assert!((a - b).abs() < 1e-8, "beta {beta} theta {theta}: {a} vs {b}");
            }
        }
    }
}
