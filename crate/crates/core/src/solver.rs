//! Collocation assembly, index reduction and exact-in-time propagation.
//!
//! The unknown field is `u(p, t) = Σ_j λ_j(t) φ_j(p)`. Interior rows enforce
//! `D_t^α u = L u + f`; boundary rows enforce `B u = g·E_α(-ω t^α)`.
//! Differentiating the boundary constraint in the Caputo sense gives
//! `B D_t^α λ = -ω B λ`, so the mass matrix `[Φ_interior; B]` is square and
//! nonsingular and the system becomes `D_t^α λ = -M λ + F̃` with
//!
//! `M = [Φ_interior; B]⁻¹ [-L Φ; ω B]`, `F̃ = [Φ_interior; B]⁻¹ [F; 0]`.
//!
//! With `-M = S diag(μ) S⁻¹` the solution is
//! `λ(t) = S diag(E_α(μ_i t^α)) S⁻¹ (λ(0) - λ_∞) + λ_∞`, `λ_∞ = M⁻¹ F̃`.

use std::fmt;
use std::sync::Arc;

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::geometry::{Domain, NodeSet, Point};
use crate::mlf::mittag_leffler;
use crate::operator::{check_order, mq_dx, mq_dy, Axis, FractionalStencil, MixingMeasure, RbfBasis, RuleBook};
use crate::par::{map_rows, Execution};

/// Scalar field over the closed domain.
pub type Field = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

pub fn field(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Field {
    Arc::new(f)
}

pub fn constant(value: f64) -> Field {
    Arc::new(move |_| value)
}

/// Interpolation matrices with a 1-norm condition number above this are
/// rejected.
pub const MAX_INTERPOLATION_CONDITION: f64 = 1e14;
/// Modal matrices with a 1-norm condition number above this are rejected.
pub const MAX_MODAL_CONDITION: f64 = 1e12;
/// Relative bound on the discarded imaginary part of `λ(t)`.
pub const IMAGINARY_RESIDUE_BOUND: f64 = 1e-8;
/// Relative bound on `‖S diag(μ) S⁻¹ + M‖_max / ‖M‖_max`.
pub const RECONSTRUCTION_BOUND: f64 = 1e-8;
/// Absolute bound on the mismatch between initial data and Dirichlet data.
pub const CONSISTENCY_BOUND: f64 = 1e-8;

#[derive(Clone)]
pub struct AxisTerm {
    pub beta: f64,
    pub k: Field,
}

impl fmt::Debug for AxisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AxisTerm").field("beta", &self.beta).finish_non_exhaustive()
    }
}

/// Spatial fractional operator.
#[derive(Clone)]
pub enum SpaceOperator {
    /// `K_x ∂^{β_x}/∂x^{β_x} + K_y ∂^{β_y}/∂y^{β_y}`; a missing term is zero.
    Axis {
        x: Option<AxisTerm>,
        y: Option<AxisTerm>,
    },
    /// `k(x, y) ∫ D_θ^{β(θ)} dM(θ)`.
    Measure { measure: MixingMeasure, k: Field },
    /// `Σ_l K_l(x, y) D_{θ_l}^{β_l}` with per-direction coefficients.
    Directions(Vec<DirectionalTerm>),
}

#[derive(Clone)]
pub struct DirectionalTerm {
    pub theta: f64,
    pub beta: f64,
    pub k: Field,
}

impl fmt::Debug for DirectionalTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirectionalTerm")
            .field("theta", &self.theta)
            .field("beta", &self.beta)
            .finish_non_exhaustive()
    }
}

impl fmt::Debug for SpaceOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceOperator::Axis { x, y } => f.debug_struct("Axis").field("x", x).field("y", y).finish(),
            SpaceOperator::Measure { measure, .. } => f
                .debug_struct("Measure")
                .field("measure", measure)
                .finish_non_exhaustive(),
            SpaceOperator::Directions(terms) => f.debug_tuple("Directions").field(terms).finish(),
        }
    }
}

impl SpaceOperator {
    /// Distinct spatial orders used by the operator.
    pub fn orders(&self) -> Vec<f64> {
        let mut out: Vec<f64> = match self {
            SpaceOperator::Axis { x, y } => x.iter().chain(y).map(|t| t.beta).collect(),
            SpaceOperator::Measure { measure, .. } => measure.orders(),
            SpaceOperator::Directions(terms) => terms.iter().map(|t| t.beta).collect(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    /// Prescribes `∂u/∂x` instead of `u`.
    NeumannX,
}

#[derive(Clone)]
pub enum BoundaryKinds {
    All(BoundaryKind),
    PerNode(Arc<dyn Fn(Point) -> BoundaryKind + Send + Sync>),
}

/// Boundary data `g(x, y)·E_α(-ω t^α)`; `ω = 0` is a constant profile.
#[derive(Clone)]
pub struct BoundarySpec {
    pub kinds: BoundaryKinds,
    pub profile: Field,
    pub omega: f64,
}

impl fmt::Debug for BoundarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundarySpec").field("omega", &self.omega).finish_non_exhaustive()
    }
}

impl BoundarySpec {
    pub fn dirichlet(profile: Field, omega: f64) -> Self {
        BoundarySpec {
            kinds: BoundaryKinds::All(BoundaryKind::Dirichlet),
            profile,
            omega,
        }
    }

    pub fn homogeneous_dirichlet() -> Self {
        Self::dirichlet(constant(0.0), 0.0)
    }

    pub fn kind_at(&self, p: Point) -> BoundaryKind {
        match &self.kinds {
            BoundaryKinds::All(kind) => *kind,
            BoundaryKinds::PerNode(f) => f(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("boundary decay rate ω = {}", self.omega)));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub operator: SpaceOperator,
    pub velocity_x: Option<Field>,
    pub velocity_y: Option<Field>,
    pub source: Option<Field>,
    pub initial: Field,
    pub boundary: BoundarySpec,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("alpha", &self.alpha)
            .field("operator", &self.operator)
            .field("boundary", &self.boundary)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        check_time_order(self.alpha)?;
        for beta in self.operator.orders() {
            check_order(beta)?;
        }
        if let SpaceOperator::Measure { measure, .. } = &self.operator {
            measure.validate()?;
        }
        self.boundary.validate()
    }

    /// Quadrature rules with `points` nodes for every order in the problem.
    pub fn rule_book(&self, points: usize) -> Result<RuleBook> {
        let mut book = RuleBook::new(points)?;
        for beta in self.operator.orders() {
            book.prepare(beta)?;
        }
        Ok(book)
    }
}

pub fn check_time_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::TimeOrderOutOfRange(alpha))
    }
}

/// Assembled collocation matrices. Rows and columns follow the global node
/// order of [`NodeSet::all`] (interior first).
#[derive(Debug, Clone)]
pub struct CollocationSystem {
    pub nodes: NodeSet,
    pub basis: RbfBasis,
    /// `φ_j(p_i)` for all nodes.
    pub phi_full: Mat<f64>,
    /// `L φ_j(p_i)` for interior `i`.
    pub b_interior: Mat<f64>,
    /// Boundary operator rows (`φ_j` or `∂φ_j/∂x`).
    pub b_boundary: Mat<f64>,
    /// Source at interior nodes.
    pub forcing: Vec<f64>,
    pub boundary_kinds: Vec<BoundaryKind>,
    /// `g` at boundary nodes.
    pub boundary_values: Vec<f64>,
    /// 1-norm condition number of `phi_full`.
    pub phi_condition: f64,
    phi_inverse: Mat<f64>,
}

impl CollocationSystem {
    /// System from explicit matrices (no basis consistency check).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        nodes: NodeSet,
        basis: RbfBasis,
        phi_full: Mat<f64>,
        b_interior: Mat<f64>,
        b_boundary: Mat<f64>,
        forcing: Vec<f64>,
        boundary_kinds: Vec<BoundaryKind>,
        boundary_values: Vec<f64>,
    ) -> Result<Self> {
        let n = phi_full.nrows();
        let m = b_interior.nrows();
        if phi_full.ncols() != n
            || b_interior.ncols() != n
            || b_boundary.ncols() != n
            || m + b_boundary.nrows() != n
            || forcing.len() != m
            || boundary_kinds.len() != n - m
            || boundary_values.len() != n - m
        {
            return Err(Error::Dimension("inconsistent collocation blocks".into()));
        }
        let (phi_inverse, phi_condition) = inverse_checked(&phi_full)?;
        if phi_condition > MAX_INTERPOLATION_CONDITION {
            return Err(Error::IllConditioned(phi_condition));
        }
        Ok(CollocationSystem {
            nodes,
            basis,
            phi_full,
            b_interior,
            b_boundary,
            forcing,
            boundary_kinds,
            boundary_values,
            phi_condition,
            phi_inverse,
        })
    }

    pub fn interior_count(&self) -> usize {
        self.b_interior.nrows()
    }

    pub fn len(&self) -> usize {
        self.phi_full.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn phi_inverse(&self) -> &Mat<f64> {
        &self.phi_inverse
    }

    /// Interpolation coefficients `Φ_full⁻¹ u`.
    pub fn interpolate(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} nodes",
                values.len(),
                self.len()
            )));
        }
        Ok(refined_solve(&self.phi_full, &self.phi_inverse, values))
    }
}

fn mat_vec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
        .collect()
}

fn norm_one(a: &Mat<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn norm_one_complex(a: &Mat<c64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn norm_max(a: &Mat<f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

fn rows_to_mat(rows: &[Vec<f64>], ncols: usize) -> Mat<f64> {
    Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

fn inverse_checked(a: &Mat<f64>) -> Result<(Mat<f64>, f64)> {
    let inv = a.partial_piv_lu().inverse();
    let cond = norm_one(a) * norm_one(&inv);
    if !cond.is_finite() {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    Ok((inv, cond))
}

enum RowOperator {
    Axis(Vec<(FractionalStencil, f64)>),
    Measure(Vec<(FractionalStencil, f64)>),
}


fn interior_row(
    problem: &ProblemSpec,
    domain: &Domain,
    rules: &RuleBook,
    basis: &RbfBasis,
    p: Point,
) -> Result<Vec<f64>> {
    let c = basis.shape_c;
    let vx = problem.velocity_x.as_ref().map_or(0.0, |v| v(p));
    let vy = problem.velocity_y.as_ref().map_or(0.0, |v| v(p));
    let op = match &problem.operator {
        SpaceOperator::Axis { x, y } => {
            let mut terms = Vec::new();
            for (term, axis) in [(x, Axis::X), (y, Axis::Y)] {
                if let Some(term) = term {
                    let k = (term.k)(p);
                    if k != 0.0 {
                        let rule = rules.rule(term.beta)?;
                        terms.push((FractionalStencil::axis(p, term.beta, axis, domain, rule)?, k));
                    }
                }
            }
            RowOperator::Axis(terms)
        }
        SpaceOperator::Measure { measure, k } => {
            let kp = k(p);
            let mut terms = Vec::new();
            if kp != 0.0 {
                for (theta, weight, beta) in measure.terms() {
                    if weight != 0.0 {
                        let rule = rules.rule(beta)?;
                        terms.push((FractionalStencil::directional(p, beta, theta, domain, rule)?, weight));
                    }
                }
            }
            RowOperator::Measure(terms).scaled(kp)
        }
        SpaceOperator::Directions(list) => {
            let mut terms = Vec::new();
            for term in list {
                let k = (term.k)(p);
                if k != 0.0 {
                    let rule = rules.rule(term.beta)?;
                    terms.push((FractionalStencil::directional(p, term.beta, term.theta, domain, rule)?, k));
                }
            }
            RowOperator::Axis(terms)
        }
    };
    Ok(basis
        .centers
        .iter()
        .map(|&cj| {
            let mut v = 0.0;
            if vx != 0.0 {
                v -= vx * mq_dx(p, cj, c);
            }
            if vy != 0.0 {
                v -= vy * mq_dy(p, cj, c);
            }
            v + op.entry(cj, c)
        })
        .collect())
}

impl RowOperator {
    fn scaled(self, k: f64) -> Self {
        match self {
            RowOperator::Measure(terms) => {
                RowOperator::Measure(terms.into_iter().map(|(s, w)| (s, w * k)).collect())
            }
            other => other,
        }
    }

    #[inline]
    fn entry(&self, center: Point, c: f64) -> f64 {
        let (RowOperator::Axis(terms) | RowOperator::Measure(terms)) = self;
        terms.iter().map(|(s, w)| w * s.entry(center, c)).sum()
    }
}

/// Build the collocation matrices for `problem` on `nodes`.
pub fn assemble(
    problem: &ProblemSpec,
    domain: &Domain,
    nodes: &NodeSet,
    basis: &RbfBasis,
    rules: &RuleBook,
    exec: Execution,
) -> Result<CollocationSystem> {
    problem.validate()?;
    let points = nodes.all();
    if points != basis.centers {
        return Err(Error::Dimension("basis centres differ from the collocation nodes".into()));
    }
    let n = points.len();
    let m = nodes.interior_count();
    let c = basis.shape_c;

    let phi_rows = map_rows(n, exec, |i| {
        points.iter().map(|&cj| crate::operator::mq((points[i][0] - cj[0]).hypot(points[i][1] - cj[1]), c)).collect::<Vec<_>>()
    });
    let phi_full = rows_to_mat(&phi_rows, n);

    let interior_rows: Vec<Vec<f64>> = map_rows(m, exec, |i| interior_row(problem, domain, rules, basis, points[i]))
        .into_iter()
        .collect::<Result<_>>()?;
    let b_interior = rows_to_mat(&interior_rows, n);

    let boundary_kinds: Vec<BoundaryKind> = nodes.boundary.iter().map(|&p| problem.boundary.kind_at(p)).collect();
    let boundary_rows = map_rows(nodes.boundary_count(), exec, |k| {
        let p = nodes.boundary[k];
        match boundary_kinds[k] {
            BoundaryKind::Dirichlet => phi_rows[m + k].clone(),
            BoundaryKind::NeumannX => points.iter().map(|&cj| mq_dx(p, cj, c)).collect(),
        }
    });
    let b_boundary = rows_to_mat(&boundary_rows, n);

    let forcing = match &problem.source {
        Some(f) => nodes.interior.iter().map(|&p| f(p)).collect(),
        None => vec![0.0; m],
    };
    let boundary_values = nodes.boundary.iter().map(|&p| (problem.boundary.profile)(p)).collect();

    let (phi_inverse, phi_condition) = inverse_checked(&phi_full)?;
    if phi_condition > MAX_INTERPOLATION_CONDITION {
        return Err(Error::IllConditioned(phi_condition));
    }
    Ok(CollocationSystem {
        nodes: nodes.clone(),
        basis: basis.clone(),
        phi_full,
        b_interior,
        b_boundary,
        forcing,
        boundary_kinds,
        boundary_values,
        phi_condition,
        phi_inverse,
    })
}

/// Reduced system in modal form.
///
/// The state is `y = [Φ_interior; B] λ`: nodal values at interior nodes and
/// the constrained boundary quantity at boundary nodes. In these coordinates
/// `D_t^α y = -M y + F̂` with `M = [Φ_interior; B] M_λ [Φ_interior; B]⁻¹`,
/// which is similar to the coefficient-space matrix `M_λ` and has the exact
/// boundary rows `ω e_k`.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub m_matrix: Mat<f64>,
    /// Spectrum of `-M`.
    pub eigenvalues: Vec<c64>,
    /// Modal matrix (unit 2-norm columns).
    pub modal: Mat<c64>,
    pub modal_inverse: Mat<c64>,
    /// 1-norm condition number of the modal matrix.
    pub modal_condition: f64,
    /// `‖S diag(μ) S⁻¹ + M‖_max / ‖M‖_max`.
    pub reconstruction_residual: f64,
    /// Steady state `M⁻¹ F̂`.
    pub shift: Vec<f64>,
    mass: Mat<f64>,
    mass_inverse: Mat<f64>,
    phi_full: Mat<f64>,
    phi_inverse: Mat<f64>,
    dirichlet: Vec<(usize, f64)>,
}

/// `A⁻¹ b` from an explicit inverse with two refinement sweeps.
fn refined_solve(a: &Mat<f64>, a_inv: &Mat<f64>, b: &[f64]) -> Vec<f64> {
    let mut x = mat_vec(a_inv, b);
    for _ in 0..2 {
        let ax = mat_vec(a, &x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        let dx = mat_vec(a_inv, &r);
        for (x, d) in x.iter_mut().zip(dx) {
            *x += d;
        }
    }
    x
}

/// Reduce the collocation system to a fractional ODE and diagonalise it.
pub fn index_reduce(system: &CollocationSystem, boundary: &BoundarySpec) -> Result<Propagator> {
    boundary.validate()?;
    let n = system.len();
    let m = system.interior_count();
    let omega = boundary.omega;

    let all_dirichlet = system.boundary_kinds.iter().all(|k| *k == BoundaryKind::Dirichlet);
    let (mass, mass_inverse) = if all_dirichlet {
        (system.phi_full.clone(), system.phi_inverse.clone())
    } else {
        let mass = Mat::from_fn(n, n, |i, j| {
            if i < m {
                system.phi_full[(i, j)]
            } else {
                system.b_boundary[(i - m, j)]
            }
        });
        let (inv, cond) = inverse_checked(&mass)?;
        if cond > MAX_INTERPOLATION_CONDITION {
            return Err(Error::IllConditioned(cond));
        }
        (mass, inv)
    };

    // interior rows: -L Φ W; boundary rows: ω e_k
    let interior = &system.b_interior * &mass_inverse;
    let m_matrix = Mat::from_fn(n, n, |i, j| {
        if i < m {
            -interior[(i, j)]
        } else if i == j {
            omega
        } else {
            0.0
        }
    });
    let mut forcing = system.forcing.clone();
    forcing.resize(n, 0.0);

    let neg = Mat::from_fn(n, n, |i, j| -m_matrix[(i, j)]);
    let evd = neg.eigen().map_err(|_| Error::Eigen)?;
    let eigenvalues: Vec<c64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();
    let u = evd.U();
    let mut modal = Mat::<c64>::from_fn(n, n, |i, j| u[(i, j)]);
    for j in 0..n {
        let norm = (0..n).map(|i| modal[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DefectiveSpectrum(f64::INFINITY));
        }
        for i in 0..n {
            modal[(i, j)] /= norm;
        }
    }
    let modal_inverse = modal.partial_piv_lu().inverse();
    let modal_condition = norm_one_complex(&modal) * norm_one_complex(&modal_inverse);
    if !(modal_condition <= MAX_MODAL_CONDITION) {
        return Err(Error::DefectiveSpectrum(modal_condition));
    }

    let scaled_inverse = Mat::<c64>::from_fn(n, n, |i, j| eigenvalues[i] * modal_inverse[(i, j)]);
    let rebuilt = &modal * &scaled_inverse;
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            worst = worst.max((rebuilt[(i, j)] - c64::new(neg[(i, j)], 0.0)).norm());
        }
    }
    let scale = norm_max(&m_matrix);
    let reconstruction_residual = if scale > 0.0 { worst / scale } else { worst };
    if reconstruction_residual > RECONSTRUCTION_BOUND {
        return Err(Error::DefectiveSpectrum(modal_condition));
    }

    let shift = if forcing.iter().all(|v| *v == 0.0) {
        vec![0.0; n]
    } else {
        let rhs = Mat::from_fn(n, 1, |i, _| forcing[i]);
        let sol = m_matrix.partial_piv_lu().solve(&rhs);
        let x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
        let residual = mat_vec(&m_matrix, &x)
            .iter()
            .zip(&forcing)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let f_norm = forcing.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if !x.iter().all(|v| v.is_finite()) || residual > 1e-8 * f_norm {
            return Err(Error::SingularSystem);
        }
        x
    };

    let dirichlet = system
        .boundary_kinds
        .iter()
        .enumerate()
        .filter(|(_, k)| **k == BoundaryKind::Dirichlet)
        .map(|(k, _)| (m + k, system.boundary_values[k]))
        .collect();

    Ok(Propagator {
        m_matrix,
        eigenvalues,
        modal,
        modal_inverse,
        modal_condition,
        reconstruction_residual,
        shift,
        mass,
        mass_inverse,
        phi_full: system.phi_full.clone(),
        phi_inverse: system.phi_inverse.clone(),
        dirichlet,
    })
}

impl Propagator {
    pub fn len(&self) -> usize {
        self.m_matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Interpolation coefficients `λ(0) = Φ_full⁻¹ u0` of nodal values.
    pub fn initial_coefficients(&self, u0_values: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if u0_values.len() != n {
            return Err(Error::Dimension(format!("{} initial values for {n} nodes", u0_values.len())));
        }
        Ok(refined_solve(&self.phi_full, &self.phi_inverse, u0_values))
    }

    /// Prepare the modal coordinates of the initial field given at all nodes.
    pub fn trajectory(&self, alpha: f64, u0_values: &[f64]) -> Result<Trajectory<'_>> {
        check_time_order(alpha)?;
        let lambda0 = self.initial_coefficients(u0_values)?;
        for &(i, g) in &self.dirichlet {
            let gap = (u0_values[i] - g).abs();
            if gap > CONSISTENCY_BOUND {
                return Err(Error::InvalidParameter(format!(
                    "initial data differs from boundary data by {gap:e} at node {i}"
                )));
            }
        }
        Ok(self.trajectory_from_coefficients(alpha, lambda0))
    }

    /// Modal coordinates for given initial RBF coefficients.
    pub fn trajectory_from_coefficients(&self, alpha: f64, lambda0: Vec<f64>) -> Trajectory<'_> {
        let n = self.len();
        let y0 = mat_vec(&self.mass, &lambda0);
        let centred: Vec<f64> = y0.iter().zip(&self.shift).map(|(a, b)| a - b).collect();
        let modal_coordinates = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.modal_inverse[(i, j)] * centred[j])
                    .fold(c64::new(0.0, 0.0), |a, b| a + b)
            })
            .collect();
        Trajectory {
            propagator: self,
            alpha,
            lambda0,
            modal_coordinates,
        }
    }

    /// `λ(t)` for initial field values `u0_values` at all nodes.
    pub fn propagate(&self, alpha: f64, u0_values: &[f64], t: f64) -> Result<Vec<f64>> {
        self.trajectory(alpha, u0_values)?.at(t)
    }
}

/// A propagator bound to one initial state.
#[derive(Debug, Clone)]
pub struct Trajectory<'a> {
    propagator: &'a Propagator,
    pub alpha: f64,
    pub lambda0: Vec<f64>,
    modal_coordinates: Vec<c64>,
}

impl Trajectory<'_> {
    /// Reduced state `y(t)` (nodal values at Dirichlet and interior nodes).
    pub fn state(&self, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("time {t}")));
        }
        let p = self.propagator;
        let n = p.len();
        let ta = t.powf(self.alpha);
        let mut scaled = Vec::with_capacity(n);
        for (mu, c) in p.eigenvalues.iter().zip(&self.modal_coordinates) {
            scaled.push(mittag_leffler(self.alpha, mu * ta)? * c);
        }
        let mut y = Vec::with_capacity(n);
        let (mut re_norm, mut im_norm) = (0.0f64, 0.0f64);
        for i in 0..n {
            let mut acc = c64::new(0.0, 0.0);
            for (j, s) in scaled.iter().enumerate() {
                acc += p.modal[(i, j)] * s;
            }
            let value = acc.re + p.shift[i];
            re_norm += value * value;
            im_norm += acc.im * acc.im;
            y.push(value);
        }
        let (re_norm, im_norm) = (re_norm.sqrt(), im_norm.sqrt());
        if im_norm > IMAGINARY_RESIDUE_BOUND * re_norm {
            return Err(Error::ImaginaryResidue {
                residue: im_norm / re_norm,
                bound: IMAGINARY_RESIDUE_BOUND,
            });
        }
        Ok(y)
    }

    /// Coefficients `λ(t)`.
    pub fn at(&self, t: f64) -> Result<Vec<f64>> {
        let y = self.state(t)?;
        let p = self.propagator;
        Ok(refined_solve(&p.mass, &p.mass_inverse, &y))
    }
}


/// Field values at query points for one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub points: Vec<Point>,
    pub values: Vec<f64>,
}

/// `u(p) = Σ_j λ_j φ_j(p)` at every query point.
pub fn evaluate(basis: &RbfBasis, lambda: &[f64], points: &[Point], t: f64, exec: Execution) -> Result<FieldSnapshot> {
    if lambda.len() != basis.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} centres",
            lambda.len(),
            basis.len()
        )));
    }
    let values = map_rows(points.len(), exec, |i| basis.evaluate(lambda, points[i]));
    Ok(FieldSnapshot {
        t,
        points: points.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_nodes, NodeMode};

    #[test]
    fn orders_are_deduplicated() {
        let op = SpaceOperator::Axis {
            x: Some(AxisTerm { beta: 1.6, k: constant(1.0) }),
            y: Some(AxisTerm { beta: 1.6, k: constant(2.0) }),
        };
        assert_eq!(op.orders(), vec![1.6]);
    }

    #[test]
    fn invalid_orders_rejected() {
        let problem = ProblemSpec {
            alpha: 1.2,
            operator: SpaceOperator::Axis { x: None, y: None },
            velocity_x: None,
            velocity_y: None,
            source: None,
            initial: constant(0.0),
            boundary: BoundarySpec::homogeneous_dirichlet(),
        };
        assert!(matches!(problem.validate(), Err(Error::TimeOrderOutOfRange(_))));
        let mut b = BoundarySpec::homogeneous_dirichlet();
        b.omega = -1.0;
        assert!(b.validate().is_err());
    }

    #[test]
    fn evaluate_one_hot() {
        let domain = Domain::unit_square();
        let nodes = generate_nodes(&domain, NodeMode::Regular { spacing: 0.5 }, 0).unwrap();
        let basis = RbfBasis::new(nodes.all(), 0.3).unwrap();
        let mut lambda = vec![0.0; basis.len()];
        lambda[3] = 1.0;
        let q = [[0.2, 0.7], [0.9, 0.1]];
        let snap = evaluate(&basis, &lambda, &q, 0.0, Execution::Sequential).unwrap();
        for (p, v) in q.iter().zip(&snap.values) {
            assert_eq!(*v, basis.phi(*p, 3));
        }
        assert!(evaluate(&basis, &lambda[1..], &q, 0.0, Execution::Sequential).is_err());
    }
}
