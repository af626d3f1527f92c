//! Built-in benchmark problems, error metrics, studies and file output.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{generate_nodes, Domain, NodeMode, NodeSet, Point};
use crate::mlf::{gamma, mittag_leffler_real};
use crate::operator::{MixingMeasure, RbfBasis};
use crate::par::Execution;
use crate::quadrature::angular_rule;
use crate::solver::{
    assemble, constant, evaluate, field, index_reduce, AxisTerm, BoundarySpec, DirectionalTerm, FieldSnapshot,
    ProblemSpec, Propagator, SpaceOperator,
};

/// Relative-error denominators below this are skipped.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-12;
/// An MAE below this makes the error ratio meaningless.
pub const DEGENERATE_MAE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseId {
    Example1,
    Example2Rect,
    Example2Disk,
    AppContinuous,
    AppDiscrete,
    VectorVsClassical,
}

impl CaseId {
    pub const ALL: [CaseId; 6] = [
        CaseId::Example1,
        CaseId::Example2Rect,
        CaseId::Example2Disk,
        CaseId::AppContinuous,
        CaseId::AppDiscrete,
        CaseId::VectorVsClassical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::Example1 => "example1_1d",
            CaseId::Example2Rect => "example2_rect",
            CaseId::Example2Disk => "example2_disk",
            CaseId::AppContinuous => "app_continuous",
            CaseId::AppDiscrete => "app_discrete",
            CaseId::VectorVsClassical => "vector_vs_classical",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            CaseId::Example1 => "1D advection-dispersion on (0,1) with analytic solution",
            CaseId::Example2Rect => "2D axis-aligned dispersion on the unit square with analytic solution",
            CaseId::Example2Disk => "2D axis-aligned dispersion on a disk with analytic solution",
            CaseId::AppContinuous => "isotropic mixing measure on a disk, drifting bump",
            CaseId::AppDiscrete => "two-direction anisotropic dispersion on (0,40)^2",
            CaseId::VectorVsClassical => "directional vs axis derivatives on the unit-square problem",
        }
    }

    pub fn has_exact(self) -> bool {
        matches!(
            self,
            CaseId::Example1 | CaseId::Example2Rect | CaseId::Example2Disk | CaseId::VectorVsClassical
        )
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCase(s.to_string()))
    }
}

/// Operator form for the analytic two-dimensional problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorForm {
    /// Axis derivatives `∂^β/∂x^β`, `∂^β/∂y^β`.
    Axis,
    /// Directional derivatives at `θ = 0, π/2`.
    Directional,
}

impl FromStr for OperatorForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axis" => Ok(OperatorForm::Axis),
            "directional" => Ok(OperatorForm::Directional),
            _ => Err(Error::BadValue {
                key: "form".into(),
                value: s.into(),
            }),
        }
    }
}

/// A benchmark problem with all numerical parameters bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkCase {
    pub id: CaseId,
    pub alpha: f64,
    pub beta_x: f64,
    pub beta_y: f64,
    /// Order of the application operators.
    pub beta: f64,
    pub velocity: f64,
    /// Scalar coefficient of the continuous mixing measure.
    pub k: f64,
    /// Coefficients along `π/4` and `7π/4`.
    pub k1: f64,
    pub k2: f64,
    pub shape_c: f64,
    pub nodes: NodeMode,
    pub quad_points: usize,
    pub angular_points: usize,
    pub omega: f64,
    pub times: Vec<f64>,
    pub seed: u64,
    pub form: OperatorForm,
    /// Record wall-clock times in `report.csv`.
    pub record_timing: bool,
}

impl BenchmarkCase {
    pub fn new(id: CaseId) -> Self {
        let base = BenchmarkCase {
            id,
            alpha: 0.7,
            beta_x: 1.6,
            beta_y: 1.8,
            beta: 1.6,
            velocity: 0.0,
            k: 0.0,
            k1: 0.0,
            k2: 0.0,
            shape_c: 0.01,
            nodes: NodeMode::Regular { spacing: 1.0 / 15.0 },
            quad_points: 20,
            angular_points: 32,
            omega: 1.0,
            times: vec![10.0],
            seed: 0,
            form: OperatorForm::Axis,
            record_timing: false,
        };
        match id {
            CaseId::Example1 => BenchmarkCase {
                alpha: 0.6,
                beta: 1.6,
                beta_x: 1.6,
                shape_c: 0.1,
                nodes: NodeMode::Line { spacing: 0.1 },
                ..base
            },
            CaseId::Example2Rect => base,
            CaseId::VectorVsClassical => BenchmarkCase {
                form: OperatorForm::Directional,
                ..base
            },
            CaseId::Example2Disk => BenchmarkCase {
                shape_c: 0.15,
                nodes: NodeMode::DiskRings {
                    ring_step: 0.1,
                    total: 400,
                },
                ..base
            },
            CaseId::AppContinuous => BenchmarkCase {
                alpha: 0.9,
                beta: 1.1,
                velocity: 0.012,
                k: 0.03 / (2.0 * PI),
                shape_c: 0.15,
                nodes: NodeMode::DiskRings {
                    ring_step: 0.1,
                    total: 800,
                },
                angular_points: 64,
                omega: 0.0,
                times: vec![0.0, 10.0, 20.0],
                ..base
            },
            CaseId::AppDiscrete => BenchmarkCase {
                alpha: 0.8,
                beta: 1.7,
                k1: 1.0,
                k2: 0.5,
                shape_c: 2.0,
                nodes: NodeMode::Regular { spacing: 2.0 },
                omega: 0.0,
                times: vec![0.0, 10.0, 20.0],
                ..base
            },
        }
    }

    /// The large application grid (10201 nodes).
    pub fn large(mut self) -> Self {
        if self.id == CaseId::AppDiscrete {
            self.nodes = NodeMode::Regular { spacing: 0.4 };
            self.shape_c = 0.4;
        }
        self
    }

    pub fn domain(&self) -> Domain {
        match self.id {
            CaseId::Example1 => Domain::Rectangle {
                xmin: 0.0,
                xmax: 1.0,
                ymin: -0.5,
                ymax: 0.5,
            },
            CaseId::Example2Rect | CaseId::VectorVsClassical => Domain::unit_square(),
            CaseId::Example2Disk | CaseId::AppContinuous => Domain::Disk {
                cx: 1.0,
                cy: 1.0,
                radius: 1.0,
            },
            CaseId::AppDiscrete => Domain::Rectangle {
                xmin: 0.0,
                xmax: 40.0,
                ymin: 0.0,
                ymax: 40.0,
            },
        }
    }

    /// Representative spacing of the node layout.
    pub fn spacing(&self) -> f64 {
        match self.nodes {
            NodeMode::Regular { spacing } | NodeMode::Jiggled { spacing, .. } | NodeMode::Line { spacing } => spacing,
            NodeMode::UniformRandom { interior } => (self.domain().area() / interior as f64).sqrt(),
            NodeMode::DiskRandom { total } | NodeMode::DiskRings { total, .. } => {
                (self.domain().area() / total as f64).sqrt()
            }
        }
    }

    /// Same case with the node layout refined to `spacing`.
    pub fn with_spacing(&self, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!("spacing {spacing}")));
        }
        let area = self.domain().area();
        let nodes = match self.nodes {
            NodeMode::Regular { .. } => NodeMode::Regular { spacing },
            NodeMode::Line { .. } => NodeMode::Line { spacing },
            NodeMode::Jiggled { jiggle, .. } => NodeMode::Jiggled { spacing, jiggle },
            NodeMode::UniformRandom { .. } => NodeMode::UniformRandom {
                interior: (area / (spacing * spacing)).round().max(1.0) as usize,
            },
            NodeMode::DiskRandom { .. } => NodeMode::DiskRandom {
                total: (area / (spacing * spacing)).round() as usize,
            },
            NodeMode::DiskRings { ring_step, .. } => NodeMode::DiskRings {
                ring_step,
                total: (area / (spacing * spacing)).round() as usize,
            },
        };
        Ok(BenchmarkCase { nodes, ..self.clone() })
    }

    /// Analytic solution, when the case has one.
    pub fn exact(&self, p: Point, t: f64) -> Option<f64> {
        if !self.id.has_exact() {
            return None;
        }
        let e = mittag_leffler_real(self.alpha, -t.powf(self.alpha)).ok()?;
        Some(self.exact_profile(p) * e)
    }

    fn exact_profile(&self, p: Point) -> f64 {
        match self.id {
            CaseId::Example1 => (p[0] + 1.0).sqrt(),
            _ => ((p[0] + 1.0) * (p[1] + 1.0)).sqrt(),
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let alpha = self.alpha;
        let g15 = gamma(1.5)?;
        let problem = match self.id {
            CaseId::Example1 => {
                let beta = self.beta_x;
                let scale = -gamma(1.5 - beta)? / (2.0 * g15);
                let profile = field(|p| (p[0] + 1.0).sqrt());
                ProblemSpec {
                    alpha,
                    operator: SpaceOperator::Axis {
                        x: Some(AxisTerm {
                            beta,
                            k: field(move |p| scale * (p[0] + 1.0).powf(beta)),
                        }),
                        y: None,
                    },
                    velocity_x: Some(field(|p| p[0] + 1.0)),
                    velocity_y: None,
                    source: None,
                    initial: profile.clone(),
                    boundary: BoundarySpec::dirichlet(profile, self.omega),
                }
            }
            CaseId::Example2Rect | CaseId::Example2Disk | CaseId::VectorVsClassical => {
                let (bx, by) = (self.beta_x, self.beta_y);
                let sx = -2.0 * gamma(1.5 - bx)? / (3.0 * g15);
                let sy = -gamma(1.5 - by)? / (3.0 * g15);
                let kx = field(move |p| sx * (p[0] + 1.0).powf(bx));
                let ky = field(move |p| sy * (p[1] + 1.0).powf(by));
                let operator = match self.form {
                    OperatorForm::Axis => SpaceOperator::Axis {
                        x: Some(AxisTerm { beta: bx, k: kx }),
                        y: Some(AxisTerm { beta: by, k: ky }),
                    },
                    OperatorForm::Directional => SpaceOperator::Directions(vec![
                        DirectionalTerm {
                            theta: 0.0,
                            beta: bx,
                            k: kx,
                        },
                        DirectionalTerm {
                            theta: PI / 2.0,
                            beta: by,
                            k: ky,
                        },
                    ]),
                };
                let profile = field(|p| ((p[0] + 1.0) * (p[1] + 1.0)).sqrt());
                ProblemSpec {
                    alpha,
                    operator,
                    velocity_x: None,
                    velocity_y: None,
                    source: None,
                    initial: profile.clone(),
                    boundary: BoundarySpec::dirichlet(profile, self.omega),
                }
            }
            CaseId::AppContinuous => {
                let rule = angular_rule(self.angular_points)?;
                let beta = self.beta;
                let measure = MixingMeasure::continuous(&rule, |_| 1.0, move |_| beta)?;
                ProblemSpec {
                    alpha,
                    operator: SpaceOperator::Measure {
                        measure,
                        k: constant(self.k),
                    },
                    velocity_x: Some(constant(self.velocity)),
                    velocity_y: None,
                    source: None,
                    initial: field(bump),
                    boundary: BoundarySpec::dirichlet(constant(0.0), self.omega),
                }
            }
            CaseId::AppDiscrete => ProblemSpec {
                alpha,
                operator: SpaceOperator::Directions(vec![
                    DirectionalTerm {
                        theta: PI / 4.0,
                        beta: self.beta,
                        k: constant(self.k1),
                    },
                    DirectionalTerm {
                        theta: 7.0 * PI / 4.0,
                        beta: self.beta,
                        k: constant(self.k2),
                    },
                ]),
                velocity_x: None,
                velocity_y: None,
                source: None,
                initial: field(point_source),
                boundary: BoundarySpec::dirichlet(constant(0.0), self.omega),
            },
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn generate_nodes(&self) -> Result<NodeSet> {
        generate_nodes(&self.domain(), self.nodes, self.seed)
    }
}

/// Compactly supported bump of radius 0.2 around `(1, 1)`.
pub fn bump(p: Point) -> f64 {
    let rho2 = ((p[0] - 1.0).powi(2) + (p[1] - 1.0).powi(2)) / 0.04;
    if rho2 < 1.0 {
        1000.0 * 2f64.powf(1.0 - 1.0 / (1.0 - rho2))
    } else {
        0.0
    }
}

/// `10 / (r + 0.1)` within radius 3 of `(12, 20)`.
pub fn point_source(p: Point) -> f64 {
    let r = (p[0] - 12.0).hypot(p[1] - 20.0);
    if r < 3.0 {
        10.0 / (r + 0.1)
    } else {
        0.0
    }
}

/// Assembled and reduced case, ready for time queries.
#[derive(Debug, Clone)]
pub struct Solved {
    pub case: BenchmarkCase,
    pub nodes: NodeSet,
    pub basis: RbfBasis,
    pub propagator: Propagator,
    pub lambda0: Vec<f64>,
    pub phi_condition: f64,
    pub assemble_ms: f64,
    pub reduce_ms: f64,
}

fn annotate(case: CaseId) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Case { .. } => e,
        other => Error::Case {
            case: case.to_string(),
            source: Box::new(other),
        },
    }
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Assemble, reduce and project the initial data.
pub fn solve_case(case: &BenchmarkCase, exec: Execution) -> Result<Solved> {
    let inner = || -> Result<Solved> {
        let problem = case.problem()?;
        let domain = case.domain();
        let nodes = case.generate_nodes()?;
        let basis = RbfBasis::new(nodes.all(), case.shape_c)?;
        let rules = problem.rule_book(case.quad_points)?;
        let start = Instant::now();
        let system = assemble(&problem, &domain, &nodes, &basis, &rules, exec)?;
        let assemble_ms = millis(start);
        let start = Instant::now();
        let propagator = index_reduce(&system, &problem.boundary)?;
        let reduce_ms = millis(start);
        let u0: Vec<f64> = nodes.all().iter().map(|&p| (problem.initial)(p)).collect();
        let lambda0 = propagator.trajectory(case.alpha, &u0)?.lambda0;
        Ok(Solved {
            case: case.clone(),
            nodes,
            basis,
            propagator,
            lambda0,
            phi_condition: system.phi_condition,
            assemble_ms,
            reduce_ms,
        })
    };
    inner().map_err(annotate(case.id))
}

impl Solved {
    /// Coefficients at `t`.
    pub fn coefficients(&self, t: f64) -> Result<Vec<f64>> {
        self.propagator
            .trajectory_from_coefficients(self.case.alpha, self.lambda0.clone())
            .at(t)
            .map_err(annotate(self.case.id))
    }

    /// Field at all nodes (interior first) at each time.
    pub fn snapshots(&self, times: &[f64], exec: Execution) -> Result<Vec<FieldSnapshot>> {
        let trajectory = self
            .propagator
            .trajectory_from_coefficients(self.case.alpha, self.lambda0.clone());
        let points = self.nodes.all();
        times
            .iter()
            .map(|&t| {
                let lambda = trajectory.at(t)?;
                evaluate(&self.basis, &lambda, &points, t, exec)
            })
            .collect::<Result<_>>()
            .map_err(annotate(self.case.id))
    }

    /// Field values at arbitrary points and one time.
    pub fn field_at(&self, points: &[Point], t: f64, exec: Execution) -> Result<FieldSnapshot> {
        let lambda = self.coefficients(t)?;
        evaluate(&self.basis, &lambda, points, t, exec)
    }

    /// MAE and maximum relative error over interior nodes at `t`.
    pub fn errors(&self, snapshot: &FieldSnapshot) -> Option<(f64, f64)> {
        let m = self.nodes.interior_count();
        let pairs: Option<Vec<(f64, f64)>> = snapshot.points[..m]
            .iter()
            .zip(&snapshot.values[..m])
            .map(|(&p, &u)| self.case.exact(p, snapshot.t).map(|e| (u, e)))
            .collect();
        pairs.map(|pairs| error_metrics(&pairs))
    }
}

/// `(max |u - e|, max |u - e| / |e|)` with tiny denominators skipped.
pub fn error_metrics(pairs: &[(f64, f64)]) -> (f64, f64) {
    let mut mae = 0.0f64;
    let mut rel = 0.0f64;
    for &(u, e) in pairs {
        let err = (u - e).abs();
        mae = mae.max(err);
        if e.abs() >= RELATIVE_ERROR_FLOOR {
            rel = rel.max(err / e.abs());
        }
    }
    (mae, rel)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub spacing: f64,
    pub n_nodes: usize,
    pub t: f64,
    pub mae: f64,
    pub max_rel_err: f64,
    /// `MAE_prev / MAE`; `None` on the first row or for degenerate errors.
    pub rate: Option<f64>,
    /// Refinement ratio `spacing_prev / spacing`.
    pub refinement: Option<f64>,
    pub wall_ms: f64,
}

impl ErrorRow {
    /// Error ratio larger than the refinement ratio.
    pub fn super_linear(&self) -> Option<bool> {
        Some(self.rate? > self.refinement?)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    pub label: String,
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    /// Fill in rates from consecutive rows.
    pub fn compute_rates(&mut self) {
        for i in 1..self.rows.len() {
            let (prev, cur) = (self.rows[i - 1].clone(), &mut self.rows[i]);
            cur.refinement = Some(prev.spacing / cur.spacing);
            cur.rate = if prev.mae > DEGENERATE_MAE && cur.mae > DEGENERATE_MAE {
                Some(prev.mae / cur.mae)
            } else {
                None
            };
        }
    }

    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::from("spacing,n_nodes,mae,max_rel_err,rate,wall_ms\n");
        for r in &self.rows {
            let rate = r.rate.map(|v| format!("{v:.16e}")).unwrap_or_default();
            let wall = if with_timing {
                format!("{:.3}", r.wall_ms)
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "{:.16e},{},{:.16e},{:.16e},{},{}",
                r.spacing, r.n_nodes, r.mae, r.max_rel_err, rate, wall
            );
        }
        out
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if !self.label.is_empty() {
            let _ = writeln!(out, "# {}", self.label);
        }
        let _ = writeln!(
            out,
            "{:>12} {:>8} {:>10} {:>14} {:>14} {:>9} {:>12} {:>10}",
            "spacing", "n_nodes", "t", "mae", "max_rel_err", "rate", "super_linear", "wall_ms"
        );
        for r in &self.rows {
            let rate = r.rate.map_or("-".to_string(), |v| format!("{v:.3}"));
            let sl = match r.super_linear() {
                Some(true) => "yes",
                Some(false) => "no",
                None => "-",
            };
            let _ = writeln!(
                out,
                "{:>12.6} {:>8} {:>10} {:>14.6e} {:>14.6e} {:>9} {:>12} {:>10.1}",
                r.spacing, r.n_nodes, r.t, r.mae, r.max_rel_err, rate, sl, r.wall_ms
            );
        }
        out
    }
}

/// Output of one benchmark run.
#[derive(Debug, Clone)]
pub struct CaseRun {
    pub case: BenchmarkCase,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub phi_condition: f64,
    pub modal_condition: f64,
    pub snapshots: Vec<FieldSnapshot>,
    pub report: Option<ErrorReport>,
    /// Extra reports (the axis-form column of the vector comparison).
    pub companion: Option<ErrorReport>,
    pub assemble_ms: f64,
    pub reduce_ms: f64,
    pub propagate_ms: f64,
}

fn report_for(solved: &Solved, snapshots: &[FieldSnapshot], label: &str, wall_ms: f64) -> Option<ErrorReport> {
    let spacing = solved.case.spacing();
    let rows: Option<Vec<ErrorRow>> = snapshots
        .iter()
        .map(|s| {
            solved.errors(s).map(|(mae, rel)| ErrorRow {
                spacing,
                n_nodes: solved.nodes.len(),
                t: s.t,
                mae,
                max_rel_err: rel,
                rate: None,
                refinement: None,
                wall_ms,
            })
        })
        .collect();
    rows.map(|rows| ErrorReport {
        label: label.to_string(),
        rows,
    })
}

/// Solve a case at its output times.
pub fn run_case(case: &BenchmarkCase, exec: Execution) -> Result<CaseRun> {
    let start = Instant::now();
    let solved = solve_case(case, exec)?;
    let t0 = Instant::now();
    let snapshots = solved.snapshots(&case.times, exec)?;
    let propagate_ms = millis(t0);
    let total = millis(start);
    let report = report_for(&solved, &snapshots, case.id.as_str(), total);
    let companion = if case.id == CaseId::VectorVsClassical {
        let axis = BenchmarkCase {
            form: OperatorForm::Axis,
            ..case.clone()
        };
        let start = Instant::now();
        let other = solve_case(&axis, exec)?;
        let snaps = other.snapshots(&case.times, exec)?;
        report_for(&other, &snaps, "axis form", millis(start))
    } else {
        None
    };
    Ok(CaseRun {
        case: case.clone(),
        n_interior: solved.nodes.interior_count(),
        n_boundary: solved.nodes.boundary_count(),
        phi_condition: solved.phi_condition,
        modal_condition: solved.propagator.modal_condition,
        snapshots,
        report,
        companion,
        assemble_ms: solved.assemble_ms,
        reduce_ms: solved.reduce_ms,
        propagate_ms,
    })
}

/// One refinement level: `(n_nodes, mae, max_rel_err)`.
pub type Refinement = (usize, f64, f64);

/// Error report over strictly decreasing spacings, each evaluated by `solve`.
pub fn convergence_study_with(
    label: &str,
    spacings: &[f64],
    t: f64,
    mut solve: impl FnMut(f64) -> Result<Refinement>,
) -> Result<ErrorReport> {
    if spacings.len() < 2 {
        return Err(Error::InvalidParameter("a convergence study needs at least two spacings".into()));
    }
    if spacings.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("spacings must be strictly decreasing".into()));
    }
    let mut report = ErrorReport {
        label: label.to_string(),
        rows: Vec::new(),
    };
    for &h in spacings {
        let start = Instant::now();
        let (n_nodes, mae, max_rel_err) = solve(h)?;
        report.rows.push(ErrorRow {
            spacing: h,
            n_nodes,
            t,
            mae,
            max_rel_err,
            rate: None,
            refinement: None,
            wall_ms: millis(start),
        });
    }
    report.compute_rates();
    Ok(report)
}

/// MAE refinement study at the case's last output time.
pub fn convergence_study(case: &BenchmarkCase, spacings: &[f64], exec: Execution) -> Result<ErrorReport> {
    if !case.id.has_exact() {
        return Err(Error::Case {
            case: case.id.to_string(),
            source: Box::new(Error::InvalidParameter("case has no analytic solution".into())),
        });
    }
    let t = case.times.last().copied().unwrap_or(10.0);
    convergence_study_with(case.id.as_str(), spacings, t, |h| {
        let refined = case.with_spacing(h)?;
        let solved = solve_case(&refined, exec)?;
        let snap = solved.snapshots(&[t], exec)?.remove(0);
        let (mae, rel) = solved.errors(&snap).expect("case has an analytic solution");
        Ok((solved.nodes.len(), mae, rel))
    })
}

/// Relative error at `x = L/2` for each time, with per-time propagation cost.
pub fn long_time_study(case: &BenchmarkCase, times: &[f64], exec: Execution) -> Result<ErrorReport> {
    if case.id != CaseId::Example1 {
        return Err(Error::InvalidParameter(format!("long-time study runs on {}", CaseId::Example1)));
    }
    let solved = solve_case(case, exec)?;
    let mid = [0.5, 0.0];
    let mut rows = Vec::new();
    for &t in times {
        let start = Instant::now();
        let snap = solved.field_at(&[mid], t, exec)?;
        let wall_ms = millis(start);
        let exact = case.exact(mid, t).expect("analytic case");
        let err = (snap.values[0] - exact).abs();
        rows.push(ErrorRow {
            spacing: case.spacing(),
            n_nodes: solved.nodes.len(),
            t,
            mae: err,
            max_rel_err: err / exact.abs(),
            rate: None,
            refinement: None,
            wall_ms,
        });
    }
    Ok(ErrorReport {
        label: "long-time relative error at x = L/2".into(),
        rows,
    })
}

/// `(directional form, axis form)` refinement reports.
pub fn vector_vs_classical(
    case: &BenchmarkCase,
    spacings: &[f64],
    exec: Execution,
) -> Result<(ErrorReport, ErrorReport)> {
    let vector = BenchmarkCase {
        form: OperatorForm::Directional,
        ..case.clone()
    };
    let classical = BenchmarkCase {
        form: OperatorForm::Axis,
        ..case.clone()
    };
    let mut a = convergence_study(&vector, spacings, exec)?;
    a.label = "directional (C1)".into();
    let mut b = convergence_study(&classical, spacings, exec)?;
    b.label = "axis (C2)".into();
    Ok((a, b))
}

/// Flat `key = value` configuration with `#` comments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "case",
    "alpha",
    "beta",
    "beta_x",
    "beta_y",
    "velocity",
    "k",
    "k1",
    "k2",
    "shape_c",
    "node_mode",
    "spacing",
    "jiggle",
    "count",
    "ring_step",
    "quad_points",
    "angular_points",
    "omega",
    "times",
    "seed",
    "output_dir",
    "form",
    "record_timing",
];

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`", lineno + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Config { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>().map_err(|_| Error::BadValue {
                    key: key.to_string(),
                    value: v.to_string(),
                })
            })
            .transpose()
    }

    /// Decimal or fractional number.
    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                parse_number(v).ok_or_else(|| Error::BadValue {
                    key: key.to_string(),
                    value: v.to_string(),
                })
            })
            .transpose()
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(v) => Err(Error::BadValue {
                key: key.to_string(),
                value: v.to_string(),
            }),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| parse_list(v).map_err(|_| Error::BadValue {
                key: key.to_string(),
                value: v.to_string(),
            }))
            .transpose()
    }

    /// Benchmark case described by this configuration. `case` and `alpha`
    /// are required; other keys default to the case's published setting.
    pub fn to_case(&self) -> Result<BenchmarkCase> {
        let id: CaseId = self.require("case")?.parse()?;
        let mut case = BenchmarkCase::new(id);
        case.alpha = self.number("alpha")?.ok_or_else(|| Error::MissingKey("alpha".into()))?;
        macro_rules! set {
            ($field:ident, $key:literal) => {
                if let Some(v) = self.parsed($key)? {
                    case.$field = v;
                }
            };
        }
        macro_rules! set_number {
            ($field:ident, $key:literal) => {
                if let Some(v) = self.number($key)? {
                    case.$field = v;
                }
            };
        }
        set_number!(beta, "beta");
        set_number!(beta_x, "beta_x");
        set_number!(beta_y, "beta_y");
        set_number!(velocity, "velocity");
        set_number!(k, "k");
        set_number!(k1, "k1");
        set_number!(k2, "k2");
        set_number!(shape_c, "shape_c");
        set_number!(omega, "omega");
        set!(quad_points, "quad_points");
        set!(angular_points, "angular_points");
        set!(seed, "seed");
        set!(form, "form");
        if id == CaseId::Example1 {
            if let Some(b) = self.number("beta")? {
                case.beta_x = b;
            }
        }
        if let Some(v) = self.bool("record_timing")? {
            case.record_timing = v;
        }
        if let Some(times) = self.list("times")? {
            if times.is_empty() || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(Error::BadValue {
                    key: "times".into(),
                    value: self.get("times").unwrap_or_default().into(),
                });
            }
            case.times = times;
        }
        case.nodes = self.node_mode(case.nodes)?;
        case.problem()?;
        Ok(case)
    }

    fn node_mode(&self, default: NodeMode) -> Result<NodeMode> {
        let spacing = self.number("spacing")?;
        let count: Option<usize> = self.parsed("count")?;
        let name = self.get("node_mode").unwrap_or(default.name());
        let need_spacing = || {
            spacing
                .or(match default {
                    NodeMode::Regular { spacing } | NodeMode::Jiggled { spacing, .. } | NodeMode::Line { spacing } => {
                        Some(spacing)
                    }
                    _ => None,
                })
                .ok_or_else(|| Error::MissingKey("spacing".into()))
        };
        let need_count = || {
            count
                .or(match default {
                    NodeMode::DiskRandom { total } | NodeMode::DiskRings { total, .. } => Some(total),
                    NodeMode::UniformRandom { interior } => Some(interior),
                    _ => None,
                })
                .ok_or_else(|| Error::MissingKey("count".into()))
        };
        Ok(match name {
            "regular" => NodeMode::Regular { spacing: need_spacing()? },
            "line" => NodeMode::Line { spacing: need_spacing()? },
            "jiggled" => NodeMode::Jiggled {
                spacing: need_spacing()?,
                jiggle: self.number("jiggle")?.unwrap_or(0.25),
            },
            "uniform_random" => NodeMode::UniformRandom { interior: need_count()? },
            "disk_random" => NodeMode::DiskRandom { total: need_count()? },
            "disk_rings" => NodeMode::DiskRings {
                ring_step: self.number("ring_step")?.unwrap_or(match default {
                    NodeMode::DiskRings { ring_step, .. } => ring_step,
                    _ => 0.1,
                }),
                total: need_count()?,
            },
            other => {
                return Err(Error::BadValue {
                    key: "node_mode".into(),
                    value: other.into(),
                })
            }
        })
    }
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse_number(v).ok_or_else(|| v.to_string()))
        .collect()
}

/// A decimal number or a fraction `p/q`.
pub fn parse_number(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((p, q)) => Some(p.trim().parse::<f64>().ok()? / q.trim().parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}

pub fn fields_csv(snapshots: &[FieldSnapshot]) -> String {
    let mut out = String::from("x,y,t,u\n");
    for s in snapshots {
        for (p, u) in s.points.iter().zip(&s.values) {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", p[0], p[1], s.t, u);
        }
    }
    out
}

pub fn summary_text(run: &CaseRun) -> String {
    let c = &run.case;
    let mut out = String::new();
    let _ = writeln!(out, "case            {}", c.id);
    let _ = writeln!(out, "description     {}", c.id.description());
    let _ = writeln!(out, "alpha           {}", c.alpha);
    match c.id {
        CaseId::Example1 => {
            let _ = writeln!(out, "beta            {}", c.beta_x);
        }
        CaseId::Example2Rect | CaseId::Example2Disk | CaseId::VectorVsClassical => {
            let _ = writeln!(out, "beta_x, beta_y  {}, {}", c.beta_x, c.beta_y);
        }
        CaseId::AppContinuous => {
            let _ = writeln!(out, "beta            {}", c.beta);
            let _ = writeln!(out, "velocity, k     {}, {}", c.velocity, c.k);
            let _ = writeln!(out, "angular points  {}", c.angular_points);
        }
        CaseId::AppDiscrete => {
            let _ = writeln!(out, "beta            {}", c.beta);
            let _ = writeln!(out, "k1, k2          {}, {}", c.k1, c.k2);
        }
    }
    let _ = writeln!(out, "node mode       {:?}", c.nodes);
    let _ = writeln!(out, "seed            {}", c.seed);
    let _ = writeln!(out, "nodes           {} interior + {} boundary", run.n_interior, run.n_boundary);
    let _ = writeln!(out, "shape c         {}", c.shape_c);
    let _ = writeln!(out, "quad points     {}", c.quad_points);
    let _ = writeln!(out, "omega           {}", c.omega);
    let _ = writeln!(out, "cond(phi)       {:.3e}", run.phi_condition);
    let _ = writeln!(out, "cond(S)         {:.3e}", run.modal_condition);
    if c.record_timing {
        let _ = writeln!(out, "assemble ms     {:.1}", run.assemble_ms);
        let _ = writeln!(out, "reduce ms       {:.1}", run.reduce_ms);
        let _ = writeln!(out, "propagate ms    {:.1}", run.propagate_ms);
    }
    for report in run.report.iter().chain(&run.companion) {
        let _ = writeln!(out, "\n# {}", if report.label.is_empty() { "errors" } else { &report.label });
        for r in &report.rows {
            let _ = writeln!(out, "t = {:<10} mae = {:.6e}  max_rel_err = {:.6e}", r.t, r.mae, r.max_rel_err);
        }
    }
    out
}

/// Write `fields.csv`, `report.csv` (when errors are known) and `summary.txt`.
pub fn write_outputs(dir: &Path, run: &CaseRun) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    };
    write("fields.csv", fields_csv(&run.snapshots))?;
    if run.report.is_some() {
        let mut report = ErrorReport::default();
        for r in run.report.iter().chain(&run.companion) {
            report.rows.extend(r.rows.iter().cloned());
        }
        write("report.csv", report.to_csv(run.case.record_timing))?;
    }
    write("summary.txt", summary_text(run))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_ids_round_trip() {
        for id in CaseId::ALL {
            assert_eq!(id.as_str().parse::<CaseId>().unwrap(), id);
        }
        assert!(matches!("nope".parse::<CaseId>(), Err(Error::UnknownCase(_))));
    }

    #[test]
    fn defaults_follow_published_settings() {
        let c = BenchmarkCase::new(CaseId::Example1);
        assert_eq!((c.alpha, c.beta_x, c.shape_c, c.spacing()), (0.6, 1.6, 0.1, 0.1));
        let c = BenchmarkCase::new(CaseId::Example2Rect);
        assert_eq!((c.alpha, c.beta_x, c.beta_y, c.shape_c), (0.7, 1.6, 1.8, 0.01));
        let c = BenchmarkCase::new(CaseId::AppContinuous);
        assert_eq!((c.alpha, c.beta, c.velocity), (0.9, 1.1, 0.012));
        assert!((c.k - 0.03 / (2.0 * PI)).abs() < 1e-18);
        assert_eq!(c.nodes, NodeMode::DiskRings { ring_step: 0.1, total: 800 });
    }

    #[test]
    fn metrics_skip_tiny_denominators() {
        let (mae, rel) = error_metrics(&[(1.0, 1.1), (1e-3, 0.0), (0.5, 0.4)]);
        assert!((mae - 0.1).abs() < 1e-15);
        assert!((rel - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rates_and_flags() {
        let mut report = ErrorReport::default();
        for (h, mae) in [(0.1, 4e-3), (0.05, 1e-3), (0.04, 9e-4)] {
            report.rows.push(ErrorRow {
                spacing: h,
                n_nodes: 0,
                t: 10.0,
                mae,
                max_rel_err: 0.0,
                rate: None,
                refinement: None,
                wall_ms: 0.0,
            });
        }
        report.compute_rates();
        assert_eq!(report.rows[0].rate, None);
        assert!((report.rows[1].rate.unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(report.rows[1].super_linear(), Some(true));
        assert_eq!(report.rows[2].super_linear(), Some(false));
    }

    #[test]
    fn spacings_must_decrease() {
        let ok = |_h: f64| Ok((1, 1.0, 1.0));
        assert!(convergence_study_with("x", &[0.1, 0.1], 1.0, ok).is_err());
        assert!(convergence_study_with("x", &[0.1], 1.0, ok).is_err());
        assert!(convergence_study_with("x", &[0.05, 0.1], 1.0, ok).is_err());
    }

    #[test]
    fn config_parsing() {
        let cfg = Config::parse("# comment\ncase = example1_1d\nalpha = 0.6 # inline\nspacing = 1/20\ntimes = 1, 10\n").unwrap();
        let case = cfg.to_case().unwrap();
        assert_eq!(case.nodes, NodeMode::Line { spacing: 0.05 });
        assert_eq!(case.times, vec![1.0, 10.0]);

        let missing = Config::parse("case = example1_1d\n").unwrap().to_case().unwrap_err();
        assert_eq!(missing, Error::MissingKey("alpha".into()));
        assert!(missing.to_string().contains("alpha"));

        assert!(Config::parse("case = example1_1d\nbogus = 1\n").unwrap_err().to_string().contains("bogus"));
        assert!(Config::parse("alpha 0.5\n").is_err());
        assert!(Config::parse("alpha = 0.5\nalpha = 0.6\n").is_err());
        let bad = Config::parse("case = example1_1d\nalpha = x\n").unwrap().to_case().unwrap_err();
        assert!(bad.to_string().contains("alpha"));
        let unknown = Config::parse("case = nope\nalpha = 0.5\n").unwrap().to_case().unwrap_err();
        assert!(matches!(unknown, Error::UnknownCase(_)));
    }

    #[test]
    fn fields_csv_precision() {
        let snap = FieldSnapshot {
            t: 10.0,
            points: vec![[0.1, 0.2]],
            values: vec![1.0 / 3.0],
        };
        let csv = fields_csv(&[snap]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,t,u"));
        let u: f64 = lines.next().unwrap().split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(u, 1.0 / 3.0);
    }

    #[test]
    fn initial_profiles() {
        assert!((bump([1.0, 1.0]) - 1000.0).abs() < 1e-12);
        assert_eq!(bump([1.3, 1.0]), 0.0);
        assert!((point_source([12.0, 20.0]) - 100.0).abs() < 1e-12);
        assert_eq!(point_source([16.0, 20.0]), 0.0);
    }
}
