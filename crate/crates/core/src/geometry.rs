//! Computational domains, ray exit distances and collocation node layouts.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

const BOUNDARY_SLACK: f64 = 1e-12;
const MIN_SEPARATION: f64 = 1e-10;

/// Unit vector `(cos θ, sin θ)`, exact on the coordinate axes.
pub fn direction(theta: f64) -> Point {
    let quarter = theta / (PI / 2.0);
    let k = quarter.round();
    if (quarter - k).abs() < 1e-14 {
        return match (k as i64).rem_euclid(4) {
            0 => [1.0, 0.0],
            1 => [0.0, 1.0],
            2 => [-1.0, 0.0],
            _ => [0.0, -1.0],
        };
    }
    [theta.cos(), theta.sin()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Rectangle {
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
    },
    Disk {
        cx: f64,
        cy: f64,
        radius: f64,
    },
}

impl Domain {
    pub fn rectangle(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        if !(xmax > xmin && ymax > ymin) {
            return Err(Error::InvalidDomain(format!(
                "rectangle [{xmin}, {xmax}] x [{ymin}, {ymax}]"
            )));
        }
        Ok(Domain::Rectangle {
            xmin,
            xmax,
            ymin,
            ymax,
        })
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle {
            xmin: 0.0,
            xmax: 1.0,
            ymin: 0.0,
            ymax: 1.0,
        }
    }

    pub fn disk(cx: f64, cy: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidDomain(format!("disk radius {radius}")));
        }
        Ok(Domain::Disk { cx, cy, radius })
    }

    pub fn area(&self) -> f64 {
        match *self {
            Domain::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => (xmax - xmin) * (ymax - ymin),
            Domain::Disk { radius, .. } => PI * radius * radius,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match *self {
            Domain::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => 2.0 * (xmax - xmin + ymax - ymin),
            Domain::Disk { radius, .. } => 2.0 * PI * radius,
        }
    }

    pub fn center(&self) -> Point {
        match *self {
            Domain::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => [0.5 * (xmin + xmax), 0.5 * (ymin + ymax)],
            Domain::Disk { cx, cy, .. } => [cx, cy],
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn inner_distance(&self, p: Point) -> f64 {
        match *self {
            Domain::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => (p[0] - xmin)
                .min(xmax - p[0])
                .min(p[1] - ymin)
                .min(ymax - p[1]),
            Domain::Disk { cx, cy, radius } => radius - (p[0] - cx).hypot(p[1] - cy),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.inner_distance(p) >= -BOUNDARY_SLACK
    }

    /// Distance from `p` to `∂Ω` along `(-cos θ, -sin θ)`.
    pub fn ray_exit_distance(&self, p: Point, theta: f64) -> Result<f64> {
        self.exit_along(p, direction(theta))
    }

    /// Distance from `p` to `∂Ω` travelling against the unit vector `e`.
    pub fn exit_along(&self, p: Point, e: Point) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::OutsideDomain { x: p[0], y: p[1] });
        }
        let v = [-e[0], -e[1]];
        let d = match *self {
            Domain::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                let slab = |x: f64, lo: f64, hi: f64, dir: f64| {
                    if dir < 0.0 {
                        (x - lo) / -dir
                    } else if dir > 0.0 {
                        (hi - x) / dir
                    } else {
                        f64::INFINITY
                    }
                };
                slab(p[0], xmin, xmax, v[0]).min(slab(p[1], ymin, ymax, v[1]))
            }
            Domain::Disk { cx, cy, radius } => {
                let w = [p[0] - cx, p[1] - cy];
                let b = v[0] * w[0] + v[1] * w[1];
                let c = w[0] * w[0] + w[1] * w[1] - radius * radius;
                let disc = (b * b - c).max(0.0);
                -b + disc.sqrt()
            }
        };
        Ok(d.max(0.0))
    }

    fn boundary_point_at(&self, s: f64) -> Point {
        match *self {
            Domain::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                let (w, h) = (xmax - xmin, ymax - ymin);
                let s = s.rem_euclid(2.0 * (w + h));
                if s < w {
                    [xmin + s, ymin]
                } else if s < w + h {
                    [xmax, ymin + (s - w)]
                } else if s < 2.0 * w + h {
                    [xmax - (s - w - h), ymax]
                } else {
                    [xmin, ymax - (s - 2.0 * w - h)]
                }
            }
            Domain::Disk { cx, cy, radius } => {
                let t = s / radius;
                [cx + radius * t.cos(), cy + radius * t.sin()]
            }
        }
    }

    /// `count` points equispaced along the boundary, counter-clockwise.
    pub fn boundary_points(&self, count: usize) -> Vec<Point> {
        let step = self.perimeter() / count as f64;
        (0..count)
            .map(|k| self.boundary_point_at(k as f64 * step))
            .collect()
    }

    fn sample_uniform(&self, rng: &mut ChaCha8Rng) -> Point {
        match *self {
            Domain::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => [rng.random_range(xmin..xmax), rng.random_range(ymin..ymax)],
            Domain::Disk { cx, cy, radius } => loop {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                if x * x + y * y < 1.0 {
                    break [cx + radius * x, cy + radius * y];
                }
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeMode {
    /// Square lattice with the given spacing.
    Regular { spacing: f64 },
    /// Lattice with interior nodes perturbed uniformly in `±jiggle·spacing`.
    Jiggled { spacing: f64, jiggle: f64 },
    /// `interior` uniformly random interior nodes.
    UniformRandom { interior: usize },
    /// Uniformly random nodes in a disk, `total` nodes including the boundary.
    DiskRandom { total: usize },
    /// Concentric rings with radial step `ring_step`, `total` nodes overall.
    DiskRings { ring_step: f64, total: usize },
    /// Nodes on the horizontal mid-line of a rectangle (one-dimensional problems).
    Line { spacing: f64 },
}

impl NodeMode {
    pub fn name(&self) -> &'static str {
        match self {
            NodeMode::Regular { .. } => "regular",
            NodeMode::Jiggled { .. } => "jiggled",
            NodeMode::UniformRandom { .. } => "uniform_random",
            NodeMode::DiskRandom { .. } => "disk_random",
            NodeMode::DiskRings { .. } => "disk_rings",
            NodeMode::Line { .. } => "line",
        }
    }
}

/// Interior and boundary collocation nodes. Interior nodes come first in the
/// global ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub interior: Vec<Point>,
    pub boundary: Vec<Point>,
    pub mode: NodeMode,
    pub seed: u64,
}

impl NodeSet {
    pub fn from_points(
        domain: &Domain,
        interior: Vec<Point>,
        boundary: Vec<Point>,
        mode: NodeMode,
        seed: u64,
    ) -> Result<Self> {
        let set = NodeSet {
            interior,
            boundary,
            mode,
            seed,
        };
        set.validate(domain)?;
        Ok(set)
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.len()
    }

    pub fn len(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> Vec<Point> {
        self.interior
            .iter()
            .chain(&self.boundary)
            .copied()
            .collect()
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        for p in &self.interior {
            if domain.inner_distance(*p) <= BOUNDARY_SLACK {
                return Err(Error::InvalidParameter(format!(
                    "interior node ({}, {}) is not strictly inside the domain",
                    p[0], p[1]
                )));
            }
        }
        let on_line = matches!(self.mode, NodeMode::Line { .. });
        for p in &self.boundary {
            let on_boundary = domain.inner_distance(*p).abs() <= BOUNDARY_SLACK;
            if !on_boundary && !(on_line && is_on_rect_side(domain, *p)) {
                return Err(Error::InvalidParameter(format!(
                    "boundary node ({}, {}) is off the boundary",
                    p[0], p[1]
                )));
            }
        }
        let all = self.all();
        if min_pairwise_distance(&all) <= MIN_SEPARATION {
            return Err(Error::InvalidParameter("coincident nodes".into()));
        }
        Ok(())
    }

    /// CSV dump with columns `kind,x,y`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,x,y\n");
        for p in &self.interior {
            let _ = writeln!(out, "interior,{:.17e},{:.17e}", p[0], p[1]);
        }
        for p in &self.boundary {
            let _ = writeln!(out, "boundary,{:.17e},{:.17e}", p[0], p[1]);
        }
        out
    }
}

fn is_on_rect_side(domain: &Domain, p: Point) -> bool {
    match *domain {
        Domain::Rectangle { xmin, xmax, .. } => {
            (p[0] - xmin).abs() <= BOUNDARY_SLACK || (p[0] - xmax).abs() <= BOUNDARY_SLACK
        }
        Domain::Disk { .. } => false,
    }
}

pub fn min_pairwise_distance(points: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.min((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    best
}

fn lattice_count(length: f64, spacing: f64) -> Result<usize> {
    let n = length / spacing;
    let k = n.round();
    if k < 1.0 || (n - k).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "spacing {spacing} does not divide length {length}"
        )));
    }
    Ok(k as usize)
}

/// Regular lattice split into interior nodes (row-major) and boundary nodes
/// (counter-clockwise from the lower-left corner).
fn rectangle_lattice(domain: &Domain, spacing: f64) -> Result<(Vec<Point>, Vec<Point>)> {
    let Domain::Rectangle {
        xmin,
        xmax,
        ymin,
        ymax,
    } = *domain
    else {
        return Err(Error::InvalidParameter(
            "regular lattice needs a rectangular domain".into(),
        ));
    };
    let nx = lattice_count(xmax - xmin, spacing)?;
    let ny = lattice_count(ymax - ymin, spacing)?;
    let hx = (xmax - xmin) / nx as f64;
    let hy = (ymax - ymin) / ny as f64;
    let x = |i: usize| if i == nx { xmax } else { xmin + i as f64 * hx };
    let y = |j: usize| if j == ny { ymax } else { ymin + j as f64 * hy };
    let mut interior = Vec::new();
    for j in 1..ny {
        for i in 1..nx {
            interior.push([x(i), y(j)]);
        }
    }
    let mut boundary = Vec::new();
    for i in 0..nx {
        boundary.push([x(i), ymin]);
    }
    for j in 0..ny {
        boundary.push([xmax, y(j)]);
    }
    for i in (1..=nx).rev() {
        boundary.push([x(i), ymax]);
    }
    for j in (1..=ny).rev() {
        boundary.push([xmin, y(j)]);
    }
    Ok((interior, boundary))
}

fn random_interior(
    domain: &Domain,
    count: usize,
    existing: &[Point],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Point>> {
    let mut placed: Vec<Point> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let limit = 100 * count.max(1);
    while placed.len() < count {
        if attempts >= limit {
            return Err(Error::InfeasibleCount {
                requested: count,
                placed: placed.len(),
            });
        }
        attempts += 1;
        let p = domain.sample_uniform(rng);
        if domain.inner_distance(p) <= BOUNDARY_SLACK {
            continue;
        }
        let far = |q: &Point| (p[0] - q[0]).hypot(p[1] - q[1]) > MIN_SEPARATION;
        if placed.iter().all(far) && existing.iter().all(far) {
            placed.push(p);
        }
    }
    Ok(placed)
}

/// Split `total` into interior and boundary counts so that the boundary
/// spacing equals the equivalent regular spacing `sqrt(area / M)`.
fn split_total(domain: &Domain, total: usize) -> (usize, usize) {
    let (area, perimeter) = (domain.area(), domain.perimeter());
    let mut best = (total.saturating_sub(4), 4.min(total));
    let mut best_gap = f64::INFINITY;
    for interior in 1..total {
        let boundary = total - interior;
        let ideal = perimeter / (area / interior as f64).sqrt();
        let gap = (ideal - boundary as f64).abs();
        if gap < best_gap {
            best_gap = gap;
            best = (interior, boundary);
        }
    }
    best
}

/// Per-ring node counts proportional to ring circumference; the rounding
/// residual goes to the outermost ring.
pub fn ring_counts(rings: usize, nodes_on_rings: usize) -> Vec<usize> {
    let weight_sum: f64 = (1..=rings).map(|k| k as f64).sum();
    let mut counts: Vec<usize> = (1..=rings)
        .map(|k| ((nodes_on_rings as f64) * k as f64 / weight_sum).round() as usize)
        .collect();
    let assigned: usize = counts.iter().sum();
    let last = counts.len() - 1;
    if assigned > nodes_on_rings {
        counts[last] -= assigned - nodes_on_rings;
    } else {
        counts[last] += nodes_on_rings - assigned;
    }
    counts
}

pub fn generate_nodes(domain: &Domain, mode: NodeMode, seed: u64) -> Result<NodeSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (interior, boundary) = match mode {
        NodeMode::Regular { spacing } => {
            check_positive("spacing", spacing)?;
            rectangle_lattice(domain, spacing)?
        }
        NodeMode::Jiggled { spacing, jiggle } => {
            check_positive("spacing", spacing)?;
            if !(0.0..0.5).contains(&jiggle) {
                return Err(Error::InvalidParameter(format!(
                    "jiggle amplitude {jiggle} must lie in [0, 0.5) of the spacing"
                )));
            }
            let (mut interior, boundary) = rectangle_lattice(domain, spacing)?;
            let amp = jiggle * spacing;
            for p in interior.iter_mut() {
                p[0] += rng.random_range(-amp..=amp);
                p[1] += rng.random_range(-amp..=amp);
            }
            (interior, boundary)
        }
        NodeMode::UniformRandom { interior } => {
            if interior == 0 {
                return Err(Error::InvalidParameter("interior count must be positive".into()));
            }
            let spacing = (domain.area() / interior as f64).sqrt();
            let nb = ((domain.perimeter() / spacing).round() as usize).max(4);
            let boundary = domain.boundary_points(nb);
            let interior = random_interior(domain, interior, &boundary, &mut rng)?;
            (interior, boundary)
        }
        NodeMode::DiskRandom { total } => {
            if !matches!(domain, Domain::Disk { .. }) {
                return Err(Error::InvalidParameter("disk_random needs a disk".into()));
            }
            if total < 8 {
                return Err(Error::InvalidParameter(format!("total {total} too small")));
            }
            let (m, nb) = split_total(domain, total);
            let boundary = domain.boundary_points(nb);
            let interior = random_interior(domain, m, &boundary, &mut rng)?;
            (interior, boundary)
        }
        NodeMode::DiskRings { ring_step, total } => {
            let Domain::Disk { cx, cy, radius } = *domain else {
                return Err(Error::InvalidParameter("disk_rings needs a disk".into()));
            };
            check_positive("ring_step", ring_step)?;
            let rings = (radius / ring_step).round() as usize;
            if rings == 0 || total < rings + 1 {
                return Err(Error::InvalidParameter(format!(
                    "cannot place {total} nodes on {rings} rings"
                )));
            }
            let counts = ring_counts(rings, total - 1);
            let mut interior = vec![[cx, cy]];
            let mut boundary = Vec::new();
            for (k, &count) in counts.iter().enumerate() {
                let r = if k + 1 == rings {
                    radius
                } else {
                    (k + 1) as f64 * ring_step
                };
                let step = 2.0 * PI / count as f64;
                let target = if k + 1 == rings {
                    &mut boundary
                } else {
                    &mut interior
                };
                for l in 0..count {
                    let t = l as f64 * step;
                    target.push([cx + r * t.cos(), cy + r * t.sin()]);
                }
            }
            (interior, boundary)
        }
        NodeMode::Line { spacing } => {
            check_positive("spacing", spacing)?;
            let Domain::Rectangle {
                xmin, xmax, ymin, ymax, ..
            } = *domain
            else {
                return Err(Error::InvalidParameter("line mode needs a rectangle".into()));
            };
            let nx = lattice_count(xmax - xmin, spacing)?;
            let h = (xmax - xmin) / nx as f64;
            let y = 0.5 * (ymin + ymax);
            let interior = (1..nx).map(|i| [xmin + i as f64 * h, y]).collect();
            (interior, vec![[xmin, y], [xmax, y]])
        }
    };
    NodeSet::from_points(domain, interior, boundary, mode, seed)
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {value}")))
    }
}
