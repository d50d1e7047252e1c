//! Curves as edge walks, line integrals of gradient fields, curve-family
//! generation, and the p-modulus convex program.

use thiserror::Error;

use crate::gradients::GradientField;
use crate::solver::{self, Objective, Problem, Row};
use crate::space::MetricMeasureSpace;

/// Feasibility tolerance of the modulus program.
pub const MODULUS_FEAS_TOL: f64 = 1e-8;

/// Threshold under which a family counts as exceptional.
pub const EXCEPTIONAL_TOL: f64 = 1e-10;

/// Default cap on the number of generated curves.
pub const CURVE_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("a curve needs at least one step")]
    TooShort,
    #[error("({a:?},{b:?}) is not an edge of the space")]
    NotAnEdge { a: String, b: String },
    #[error("family under policy {policy:?} would exceed the cap of {cap} curves")]
    HopLimitTooLarge { policy: String, cap: usize },
    #[error("unknown curve policy {0:?}; expected edges, shortest or simple:h")]
    BadPolicy(String),
}

/// A walk along edges: at least one step, every step a positive-length
/// edge of the space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Curve {
    pub vertices: Vec<usize>,
}

impl Curve {
    pub fn new(space: &MetricMeasureSpace, vertices: Vec<usize>) -> Result<Curve, CurveError> {
        if vertices.len() < 2 {
            return Err(CurveError::TooShort);
        }
        for w in vertices.windows(2) {
            if !space.adjacency(w[0]).iter().any(|&(y, _)| y == w[1]) {
                return Err(CurveError::NotAnEdge {
                    a: space.id(w[0]).to_string(),
                    b: space.id(w[1]).to_string(),
                });
            }
        }
        Ok(Curve { vertices })
    }

    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().unwrap()
    }

    pub fn step_lengths(&self, space: &MetricMeasureSpace) -> Vec<f64> {
        self.vertices.windows(2).map(|w| edge_length(space, w[0], w[1])).collect()
    }

    pub fn total_length(&self, space: &MetricMeasureSpace) -> f64 {
        self.step_lengths(space).iter().sum()
    }

    /// Trapezoid coefficient of each touched vertex: half the lengths of
    /// the adjacent steps.
    pub fn vertex_coefficients(&self, space: &MetricMeasureSpace) -> Vec<(usize, f64)> {
        let mut coefs: Vec<(usize, f64)> = Vec::new();
        let mut add = |v: usize, c: f64| {
            if let Some(entry) = coefs.iter_mut().find(|(w, _)| *w == v) {
                entry.1 += c;
            } else {
                coefs.push((v, c));
            }
        };
        for w in self.vertices.windows(2) {
            let half = edge_length(space, w[0], w[1]) / 2.0;
            add(w[0], half);
            add(w[1], half);
        }
        coefs.sort_by_key(|&(v, _)| v);
        coefs
    }

    /// Orientation-normalized copy: the lexicographically smaller (by
    /// point id) endpoint first, full sequences breaking ties.
    pub fn canonical(&self, space: &MetricMeasureSpace) -> Curve {
        let fwd = &self.vertices;
        let rev: Vec<usize> = fwd.iter().rev().copied().collect();
        let fwd_ids: Vec<&str> = fwd.iter().map(|&v| space.id(v)).collect();
        let rev_ids: Vec<&str> = rev.iter().map(|&v| space.id(v)).collect();
        if fwd_ids <= rev_ids {
            self.clone()
        } else {
            Curve { vertices: rev }
        }
    }

    pub fn touches_null_vertex(&self, space: &MetricMeasureSpace) -> bool {
        self.vertices.iter().any(|&v| space.measure(v) == 0.0)
    }
}

fn edge_length(space: &MetricMeasureSpace, a: usize, b: usize) -> f64 {
    space
        .adjacency(a)
        .iter()
        .find(|&&(y, _)| y == b)
        .map(|&(_, len)| len)
        .expect("curve step is not an edge")
}

/// Trapezoid-rule line integral of a gradient field along a curve; any
/// touched vertex with an infinite value makes the integral infinite.
pub fn line_integral(space: &MetricMeasureSpace, g: &GradientField, curve: &Curve) -> f64 {
    if curve.vertices.iter().any(|&v| g.get(v).is_infinite()) {
        return f64::INFINITY;
    }
    curve
        .vertices
        .windows(2)
        .map(|w| (g.get(w[0]) + g.get(w[1])) / 2.0 * edge_length(space, w[0], w[1]))
        .sum()
}

/// Generation policy for finite curve families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// All one-edge curves.
    Edges,
    /// One geodesic walk per unordered pair, lexicographic tie-break.
    ShortestPaths,
    /// All simple paths with at most the given number of edges.
    SimplePaths(usize),
}

impl Policy {
    pub fn parse(s: &str) -> Result<Policy, CurveError> {
        match s {
            "edges" => Ok(Policy::Edges),
            "shortest" => Ok(Policy::ShortestPaths),
            _ => {
                if let Some(h) = s.strip_prefix("simple:") {
                    let h: usize =
                        h.parse().map_err(|_| CurveError::BadPolicy(s.to_string()))?;
                    Ok(Policy::SimplePaths(h))
                } else {
                    Err(CurveError::BadPolicy(s.to_string()))
                }
            }
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Policy::Edges => "edges".to_string(),
            Policy::ShortestPaths => "shortest".to_string(),
            Policy::SimplePaths(h) => format!("simple:{h}"),
        }
    }
}

/// A finite family of distinct curves.
#[derive(Debug, Clone)]
pub struct CurveFamily {
    pub curves: Vec<Curve>,
    pub policy: String,
}

impl CurveFamily {
    /// Builds a family from raw curves, collapsing orientations and
    /// dropping duplicates. Curve order is lexicographic by vertex ids.
    pub fn new(space: &MetricMeasureSpace, curves: Vec<Curve>, policy: &str) -> CurveFamily {
        let mut curves: Vec<Curve> = curves.into_iter().map(|c| c.canonical(space)).collect();
        curves.sort_by(|a, b| {
            let ai: Vec<&str> = a.vertices.iter().map(|&v| space.id(v)).collect();
            let bi: Vec<&str> = b.vertices.iter().map(|&v| space.id(v)).collect();
            ai.cmp(&bi)
        });
        curves.dedup();
        CurveFamily { curves, policy: policy.to_string() }
    }

    pub fn empty() -> CurveFamily {
        CurveFamily { curves: Vec::new(), policy: "empty".to_string() }
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
}

/// Enumerates the curve family for a policy, capped at `CURVE_CAP` curves.
pub fn enumerate_family(
    space: &MetricMeasureSpace,
    policy: Policy,
) -> Result<CurveFamily, CurveError> {
    let curves = match policy {
        Policy::Edges => space
            .edges()
            .iter()
            .map(|e| Curve { vertices: vec![e.a, e.b] })
            .collect(),
        Policy::ShortestPaths => {
            let n = space.len();
            let mut curves = Vec::new();
            for x in 0..n {
                for y in x + 1..n {
                    if let Some(path) = geodesic(space, x, y) {
                        curves.push(Curve { vertices: path });
                    }
                }
            }
            curves
        }
        Policy::SimplePaths(h) => {
            let mut curves = Vec::new();
            let mut path = Vec::new();
            let mut on_path = vec![false; space.len()];
            for start in 0..space.len() {
                path.push(start);
                on_path[start] = true;
                extend_simple_paths(space, h, &mut path, &mut on_path, &mut curves, &policy)?;
                on_path[start] = false;
                path.pop();
            }
            curves
        }
    };
    Ok(CurveFamily::new(space, curves, &policy.tag()))
}

fn extend_simple_paths(
    space: &MetricMeasureSpace,
    max_edges: usize,
    path: &mut Vec<usize>,
    on_path: &mut Vec<bool>,
    out: &mut Vec<Curve>,
    policy: &Policy,
) -> Result<(), CurveError> {
    if path.len() > 1 {
        // Emit once per orientation class: smaller endpoint id first.
        let start = path[0];
        let end = *path.last().unwrap();
        if space.id(start) < space.id(end) {
            if out.len() >= CURVE_CAP {
                return Err(CurveError::HopLimitTooLarge {
                    policy: policy.tag(),
                    cap: CURVE_CAP,
                });
            }
            out.push(Curve { vertices: path.clone() });
        }
    }
    if path.len() > max_edges {
        return Ok(());
    }
    let last = *path.last().unwrap();
    for &(next, _) in space.adjacency(last) {
        if on_path[next] {
            continue;
        }
        path.push(next);
        on_path[next] = true;
        extend_simple_paths(space, max_edges, path, on_path, out, policy)?;
        on_path[next] = false;
        path.pop();
    }
    Ok(())
}

/// The lexicographically least geodesic walk from `x` to `y`, or `None`
/// if they are not connected by edges.
fn geodesic(space: &MetricMeasureSpace, x: usize, y: usize) -> Option<Vec<usize>> {
    // Orientation: start from the lexicographically smaller endpoint.
    let (from, to) = if space.id(x) <= space.id(y) { (x, y) } else { (y, x) };
    let mut path = vec![from];
    let mut current = from;
    let total = space.dist(from, to);
    if !total.is_finite() {
        return None;
    }
    while current != to {
        let remaining = space.dist(current, to);
        let mut next: Option<usize> = None;
        for &(z, len) in space.adjacency(current) {
            if (len + space.dist(z, to) - remaining).abs() <= 1e-12 * (1.0 + remaining) {
                let better = match next {
                    None => true,
                    Some(b) => space.id(z) < space.id(b),
                };
                if better {
                    next = Some(z);
                }
            }
        }
        let z = next?;
        path.push(z);
        current = z;
    }
    Some(path)
}

/// Result of the p-modulus program.
#[derive(Debug, Clone)]
pub struct ModulusResult {
    pub value: f64,
    pub rho: GradientField,
    pub iterations: usize,
    pub converged: bool,
}

/// p-modulus of a finite curve family: the least p-th power L^p mass of a
/// nonnegative field whose line integral along every family member is at
/// least one. Solved by constraint generation over the family.
pub fn modulus(space: &MetricMeasureSpace, family: &CurveFamily, p: f64) -> ModulusResult {
    assert!(p >= 1.0 && p.is_finite(), "modulus exponent must lie in [1, inf)");
    let mut rho = vec![0.0f64; space.len()];

    // Curves through a null vertex impose no effective constraint: a large
    // value at the null vertices satisfies them at zero cost.
    let mut active: Vec<&Curve> = Vec::new();
    let mut free_level = 0.0f64;
    for curve in &family.curves {
        if curve.touches_null_vertex(space) {
            let null_mass: f64 = curve
                .vertex_coefficients(space)
                .iter()
                .filter(|&&(v, _)| space.measure(v) == 0.0)
                .map(|&(_, c)| c)
                .sum();
            free_level = free_level.max(1.0 / null_mass);
        } else {
            active.push(curve);
        }
    }
    for v in 0..space.len() {
        if space.measure(v) == 0.0 {
            rho[v] = free_level;
        }
    }
    if active.is_empty() {
        return ModulusResult {
            value: 0.0,
            rho: GradientField::new(rho).unwrap(),
            iterations: 0,
            converged: true,
        };
    }

    let vars = space.positive_points();
    let var_of: Vec<Option<usize>> = {
        let mut m = vec![None; space.len()];
        for (k, &x) in vars.iter().enumerate() {
            m[x] = Some(k);
        }
        m
    };
    let rows: Vec<Row> = active
        .iter()
        .map(|curve| Row {
            terms: curve
                .vertex_coefficients(space)
                .iter()
                .map(|&(v, c)| (var_of[v].unwrap(), c))
                .collect(),
            rhs: 1.0,
        })
        .collect();
    let objective = if p == 1.0 {
        Objective::Linear(vars.iter().map(|&x| space.measure(x)).collect())
    } else {
        Objective::Power { weights: vars.iter().map(|&x| space.measure(x)).collect(), p }
    };

    // Constraint generation: solve over an active subset, add the most
    // violated remaining row, repeat.
    let mut working: Vec<usize> = vec![0];
    let mut in_working = vec![false; rows.len()];
    in_working[0] = true;
    let mut x = vec![0.0f64; vars.len()];
    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < 100_000 {
        iterations += 1;
        let problem = Problem {
            nvars: vars.len(),
            objective: objective.clone(),
            rows: working.iter().map(|&i| rows[i].clone()).collect(),
            caps: vec![],
        };
        let sol = solver::solve(&problem);
        x = sol.x;
        // Exact scan for the most violated constraint.
        let mut worst: Option<(usize, f64)> = None;
        for (i, row) in rows.iter().enumerate() {
            if in_working[i] {
                continue;
            }
            let integral: f64 = row.terms.iter().map(|&(j, c)| c * x[j]).sum();
            let violation = row.rhs - integral;
            if violation > MODULUS_FEAS_TOL {
                let replace = match worst {
                    None => true,
                    Some((_, v)) => violation > v,
                };
                if replace {
                    worst = Some((i, violation));
                }
            }
        }
        match worst {
            Some((i, _)) => {
                working.push(i);
                in_working[i] = true;
            }
            None => {
                converged = true;
                break;
            }
        }
    }

    for (k, &v) in vars.iter().enumerate() {
        rho[v] = x[k];
    }
    let value: f64 =
        vars.iter().zip(&x).map(|(&v, &xi)| space.measure(v) * xi.powf(p)).sum();
    ModulusResult { value, rho: GradientField::new(rho).unwrap(), iterations, converged }
}

/// True when the family's p-modulus vanishes. In this discrete model that
/// happens exactly when every member touches a null vertex.
pub fn is_exceptional(space: &MetricMeasureSpace, family: &CurveFamily, p: f64) -> bool {
    if family.is_empty() {
        return true;
    }
    modulus(space, family, p).value <= EXCEPTIONAL_TOL
}
