//! Finite metric measure spaces: points, metric, vertex measure, balls,
//! covers and doubling constants.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

/// Absolute tolerance used when validating the triangle inequality.
pub const METRIC_TOL: f64 = 1e-12;

/// Multiplicative nudge used to place candidate radii just above a
/// membership threshold.
pub const RADIUS_NUDGE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("point list contains duplicate id {0:?}")]
    DuplicateId(String),
    #[error("distance matrix is not square or does not match the point count")]
    BadMatrixShape,
    #[error("asymmetric distance between {x:?} and {y:?}: {dxy} vs {dyx}")]
    AsymmetricDistance { x: String, y: String, dxy: f64, dyx: f64 },
    #[error("nonzero diagonal entry at {0:?}")]
    NonzeroDiagonal(String),
    #[error("distinct points {x:?} and {y:?} at zero distance")]
    DuplicatePoint { x: String, y: String },
    #[error("triangle inequality violated: d({x:?},{z:?}) > d({x:?},{y:?}) + d({y:?},{z:?})")]
    TriangleViolation { x: String, y: String, z: String },
    #[error("measure at {0:?} is negative")]
    NegativeMeasure(String),
    #[error("total measure is zero")]
    ZeroTotalMeasure,
    #[error("edge ({a:?},{b:?}) has nonpositive length {length}")]
    NonpositiveEdgeLength { a: String, b: String, length: f64 },
    #[error("edge ({a:?},{b:?}) of length {length} exceeds the shortest-path distance {metric}")]
    EdgeLongerThanMetric { a: String, b: String, length: f64, metric: f64 },
    #[error("edge ({a:?},{b:?}) has length {length} but the metric distance is {metric}")]
    EdgeMetricMismatch { a: String, b: String, length: f64, metric: f64 },
    #[error("graph is disconnected; one component is {component:?}")]
    DisconnectedGraph { component: Vec<String> },
    #[error("unknown point {0:?}")]
    UnknownPoint(String),
    #[error("edge references a point equal to its other endpoint: {0:?}")]
    SelfLoop(String),
    #[error("cover patch {patch} is empty")]
    EmptyPatch { patch: usize },
    #[error("cover does not contain point {0:?}")]
    UncoveredPoint(String),
}

/// An undirected edge between two point indices, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// A finite metric measure space. Immutable after construction; all
/// queries are pure.
#[derive(Debug, Clone)]
pub struct MetricMeasureSpace {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    dist: Vec<f64>,
    measure: Vec<f64>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

/// An open metric ball: members are the points strictly closer than
/// `radius` to the center.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    /// Sorted point indices.
    pub members: Vec<usize>,
}

/// A cover of the point set by nonempty patches.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    /// Each patch is a sorted list of point indices.
    pub patches: Vec<Vec<usize>>,
}

impl Cover {
    /// Validates that every patch is nonempty and that the union of the
    /// patches is the whole point set.
    pub fn validate(&self, space: &MetricMeasureSpace) -> Result<(), SpaceError> {
        let mut seen = vec![false; space.len()];
        for (pi, patch) in self.patches.iter().enumerate() {
            if patch.is_empty() {
                return Err(SpaceError::EmptyPatch { patch: pi });
            }
            for &x in patch {
                seen[x] = true;
            }
        }
        for (x, s) in seen.iter().enumerate() {
            if !s {
                return Err(SpaceError::UncoveredPoint(space.id(x).to_string()));
            }
        }
        Ok(())
    }

    /// The trivial cover consisting of the whole point set.
    pub fn whole(space: &MetricMeasureSpace) -> Cover {
        Cover { patches: vec![(0..space.len()).collect()] }
    }

    /// One patch per point: all points within distance `radius` of the
    /// center, threshold inclusive so that nearest neighbours at exactly
    /// `radius` are co-patched.
    pub fn by_balls(space: &MetricMeasureSpace, radius: f64) -> Cover {
        let patches = (0..space.len())
            .map(|z| {
                (0..space.len())
                    .filter(|&y| space.dist(z, y) <= radius)
                    .collect()
            })
            .collect();
        Cover { patches }
    }
}

fn check_ids_unique(ids: &[String]) -> Result<HashMap<String, usize>, SpaceError> {
    let mut index = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(SpaceError::DuplicateId(id.clone()));
        }
    }
    Ok(index)
}

fn check_measure(ids: &[String], measure: &[f64]) -> Result<(), SpaceError> {
    for (i, &m) in measure.iter().enumerate() {
        if !(m >= 0.0) {
            return Err(SpaceError::NegativeMeasure(ids[i].clone()));
        }
    }
    if measure.iter().sum::<f64>() <= 0.0 {
        return Err(SpaceError::ZeroTotalMeasure);
    }
    Ok(())
}

impl MetricMeasureSpace {
    /// Builds a space from an explicit distance matrix. Edges default to
    /// the complete graph, so every pair is joined by a one-edge curve.
    pub fn build_explicit(
        ids: Vec<String>,
        dist: Vec<Vec<f64>>,
        measure: Vec<f64>,
    ) -> Result<Self, SpaceError> {
        let n = ids.len();
        let index = check_ids_unique(&ids)?;
        if dist.len() != n || dist.iter().any(|row| row.len() != n) || measure.len() != n {
            return Err(SpaceError::BadMatrixShape);
        }
        check_measure(&ids, &measure)?;
        let mut flat = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                flat[i * n + j] = dist[i][j];
            }
        }
        validate_metric(&ids, &flat, n)?;
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push(Edge { a, b, length: flat[a * n + b] });
            }
        }
        let adjacency = build_adjacency(n, &edges);
        Ok(MetricMeasureSpace { ids, index, dist: flat, measure, edges, adjacency })
    }

    /// Builds a space whose metric is the all-pairs shortest-path distance
    /// over the given edge list. Input edges longer than the resulting
    /// metric distance of their endpoints are rejected.
    pub fn build_from_edges(
        ids: Vec<String>,
        edge_list: Vec<(String, String, f64)>,
        measure: Vec<f64>,
    ) -> Result<Self, SpaceError> {
        let n = ids.len();
        let index = check_ids_unique(&ids)?;
        if measure.len() != n {
            return Err(SpaceError::BadMatrixShape);
        }
        check_measure(&ids, &measure)?;
        let mut edges = Vec::new();
        for (a, b, length) in &edge_list {
            let ia = *index.get(a).ok_or_else(|| SpaceError::UnknownPoint(a.clone()))?;
            let ib = *index.get(b).ok_or_else(|| SpaceError::UnknownPoint(b.clone()))?;
            if ia == ib {
                return Err(SpaceError::SelfLoop(a.clone()));
            }
            if !(*length > 0.0) {
                return Err(SpaceError::NonpositiveEdgeLength {
                    a: a.clone(),
                    b: b.clone(),
                    length: *length,
                });
            }
            let (a, b) = if ia < ib { (ia, ib) } else { (ib, ia) };
            edges.push(Edge { a, b, length: *length });
        }
        // Keep only the shortest parallel edge between a pair.
        edges.sort_by(|e, f| (e.a, e.b).cmp(&(f.a, f.b)).then(e.length.total_cmp(&f.length)));
        edges.dedup_by(|e, f| (e.a, e.b) == (f.a, f.b));

        let adjacency = build_adjacency(n, &edges);
        let dist = all_pairs_shortest(n, &adjacency);
        // Connectivity witness: the component of point 0.
        if let Some(unreached) = (0..n).find(|&j| !dist[j].is_finite()) {
            let component: Vec<String> = (0..n)
                .filter(|&j| dist[j].is_finite())
                .map(|j| ids[j].clone())
                .collect();
            let _ = unreached;
            return Err(SpaceError::DisconnectedGraph { component });
        }
        let mut flat = vec![0.0; n * n];
        for (src, row) in (0..n).map(|src| (src, all_pairs_from(src, n, &adjacency))) {
            for j in 0..n {
                flat[src * n + j] = row[j];
            }
        }
        for e in &edges {
            let metric = flat[e.a * n + e.b];
            if e.length > metric + METRIC_TOL {
                return Err(SpaceError::EdgeLongerThanMetric {
                    a: ids[e.a].clone(),
                    b: ids[e.b].clone(),
                    length: e.length,
                    metric,
                });
            }
        }
        Ok(MetricMeasureSpace { ids, index, dist: flat, measure, edges, adjacency })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Result<usize, SpaceError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| SpaceError::UnknownPoint(id.to_string()))
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    pub fn measure(&self, i: usize) -> f64 {
        self.measure[i]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measure
    }

    pub fn total_measure(&self) -> f64 {
        self.measure.iter().sum()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn adjacency(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                d = d.max(self.dist(i, j));
            }
        }
        d
    }

    /// Measure of a set of point indices.
    pub fn set_measure(&self, set: &[usize]) -> f64 {
        set.iter().map(|&x| self.measure[x]).sum()
    }

    /// Indices with strictly positive measure, in order.
    pub fn positive_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.measure[i] > 0.0).collect()
    }

    /// The open ball of radius `r` around point `x`.
    pub fn ball(&self, x: usize, r: f64) -> Ball {
        assert!(r > 0.0, "ball radius must be positive");
        let members = (0..self.len()).filter(|&y| self.dist(x, y) < r).collect();
        Ball { center: x, radius: r, members }
    }

    /// The open ball around a point given by id.
    pub fn ball_by_id(&self, id: &str, r: f64) -> Result<Ball, SpaceError> {
        Ok(self.ball(self.index_of(id)?, r))
    }

    /// Radii on which any supremum over continuous radii of a quantity
    /// constant on ball-membership classes is attained: one radius just
    /// above each distinct positive distance value and each half of one,
    /// plus one radius above the diameter.
    pub fn candidate_radii(&self) -> Vec<f64> {
        let n = self.len();
        let mut radii = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let d = self.dist(i, j);
                radii.push(d * (1.0 + RADIUS_NUDGE));
                radii.push(d / 2.0 * (1.0 + RADIUS_NUDGE));
            }
        }
        if radii.is_empty() {
            // Singleton: a single representative radius.
            return vec![1.0];
        }
        radii.push(self.diameter() * (1.0 + 2.0 * RADIUS_NUDGE));
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        radii
    }

    /// All distinct balls (as member sets) of the space, evaluated on
    /// centers times candidate radii and deduplicated by membership.
    /// Sweeping the candidate radii around a fixed center realizes
    /// exactly the prefix sets of its distance ordering, so those are
    /// enumerated directly.
    pub fn candidate_balls(&self) -> Vec<Ball> {
        let n = self.len();
        let mut balls: Vec<Ball> = Vec::new();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        for x in 0..n {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| self.dist(x, a).total_cmp(&self.dist(x, b)));
            let mut members: Vec<usize> = Vec::new();
            let mut k = 0;
            while k < n {
                let d = self.dist(x, order[k]);
                // Take the whole tier of equal distances at once.
                while k < n && self.dist(x, order[k]) == d {
                    members.push(order[k]);
                    k += 1;
                }
                let radius = if d > 0.0 {
                    d * (1.0 + RADIUS_NUDGE)
                } else if k < n {
                    self.dist(x, order[k]) / 2.0
                } else {
                    1.0
                };
                let mut sorted = members.clone();
                sorted.sort_unstable();
                if seen.insert(sorted.clone()) {
                    balls.push(Ball { center: x, radius, members: sorted });
                }
            }
        }
        balls
    }

    /// Local doubling constant: the supremum over centers and radii
    /// `r < r0` of the ratio of the measures of `B(x,2r)` and `B(x,r)`.
    /// `r0 = f64::INFINITY` gives the global constant. A ratio with zero
    /// denominator and positive numerator is infinite; `0/0` contributes 1.
    pub fn doubling_constant(&self, r0: f64) -> f64 {
        assert!(r0 > 0.0, "doubling horizon must be positive");
        let radii = self.candidate_radii();
        let mut best = 1.0f64;
        for x in 0..self.len() {
            // Doubling is a condition at almost every center; null points
            // stand in for the exceptional set and are skipped.
            if self.measure[x] == 0.0 {
                continue;
            }
            for &r in &radii {
                if r >= r0 {
                    continue;
                }
                let small = self.set_measure(&self.ball(x, r).members);
                let big = self.set_measure(&self.ball(x, 2.0 * r).members);
                let ratio = if small > 0.0 {
                    big / small
                } else if big > 0.0 {
                    f64::INFINITY
                } else {
                    1.0
                };
                best = best.max(ratio);
            }
        }
        best
    }

    /// The subspace induced by a set of point indices: induced metric,
    /// measure and the edges internal to the set. Returns the subspace and
    /// the map from subspace index to parent index.
    pub fn subspace(&self, points: &[usize]) -> (MetricMeasureSpace, Vec<usize>) {
        let mut sorted: Vec<usize> = points.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let pos: HashMap<usize, usize> =
            sorted.iter().enumerate().map(|(k, &x)| (x, k)).collect();
        let m = sorted.len();
        let ids: Vec<String> = sorted.iter().map(|&x| self.ids[x].clone()).collect();
        let index = ids.iter().cloned().zip(0..m).collect();
        let measure: Vec<f64> = sorted.iter().map(|&x| self.measure[x]).collect();
        let mut dist = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                dist[a * m + b] = self.dist(sorted[a], sorted[b]);
            }
        }
        let mut edges = Vec::new();
        for e in &self.edges {
            if let (Some(&a), Some(&b)) = (pos.get(&e.a), pos.get(&e.b)) {
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                edges.push(Edge { a, b, length: e.length });
            }
        }
        let adjacency = build_adjacency(m, &edges);
        (MetricMeasureSpace { ids, index, dist, measure, edges, adjacency }, sorted)
    }

    /// True if every pair of points is joined by a walk along edges.
    pub fn is_connected(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &(y, _) in &self.adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

fn build_adjacency(n: usize, edges: &[Edge]) -> Vec<Vec<(usize, f64)>> {
    let mut adjacency = vec![Vec::new(); n];
    for e in edges {
        adjacency[e.a].push((e.b, e.length));
        adjacency[e.b].push((e.a, e.length));
    }
    for row in &mut adjacency {
        row.sort_by(|x, y| x.0.cmp(&y.0));
    }
    adjacency
}

/// Single-source shortest-path distances (Dijkstra over the adjacency
/// lists). Unreachable points come back as infinity.
fn all_pairs_from(src: usize, n: usize, adjacency: &[Vec<(usize, f64)>]) -> Vec<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let mut dist = vec![f64::INFINITY; n];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push((Reverse(FloatOrd(0.0)), src));
    while let Some((Reverse(FloatOrd(d)), x)) = heap.pop() {
        if d > dist[x] {
            continue;
        }
        for &(y, len) in &adjacency[x] {
            let nd = d + len;
            if nd < dist[y] {
                dist[y] = nd;
                heap.push((Reverse(FloatOrd(nd)), y));
            }
        }
    }
    dist
}

fn all_pairs_shortest(n: usize, adjacency: &[Vec<(usize, f64)>]) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    all_pairs_from(0, n, adjacency)
}

#[derive(PartialEq)]
struct FloatOrd(f64);

impl Eq for FloatOrd {}

impl PartialOrd for FloatOrd {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FloatOrd {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn validate_metric(ids: &[String], dist: &[f64], n: usize) -> Result<(), SpaceError> {
    for i in 0..n {
        if dist[i * n + i] != 0.0 {
            return Err(SpaceError::NonzeroDiagonal(ids[i].clone()));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let dij = dist[i * n + j];
            let dji = dist[j * n + i];
            if dij != dji {
                return Err(SpaceError::AsymmetricDistance {
                    x: ids[i].clone(),
                    y: ids[j].clone(),
                    dxy: dij,
                    dyx: dji,
                });
            }
            if !(dij > 0.0) {
                return Err(SpaceError::DuplicatePoint { x: ids[i].clone(), y: ids[j].clone() });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if dist[i * n + k] > dist[i * n + j] + dist[j * n + k] + METRIC_TOL {
                    return Err(SpaceError::TriangleViolation {
                        x: ids[i].clone(),
                        y: ids[j].clone(),
                        z: ids[k].clone(),
                    });
                }
            }
        }
    }
    Ok(())
}
