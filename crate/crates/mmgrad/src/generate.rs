//! Deterministic instance generators: rectangular grids, random
//! geometric graphs, and the discretized planar annulus example.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::norms::ScalarField;
use crate::space::MetricMeasureSpace;

/// Hard cap on generated points; keeps desk-scale runtimes in seconds.
pub const POINT_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("resolution too fine: {points} points exceed the cap of {POINT_CAP}")]
    ResolutionTooFine { points: usize },
    #[error("degenerate generator parameters: {0}")]
    BadParameters(String),
}

pub type NamedFields = BTreeMap<String, ScalarField>;

fn check_cap(points: usize) -> Result<(), GenerateError> {
    if points > POINT_CAP {
        return Err(GenerateError::ResolutionTooFine { points });
    }
    Ok(())
}

/// An `nx` by `ny` grid with unit measure, 4-neighbor edges of the given
/// spacing, and coordinate fields named `x` and `y`.
pub fn grid(
    nx: usize,
    ny: usize,
    spacing: f64,
) -> Result<(MetricMeasureSpace, NamedFields), GenerateError> {
    if nx == 0 || ny == 0 || !(spacing > 0.0) {
        return Err(GenerateError::BadParameters(format!(
            "grid needs nx, ny >= 1 and spacing > 0, got {nx}x{ny} at {spacing}"
        )));
    }
    check_cap(nx * ny)?;
    let mut ids = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            ids.push(format!("p{i}_{j}"));
            xs.push(i as f64 * spacing);
            ys.push(j as f64 * spacing);
        }
    }
    let mut edges = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            if i + 1 < nx {
                edges.push((format!("p{i}_{j}"), format!("p{}_{j}", i + 1), spacing));
            }
            if j + 1 < ny {
                edges.push((format!("p{i}_{j}"), format!("p{i}_{}", j + 1), spacing));
            }
        }
    }
    let space = if edges.is_empty() {
        MetricMeasureSpace::build_explicit(ids, vec![vec![0.0]], vec![1.0]).unwrap()
    } else {
        MetricMeasureSpace::build_from_edges(ids, edges, vec![1.0; nx * ny]).unwrap()
    };
    let mut fields = NamedFields::new();
    fields.insert("x".into(), ScalarField::new(xs));
    fields.insert("y".into(), ScalarField::new(ys));
    Ok((space, fields))
}

/// `n` points placed uniformly in the unit square by a seeded generator;
/// edges join pairs within the given Euclidean radius. Disconnected
/// components are bridged by their closest inter-component pair, so the
/// result is always connected. Identical seeds give identical instances.
pub fn random_geometric(
    n: usize,
    radius: f64,
    seed: u64,
) -> Result<(MetricMeasureSpace, NamedFields), GenerateError> {
    if n == 0 || !(radius > 0.0) {
        return Err(GenerateError::BadParameters(format!(
            "random_geometric needs n >= 1 and radius > 0, got n={n}, radius={radius}"
        )));
    }
    check_cap(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();

    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(pts[i], pts[j]);
            if d > 0.0 && d <= radius {
                edges.push((i, j, d));
            }
        }
    }
    // Union-find over the edge graph; bridge components until connected.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j, _) in &edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        parent[ri] = rj;
    }
    loop {
        let roots: Vec<usize> = (0..n).filter(|&x| find(&mut parent, x) == x).collect();
        if roots.len() <= 1 {
            break;
        }
        // Closest pair across the first root's component and the rest.
        let lead = roots[0];
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if find(&mut parent, i) != lead {
                continue;
            }
            for j in 0..n {
                if find(&mut parent, j) == lead {
                    continue;
                }
                let d = dist(pts[i], pts[j]).max(1e-9);
                if best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let (i, j, d) = best.expect("n >= 2 whenever there are two components");
        edges.push((i, j, d));
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        parent[ri] = rj;
    }

    let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let space = if n == 1 {
        MetricMeasureSpace::build_explicit(ids, vec![vec![0.0]], vec![1.0]).unwrap()
    } else {
        let named = edges
            .into_iter()
            .map(|(i, j, d)| (format!("p{i}"), format!("p{j}"), d))
            .collect();
        MetricMeasureSpace::build_from_edges(ids, named, vec![1.0; n]).unwrap()
    };
    let mut fields = NamedFields::new();
    fields.insert("x".into(), ScalarField::new(pts.iter().map(|p| p.0).collect()));
    fields.insert("y".into(), ScalarField::new(pts.iter().map(|p| p.1).collect()));
    Ok((space, fields))
}

/// The discretized annulus example on the square [-3, 3]^2 at step `h`:
/// unit measure, 4-neighbor edges of length `h`, and the fields
/// `f` (1 inside the unit disc, 0 outside radius 2, linear ramp between)
/// and `g` (indicator of the annulus 3/4 <= |x| < 9/4).
pub fn annulus(h: f64) -> Result<(MetricMeasureSpace, NamedFields), GenerateError> {
    if !(h > 0.0 && h <= 6.0) {
        return Err(GenerateError::BadParameters(format!("annulus needs 0 < h <= 6, got {h}")));
    }
    let steps = (6.0 / h).round() as usize;
    if ((steps as f64) * h - 6.0).abs() > 1e-9 {
        return Err(GenerateError::BadParameters(format!(
            "annulus step {h} does not tile [-3, 3] evenly"
        )));
    }
    let side = steps + 1;
    check_cap(side * side)?;

    let mut ids = Vec::new();
    let mut f = Vec::new();
    let mut g = Vec::new();
    for i in 0..side {
        for j in 0..side {
            ids.push(format!("p{i}_{j}"));
            let x = -3.0 + i as f64 * h;
            let y = -3.0 + j as f64 * h;
            let r = (x * x + y * y).sqrt();
            f.push(if r < 1.0 {
                1.0
            } else if r >= 2.0 {
                0.0
            } else {
                2.0 - r
            });
            g.push(if (0.75..2.25).contains(&r) { 1.0 } else { 0.0 });
        }
    }
    let mut edges = Vec::new();
    for i in 0..side {
        for j in 0..side {
            if i + 1 < side {
                edges.push((format!("p{i}_{j}"), format!("p{}_{j}", i + 1), h));
            }
            if j + 1 < side {
                edges.push((format!("p{i}_{j}"), format!("p{i}_{}", j + 1), h));
            }
        }
    }
    let space = MetricMeasureSpace::build_from_edges(ids, edges, vec![1.0; side * side]).unwrap();
    let mut fields = NamedFields::new();
    fields.insert("f".into(), ScalarField::new(f));
    fields.insert("g".into(), ScalarField::new(g));
    Ok((space, fields))
}

/// A random 1-Lipschitz-like field: raw seeded samples in [-1, 1]
/// smoothed by infimal convolution with slope `lip` over the space's
/// metric. Deterministic in the seed.
pub fn random_lipschitz_field(space: &MetricMeasureSpace, seed: u64, lip: f64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let values = (0..space.len())
        .map(|x| {
            (0..space.len())
                .map(|y| raw[y] + lip * space.dist(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    ScalarField::new(values)
}
