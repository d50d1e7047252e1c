//! The acceptance gate: one test per criterion, each printing a single
//! pass/fail line. The instance suite is deterministic and shared.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mmgrad::constructions::{
    glue_local, hajlasz_from_upper_global, hajlasz_from_upper_local, hajlasz_to_upper,
    maximal_noncentered, maximal_restricted, mcshane_extend, ConversionCertificate,
    ConversionConfig,
};
use mmgrad::curves::{enumerate_family, is_exceptional, line_integral, modulus, CurveFamily, Policy};
use mmgrad::gradients::{
    check_hajlasz, check_local_hajlasz, check_strong_hajlasz, min_hajlasz_gradient,
    min_upper_gradient, minimal_factor, GradientField, Mode, Witness,
};
use mmgrad::norms::{lattice_check, lp_norm, morrey_norm, FunctionNorm, ScalarField};
use mmgrad::sobolev::embedding_report;
use mmgrad::space::{Cover, MetricMeasureSpace};

fn conclude(number: usize, name: &str, result: Result<(), String>) {
    println!(
        "acceptance criterion {number} ({name}): {}",
        if result.is_ok() { "pass" } else { "fail" }
    );
    if let Err(e) = result {
        panic!("criterion {number} ({name}): {e}");
    }
}

// ---------------------------------------------------------------- suite

struct Instance {
    label: String,
    space: MetricMeasureSpace,
    u: ScalarField,
    g: GradientField,
    /// Whether a measure-zero violator was planted.
    adversarial: bool,
}

/// Rebuilds a space over the same edges with a different measure.
fn with_measure(space: &MetricMeasureSpace, measure: Vec<f64>) -> MetricMeasureSpace {
    let edges = space
        .edges()
        .iter()
        .map(|e| (space.id(e.a).to_string(), space.id(e.b).to_string(), e.length))
        .collect();
    MetricMeasureSpace::build_from_edges(space.ids().to_vec(), edges, measure).unwrap()
}

/// A random Lipschitz u and an upward-perturbed minimal gradient; the
/// pair always passes the pointwise check.
fn dress(space: MetricMeasureSpace, seed: u64, label: String) -> Instance {
    let u = mmgrad::generate::random_lipschitz_field(&space, seed, 1.0);
    let (g0, _) =
        min_hajlasz_gradient(&space, &u, &FunctionNorm::lp(2.0).unwrap(), Mode::Global);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let g = GradientField::new(
        g0.values().iter().map(|&v| v * (1.0 + rng.gen::<f64>())).collect(),
    )
    .unwrap();
    Instance { label, space, u, g, adversarial: false }
}

/// Plants a measure-zero point whose u value violates the inequality
/// against every neighbour; the check still passes almost everywhere.
fn sabotage(mut instance: Instance, victim: usize) -> Instance {
    let mut measure = instance.space.measures().to_vec();
    measure[victim] = 0.0;
    instance.space = with_measure(&instance.space, measure);
    instance.u.values[victim] += 2.5;
    instance.label.push_str("+null");
    instance.adversarial = true;
    instance
}

/// A small connected space with seeded edge lengths: a path backbone
/// plus a chord, optionally with one null point.
fn small_space(seed: u64, n: usize, with_null: bool) -> MetricMeasureSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x517c_c1b7).wrapping_add(n as u64));
    let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let mut edges: Vec<(String, String, f64)> = (0..n - 1)
        .map(|i| (format!("p{i}"), format!("p{}", i + 1), rng.gen_range(0.2..2.0)))
        .collect();
    if n >= 3 && rng.gen::<bool>() {
        // The chord must stay metrically consistent in both directions: it
        // may not exceed the backbone path it shortcuts (chord <= path_sum),
        // and the detour through it may not undercut any single backbone
        // edge (chord >= 2 * max_edge - path_sum).
        let path_sum: f64 = edges.iter().map(|e| e.2).sum();
        let max_edge = edges.iter().map(|e| e.2).fold(0.0f64, f64::max);
        let lo = (2.0 * max_edge - path_sum).max(0.2);
        let chord = rng.gen_range(0.5f64..4.0).clamp(lo, path_sum);
        edges.push(("p0".into(), format!("p{}", n - 1), chord));
    }
    let mut measure: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
    if with_null {
        let victim = rng.gen_range(0..n);
        measure[victim] = 0.0;
    }
    MetricMeasureSpace::build_from_edges(ids, edges, measure).unwrap()
}

fn suite() -> &'static Vec<Instance> {
    static SUITE: OnceLock<Vec<Instance>> = OnceLock::new();
    SUITE.get_or_init(|| {
        let mut out = Vec::new();
        let grids: &[(usize, usize, u64)] = &[
            (2, 2, 10),
            (2, 3, 10),
            (3, 3, 10),
            (3, 4, 10),
            (4, 4, 10),
            (5, 5, 5),
            (6, 6, 5),
            (8, 8, 3),
        ];
        for &(nx, ny, seeds) in grids {
            for seed in 0..seeds {
                let (space, _) = mmgrad::generate::grid(nx, ny, 1.0).unwrap();
                out.push(dress(space, seed, format!("grid{nx}x{ny}/{seed}")));
            }
        }
        let randoms: &[(usize, f64, u64)] = &[
            (8, 0.40, 10),
            (12, 0.35, 10),
            (16, 0.30, 10),
            (24, 0.22, 10),
            (32, 0.20, 5),
            (48, 0.17, 3),
            (64, 0.15, 2),
        ];
        for &(n, radius, seeds) in randoms {
            for seed in 0..seeds {
                let (space, _) = mmgrad::generate::random_geometric(n, radius, seed).unwrap();
                out.push(dress(space, seed, format!("rg{n}/{seed}")));
            }
        }
        for seed in 0..15u64 {
            for n in [3usize, 4, 5, 6] {
                let space = small_space(seed, n, false);
                out.push(dress(space, seed, format!("small{n}/{seed}")));
            }
        }
        // Adversarial instances: measure-zero violators.
        for seed in 0..10u64 {
            for (nx, ny) in [(3usize, 3usize), (4, 4)] {
                let (space, _) = mmgrad::generate::grid(nx, ny, 1.0).unwrap();
                let victim = seed as usize % space.len();
                out.push(sabotage(
                    dress(space, seed, format!("grid{nx}x{ny}/{seed}")),
                    victim,
                ));
            }
            let (space, _) = mmgrad::generate::random_geometric(8, 0.4, seed).unwrap();
            let victim = seed as usize % space.len();
            out.push(sabotage(dress(space, seed, format!("rg8/{seed}")), victim));
        }
        assert!(out.len() >= 200, "suite has only {} instances", out.len());
        out
    })
}

fn certificates() -> &'static Vec<(usize, ConversionCertificate, f64)> {
    static CERTS: OnceLock<Vec<(usize, ConversionCertificate, f64)>> = OnceLock::new();
    CERTS.get_or_init(|| {
        let config = ConversionConfig::default();
        suite()
            .iter()
            .enumerate()
            .map(|(i, inst)| {
                let clock = Instant::now();
                let cert = hajlasz_to_upper(&inst.space, &inst.u, &inst.g, &config)
                    .unwrap_or_else(|e| panic!("{}: {e}", inst.label));
                (i, cert, clock.elapsed().as_secs_f64())
            })
            .collect()
    })
}

// ------------------------------------------------------------ criteria

#[test]
fn criterion_01_factor_four() {
    conclude(1, "factor-4 conversion", (|| {
        let instances = suite();
        for (i, cert, seconds) in certificates() {
            let inst = &instances[*i];
            if !check_hajlasz(&inst.space, &inst.u, &inst.g).passed {
                return Err(format!("{}: precondition check failed", inst.label));
            }
            if cert.factor > 4.0 + 1e-9 {
                return Err(format!("{}: factor {}", inst.label, cert.factor));
            }
            if *seconds >= 10.0 {
                return Err(format!("{}: took {seconds:.1} s", inst.label));
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_02_edge_factor_two() {
    conclude(2, "edge-family factor 2", (|| {
        let instances = suite();
        for (i, cert, _) in certificates() {
            let inst = &instances[*i];
            if inst.adversarial {
                continue;
            }
            let edges = enumerate_family(&inst.space, Policy::Edges).unwrap();
            let factor = minimal_factor(&inst.space, &cert.corrected_u, &cert.corrected_g, &edges);
            if factor > 2.0 + 1e-9 {
                return Err(format!("{}: edge factor {factor}", inst.label));
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_03_per_level_identities() {
    conclude(3, "per-level identities", (|| {
        let instances = suite();
        for (i, cert, _) in certificates() {
            let inst = &instances[*i];
            let space = &inst.space;
            let all: Vec<usize> = (0..space.len()).collect();
            for pair in cert.levels.windows(2) {
                for x in &pair[0].level_set {
                    if !pair[1].level_set.contains(x) {
                        return Err(format!("{}: level sets not nested", inst.label));
                    }
                }
            }
            for level in &cert.levels {
                for &x in &level.level_set {
                    if level.extension.get(x) != inst.u.get(x) {
                        return Err(format!(
                            "{}: u_{} differs from u on its level set",
                            inst.label, level.k
                        ));
                    }
                }
                let strong =
                    check_strong_hajlasz(space, &level.extension, &level.truncated_gradient, &all);
                if !strong.passed {
                    return Err(format!(
                        "{}: strong check fails at k={} (ratio {})",
                        inst.label, level.k, strong.worst_ratio
                    ));
                }
                for e in space.edges() {
                    let curve =
                        mmgrad::curves::Curve::new(space, vec![e.a, e.b]).unwrap();
                    let inc = (level.extension.get(e.a) - level.extension.get(e.b)).abs();
                    let bound = 2.0 * line_integral(space, &level.truncated_gradient, &curve);
                    if inc > bound * (1.0 + 1e-9) {
                        return Err(format!(
                            "{}: edge bound fails at k={}: {inc} > {bound}",
                            inst.label, level.k
                        ));
                    }
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_04_annulus_dichotomy() {
    conclude(4, "annulus local pass / global fail", (|| {
        let (space, fields) = mmgrad::generate::annulus(0.125).unwrap();
        let f = &fields["f"];
        let g = GradientField::new(fields["g"].values.clone()).unwrap();
        let cover = Cover::by_balls(&space, 0.125);
        let local = check_local_hajlasz(&space, f, &g, &cover);
        if !local.passed {
            return Err(format!("local check failed with ratio {}", local.worst_ratio));
        }
        let global = check_hajlasz(&space, f, &g);
        if global.passed {
            return Err("global check unexpectedly passed".into());
        }
        if !global.worst_ratio.is_infinite() {
            return Err(format!("expected an infinite ratio, got {}", global.worst_ratio));
        }
        match global.witness {
            Witness::Pair { x, y } => {
                let diff = (f.get(x) - f.get(y)).abs();
                let gsum = g.get(x) + g.get(y);
                if diff != 1.0 || gsum != 0.0 {
                    return Err(format!("witness has f-diff {diff}, g-sum {gsum}"));
                }
            }
            _ => return Err("no witness pair reported".into()),
        }
        Ok(())
    })());
}

#[test]
fn criterion_05_gluing() {
    conclude(5, "patchwise gluing", (|| {
        let config = ConversionConfig::default();
        let mut count = 0;
        let mut bases: Vec<Instance> = Vec::new();
        for seed in 0..3u64 {
            for (nx, ny) in [(3usize, 3usize), (4, 4), (5, 5)] {
                let (space, _) = mmgrad::generate::grid(nx, ny, 1.0).unwrap();
                bases.push(dress(space, seed, format!("grid{nx}x{ny}/{seed}")));
            }
            for (n, radius) in [(12usize, 0.35), (16, 0.3)] {
                let (space, _) = mmgrad::generate::random_geometric(n, radius, seed).unwrap();
                bases.push(dress(space, seed, format!("rg{n}/{seed}")));
            }
            let (space, _) = mmgrad::generate::grid(3, 3, 1.0).unwrap();
            let victim = seed as usize % space.len();
            bases.push(sabotage(dress(space, seed, format!("grid3x3/{seed}")), victim));
        }
        for inst in &bases {
            let max_edge = inst
                .space
                .edges()
                .iter()
                .map(|e| e.length)
                .fold(0.0f64, f64::max);
            for scale in [1.0, 1.5, 2.5] {
                let cover = Cover::by_balls(&inst.space, scale * max_edge);
                let cert = glue_local(&inst.space, &inst.u, &inst.g, &cover, &config)
                    .map_err(|e| format!("{}: {e}", inst.label))?;
                if cert.factor > 4.0 + 1e-9 {
                    return Err(format!("{}: glued factor {}", inst.label, cert.factor));
                }
                for (j, m, z) in &cert.z_sets {
                    if inst.space.set_measure(z) != 0.0 {
                        return Err(format!(
                            "{}: Z({j},{m}) carries positive measure",
                            inst.label
                        ));
                    }
                }
                count += 1;
            }
        }
        if count < 50 {
            return Err(format!("only {count} covered instances"));
        }
        Ok(())
    })());
}

#[test]
fn criterion_06_mcshane() {
    conclude(6, "Lipschitz extension", (|| {
        let mut checked = 0;
        for seed in 0..500u64 {
            let space = small_space(seed, 3 + (seed as usize % 4), seed % 5 == 0);
            let n = space.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
            let lip = rng.gen_range(0.5..3.0);
            let mut anchors: Vec<usize> = (0..n).filter(|_| rng.gen::<bool>()).collect();
            if anchors.is_empty() {
                anchors.push(rng.gen_range(0..n));
            }
            // Relax the anchor data to a float-arithmetic Lipschitz
            // fixpoint, so exact reproduction is well-posed.
            let mut f_on: Vec<f64> =
                anchors.iter().map(|_| rng.gen_range(-2.0..2.0)).collect();
            loop {
                let mut changed = false;
                for i in 0..anchors.len() {
                    for j in 0..anchors.len() {
                        let bound = f_on[j] + lip * space.dist(anchors[i], anchors[j]);
                        if bound < f_on[i] {
                            f_on[i] = bound;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            let ext = mcshane_extend(&space, &anchors, &f_on, lip).unwrap();
            for (k, &x) in anchors.iter().enumerate() {
                if ext.get(x) != f_on[k] {
                    return Err(format!("seed {seed}: extension differs on an anchor"));
                }
            }
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let inc = (ext.get(i) - ext.get(j)).abs();
                    let bound = lip * space.dist(i, j);
                    // One rounded product of slack: the comparison is on
                    // floats whose real counterparts satisfy it exactly.
                    if inc > bound * (1.0 + 1e-14) {
                        return Err(format!("seed {seed}: extension not Lipschitz"));
                    }
                }
            }
            checked += 1;
        }
        if checked < 500 {
            return Err(format!("only {checked} triples"));
        }
        Ok(())
    })());
}

// -------------------------------------------------- brute-force oracles

/// Deterministic coarse-to-fine grid minimization over `[0, hi]^n`:
/// nine samples per axis, box shrunk around the incumbent until the
/// step is below 2.5e-4. Safe for the convex programs it checks.
fn grid_search(
    n: usize,
    hi: f64,
    feasible: &dyn Fn(&[f64]) -> bool,
    objective: &dyn Fn(&[f64]) -> f64,
) -> f64 {
    assert!(n >= 1 && n <= 4);
    let mut center = vec![hi / 2.0; n];
    let mut half = hi / 2.0;
    let mut best_val = f64::INFINITY;
    let mut best_pt = center.clone();
    let k = 9usize;
    while half > 1.25e-4 {
        let step = 2.0 * half / (k - 1) as f64;
        let mut idx = vec![0usize; n];
        loop {
            let pt: Vec<f64> = (0..n)
                .map(|d| (center[d] - half + idx[d] as f64 * step).clamp(0.0, hi))
                .collect();
            if feasible(&pt) {
                let v = objective(&pt);
                if v < best_val {
                    best_val = v;
                    best_pt = pt;
                }
            }
            let mut d = 0;
            loop {
                if d == n {
                    break;
                }
                idx[d] += 1;
                if idx[d] < k {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n {
                break;
            }
        }
        center = best_pt.clone();
        half = step * 1.2;
    }
    best_val
}

/// The oracle spaces: every shape with at most four points exercised by
/// criterion 7, mixing measures, lengths, and a null point.
fn oracle_spaces() -> Vec<MetricMeasureSpace> {
    let e = |a: &str, b: &str, l: f64| (a.to_string(), b.to_string(), l);
    let ids = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        MetricMeasureSpace::build_from_edges(
            ids(&["x", "y"]),
            vec![e("x", "y", 1.0)],
            vec![1.0, 1.0],
        )
        .unwrap(),
        MetricMeasureSpace::build_from_edges(
            ids(&["x", "y"]),
            vec![e("x", "y", 0.8)],
            vec![2.0, 0.5],
        )
        .unwrap(),
        MetricMeasureSpace::build_from_edges(
            ids(&["x", "y", "z"]),
            vec![e("x", "y", 1.0), e("y", "z", 1.0), e("x", "z", 1.5)],
            vec![1.0, 2.0, 0.5],
        )
        .unwrap(),
        MetricMeasureSpace::build_from_edges(
            ids(&["a", "b", "c", "d"]),
            vec![e("a", "b", 1.0), e("b", "c", 0.7), e("c", "d", 1.2)],
            vec![1.0, 1.0, 1.0, 1.0],
        )
        .unwrap(),
        MetricMeasureSpace::build_from_edges(
            ids(&["h", "l1", "l2", "l3"]),
            vec![e("h", "l1", 0.5), e("h", "l2", 1.0), e("h", "l3", 1.5)],
            vec![1.0, 0.0, 2.0, 0.5],
        )
        .unwrap(),
        MetricMeasureSpace::build_from_edges(
            ids(&["a", "b", "c", "d"]),
            vec![e("a", "b", 1.0), e("b", "c", 1.0), e("c", "d", 1.0), e("a", "d", 1.0)],
            vec![1.0, 1.0, 1.0, 1.0],
        )
        .unwrap(),
    ]
}

fn norm_of(space: &MetricMeasureSpace, vars: &[usize], x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return vars
            .iter()
            .zip(x)
            .filter(|(&v, _)| space.measure(v) > 0.0)
            .map(|(_, &xi)| xi)
            .fold(0.0, f64::max);
    }
    vars.iter()
        .zip(x)
        .map(|(&v, &xi)| space.measure(v) * xi.powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

#[test]
fn criterion_07_solver_oracles() {
    conclude(7, "solver vs grid search", (|| {
        let ps = [1.0, 2.0, f64::INFINITY];
        for (si, space) in oracle_spaces().iter().enumerate() {
            let u = mmgrad::generate::random_lipschitz_field(space, si as u64, 1.0);
            let vars = space.positive_points();

            // Pairwise covering requirements of each solver.
            let hajlasz_rows: Vec<(usize, usize, f64)> = {
                let mut rows = Vec::new();
                for (a, &x) in vars.iter().enumerate() {
                    for (b, &y) in vars.iter().enumerate().skip(a + 1) {
                        let r = (u.get(x) - u.get(y)).abs() / space.dist(x, y);
                        if r > 0.0 {
                            rows.push((a, b, r));
                        }
                    }
                }
                rows
            };
            let upper_rows: Vec<(usize, usize, f64)> = {
                let mut rows = Vec::new();
                for edge in space.edges() {
                    if space.measure(edge.a) == 0.0 || space.measure(edge.b) == 0.0 {
                        continue;
                    }
                    let r = 2.0 * (u.get(edge.a) - u.get(edge.b)).abs() / edge.length;
                    if r > 0.0 {
                        let a = vars.iter().position(|&v| v == edge.a).unwrap();
                        let b = vars.iter().position(|&v| v == edge.b).unwrap();
                        rows.push((a, b, r));
                    }
                }
                rows
            };

            for &p in &ps {
                let norm = FunctionNorm::lp(p).unwrap();
                for (rows, solved) in [
                    (&hajlasz_rows, min_hajlasz_gradient(space, &u, &norm, Mode::Global).1),
                    (&upper_rows, min_upper_gradient(space, &u, &norm).1),
                ] {
                    let hi = rows.iter().map(|&(_, _, r)| r).fold(1.0f64, f64::max);
                    let oracle = grid_search(
                        vars.len(),
                        hi,
                        &|x| rows.iter().all(|&(a, b, r)| x[a] + x[b] >= r),
                        &|x| norm_of(space, &vars, x, p),
                    );
                    if (solved - oracle).abs() > 1e-3 {
                        return Err(format!(
                            "space {si} p={p}: solver {solved} vs oracle {oracle}"
                        ));
                    }
                }
            }

            // Modulus against the same machinery on the edge family.
            let family = enumerate_family(space, Policy::Edges).unwrap();
            for p in [1.0, 2.0] {
                let solved = modulus(space, &family, p).value;
                let mut constraints: Vec<Vec<(usize, f64)>> = Vec::new();
                for curve in &family.curves {
                    if curve.touches_null_vertex(space) {
                        continue;
                    }
                    let coefs = curve
                        .vertex_coefficients(space)
                        .into_iter()
                        .map(|(v, c)| (vars.iter().position(|&w| w == v).unwrap(), c))
                        .collect();
                    constraints.push(coefs);
                }
                let hi = constraints
                    .iter()
                    .map(|row| 1.0 / row.iter().map(|&(_, c)| c).sum::<f64>())
                    .fold(1.0f64, f64::max)
                    * 2.0;
                let oracle = if constraints.is_empty() {
                    0.0
                } else {
                    grid_search(
                        vars.len(),
                        hi,
                        &|x| {
                            constraints.iter().all(|row| {
                                row.iter().map(|&(a, c)| c * x[a]).sum::<f64>() >= 1.0
                            })
                        },
                        &|x| {
                            vars.iter()
                                .zip(x)
                                .map(|(&v, &xi)| space.measure(v) * xi.powf(p))
                                .sum::<f64>()
                        },
                    )
                };
                if (solved - oracle).abs() > 1e-3 {
                    return Err(format!(
                        "space {si} modulus p={p}: solver {solved} vs oracle {oracle}"
                    ));
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_08_modulus_properties() {
    conclude(8, "modulus properties", (|| {
        for seed in 0..10u64 {
            for n in [4usize, 5, 6] {
                let space = small_space(seed, n, seed % 3 == 0);
                let edges = enumerate_family(&space, Policy::Edges).unwrap();
                let larger = enumerate_family(&space, Policy::SimplePaths(3)).unwrap();
                for p in [1.0, 2.0] {
                    let small = modulus(&space, &edges, p).value;
                    let large = modulus(&space, &larger, p).value;
                    if small > large + 1e-8 {
                        return Err(format!(
                            "seed {seed} n={n} p={p}: inclusion violated ({small} > {large})"
                        ));
                    }
                    if modulus(&space, &CurveFamily::empty(), p).value != 0.0 {
                        return Err("empty family has nonzero modulus".into());
                    }
                    // Exceptional families are exactly those whose every
                    // curve touches a null vertex.
                    for curve in &larger.curves {
                        let singleton = CurveFamily::new(
                            &space,
                            vec![curve.clone()],
                            "singleton",
                        );
                        let expect = curve.touches_null_vertex(&space);
                        if is_exceptional(&space, &singleton, p) != expect {
                            return Err(format!(
                                "seed {seed} n={n} p={p}: exceptional mismatch"
                            ));
                        }
                    }
                    let all_null =
                        larger.curves.iter().all(|c| c.touches_null_vertex(&space));
                    if is_exceptional(&space, &larger, p) != all_null {
                        return Err(format!(
                            "seed {seed} n={n} p={p}: family exceptionality mismatch"
                        ));
                    }
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_09_embedding() {
    conclude(9, "Sobolev norm embeddings", (|| {
        let lattices =
            [FunctionNorm::lp(2.0).unwrap(), FunctionNorm::morrey(2.0, 3.0).unwrap()];
        for inst in suite() {
            let max_edge = inst
                .space
                .edges()
                .iter()
                .map(|e| e.length)
                .fold(0.0f64, f64::max);
            let cover = Cover::by_balls(&inst.space, max_edge);
            for lattice in &lattices {
                let report = embedding_report(&inst.space, &inst.u, lattice, &cover);
                if report.n_norm > 4.0 * report.m_norm * (1.0 + 1e-3) {
                    return Err(format!(
                        "{} {lattice:?}: n {} vs m {}",
                        inst.label, report.n_norm, report.m_norm
                    ));
                }
                if report.m_local_norm > report.m_norm * (1.0 + 1e-3) {
                    return Err(format!(
                        "{} {lattice:?}: local {} vs global {}",
                        inst.label, report.m_local_norm, report.m_norm
                    ));
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_10_maximal_identities() {
    conclude(10, "maximal operator identities", (|| {
        for seed in 0..20u64 {
            let space = small_space(seed, 4 + (seed as usize % 3), seed % 4 == 0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc2b2_ae35);
            let f = ScalarField::new(
                (0..space.len()).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            );
            let min_dist = (0..space.len())
                .flat_map(|i| (0..space.len()).map(move |j| (i, j)))
                .filter(|&(i, j)| i != j)
                .map(|(i, j)| space.dist(i, j))
                .fold(f64::INFINITY, f64::min);
            let small = maximal_restricted(&space, &f, 0.9 * min_dist);
            let noncentered = maximal_noncentered(&space, &f, 1.0 + (seed % 3) as f64);
            for x in 0..space.len() {
                if space.measure(x) == 0.0 {
                    continue;
                }
                if small.get(x) != f.get(x).abs() {
                    return Err(format!(
                        "seed {seed}: restricted below the separation radius is not |f|"
                    ));
                }
                if noncentered.get(x) < f.get(x).abs() {
                    return Err(format!(
                        "seed {seed}: non-centered maximal drops below |f|"
                    ));
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_11_maximal_constructions() {
    conclude(11, "gradients from maximal functions", (|| {
        let (space, fields) = mmgrad::generate::grid(5, 5, 1.0).unwrap();
        let u = fields["x"].clone();
        let (rho, _) = min_upper_gradient(&space, &u, &FunctionNorm::lp(f64::INFINITY).unwrap());
        let r = 2.0;
        let (g_local, c_local) =
            hajlasz_from_upper_local(&space, &u, &rho, r, 1.0).map_err(|e| e.to_string())?;
        if !c_local.is_finite() {
            return Err("local empirical constant is infinite".into());
        }
        let cover = Cover {
            patches: (0..space.len())
                .map(|z| space.ball(z, r / 4.0).members)
                .collect(),
        };
        let local = check_local_hajlasz(&space, &u, &g_local.scale(c_local), &cover);
        if !local.passed {
            return Err(format!("scaled local field fails: ratio {}", local.worst_ratio));
        }
        let (g_global, c_global) =
            hajlasz_from_upper_global(&space, &u, &rho, 1.0).map_err(|e| e.to_string())?;
        if !c_global.is_finite() {
            return Err("global empirical constant is infinite".into());
        }
        let global = check_hajlasz(&space, &u, &g_global.scale(c_global));
        if !global.passed {
            return Err(format!("scaled global field fails: ratio {}", global.worst_ratio));
        }
        Ok(())
    })());
}

#[test]
fn criterion_12_norm_identities() {
    conclude(12, "norm identities", (|| {
        let mut fields_checked = 0;
        let mut pairs_checked = 0;
        for seed in 0..125u64 {
            let space = small_space(seed, 3 + (seed as usize % 4), seed % 6 == 0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x85eb_ca6b);
            let f = ScalarField::new(
                (0..space.len()).map(|_| rng.gen_range(-4.0..4.0)).collect(),
            );
            let p = rng.gen_range(1.1..4.0);
            let lhs = morrey_norm(&space, &f, p, p);
            let rhs = lp_norm(&space, &f, p);
            if (lhs - rhs).abs() > 1e-12 * rhs.max(1e-12) {
                return Err(format!("seed {seed}: Morrey(p,p) {lhs} vs L^p {rhs}"));
            }
            fields_checked += 1;
            for _ in 0..4 {
                let g = ScalarField::new(
                    f.values.iter().map(|v| v * rng.gen_range(0.0..1.0)).collect(),
                );
                for norm in [FunctionNorm::lp(p).unwrap(), FunctionNorm::morrey(p, p + 1.0).unwrap()]
                {
                    if !lattice_check(&norm, &space, &f, &g) {
                        return Err(format!("seed {seed}: lattice property fails for {norm:?}"));
                    }
                }
                pairs_checked += 1;
            }
        }
        if fields_checked < 100 || pairs_checked < 500 {
            return Err(format!("{fields_checked} fields, {pairs_checked} pairs"));
        }
        Ok(())
    })());
}
