//! Constructive machinery: McShane extension, the Hajlasz-to-upper
//! conversion pipeline with its certificate, patchwise gluing over a
//! cover, and maximal-operator gradient constructions.

use thiserror::Error;

use crate::curves::{enumerate_family, CurveError, Policy};
use crate::gradients::{
    check_hajlasz, check_local_hajlasz, check_strong_hajlasz, check_upper, minimal_factor,
    refine_hajlasz, GradientError, GradientField, ViolationReport,
};
use crate::norms::ScalarField;
use crate::space::{Cover, MetricMeasureSpace, SpaceError};

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("extension anchor set is empty")]
    EmptySet,
    #[error("every point carries an infinite gradient; nothing to anchor the extension")]
    DegenerateGradient,
    #[error("the pointwise Hajlasz check fails on a positive-measure pair; refusing to convert")]
    HajlaszCheckFailed { report: ViolationReport },
    #[error("the patchwise Hajlasz check fails; refusing to glue")]
    LocalCheckFailed { report: ViolationReport },
    #[error("the edge upper-gradient check fails; not an upper gradient")]
    UpperCheckFailed { report: ViolationReport },
    #[error("patches {j} and {m} disagree at the positive-measure point {point:?}")]
    PatchDisagreementOnPositiveMeasure { j: usize, m: usize, point: String },
    #[error(transparent)]
    Gradient(#[from] GradientError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// The Lipschitz extension by infimal convolution:
/// `F(x) = min over anchors y of f(y) + L d(x, y)`.
pub fn mcshane_extend(
    space: &MetricMeasureSpace,
    anchors: &[usize],
    f_on_anchors: &[f64],
    lip: f64,
) -> Result<ScalarField, ConstructionError> {
    if anchors.is_empty() {
        return Err(ConstructionError::EmptySet);
    }
    assert!(lip > 0.0, "Lipschitz constant must be positive");
    assert_eq!(anchors.len(), f_on_anchors.len());
    let values = (0..space.len())
        .map(|x| {
            anchors
                .iter()
                .zip(f_on_anchors)
                .map(|(&y, &fy)| fy + lip * space.dist(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(ScalarField::new(values))
}

/// Sublevel set `{x : g(x) <= 2^k}`; the threshold is inclusive.
pub fn level_set(g: &GradientField, k: i32) -> Vec<usize> {
    let threshold = (2.0f64).powi(k);
    (0..g.len()).filter(|&x| g.get(x) <= threshold).collect()
}

/// Tuning of the conversion pipeline.
#[derive(Debug, Clone, Copy)]
pub struct ConversionConfig {
    /// Extra dyadic levels past the largest finite gradient value.
    pub k_tail: usize,
    /// Hop limit of the simple-path family certifying the factor.
    pub hop_limit: usize,
}

impl Default for ConversionConfig {
    fn default() -> Self {
        ConversionConfig { k_tail: 8, hop_limit: 6 }
    }
}

/// Data of one dyadic level of the conversion pipeline.
#[derive(Debug, Clone)]
pub struct LevelData {
    pub k: i32,
    pub level_set: Vec<usize>,
    /// Lipschitz extension of `u` off the level set, constant `2^(k+1)`.
    pub extension: ScalarField,
    /// Gradient truncated to `2^(k+1)` off the level set.
    pub truncated_gradient: GradientField,
}

/// Full record of the Hajlasz-to-upper conversion.
#[derive(Debug, Clone)]
pub struct ConversionCertificate {
    pub k_min: i32,
    pub k_max: i32,
    pub levels: Vec<LevelData>,
    pub corrected_u: ScalarField,
    pub corrected_g: GradientField,
    /// Points where the refined gradient is infinite.
    pub infinity_set: Vec<usize>,
    /// Whether the extension values on the infinity set stopped changing
    /// over the trailing levels.
    pub stabilized: bool,
    /// Worst increment/integral ratio of the corrected pair over the
    /// simple-path family; at most 4 whenever the preconditions held.
    pub factor: f64,
    /// Per-level identities re-verified during assembly.
    pub levels_verified: bool,
}

fn ceil_log2(x: f64) -> i32 {
    x.log2().ceil() as i32
}

/// Converts a Hajlasz gradient into an upper-gradient certificate: the
/// refined gradient, dyadic sublevel sets, per-level Lipschitz extensions
/// and truncated gradients, the corrected function, and the worst factor
/// over the simple-path family. Four times the refined gradient dominates
/// every certified curve increment.
pub fn hajlasz_to_upper(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    g: &GradientField,
    config: &ConversionConfig,
) -> Result<ConversionCertificate, ConstructionError> {
    let report = check_hajlasz(space, u, g);
    if !report.passed {
        return Err(ConstructionError::HajlaszCheckFailed { report });
    }
    let refined = refine_hajlasz(space, u, g)?;
    let finite: Vec<usize> = (0..space.len()).filter(|&x| refined.get(x).is_finite()).collect();
    if finite.is_empty() {
        return Err(ConstructionError::DegenerateGradient);
    }
    let infinity_set: Vec<usize> =
        (0..space.len()).filter(|&x| refined.get(x).is_infinite()).collect();

    let finite_values: Vec<f64> = finite.iter().map(|&x| refined.get(x)).collect();
    let max_finite = finite_values.iter().copied().fold(0.0f64, f64::max);
    let min_positive =
        finite_values.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);

    let mut k_min = if min_positive.is_finite() {
        ceil_log2(min_positive.max(1.0)) - 1
    } else {
        -1
    };
    while level_set(&refined, k_min).is_empty() {
        k_min += 1;
    }
    let k_hi = if max_finite > 0.0 { ceil_log2(max_finite) } else { 0 };
    let k_max = k_hi.max(k_min) + config.k_tail as i32;

    let mut levels = Vec::new();
    let mut levels_verified = true;
    for k in k_min..=k_max {
        let e_k = level_set(&refined, k);
        let lip = (2.0f64).powi(k + 1);
        let f_on: Vec<f64> = e_k.iter().map(|&x| u.get(x)).collect();
        let mut extension = mcshane_extend(space, &e_k, &f_on, lip)?;
        // The anchor term of the infimal convolution makes the extension
        // equal u on the level set in real arithmetic; pin the values so
        // a rounded cross term can never undercut them by an ulp.
        for &x in &e_k {
            extension.values[x] = u.get(x);
        }
        let truncated = GradientField::new(
            (0..space.len())
                .map(|x| if e_k.contains(&x) { refined.get(x) } else { lip })
                .collect(),
        )?;
        // Per-level identities: the extension agrees with u on the level
        // set, the pair satisfies the strong inequality everywhere, and
        // twice the truncated gradient dominates the edge increments.
        let all: Vec<usize> = (0..space.len()).collect();
        let strong_ok = check_strong_hajlasz(space, &extension, &truncated, &all).passed;
        let agree_ok = e_k.iter().all(|&x| extension.get(x) == u.get(x));
        let edges_ok = space.edges().iter().all(|e| {
            let inc = (extension.get(e.a) - extension.get(e.b)).abs();
            inc <= (truncated.get(e.a) + truncated.get(e.b)) * e.length + 1e-9
        });
        levels_verified &= strong_ok && agree_ok && edges_ok;
        levels.push(LevelData { k, level_set: e_k, extension, truncated_gradient: truncated });
    }

    // Corrected function: u on the union of the level sets, the trailing
    // extension value on the infinity set. On a finite space the limit
    // superior over levels reduces to the last computed level, flagged by
    // whether the trailing values stopped moving.
    let last = &levels[levels.len() - 1];
    let corrected_u = ScalarField::new(
        (0..space.len())
            .map(|x| {
                if refined.get(x).is_finite() {
                    u.get(x)
                } else {
                    last.extension.get(x)
                }
            })
            .collect(),
    );
    let tail = config.k_tail.min(levels.len() - 1);
    let stabilized = infinity_set.iter().all(|&x| {
        let last_val = last.extension.get(x);
        levels[levels.len() - 1 - tail..]
            .iter()
            .all(|lvl| lvl.extension.get(x) == last_val)
    });

    let family = enumerate_family(space, Policy::SimplePaths(config.hop_limit))?;
    let factor = minimal_factor(space, &corrected_u, &refined, &family);

    Ok(ConversionCertificate {
        k_min,
        k_max,
        levels,
        corrected_u,
        corrected_g: refined,
        infinity_set,
        stabilized,
        factor,
        levels_verified,
    })
}

/// Certificate of the patchwise gluing construction.
#[derive(Debug, Clone)]
pub struct GlueCertificate {
    /// Disagreement sets between patch corrections, `(j, m, points)`.
    pub z_sets: Vec<(usize, usize, Vec<usize>)>,
    pub corrected_u: ScalarField,
    pub corrected_g: GradientField,
    pub factor: f64,
    /// Patches whose induced edge graph is disconnected.
    pub disconnected_patches: Vec<usize>,
}

/// Runs the conversion pipeline on each patch of the cover and glues the
/// corrected functions: patch corrections agree off the disagreement sets
/// (all of measure zero), which are zeroed out and carry an infinite
/// gradient.
pub fn glue_local(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    g: &GradientField,
    cover: &Cover,
    config: &ConversionConfig,
) -> Result<GlueCertificate, ConstructionError> {
    cover.validate(space)?;
    let report = check_local_hajlasz(space, u, g, cover);
    if !report.passed {
        return Err(ConstructionError::LocalCheckFailed { report });
    }

    let mut patch_corrections: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut corrected_g = g.values().to_vec();
    let mut disconnected_patches = Vec::new();
    for (j, patch) in cover.patches.iter().enumerate() {
        let (sub, back) = space.subspace(patch);
        if !sub.is_connected() {
            disconnected_patches.push(j);
        }
        let u_sub = u.restrict(&back);
        let g_sub = g.restrict(&back);
        let cert = hajlasz_to_upper(&sub, &u_sub, &g_sub, config)?;
        for (local, &parent) in back.iter().enumerate() {
            if cert.corrected_g.get(local).is_infinite() {
                corrected_g[parent] = f64::INFINITY;
            }
        }
        patch_corrections
            .push(back.iter().enumerate().map(|(l, &p)| (p, cert.corrected_u.get(l))).collect());
    }

    // Disagreement sets between patch corrections.
    let n = space.len();
    let value_of = |j: usize, x: usize| -> Option<f64> {
        patch_corrections[j].iter().find(|&&(p, _)| p == x).map(|&(_, v)| v)
    };
    let mut z_sets = Vec::new();
    let mut in_z = vec![false; n];
    for j in 0..cover.patches.len() {
        for m in j + 1..cover.patches.len() {
            let mut z = Vec::new();
            for x in 0..n {
                if let (Some(vj), Some(vm)) = (value_of(j, x), value_of(m, x)) {
                    if vj != vm {
                        if space.measure(x) > 0.0 {
                            return Err(ConstructionError::PatchDisagreementOnPositiveMeasure {
                                j,
                                m,
                                point: space.id(x).to_string(),
                            });
                        }
                        z.push(x);
                        in_z[x] = true;
                    }
                }
            }
            if !z.is_empty() {
                z_sets.push((j, m, z));
            }
        }
    }
    for x in 0..n {
        if in_z[x] {
            corrected_g[x] = f64::INFINITY;
        }
    }

    // Glued function: the patch correction off the disagreement sets
    // (lowest patch wins; the rest agree by construction), zero on them.
    let corrected_u = ScalarField::new(
        (0..n)
            .map(|x| {
                if in_z[x] {
                    return 0.0;
                }
                for corr in &patch_corrections {
                    if let Some(&(_, v)) = corr.iter().find(|&&(p, _)| p == x) {
                        return v;
                    }
                }
                u.get(x)
            })
            .collect(),
    );

    let corrected_g = GradientField::new(corrected_g)?;
    let family = enumerate_family(space, Policy::SimplePaths(config.hop_limit))?;
    let factor = minimal_factor(space, &corrected_u, &corrected_g, &family);

    Ok(GlueCertificate { z_sets, corrected_u, corrected_g, factor, disconnected_patches })
}

/// The r-th power ball average of `|f|` over the given members. When
/// the positive-measure support is one point the average equals `|f|`
/// there; returning it directly keeps the identity exact in floats.
fn ball_average(
    space: &MetricMeasureSpace,
    f: &ScalarField,
    members: &[usize],
    mass: f64,
    r: f64,
) -> f64 {
    let mut support = members.iter().filter(|&&y| space.measure(y) > 0.0);
    if let (Some(&only), None) = (support.next(), support.next()) {
        return f.get(only).abs();
    }
    let sum: f64 = members
        .iter()
        .map(|&y| crate::norms::mul0(space.measure(y), f.get(y).abs().powf(r)))
        .sum();
    (sum / mass).powf(1.0 / r)
}

/// Restricted maximal function: at each point, the largest ball average
/// of `|f|` over radii up to `R`. Balls of zero measure are skipped.
pub fn maximal_restricted(space: &MetricMeasureSpace, f: &ScalarField, r_max: f64) -> ScalarField {
    assert!(r_max > 0.0, "maximal radius must be positive");
    let mut radii: Vec<f64> =
        space.candidate_radii().into_iter().filter(|&t| t <= r_max).collect();
    radii.push(r_max);
    let values = (0..space.len())
        .map(|x| {
            let mut best = 0.0f64;
            for &t in &radii {
                let ball = space.ball(x, t);
                let mass = space.set_measure(&ball.members);
                if mass == 0.0 {
                    continue;
                }
                best = best.max(ball_average(space, f, &ball.members, mass, 1.0));
            }
            best
        })
        .collect();
    ScalarField::new(values)
}

/// Non-centered maximal operator with exponent `r`: at each point, the
/// supremum of the r-th power ball averages over all candidate balls
/// containing it.
pub fn maximal_noncentered(space: &MetricMeasureSpace, f: &ScalarField, r: f64) -> ScalarField {
    assert!(r >= 1.0, "maximal exponent must be at least 1");
    let mut values = vec![0.0f64; space.len()];
    for ball in space.candidate_balls() {
        let mass = space.set_measure(&ball.members);
        if mass == 0.0 {
            continue;
        }
        let avg = ball_average(space, f, &ball.members, mass, r);
        for &x in &ball.members {
            values[x] = values[x].max(avg);
        }
    }
    ScalarField::new(values)
}

fn worst_pair_ratio(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    field: &GradientField,
    pairs: &[(usize, usize)],
) -> f64 {
    let mut worst = 0.0f64;
    for &(x, y) in pairs {
        let num = (u.get(x) - u.get(y)).abs();
        let den = space.dist(x, y) * (field.get(x) + field.get(y));
        let ratio = if den.is_infinite() { 0.0 } else { crate::norms::ratio0(num, den) };
        worst = worst.max(ratio);
    }
    worst
}

/// Builds a local Hajlasz gradient from an upper gradient through the
/// restricted maximal function: `g_r = (M_r rho^q)^(1/q)` with the cover
/// of radius `r/4` balls. Returns the field and the smallest empirical
/// constant scaling it into a patchwise Hajlasz gradient.
pub fn hajlasz_from_upper_local(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    rho: &GradientField,
    r: f64,
    q: f64,
) -> Result<(GradientField, f64), ConstructionError> {
    assert!(r > 0.0 && q >= 1.0);
    let edges = enumerate_family(space, Policy::Edges)?;
    let report = check_upper(space, u, rho, &edges);
    if !report.passed {
        return Err(ConstructionError::UpperCheckFailed { report });
    }
    let powered = ScalarField::new(rho.values().iter().map(|v| v.powf(q)).collect());
    let maximal = maximal_restricted(space, &powered, r);
    let field =
        GradientField::new(maximal.values.iter().map(|v| v.powf(1.0 / q)).collect())?;

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for z in 0..space.len() {
        let patch = space.ball(z, r / 4.0).members;
        for (k, &x) in patch.iter().enumerate() {
            if space.measure(x) == 0.0 {
                continue;
            }
            for &y in &patch[k + 1..] {
                if space.measure(y) == 0.0 {
                    continue;
                }
                pairs.push(if x < y { (x, y) } else { (y, x) });
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let c_emp = worst_pair_ratio(space, u, &field, &pairs);
    Ok((field, c_emp))
}

/// Global variant through the non-centered maximal operator: returns
/// `M^(r) rho` and the smallest constant scaling it into a global
/// (almost-everywhere) Hajlasz gradient.
pub fn hajlasz_from_upper_global(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    rho: &GradientField,
    r: f64,
) -> Result<(GradientField, f64), ConstructionError> {
    assert!(r >= 1.0);
    let edges = enumerate_family(space, Policy::Edges)?;
    let report = check_upper(space, u, rho, &edges);
    if !report.passed {
        return Err(ConstructionError::UpperCheckFailed { report });
    }
    let field = GradientField::new(
        maximal_noncentered(space, &rho.as_scalar(), r).values,
    )?;
    let pos = space.positive_points();
    let mut pairs = Vec::new();
    for (k, &x) in pos.iter().enumerate() {
        for &y in &pos[k + 1..] {
            pairs.push((x, y));
        }
    }
    let c_emp = worst_pair_ratio(space, u, &field, &pairs);
    Ok((field, c_emp))
}
