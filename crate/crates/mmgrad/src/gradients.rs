//! Verification and minimization for Hajlasz, local Hajlasz, strong
//! Hajlasz and upper gradients: violation certificates, refinement, and
//! minimal comparability factors.

use thiserror::Error;

use crate::curves::{self, CurveFamily};
use crate::norms::{FunctionNorm, ScalarField};
use crate::solver::{self, Objective, PNormCap, Problem, Row};
use crate::space::{Cover, MetricMeasureSpace};

/// Slack admitted when deciding whether a checked ratio passes.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GradientError {
    #[error("gradient field has a negative value at index {0}")]
    NegativeValue(usize),
    #[error(
        "not a Hajlasz gradient: pair ({x:?},{y:?}) with positive measure violates the inequality"
    )]
    NotAHajlaszGradient { x: String, y: String },
}

/// A nonnegative extended-real field on the points of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    values: Vec<f64>,
}

impl GradientField {
    pub fn new(values: Vec<f64>) -> Result<GradientField, GradientError> {
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0)) {
            return Err(GradientError::NegativeValue(i));
        }
        Ok(GradientField { values })
    }

    pub fn zeros(space: &MetricMeasureSpace) -> GradientField {
        GradientField { values: vec![0.0; space.len()] }
    }

    pub fn constant(space: &MetricMeasureSpace, c: f64) -> GradientField {
        assert!(c >= 0.0);
        GradientField { values: vec![c; space.len()] }
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self, c: f64) -> GradientField {
        assert!(c >= 0.0);
        GradientField { values: self.values.iter().map(|v| crate::norms::mul0(c, *v)).collect() }
    }

    pub fn as_scalar(&self) -> ScalarField {
        ScalarField::new(self.values.clone())
    }

    pub fn restrict(&self, points: &[usize]) -> GradientField {
        GradientField { values: points.iter().map(|&x| self.values[x]).collect() }
    }
}

/// What attained the worst ratio of a check.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    None,
    Pair { x: usize, y: usize },
    Curve { index: usize },
}

/// Outcome of a gradient check: the worst required/available ratio over
/// everything checked, with a witness.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub passed: bool,
    pub worst_ratio: f64,
    pub witness: Witness,
    pub checked_count: usize,
}

impl ViolationReport {
    fn from_ratios(worst_ratio: f64, witness: Witness, checked_count: usize) -> ViolationReport {
        ViolationReport {
            passed: worst_ratio <= 1.0 + CHECK_TOL,
            worst_ratio,
            witness,
            checked_count,
        }
    }
}

/// Ratio of a required increment to an available bound: `0/0 -> 0`,
/// `pos/0 -> inf`, anything over an infinite bound is 0.
fn pair_ratio(num: f64, den: f64) -> f64 {
    if den.is_infinite() {
        0.0
    } else {
        crate::norms::ratio0(num, den)
    }
}

fn hajlasz_ratio(space: &MetricMeasureSpace, u: &ScalarField, g: &GradientField, x: usize, y: usize) -> f64 {
    let num = (u.get(x) - u.get(y)).abs();
    let den = space.dist(x, y) * (g.get(x) + g.get(y));
    pair_ratio(num, den)
}

fn check_pairs<I>(space: &MetricMeasureSpace, u: &ScalarField, g: &GradientField, pairs: I) -> ViolationReport
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut worst = 0.0f64;
    let mut witness = Witness::None;
    let mut count = 0usize;
    for (x, y) in pairs {
        count += 1;
        let r = hajlasz_ratio(space, u, g, x, y);
        if r > worst {
            worst = r;
            witness = Witness::Pair { x, y };
        }
    }
    ViolationReport::from_ratios(worst, witness, count)
}

/// Pointwise Hajlasz inequality over all pairs of positive-measure points.
pub fn check_hajlasz(space: &MetricMeasureSpace, u: &ScalarField, g: &GradientField) -> ViolationReport {
    let pos = space.positive_points();
    let pairs = pos
        .iter()
        .enumerate()
        .flat_map(|(k, &x)| pos[k + 1..].iter().map(move |&y| (x, y)))
        .collect::<Vec<_>>();
    check_pairs(space, u, g, pairs)
}

/// The same inequality over every pair of a subset, null points included.
pub fn check_strong_hajlasz(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    g: &GradientField,
    subset: &[usize],
) -> ViolationReport {
    let pairs = subset
        .iter()
        .enumerate()
        .flat_map(|(k, &x)| subset[k + 1..].iter().filter(move |&&y| y != x).map(move |&y| (x, y)))
        .collect::<Vec<_>>();
    check_pairs(space, u, g, pairs)
}

/// The inequality over positive-measure pairs that lie together in some
/// patch of the cover.
pub fn check_local_hajlasz(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    g: &GradientField,
    cover: &Cover,
) -> ViolationReport {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for patch in &cover.patches {
        for (k, &x) in patch.iter().enumerate() {
            if space.measure(x) == 0.0 {
                continue;
            }
            for &y in &patch[k + 1..] {
                if y == x || space.measure(y) == 0.0 {
                    continue;
                }
                let pair = if x < y { (x, y) } else { (y, x) };
                pairs.push(pair);
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    check_pairs(space, u, g, pairs)
}

/// Upper-gradient inequality over every curve of the family.
pub fn check_upper(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    g: &GradientField,
    family: &CurveFamily,
) -> ViolationReport {
    let mut worst = 0.0f64;
    let mut witness = Witness::None;
    let mut count = 0usize;
    for (index, curve) in family.curves.iter().enumerate() {
        count += 1;
        let num = (u.get(curve.start()) - u.get(curve.end())).abs();
        let den = curves::line_integral(space, g, curve);
        let r = pair_ratio(num, den);
        if r > worst {
            worst = r;
            witness = Witness::Curve { index };
        }
    }
    ViolationReport::from_ratios(worst, witness, count)
}

/// p-weak variant: curves forming an exceptional singleton family are
/// skipped.
pub fn check_upper_weak(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    g: &GradientField,
    family: &CurveFamily,
    p: f64,
) -> ViolationReport {
    let kept: Vec<_> = family
        .curves
        .iter()
        .filter(|curve| {
            let single = CurveFamily {
                curves: vec![(*curve).clone()],
                policy: "singleton".to_string(),
            };
            !curves::is_exceptional(space, &single, p)
        })
        .cloned()
        .collect();
    let sub = CurveFamily { curves: kept, policy: family.policy.clone() };
    check_upper(space, u, g, &sub)
}

/// The smallest factor `c` such that `c * g` passes the upper-gradient
/// check on the family: the worst ratio, possibly infinite.
pub fn minimal_factor(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    g: &GradientField,
    family: &CurveFamily,
) -> f64 {
    check_upper(space, u, g, family).worst_ratio
}

/// Refinement: returns `g` with the value lifted to `+inf` on the null
/// points involved in violating pairs, so that the strong inequality
/// holds on the whole space. A violating pair of two positive-measure
/// points breaks the precondition.
pub fn refine_hajlasz(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    g: &GradientField,
) -> Result<GradientField, GradientError> {
    let n = space.len();
    let mut lifted = g.values().to_vec();
    for x in 0..n {
        for y in x + 1..n {
            let r = hajlasz_ratio(space, u, g, x, y);
            if r > 1.0 + CHECK_TOL {
                let mx = space.measure(x);
                let my = space.measure(y);
                if mx > 0.0 && my > 0.0 {
                    return Err(GradientError::NotAHajlaszGradient {
                        x: space.id(x).to_string(),
                        y: space.id(y).to_string(),
                    });
                }
                if mx == 0.0 {
                    lifted[x] = f64::INFINITY;
                }
                if my == 0.0 {
                    lifted[y] = f64::INFINITY;
                }
            }
        }
    }
    Ok(GradientField { values: lifted })
}

/// Which constraint set a minimal Hajlasz gradient must satisfy.
#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    Global,
    Local(&'a Cover),
}

/// Requirement rows `g(x) + g(y) >= rhs` on positive-measure variables.
fn pair_requirements(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    pairs: &[(usize, usize)],
) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for &(x, y) in pairs {
        let r = (u.get(x) - u.get(y)).abs() / space.dist(x, y);
        if r > 0.0 {
            out.push((x, y, r));
        }
    }
    out
}

/// Solves `min ||g||` over nonnegative fields with pairwise covering
/// constraints on the positive-measure points. `free` lists values forced
/// at null points (used by the upper-gradient program, where null points
/// satisfy their edges at no cost).
fn solve_covering(
    space: &MetricMeasureSpace,
    norm: &FunctionNorm,
    requirements: &[(usize, usize, f64)],
    free: &[(usize, f64)],
) -> (GradientField, f64) {
    let vars = space.positive_points();
    let mut var_of = vec![usize::MAX; space.len()];
    for (k, &x) in vars.iter().enumerate() {
        var_of[x] = k;
    }
    let rows: Vec<Row> = requirements
        .iter()
        .map(|&(x, y, rhs)| Row { terms: vec![(var_of[x], 1.0), (var_of[y], 1.0)], rhs })
        .collect();

    let mut values = vec![0.0f64; space.len()];
    for &(v, level) in free {
        values[v] = level;
    }
    if rows.is_empty() {
        let field = GradientField { values };
        let value = norm.evaluate(space, &field.as_scalar());
        return (field, value);
    }

    let x = match *norm {
        FunctionNorm::Lp { p } if p.is_infinite() => solver::solve_minimax(vars.len(), &rows).0,
        FunctionNorm::Lp { p } => {
            let weights: Vec<f64> = vars.iter().map(|&v| space.measure(v)).collect();
            let objective = if p == 1.0 {
                Objective::Linear(weights)
            } else {
                Objective::Power { weights, p }
            };
            solver::solve(&Problem { nvars: vars.len(), objective, rows, caps: vec![] }).x
        }
        FunctionNorm::Morrey { p, q } => {
            // Epigraph variable t holds the Morrey level; one cap per
            // distinct candidate ball of positive mass.
            let t_var = vars.len();
            let mut objective = vec![0.0; vars.len() + 1];
            objective[t_var] = 1.0;
            let mut caps = Vec::new();
            for ball in space.candidate_balls() {
                let mass = space.set_measure(&ball.members);
                if mass == 0.0 {
                    continue;
                }
                let terms: Vec<(usize, f64)> = ball
                    .members
                    .iter()
                    .filter(|&&v| space.measure(v) > 0.0)
                    .map(|&v| (var_of[v], space.measure(v)))
                    .collect();
                if terms.is_empty() {
                    continue;
                }
                caps.push(PNormCap {
                    weight: mass.powf(1.0 / q - 1.0 / p),
                    terms,
                    p,
                    t_var,
                });
            }
            let mut x = solver::solve(&Problem {
                nvars: vars.len() + 1,
                objective: Objective::Linear(objective),
                rows,
                caps,
            })
            .x;
            x.truncate(vars.len());
            x
        }
    };
    for (k, &v) in vars.iter().enumerate() {
        values[v] = x[k];
    }
    let field = GradientField { values };
    let value = norm.evaluate(space, &field.as_scalar());
    (field, value)
}

/// The minimal-norm Hajlasz gradient: minimizes the lattice norm subject
/// to the pointwise inequality over positive-measure pairs, globally or
/// within patches of a cover.
pub fn min_hajlasz_gradient(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    norm: &FunctionNorm,
    mode: Mode<'_>,
) -> (GradientField, f64) {
    let pos = space.positive_points();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    match mode {
        Mode::Global => {
            for (k, &x) in pos.iter().enumerate() {
                for &y in &pos[k + 1..] {
                    pairs.push((x, y));
                }
            }
        }
        Mode::Local(cover) => {
            for patch in &cover.patches {
                for (k, &x) in patch.iter().enumerate() {
                    if space.measure(x) == 0.0 {
                        continue;
                    }
                    for &y in &patch[k + 1..] {
                        if y == x || space.measure(y) == 0.0 {
                            continue;
                        }
                        pairs.push(if x < y { (x, y) } else { (y, x) });
                    }
                }
            }
            pairs.sort_unstable();
            pairs.dedup();
        }
    }
    let requirements = pair_requirements(space, u, &pairs);
    solve_covering(space, norm, &requirements, &[])
}

/// The minimal-norm upper gradient via the per-edge reduction: each edge
/// imposes `(g(x) + g(y))/2 * d >= |u(x) - u(y)|`, which certifies every
/// walk by chaining. Null endpoints carry the requirement for free.
pub fn min_upper_gradient(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    norm: &FunctionNorm,
) -> (GradientField, f64) {
    let mut requirements: Vec<(usize, usize, f64)> = Vec::new();
    let mut free_level = vec![0.0f64; space.len()];
    let mut has_free = vec![false; space.len()];
    for e in space.edges() {
        let need = 2.0 * (u.get(e.a) - u.get(e.b)).abs() / e.length;
        if need <= 0.0 {
            continue;
        }
        let ma = space.measure(e.a);
        let mb = space.measure(e.b);
        if ma > 0.0 && mb > 0.0 {
            requirements.push((e.a, e.b, need));
        } else {
            // A null endpoint absorbs the whole requirement at no cost.
            let v = if ma == 0.0 { e.a } else { e.b };
            free_level[v] = free_level[v].max(need);
            has_free[v] = true;
        }
    }
    let free: Vec<(usize, f64)> = (0..space.len())
        .filter(|&v| has_free[v])
        .map(|v| (v, free_level[v]))
        .collect();
    solve_covering(space, norm, &requirements, &free)
}
