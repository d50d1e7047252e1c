//! Sobolev-type norms built on a lattice norm and a minimal-gradient
//! solver, Poincare constants, and embedding reports.

use crate::gradients::{min_hajlasz_gradient, min_upper_gradient, GradientField, Mode};
use crate::norms::{mul0, ratio0, FunctionNorm, ScalarField};
use crate::space::{Cover, MetricMeasureSpace};

/// Which gradient family the infimum ranges over.
#[derive(Debug, Clone)]
pub enum GradientKind {
    Hajlasz,
    Upper,
    LocalHajlasz(Cover),
}

/// A Sobolev-type norm: lattice norm of u (unless homogeneous) plus the
/// infimal lattice norm over the chosen gradient family.
#[derive(Debug, Clone)]
pub struct SobolevNormSpec {
    pub gradient_kind: GradientKind,
    pub lattice: FunctionNorm,
    pub homogeneous: bool,
}

/// Evaluates the Sobolev norm and returns the minimizing gradient.
pub fn sobolev_norm(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    spec: &SobolevNormSpec,
) -> (f64, GradientField) {
    let (g, g_norm) = match &spec.gradient_kind {
        GradientKind::Hajlasz => min_hajlasz_gradient(space, u, &spec.lattice, Mode::Global),
        GradientKind::Upper => min_upper_gradient(space, u, &spec.lattice),
        GradientKind::LocalHajlasz(cover) => {
            min_hajlasz_gradient(space, u, &spec.lattice, Mode::Local(cover))
        }
    };
    let base = if spec.homogeneous { 0.0 } else { spec.lattice.evaluate(space, u) };
    (base + g_norm, g)
}

/// The smallest constant making the ball Poincare inequality hold: the
/// maximum over candidate balls of radius below `r0` of
/// `average oscillation / (r * inflated-ball L^p average of g)`.
pub fn poincare_constant(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    g: &GradientField,
    p: f64,
    lambda: f64,
    r0: f64,
) -> f64 {
    assert!(p >= 1.0 && lambda >= 1.0 && r0 > 0.0);
    let mut worst = 0.0f64;
    for r in space.candidate_radii() {
        if r >= r0 {
            continue;
        }
        for x in 0..space.len() {
            let ball = space.ball(x, r);
            let mass = space.set_measure(&ball.members);
            if mass == 0.0 {
                continue;
            }
            let u_avg = ball
                .members
                .iter()
                .map(|&y| mul0(space.measure(y), u.get(y)))
                .sum::<f64>()
                / mass;
            let lhs = ball
                .members
                .iter()
                .map(|&y| mul0(space.measure(y), (u.get(y) - u_avg).abs()))
                .sum::<f64>()
                / mass;
            let inflated = space.ball(x, lambda * r);
            let inflated_mass = space.set_measure(&inflated.members);
            let bracket = if inflated_mass == 0.0 {
                0.0
            } else {
                (inflated
                    .members
                    .iter()
                    .map(|&y| {
                        let m = space.measure(y);
                        if m == 0.0 {
                            0.0
                        } else {
                            m * g.get(y).powf(p)
                        }
                    })
                    .sum::<f64>()
                    / inflated_mass)
                    .powf(1.0 / p)
            };
            let ratio = if bracket.is_infinite() { 0.0 } else { ratio0(lhs, r * bracket) };
            worst = worst.max(ratio);
        }
    }
    worst
}

/// Relative comparison of the three Sobolev norms over one lattice.
#[derive(Debug, Clone)]
pub struct EmbeddingReport {
    pub m_norm: f64,
    pub n_norm: f64,
    pub m_local_norm: f64,
    pub ratio_n_over_m: f64,
    pub ratio_n_over_m_local: f64,
    pub bound_ok: bool,
}

const EMBED_TOL: f64 = 1e-3;

/// Computes the Hajlasz, Newtonian, and patchwise Sobolev norms of `u`
/// over the lattice and checks the factor-4 embedding bound together
/// with the feasible-set inclusion of local below global.
pub fn embedding_report(
    space: &MetricMeasureSpace,
    u: &ScalarField,
    lattice: &FunctionNorm,
    cover: &Cover,
) -> EmbeddingReport {
    let base = SobolevNormSpec {
        gradient_kind: GradientKind::Hajlasz,
        lattice: *lattice,
        homogeneous: false,
    };
    let (m_norm, _) = sobolev_norm(space, u, &base);
    let (n_norm, _) = sobolev_norm(
        space,
        u,
        &SobolevNormSpec { gradient_kind: GradientKind::Upper, ..base.clone() },
    );
    let (m_local_norm, _) = sobolev_norm(
        space,
        u,
        &SobolevNormSpec { gradient_kind: GradientKind::LocalHajlasz(cover.clone()), ..base },
    );
    let bound_ok = n_norm <= 4.0 * m_norm * (1.0 + EMBED_TOL)
        && m_local_norm <= m_norm * (1.0 + EMBED_TOL);
    EmbeddingReport {
        m_norm,
        n_norm,
        m_local_norm,
        ratio_n_over_m: ratio0(n_norm, m_norm),
        ratio_n_over_m_local: ratio0(n_norm, m_local_norm),
        bound_ok,
    }
}
