//! Gradient calculus on finite metric measure spaces: pointwise and
//! curve-based gradient notions, the constructive conversion between
//! them with an explicit factor-4 certificate, curve moduli, maximal
//! operators, lattice and Sobolev-type norms, and Poincare constants.

pub mod constructions;
pub mod curves;
pub mod generate;
pub mod gradients;
pub mod io;
pub mod norms;
pub(crate) mod solver;
pub mod sobolev;
pub mod space;

pub use constructions::{
    glue_local, hajlasz_from_upper_global, hajlasz_from_upper_local, hajlasz_to_upper, level_set,
    maximal_noncentered, maximal_restricted, mcshane_extend, ConversionCertificate,
    ConversionConfig, GlueCertificate,
};
pub use curves::{
    enumerate_family, is_exceptional, line_integral, modulus, Curve, CurveFamily, ModulusResult,
    Policy,
};
pub use generate::{annulus, grid, random_geometric, random_lipschitz_field};
pub use gradients::{
    check_hajlasz, check_local_hajlasz, check_strong_hajlasz, check_upper, check_upper_weak,
    min_hajlasz_gradient, min_upper_gradient, minimal_factor, refine_hajlasz, GradientField, Mode,
    ViolationReport, Witness,
};
pub use norms::{lattice_check, lp_norm, morrey_norm, FunctionNorm, ScalarField};
pub use sobolev::{
    embedding_report, poincare_constant, sobolev_norm, EmbeddingReport, GradientKind,
    SobolevNormSpec,
};
pub use space::{Ball, Cover, Edge, MetricMeasureSpace};
