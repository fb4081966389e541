//! Numerical toolkit for vector-valued horofunction compactifications of
//! the symmetric space of `SL(d, R)`: Cartan and Iwasawa data, boundary
//! points, shadows, orbit enumeration and Patterson-Sullivan measures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomp;
pub mod error;
pub mod groups;
pub mod horo;
pub mod linalg;
pub mod orbit;
pub mod pattern_search;
pub mod patterson;
pub mod sampling;
pub mod shadow;
pub mod weyl;

pub use decomp::{
    cartan_projection, cartan_projection_with_inverse, flag_projection, iwasawa_cocycle_full,
    iwasawa_cocycle_partial, kak, symmetric_distance, KakDecomposition, PartialFlag,
};
pub use error::{Error, Result};
pub use linalg::{exterior_power, qr_positive, subspace_gap, svd, Matrix, SvdResult};
pub use weyl::{
    chamber_margin, fundamental_weight, istar_theta, opposition_involution, partial_projection,
    simple_root, CartanVector, Functional, ThetaSubset,
};
pub use horo::{
    act, busemann_raw, cocycle_B, compactification_distance, embed_flag, evaluate, orbit_limit,
    CompactificationPoint, EndoRep, HorofunctionPoint, ProbeSet,
};
pub use orbit::{
    enumerate_ball, limit_set_sample, regularity_report, BallConfig, GroupPresentation,
    OrbitElement,
};
pub use patterson::{
    critical_exponent, patterson_measure, poincare_abscissa, ps_axiom_report,
    quasi_invariance_report, shadow_lemma_report, AtomicMeasure, ExponentEstimate, HMode,
};
pub use shadow::{
    calibrate_comparison_radius, conical_witness, shadow_diameter, shadow_membership,
    symmetric_shadow_membership, ShadowSpec, ShadowVerdict,
};
