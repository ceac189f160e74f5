//! Sharp functional inequalities on Wulff balls: constants, extremals,
//! eigenvalues and the verification of each statement by quadrature.

pub mod constants;
pub mod eigen;
pub mod extremal;
pub mod verify;

pub use constants::{sharp_constants, Family, SharpConstants};
pub use eigen::{plap_eigenfunction, plap_first_eigenvalue, EigenSolution, Eigenfunction};
pub use extremal::{extremal_profile, extremal_profile_q, CaseProfile, ExtremalSpec};
pub use verify::{evaluate_case, family_map, map_for, perturbation_check, PerturbationOutcome};
