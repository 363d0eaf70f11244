//! Dense linear algebra and control synthesis: norms, spectra, Riccati
//! solving, pole placement and transient-growth bounds.

mod linalg;
mod mat;
mod poles;
mod riccati;
mod transient;

pub use linalg::{
    controllability_rank, eigenvalues, is_symmetric_pd, is_symmetric_psd, min_eigenvalue_sym, operator_norm, psd_sqrt,
    spectral_radius,
};
pub use mat::Mat;
pub use poles::{char_poly_from_eigs, place_poles, spectrum_mismatch, PLACEMENT_TOL};
pub use riccati::{riccati_residual, solve_dare, DareSolution};
pub use transient::{
    default_radii, resolvent_condition, transient_bound_mu, transient_bound_mu_with, TransientBound, NILPOTENT_RHO,
};

pub(crate) use linalg::{operator_norm_raw, spd_inverse};
