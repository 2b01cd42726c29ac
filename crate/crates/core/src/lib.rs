//! Spectral-Galerkin simulation of the regularized two-phase thin-film
//! system
//!
//! ```text
//! ∂ₜf = -∂ₓ( a³(f)∂ₓ³f + (R/2)(2a³(f) + 3a²(f)a(g)) ∂ₓ³(f+g) )
//! ∂ₜg = -∂ₓ( (3/2)a²(f)a(g)∂ₓ³f + (R/2)(2μa³(g) + 3a²(f)a(g) + 6a(f)a²(g)) ∂ₓ³(f+g) )
//! ```
//!
//! on `(0, L)` with no-flux boundary conditions and `a = a_ε`, together with
//! the diagnostics needed to check mass conservation, energy dissipation
//! and the scaling of the negative parts.

pub mod basis;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod regularization;
pub mod rhs;

pub use basis::{basis_deriv, basis_value, uniform_grid, QuadratureGrid, SpectralBasis};
pub use diagnostics::{
    diagnostics_row, dissipation, energy, negative_part, positivity_sets, weak_residual,
    DiagnosticsRow, WeakResidual,
};
pub use error::{Error, Result};
pub use integrator::{
    adapt_dt, integrate, resume, step, GalerkinSystem, IntegratorControls, Observer, OdeSystem,
    Scheme, StepResult, TrajectoryRecord,
};
pub use regularization::{a_eps, a_eps_pow, chi, Exponent, MollifierFamily, Regularizer};
pub use rhs::{
    assemble_psi, dissipation_fluxes, flux_f, flux_g, GalerkinState, RhsOutput, SystemParams,
};
