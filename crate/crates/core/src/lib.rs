//! The HiPPO-LegS memory ODE `c' = -(1/t) A c + (1/t) B f` and its
//! discretizations.
//!
//! * [`system`] builds `A`, `B` and the eigenbasis `A = V D V^-1`.
//! * [`oracle`] computes reference states `c(t)` by projecting `f` onto
//!   scaled shifted Legendre polynomials.
//! * [`discretize`] runs forward/backward Euler, bilinear, approximate
//!   bilinear and zero-order hold on uniform meshes; [`closed_form`] gives
//!   the same terminal states from unrolled products.
//! * [`weights`] views each scheme as a quadrature rule
//!   `c^n = (1/n) sum_l alpha_l f(l h)` and compares the weights with their
//!   limit `F`.
//! * [`reconstruct`] decodes states back into functions.
//! * [`harness`] runs convergence studies and fits rates.
//!
//! ```
//! use hippo_legs::{corpus_signal, exact_state, run, LegSSystem, Mesh, Scheme};
//!
//! let sys = LegSSystem::new(8).unwrap();
//! let f = corpus_signal("smooth1").unwrap();
//! let exact = exact_state(&sys, &f, 2.0, 1e-12).unwrap();
//! let approx = run(&sys, &f, Scheme::Bilinear, Mesh::new(1024, 2.0).unwrap()).unwrap();
//! let err = approx.terminal().iter().zip(&exact.c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
//! assert!(err < 1e-5);
//! ```

pub mod closed_form;
pub mod dd;
pub mod discretize;
pub mod error;
pub mod harness;
pub mod io;
pub mod legendre;
pub mod oracle;
pub mod quadrature;
pub mod reconstruct;
pub mod signal;
pub mod system;
pub mod weights;

pub use closed_form::{closed_form_coefficients, closed_form_state};
pub use discretize::{
    local_truncation_error, run, run_samples, run_with_start, step, zoh_transition, Mesh, Scheme, StartRule,
    Stepper, Trajectory,
};
pub use error::{LegsError, Result};
pub use harness::{
    convergence_study, fit_slope, global_error, lte_probe, study_signal, ExperimentConfig, RateReport, SchemeRates,
};
pub use legendre::{legendre_recurrence_residual, shifted_legendre, LegendreBasis};
pub use oracle::{diagonal_exact, exact_state, initial_derivative, initial_state, ExactState};
pub use reconstruct::{reconstruct, reconstruction_error, ReconstructionReport};
pub use signal::{corpus_signal, Regularity, Signal, SignalDescriptor, SignalSpec, CORPUS};
pub use system::{eigendecompose, LegSSystem, MAX_DIM};
pub use weights::{extract_weights, limit_weight_function, weight_deviation, WeightTable};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/system.md")]
    mod system {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/schemes.md")]
    mod schemes {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
    #[doc = include_str!("../../../book/src/convergence.md")]
    mod convergence {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
