//! Exact finite arithmetic for anchored channel laws.
//!
//! A finite-output `d`-ary local randomizer is represented, up to
//! input-independent output refinements, by a single mean-zero law on a
//! regular-simplex polytope. In that gauge, one-user mixtures are affine
//! tilts, pairwise likelihood ratios are scalar shadows of projective
//! fibers, shuffled privacy profiles have an exact two-point envelope,
//! and mechanism design under pairwise chi-square or raw local-ratio
//! budgets becomes a small moment problem.
//!
//! The numeric core is generic over the scalar type through [`Scalar`];
//! `f64` is the blessed instantiation (the aliases below) and the one the
//! command-line front end uses.

pub mod channel;
pub mod design;
pub mod error;
pub mod linalg;
pub mod projective;
pub mod rawcap;
pub mod sampler;
pub mod scalar;
pub mod shuffle;
pub mod simplex;
pub mod wire;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use channel::{anchor, anchor_in, ldp_check, mixture, pairwise_lr_law, reconstruct};
pub use design::{
    augmented_rr, budget_cap, chi_star, finite_n_optimum, frontier, moment_stats, risk_fc,
    risk_iid, simulate_risk, trace_cap, trace_cap_check, vantrees_bound, vt_prior_info,
};
pub use projective::{fiber, project_point, reconstruct_from_fiber, transport, unproject_point};
pub use rawcap::{rawcap_optimum, rawcap_vs_budget, subset_law, t_curve, varying_cap};
pub use shuffle::{
    brute_force_shuffle, default_alpha_grid, divergence_profile, endpoint_law, envelope,
    envelope_check, nfold_average, rigidity_probe,
};
pub use simplex::{is_extreme, orbit_law, symmetrize};

/// Concrete `f64` aliases for the main domain types.
pub type Basis64 = simplex::SimplexBasis<f64>;
pub type Template64 = simplex::Template<f64>;
pub type Law64 = simplex::AnchoredLaw<f64>;
pub type Channel64 = channel::Channel<f64>;
pub type ScalarLaw64 = channel::ScalarLaw<f64>;
pub type Fiber64 = projective::Fiber<f64>;
pub type Profile64 = shuffle::DivergenceProfile<f64>;

/// `f32` aliases (compile-checked instantiation; tolerances are tiered
/// accordingly).
pub type Basis32 = simplex::SimplexBasis<f32>;
pub type Law32 = simplex::AnchoredLaw<f32>;
