//! Signal drift families with their regularity constants, and sensors.
//!
//! Note on the Langevin constants: the logarithmic-norm rate is taken as
//! `λ_∂A = β λ_min(Q₁)/2` (resp. `β (u₁ + (r₁−1) u₂)/2`), which is the
//! explicitly stated pair. A second phrasing of the same condition in terms
//! of `v = 2|λ_∂A|` would give a different factor; the smaller, stated value
//! is used and is conservative either way.

mod observation;
mod potentials;
mod signal;

pub use observation::{
    canonical_change_of_basis, canonical_map, observation_params, to_canonical, ObservationModel,
    CONDITION_S_TOLERANCE,
};
pub use potentials::{CubicPair, CubicSite, PairPotential, SitePotential};
pub use signal::{
    lipschitz_empirical_check, sample_ball, Drift, InteractingPotential, RegularityConstants,
    SignalModel, CUBIC_SINGULARITY_CUTOFF,
};
