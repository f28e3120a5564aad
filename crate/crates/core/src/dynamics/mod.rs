//! Time integration: Euler-Maruyama for the signal and the filter, RK4 for
//! the noise-free flow, and coupled multi-filter runs.
//!
//! The filter-error equation is written with the signal noise entering as
//! `R₁^{1/2} dW`, consistently with the signal model.

mod coupled;
mod ekf;
mod flow;
mod paths;

pub use coupled::{simulate_coupled, Divergence, TrialRecord};
pub use ekf::{step_ekf, FilterState, DIVERGENCE_THRESHOLD};
pub use flow::{
    deterministic_flow, fixed_point, simulate_signal, simulate_signal_recorded,
    STEP_STABILITY_MARGIN,
};
pub use paths::{stream_rng, PathBundle};

/// Which grid points `0..=steps` a simulator keeps.
#[derive(Clone, Debug, PartialEq)]
pub enum Recording {
    /// Every `k`-th grid point, starting at 0.
    Every(usize),
    /// An explicit, sorted list of grid indices.
    At(Vec<usize>),
}

impl Recording {
    pub fn keeps(&self, step: usize) -> bool {
        match self {
            Recording::Every(k) => *k > 0 && step % k == 0,
            Recording::At(list) => list.binary_search(&step).is_ok(),
        }
    }
}
