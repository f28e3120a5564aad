use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Independent random stream `stream` of the generator seeded with `seed`.
///
/// Trial `k` of an experiment always draws from `stream_rng(seed, k)`, so
/// results do not depend on how trials are scheduled across workers.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Brownian increments driving one trial: `ΔW_k` for the signal and `ΔV_k`
/// for the sensor, each i.i.d. `N(0, dt I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBundle {
    dt: f64,
    steps: usize,
    signal_dim: usize,
    obs_dim: usize,
    w: Vec<f64>,
    v: Vec<f64>,
}

impl PathBundle {
    /// Draws `steps` increments; per step the signal increment is drawn
    /// before the observation increment.
    pub fn generate<R: Rng + ?Sized>(
        dt: f64,
        steps: usize,
        signal_dim: usize,
        obs_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let sd = dt.sqrt();
        let mut w = Vec::with_capacity(steps * signal_dim);
        let mut v = Vec::with_capacity(steps * obs_dim);
        for _ in 0..steps {
            for _ in 0..signal_dim {
                w.push(sd * rng.sample::<f64, _>(StandardNormal));
            }
            for _ in 0..obs_dim {
                v.push(sd * rng.sample::<f64, _>(StandardNormal));
            }
        }
        Ok(Self {
            dt,
            steps,
            signal_dim,
            obs_dim,
            w,
            v,
        })
    }

    pub fn from_seed(
        dt: f64,
        steps: usize,
        signal_dim: usize,
        obs_dim: usize,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        Self::generate(dt, steps, signal_dim, obs_dim, &mut stream_rng(seed, stream))
    }

    /// Bundle with all increments zero (noise-free runs).
    pub fn zeros(dt: f64, steps: usize, signal_dim: usize, obs_dim: usize) -> Self {
        Self {
            dt,
            steps,
            signal_dim,
            obs_dim,
            w: vec![0.0; steps * signal_dim],
            v: vec![0.0; steps * obs_dim],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    /// `ΔW_k`.
    pub fn dw(&self, k: usize) -> &[f64] {
        &self.w[k * self.signal_dim..(k + 1) * self.signal_dim]
    }

    /// `ΔV_k`.
    pub fn dv(&self, k: usize) -> &[f64] {
        &self.v[k * self.obs_dim..(k + 1) * self.obs_dim]
    }
}
