use serde::Serialize;

use super::ekf::{advance, FilterState};
use super::flow::{check_step, signal_step};
use super::paths::PathBundle;
use super::Recording;
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::Vector;
use crate::models::{ObservationModel, SignalModel};

/// Where and when a coupled trial stopped because a filter left the
/// admissible region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Divergence {
    pub filter: usize,
    pub step: usize,
}

/// Output of a coupled run. States are kept on the recording grid; the
/// Riccati traces are kept at every step.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub dt: f64,
    /// Grid indices of the recorded points.
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub signal: Vec<Vector>,
    /// `filters[f][r]`: filter `f` at recorded point `r`.
    pub filters: Vec<Vec<FilterState>>,
    /// Joint squared distance between the first two filters at each recorded point.
    pub delta: Vec<f64>,
    /// `trace[f][k] = tr(P_k)` of filter `f` at every grid step `k`.
    pub trace: Vec<Vec<f64>>,
    pub diverged: Option<Divergence>,
}

impl TrialRecord {
    /// Recorded index of grid step `k`, when recorded.
    pub fn index_of_step(&self, k: usize) -> Option<usize> {
        self.steps.binary_search(&k).ok()
    }
}

/// Runs one signal path, one observation path and several filters driven by
/// the identical increments `dY_k = B X_k dt + R₂^{1/2} ΔV_k`.
pub fn simulate_coupled(
    model: &SignalModel,
    obs: &ObservationModel,
    x0: &Vector,
    filter_inits: &[FilterState],
    bundle: &PathBundle,
    recording: &Recording,
) -> Result<TrialRecord> {
    let n = model.dim();
    if filter_inits.is_empty() {
        return Err(Error::InvalidArgument("at least one filter is required".into()));
    }
    x0.check_dim(n)?;
    if obs.signal_dim() != n || bundle.signal_dim() != n || bundle.obs_dim() != obs.obs_dim() {
        return Err(dim_mismatch(
            format!("r1 = {n}, r2 = {}", obs.obs_dim()),
            format!("bundle {}/{}", bundle.signal_dim(), bundle.obs_dim()),
        ));
    }
    for f in filter_inits {
        f.mean.check_dim(n)?;
        if f.cov.dim() != n {
            return Err(dim_mismatch(n, f.cov.dim()));
        }
    }
    let dt = bundle.dt();
    check_step(model, dt)?;

    let nf = filter_inits.len();
    let m = obs.obs_dim();
    let b = obs.b();
    let r2s = obs.r2_sqrt();
    let mut x = x0.clone();
    let mut filters: Vec<FilterState> = filter_inits.to_vec();
    let mut rec = TrialRecord {
        dt,
        steps: Vec::new(),
        times: Vec::new(),
        signal: Vec::new(),
        filters: vec![Vec::new(); nf],
        delta: Vec::new(),
        trace: filters
            .iter()
            .map(|f| {
                let mut v = Vec::with_capacity(bundle.steps() + 1);
                v.push(f.cov.trace());
                v
            })
            .collect(),
        diverged: None,
    };
    let keep = |rec: &mut TrialRecord, k: usize, x: &Vector, filters: &[FilterState]| {
        rec.steps.push(k);
        rec.times.push(k as f64 * dt);
        rec.signal.push(x.clone());
        for (slot, f) in rec.filters.iter_mut().zip(filters) {
            slot.push(f.clone());
        }
        if filters.len() >= 2 {
            rec.delta.push(filters[0].joint_dist_sq(&filters[1]));
        }
    };
    if recording.keeps(0) {
        keep(&mut rec, 0, &x, &filters);
    }

    let mut dy = vec![0.0; m];
    for k in 0..bundle.steps() {
        let dv = bundle.dv(k);
        for (r, slot) in dy.iter_mut().enumerate() {
            let bx: f64 = (0..n).map(|c| b.get(r, c) * x[c]).sum();
            let noise: f64 = (0..m).map(|c| r2s.get(r, c) * dv[c]).sum();
            *slot = bx * dt + noise;
        }
        for (fi, f) in filters.iter_mut().enumerate() {
            let ok = advance(f, model, obs, &dy, dt).is_ok() && !f.is_diverged();
            if !ok {
                rec.diverged = Some(Divergence { filter: fi, step: k + 1 });
                return Ok(rec);
            }
            rec.trace[fi].push(f.cov.trace());
        }
        signal_step(model, &mut x, bundle.dw(k), dt);
        if recording.keeps(k + 1) {
            keep(&mut rec, k + 1, &x, &filters);
        }
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Mat, SymMat};
    use crate::models::observation_params;

    fn scalar(a: f64, r1: f64) -> (SignalModel, ObservationModel) {
        (
            SignalModel::linear(
                Mat::from_rows(&[vec![a]]).unwrap(),
                SymMat::from_rows(&[vec![r1]]).unwrap(),
            )
            .unwrap(),
            observation_params(Mat::identity(1), SymMat::identity(1)).unwrap(),
        )
    }

    fn init(x: f64, p: f64) -> FilterState {
        FilterState::new(
            Vector::from_slice(&[x]).unwrap(),
            SymMat::from_rows(&[vec![p]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identical_inits_never_separate() {
        let (m, o) = scalar(-1.0, 0.5);
        let b = PathBundle::from_seed(0.01, 500, 1, 1, 1, 0).unwrap();
        let f = init(2.0, 1.0);
        let rec = simulate_coupled(&m, &o, &Vector::zeros(1), &[f.clone(), f], &b, &Recording::Every(1)).unwrap();
        assert_eq!(rec.delta.len(), 501);
        assert!(rec.delta.iter().all(|&d| d == 0.0));
        assert!(rec.diverged.is_none());
    }

    #[test]
    fn permuting_inits_permutes_outputs() {
        let (m, o) = scalar(-1.0, 0.5);
        let b = PathBundle::from_seed(0.01, 300, 1, 1, 2, 0).unwrap();
        let (f1, f2, f3) = (init(1.0, 0.2), init(-1.0, 2.0), init(0.0, 0.0));
        let x0 = Vector::from_slice(&[0.4]).unwrap();
        let r = Recording::Every(10);
        let a = simulate_coupled(&m, &o, &x0, &[f1.clone(), f2.clone(), f3.clone()], &b, &r).unwrap();
        let c = simulate_coupled(&m, &o, &x0, &[f3, f1, f2], &b, &r).unwrap();
        assert_eq!(a.signal, c.signal);
        assert_eq!(a.filters[0], c.filters[1]);
        assert_eq!(a.filters[1], c.filters[2]);
        assert_eq!(a.filters[2], c.filters[0]);
    }

    #[test]
    fn recording_grid() {
        let (m, o) = scalar(-1.0, 0.5);
        let b = PathBundle::from_seed(0.01, 100, 1, 1, 2, 0).unwrap();
        let rec = simulate_coupled(&m, &o, &Vector::zeros(1), &[init(0.0, 1.0)], &b, &Recording::Every(25)).unwrap();
        assert_eq!(rec.steps, vec![0, 25, 50, 75, 100]);
        assert_eq!(rec.trace[0].len(), 101);
        assert!(rec.delta.is_empty());
        assert_eq!(rec.index_of_step(50), Some(2));
    }

    #[test]
    fn divergence_is_recorded_not_propagated() {
        // a huge P0 turns the first innovation into a jump far past the guard
        let (m, o) = scalar(-1.0, 0.5);
        let b = PathBundle::from_seed(0.2, 50, 1, 1, 3, 0).unwrap();
        let x0 = Vector::from_slice(&[5.0]).unwrap();
        let rec = simulate_coupled(&m, &o, &x0, &[init(0.0, 1e9)], &b, &Recording::Every(1)).unwrap();
        assert!(rec.diverged.is_some());
        assert!(rec.trace[0].iter().all(|v| v.is_finite()));
    }

    #[test]
    fn requires_a_filter() {
        let (m, o) = scalar(-1.0, 0.5);
        let b = PathBundle::zeros(0.01, 10, 1, 1);
        assert!(simulate_coupled(&m, &o, &Vector::zeros(1), &[], &b, &Recording::Every(1)).is_err());
    }
}
