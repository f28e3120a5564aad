use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bounds::ProblemConstants;
use crate::dynamics::{FilterState, STEP_STABILITY_MARGIN};
use crate::error::{Error, Result};
use crate::linalg::{Mat, SymMat, Vector};
use crate::models::{observation_params, CubicPair, CubicSite, InteractingPotential, ObservationModel, SignalModel};

type Rows = Vec<Vec<f64>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SignalVsFlow,
    EkfVsSignal,
    CoupledForgetting,
    TraceBound,
    GronwallTest,
    Chi2Laplace,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SignalVsFlow => "signal-vs-flow",
            Scenario::EkfVsSignal => "ekf-vs-signal",
            Scenario::CoupledForgetting => "coupled-forgetting",
            Scenario::TraceBound => "trace-bound",
            Scenario::GronwallTest => "gronwall-test",
            Scenario::Chi2Laplace => "chi2-laplace",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown scenario `{s}`")))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Linear,
    QuadraticCubic,
    Interacting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub variant: Variant,
    #[serde(rename = "A", default)]
    pub a: Option<Rows>,
    #[serde(rename = "Q1", default)]
    pub q1: Option<Rows>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    #[serde(rename = "Q2", default)]
    pub q2: Option<Rows>,
    #[serde(default)]
    pub beta: Option<f64>,
    /// Number of sites of the interacting model.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub u1: Option<f64>,
    #[serde(default)]
    pub u2: Option<f64>,
    #[serde(default)]
    pub kappa1: Option<f64>,
    #[serde(default)]
    pub kappa2: Option<f64>,
    #[serde(rename = "R1")]
    pub r1: Rows,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObsSpec {
    /// Defaults to the identity.
    #[serde(rename = "B", default)]
    pub b: Option<Rows>,
    /// Defaults to the identity.
    #[serde(rename = "R2", default)]
    pub r2: Option<Rows>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSpec {
    #[serde(default = "default_deltas")]
    pub delta_grid: Vec<f64>,
    #[serde(default = "default_orders")]
    pub n_orders: Vec<u32>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub scenario: Option<Scenario>,
    /// Times at which estimates are taken; defaults to `{T/10, T/2, T}`.
    #[serde(default)]
    pub checkpoints: Option<Vec<f64>>,
    /// Slack in the forgetting rate and in the Laplace bounds.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Keep every k-th grid point in forgetting runs and CSV trajectories.
    #[serde(default = "default_every")]
    pub record_every: usize,
}

impl Default for TestSpec {
    fn default() -> Self {
        Self {
            delta_grid: default_deltas(),
            n_orders: default_orders(),
            alpha: default_alpha(),
            scenario: None,
            checkpoints: None,
            epsilon: default_epsilon(),
            record_every: default_every(),
        }
    }
}

fn default_deltas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}
fn default_orders() -> Vec<u32> {
    vec![1, 2]
}
fn default_alpha() -> f64 {
    1.1
}
fn default_epsilon() -> f64 {
    0.5
}
fn default_every() -> usize {
    10
}

/// Initial conditions. The filter mean defaults to the signal start and the
/// Riccati matrix to the identity; the second filter defaults to the first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub xhat0: Option<Vec<f64>>,
    #[serde(rename = "P0", default)]
    pub p0: Option<Rows>,
    #[serde(default)]
    pub xcheck0: Option<Vec<f64>>,
    #[serde(rename = "Pcheck0", default)]
    pub pcheck0: Option<Rows>,
}

/// Synthetic quadratic test process
/// `dY = (−aY + u) dt + √(wY² + vY) dN` with `Y = ‖𝒳‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GronwallSpec {
    pub a: f64,
    pub w: f64,
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub v: f64,
    #[serde(default = "default_x0_norm")]
    pub x0_norm: f64,
}

fn default_x0_norm() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub obs: ObsSpec,
    pub sim: SimSpec,
    #[serde(default)]
    pub test: TestSpec,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub gronwall: Option<GronwallSpec>,
}

/// Everything a scenario needs, built and validated once.
#[derive(Clone, Debug)]
pub struct Problem {
    pub model: SignalModel,
    pub obs: ObservationModel,
    pub x0: Vector,
    pub filter: FilterState,
    pub check: FilterState,
    pub constants: ProblemConstants,
}

fn cfg_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn vector(v: &[f64]) -> Result<Vector> {
    Vector::from_slice(v).map_err(cfg_err)
}

fn sym(rows: &Rows) -> Result<SymMat> {
    SymMat::from_rows(rows).map_err(cfg_err)
}

fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::Config(format!("missing key `{key}`")))
}

impl ModelSpec {
    pub fn build(&self) -> Result<SignalModel> {
        let r1 = sym(&self.r1)?;
        let model = match self.variant {
            Variant::Linear => {
                let a = Mat::from_rows(&need(&self.a, "model.A")?).map_err(cfg_err)?;
                SignalModel::linear(a, r1)
            }
            Variant::QuadraticCubic => {
                let q1 = sym(&need(&self.q1, "model.Q1")?)?;
                let q = match &self.q {
                    Some(q) => vector(q)?,
                    None => Vector::zeros(q1.dim()),
                };
                let q2 = sym(&need(&self.q2, "model.Q2")?)?;
                SignalModel::quadratic_cubic(q1, q, q2, self.beta.unwrap_or(1.0), r1)
            }
            Variant::Interacting => {
                let dim = self.dim.unwrap_or(r1.dim());
                let (u1, u2) = (need(&self.u1, "model.u1")?, need(&self.u2, "model.u2")?);
                let (k1, k2) = (self.kappa1.unwrap_or(0.0), self.kappa2.unwrap_or(0.0));
                let potential = InteractingPotential {
                    site_convexity: u1,
                    pair_convexity: u2,
                    site_lipschitz: k1,
                    pair_lipschitz: k2,
                    beta: self.beta.unwrap_or(1.0),
                    site: Arc::new(CubicSite { convexity: u1, lipschitz: k1 }),
                    pair: Arc::new(CubicPair { convexity: u2, lipschitz: k2 }),
                };
                SignalModel::interacting(dim, potential, r1)
            }
        };
        model.map_err(cfg_err)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the plain-data invariants. Model-dependent checks happen in
    /// [`ExperimentConfig::problem`].
    pub fn validate(&self) -> Result<()> {
        let s = &self.sim;
        if !(s.dt > 0.0) || !(s.horizon > 0.0) || s.dt > s.horizon {
            return Err(Error::Config("need 0 < dt <= T".into()));
        }
        if s.n_trials == 0 {
            return Err(Error::Config("n_trials must be >= 1".into()));
        }
        let t = &self.test;
        if t.delta_grid.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::Config("delta_grid must be nonnegative".into()));
        }
        if t.n_orders.iter().any(|&n| n == 0 || n > 4) {
            return Err(Error::Config("moment orders must lie in 1..=4".into()));
        }
        if !(t.alpha > 1.0) {
            return Err(Error::Config("alpha must be > 1".into()));
        }
        if !(t.epsilon > 0.0 && t.epsilon <= 1.0) {
            return Err(Error::Config("epsilon must lie in (0, 1]".into()));
        }
        if t.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        if let Some(cp) = &t.checkpoints {
            if cp.iter().any(|&c| !(c >= 0.0) || c > s.horizon + 0.5 * s.dt) {
                return Err(Error::Config("checkpoints must lie in [0, T]".into()));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.sim.horizon / self.sim.dt).round() as usize
    }

    /// Checkpoints as grid indices, sorted and deduplicated.
    pub fn checkpoint_steps(&self) -> Vec<usize> {
        let times = self.test.checkpoints.clone().unwrap_or_else(|| {
            let t = self.sim.horizon;
            vec![0.1 * t, 0.5 * t, t]
        });
        let mut steps: Vec<usize> = times
            .iter()
            .map(|&t| ((t / self.sim.dt).round() as usize).min(self.steps()))
            .collect();
        steps.sort_unstable();
        steps.dedup();
        steps
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.test
            .scenario
            .ok_or_else(|| Error::Config("no scenario given (test.scenario or --scenario)".into()))
    }

    /// Builds the models and initial conditions and checks the step size.
    pub fn problem(&self) -> Result<Problem> {
        let spec = self.model.as_ref().ok_or_else(|| Error::Config("missing `model` section".into()))?;
        let model = spec.build()?;
        let n = model.dim();
        let b = match &self.obs.b {
            Some(rows) => Mat::from_rows(rows).map_err(cfg_err)?,
            None => Mat::identity(n),
        };
        let r2 = match &self.obs.r2 {
            Some(rows) => sym(rows)?,
            None => SymMat::identity(b.rows()),
        };
        let obs = observation_params(b, r2).map_err(cfg_err)?;
        if obs.signal_dim() != n {
            return Err(Error::Config(format!("B has {} columns, signal has dimension {n}", obs.signal_dim())));
        }
        let vec_or = |v: &Option<Vec<f64>>, fallback: &Vector| -> Result<Vector> {
            let v = match v {
                Some(v) => vector(v)?,
                None => fallback.clone(),
            };
            if v.dim() != n {
                return Err(Error::Config(format!("initial vector has dimension {}, expected {n}", v.dim())));
            }
            Ok(v)
        };
        let mat_or = |m: &Option<Rows>, fallback: &SymMat| -> Result<SymMat> {
            let m = match m {
                Some(rows) => sym(rows)?,
                None => fallback.clone(),
            };
            if m.dim() != n || !m.is_finite() {
                return Err(Error::Config(format!("initial covariance must be {n}x{n}")));
            }
            Ok(m)
        };
        let x0 = vec_or(&self.init.x0, &Vector::zeros(n))?;
        let xhat0 = vec_or(&self.init.xhat0, &x0)?;
        let p0 = mat_or(&self.init.p0, &SymMat::identity(n))?;
        let xcheck0 = vec_or(&self.init.xcheck0, &xhat0)?;
        let pcheck0 = mat_or(&self.init.pcheck0, &p0)?;
        let constants = ProblemConstants::from_problem(&model, &obs, &p0).map_err(cfg_err)?;
        if self.sim.dt * constants.lambda_jac >= STEP_STABILITY_MARGIN {
            return Err(Error::Config(format!(
                "dt * lambda = {} must stay below {STEP_STABILITY_MARGIN}",
                self.sim.dt * constants.lambda_jac
            )));
        }
        Ok(Problem {
            filter: FilterState::new(xhat0, p0).map_err(cfg_err)?,
            check: FilterState::new(xcheck0, pcheck0).map_err(cfg_err)?,
            model,
            obs,
            x0,
            constants,
        })
    }

    pub fn gronwall_spec(&self) -> Result<GronwallSpec> {
        let g = self
            .gronwall
            .clone()
            .ok_or_else(|| Error::Config("missing `gronwall` section".into()))?;
        if !(g.w >= 0.0 && g.u >= 0.0 && g.v >= 0.0 && g.x0_norm >= 0.0) {
            return Err(Error::Config("gronwall: w, u, v and x0_norm must be nonnegative".into()));
        }
        if (g.u > 0.0 || g.v > 0.0) && g.x0_norm != 0.0 {
            return Err(Error::Config("gronwall: sourced processes start from x0_norm = 0".into()));
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OU: &str = r#"{
        "model": {"variant": "linear", "A": [[-1.0]], "R1": [[1.0]]},
        "sim": {"dt": 0.01, "T": 10.0, "n_trials": 100, "seed": 7},
        "test": {"scenario": "signal-vs-flow", "checkpoints": [1.0, 5.0, 10.0]}
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ExperimentConfig::from_json(OU).unwrap();
        assert_eq!(cfg.scenario().unwrap(), Scenario::SignalVsFlow);
        assert_eq!(cfg.checkpoint_steps(), vec![100, 500, 1000]);
        let p = cfg.problem().unwrap();
        assert_eq!(p.constants.lambda_jac, 2.0);
        assert_eq!(p.filter, p.check);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::from_json("{"), Err(Error::Config(_))));
        let unknown = OU.replace("\"seed\": 7", "\"seed\": 7, \"bogus\": 1");
        assert!(matches!(ExperimentConfig::from_json(&unknown), Err(Error::Config(_))));
        let neg = OU.replace("\"checkpoints\"", "\"delta_grid\": [-1.0], \"checkpoints\"");
        assert!(matches!(ExperimentConfig::from_json(&neg), Err(Error::Config(_))));
        let coarse = OU.replace("0.01", "0.3");
        let cfg = ExperimentConfig::from_json(&coarse).unwrap();
        assert!(matches!(cfg.problem(), Err(Error::Config(_))));
        assert!(Scenario::parse("nope").is_err());
        assert_eq!(Scenario::parse("chi2-laplace").unwrap(), Scenario::Chi2Laplace);
    }
}
