use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::config::{ExperimentConfig, GronwallSpec, Problem, Scenario};
use super::parallel::map_trials;
use super::stats::{bootstrap_mean, mann_kendall, ols, wilson, EstimateWithCI, MannKendall, BOOTSTRAP_RESAMPLES};
use crate::bounds::{
    check_conditions, chi, chi_laplace_bound, ekf_radius, gronwall_moment_rhs, hilbert_rhs, laplace_rhs,
    lyapunov_rate, moment_bound_xhat, signal_laplace_coefficient, signal_moment_bound, signal_radius, tau_t,
    xhat_laplace_coefficient, ConditionFlags,
};
use crate::dynamics::{
    deterministic_flow, simulate_coupled, simulate_signal_recorded, stream_rng, PathBundle, Recording,
};
use crate::error::{Error, Result};
use crate::linalg::{sym_sqrt, Vector};
use crate::models::{lipschitz_empirical_check, sample_ball, SignalModel};

/// Bootstrap streams live far above the trial streams.
const BOOTSTRAP_STREAM_BASE: u64 = 1 << 40;

/// Laplace estimates compare against the uniform bound with `u/v = ¼`.
const LAPLACE_RATIO: (f64, f64) = (1.0, 4.0);

pub mod refs {
    pub const SIGNAL_EVENT: &str = "P(|X_t - phi_t(x)|^2 <= varpi(delta) tr(R1)/lambda_A) >= 1 - exp(-delta)";
    pub const EKF_EVENT: &str = "P(|X_t - Xhat_t|^2 <= 4 varpi(delta) (tr(R1)/lambda_A) sigma^2 + 2 exp(-lambda t)|x - xhat|^2 + 8 varpi(delta) ramp(t) rho(S) tr(p)^2) >= 1 - exp(-delta)";
    pub const SIGNAL_MOMENT: &str = "E(|phi_t(x) - X_t|^(2n))^(1/n) <= (n - 1/2) tr(R1)/lambda_A";
    pub const FILTER_MOMENT: &str = "E(|phi_t(Xhat_0) - Xhat_t|^n)^(2/n) <= (2n - 1){(tr(R1)/lambda_A) sigma^2/2 + ramp(t) rho(S) tr(P0)^2}";
    pub const SIGNAL_LAPLACE: &str = "E exp((1 - eps)/(4e) (lambda_A/tr(R1)) |phi_t(x) - X_t|^2) <= 1/2 exp((1 - eps)/(4e)) + e/(2 sqrt(2 eps))";
    pub const FILTER_LAPLACE: &str = "E exp((1 - eps)/(4e sigma^2) (lambda_A/tr(R1)) |phi_t(Xhat_0) - Xhat_t|^2) <= 1/2 exp((1 - eps)/(4e)) + e/(2 sqrt(2 eps))";
    pub const CHI_LAPLACE: &str = "E exp(|X_0 - Xhat_0|^2 / chi(P0)) <= e, chi(P0) = 4 r1 rho(P0)";
    pub const TRACE: &str = "tr(P_t) <= tau_t = exp(-lambda t) tr(P0) + tr(R1)/lambda";
    pub const FORGETTING_RATE: &str = "E(Delta_t^(delta/2) | F_s)^(2/delta) <= Z_s exp(-(1 - eps) Lambda (t - s)) Delta_s";
    pub const FORGETTING_UNIFORM: &str = "sup_t E(Delta_t^n) < infinity";
    pub const HILBERT: &str = "E|X_t|^n <= E(exp(int n rho(A) + n(n - 1)/2 W))^(1/2) |X_0|^n";
    pub const HILBERT_SOURCED: &str = "E(|X_t|^n)^(2/n) <= int_0^t exp(-[int_s^t lambda_n + (n - 1)/2 int_0^s w]) (u_s + (n - 1)/2 v_s) ds";
    pub const FLOW: &str = "|phi_t(x) - phi_t(y)| <= exp(-lambda t/2) |x - y|";
    pub const LIPSCHITZ: &str = "|dA(x) - dA(y)| <= kappa |x - y|";
}

/// One row of an event-frequency table.
#[derive(Clone, Debug, Serialize)]
pub struct EventRow {
    pub t: f64,
    pub delta: f64,
    pub radius: f64,
    pub estimate: EstimateWithCI,
    pub threshold: f64,
    pub pass: bool,
    /// Trials that left the admissible region; counted as event failures.
    pub diverged: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub n: u32,
    /// Estimate of `E‖·‖^{2n}`.
    pub estimate: EstimateWithCI,
    pub bound: f64,
    pub pass: bool,
    pub diverged: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LaplaceRow {
    pub t: f64,
    pub coefficient: f64,
    pub estimate: Option<EstimateWithCI>,
    pub bound: f64,
    pub pass: bool,
    /// Trials whose exponential overflowed.
    pub overflowed: usize,
}

/// Squared errors at every checkpoint of every trial.
#[derive(Clone, Debug)]
pub struct ErrorSamples {
    pub scenario: Scenario,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    /// `event[c][k]`: error entering the event at checkpoint `c`, trial `k`.
    pub event: Vec<Vec<f64>>,
    /// Error entering the moment and Laplace estimates.
    pub moment: Vec<Vec<f64>>,
    pub diverged: Vec<bool>,
}

impl ErrorSamples {
    pub fn n_diverged(&self) -> usize {
        self.diverged.iter().filter(|&&d| d).count()
    }
}

/// Simulates `n_trials` independent trials of `signal-vs-flow` or
/// `ekf-vs-signal` and collects the squared errors at the checkpoints.
///
/// `signal-vs-flow`: both errors are `‖X_t − φ_t(x₀)‖²`.
/// `ekf-vs-signal`: events use `‖X_t − X̂_t‖²`, moments `‖φ_t(X̂₀) − X̂_t‖²`.
///
/// `φ` is the noise-free Euler path on the same grid, so that the
/// discretisation error of the scheme does not leak into the comparison.
pub fn sample_errors(cfg: &ExperimentConfig, p: &Problem, scenario: Scenario) -> Result<ErrorSamples> {
    let dt = cfg.sim.dt;
    let steps = cfg.steps();
    let checkpoints = cfg.checkpoint_steps();
    let recording = Recording::At(checkpoints.clone());
    let (n, m) = (p.model.dim(), p.obs.obs_dim());
    let seed = cfg.sim.seed;

    type Trial = Result<Option<Vec<(f64, f64)>>>;
    let trials: Vec<Trial> = match scenario {
        Scenario::SignalVsFlow => {
            let flow = euler_flow(&p.model, &p.x0, dt, steps, n, m)?;
            map_trials(cfg.sim.n_trials, |k| {
                let bundle = PathBundle::from_seed(dt, steps, n, m, seed, k as u64)?;
                let path = simulate_signal_recorded(&p.model, &p.x0, &bundle, &recording)?;
                Ok(Some(
                    path.iter()
                        .zip(&checkpoints)
                        .map(|(x, &s)| {
                            let e = x.dist_sq(&flow[s]);
                            (e, e)
                        })
                        .collect(),
                ))
            })
        }
        Scenario::EkfVsSignal => {
            let flow = euler_flow(&p.model, &p.filter.mean, dt, steps, n, m)?;
            let inits = [p.filter.clone()];
            map_trials(cfg.sim.n_trials, |k| {
                let bundle = PathBundle::from_seed(dt, steps, n, m, seed, k as u64)?;
                let rec = simulate_coupled(&p.model, &p.obs, &p.x0, &inits, &bundle, &recording)?;
                if rec.diverged.is_some() {
                    return Ok(None);
                }
                Ok(Some(
                    rec.signal
                        .iter()
                        .zip(&rec.filters[0])
                        .zip(&checkpoints)
                        .map(|((x, f), &s)| (x.dist_sq(&f.mean), flow[s].dist_sq(&f.mean)))
                        .collect(),
                ))
            })
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "error sampling needs signal-vs-flow or ekf-vs-signal, got {other}"
            )))
        }
    };

    let c = checkpoints.len();
    let mut out = ErrorSamples {
        scenario,
        times: checkpoints.iter().map(|&s| s as f64 * dt).collect(),
        steps: checkpoints,
        event: vec![Vec::with_capacity(trials.len()); c],
        moment: vec![Vec::with_capacity(trials.len()); c],
        diverged: Vec::with_capacity(trials.len()),
    };
    for t in trials {
        match t? {
            Some(errs) => {
                for (i, (e, mo)) in errs.into_iter().enumerate() {
                    out.event[i].push(e);
                    out.moment[i].push(mo);
                }
                out.diverged.push(false);
            }
            None => {
                for i in 0..c {
                    out.event[i].push(f64::NAN);
                    out.moment[i].push(f64::NAN);
                }
                out.diverged.push(true);
            }
        }
    }
    Ok(out)
}

fn euler_flow(model: &SignalModel, x0: &Vector, dt: f64, steps: usize, n: usize, m: usize) -> Result<Vec<Vector>> {
    simulate_signal_recorded(model, x0, &PathBundle::zeros(dt, steps, n, m), &Recording::Every(1))
}

/// Event frequencies with Wilson intervals for every `(δ, t)`.
pub fn event_rows(cfg: &ExperimentConfig, p: &Problem, s: &ErrorSamples) -> Result<Vec<EventRow>> {
    let c = &p.constants;
    let init_err = p.x0.dist_sq(&p.filter.mean);
    let tr_p = p.filter.cov.trace();
    let diverged = s.n_diverged();
    let mut rows = Vec::new();
    for &delta in &cfg.test.delta_grid {
        for (i, &t) in s.times.iter().enumerate() {
            let radius = match s.scenario {
                Scenario::EkfVsSignal => ekf_radius(c, delta, t, init_err, tr_p)?,
                _ => signal_radius(c, delta)?,
            };
            // NaN marks a diverged trial and never counts as a success
            let hits = s.event[i].iter().filter(|&&e| e <= radius).count();
            let estimate = wilson(hits, s.event[i].len())?;
            let threshold = 1.0 - (-delta).exp();
            rows.push(EventRow {
                t,
                delta,
                radius,
                estimate,
                threshold,
                pass: estimate.ci_high >= threshold || estimate.point >= threshold,
                diverged,
            });
        }
    }
    Ok(rows)
}

fn finite(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().filter(|v| v.is_finite()).collect()
}

/// Empirical `E‖·‖^{2n}` with bootstrap intervals against the closed-form bounds.
pub fn moment_rows(cfg: &ExperimentConfig, p: &Problem, s: &ErrorSamples) -> Result<Vec<MomentRow>> {
    let c = &p.constants;
    let diverged = s.n_diverged();
    let mut rows = Vec::new();
    let mut stream = BOOTSTRAP_STREAM_BASE;
    for &n in &cfg.test.n_orders {
        for (i, &t) in s.times.iter().enumerate() {
            let bound = match s.scenario {
                Scenario::EkfVsSignal => moment_bound_xhat(c, 2 * n, t)?.powi(n as i32),
                _ => signal_moment_bound(c, n)?.powi(n as i32),
            };
            let samples: Vec<f64> = finite(&s.moment[i]).iter().map(|e| e.powi(n as i32)).collect();
            if samples.is_empty() {
                return Err(Error::Inconclusive("every trial diverged".into()));
            }
            let estimate = bootstrap_mean(&samples, BOOTSTRAP_RESAMPLES, cfg.sim.seed, stream)?;
            stream += 1;
            rows.push(MomentRow {
                t,
                n,
                estimate,
                bound,
                pass: estimate.ci_low <= bound,
                diverged,
            });
        }
    }
    Ok(rows)
}

/// Empirical `E exp(coef·‖·‖²)` against the uniform Laplace bound.
pub fn laplace_rows(cfg: &ExperimentConfig, p: &Problem, s: &ErrorSamples) -> Result<Vec<LaplaceRow>> {
    let eps = cfg.test.epsilon;
    let coefficient = match s.scenario {
        Scenario::EkfVsSignal => xhat_laplace_coefficient(&p.constants, eps)?,
        _ => signal_laplace_coefficient(&p.constants, eps)?,
    };
    let bound = laplace_rhs(eps, LAPLACE_RATIO.0, LAPLACE_RATIO.1)?;
    let mut rows = Vec::new();
    let mut stream = BOOTSTRAP_STREAM_BASE + (1 << 20);
    for (i, &t) in s.times.iter().enumerate() {
        let raw: Vec<f64> = finite(&s.moment[i]).iter().map(|e| (coefficient * e).exp()).collect();
        let overflowed = raw.iter().filter(|v| !v.is_finite()).count();
        let samples = finite(&raw);
        let estimate = if samples.is_empty() {
            None
        } else {
            Some(bootstrap_mean(&samples, BOOTSTRAP_RESAMPLES, cfg.sim.seed, stream)?)
        };
        stream += 1;
        rows.push(LaplaceRow {
            t,
            coefficient,
            estimate,
            bound,
            pass: overflowed == 0 && estimate.is_some_and(|e| e.ci_low <= bound),
            overflowed,
        });
    }
    Ok(rows)
}

pub fn estimate_event_probability(cfg: &ExperimentConfig) -> Result<Vec<EventRow>> {
    let p = cfg.problem()?;
    let s = sample_errors(cfg, &p, cfg.scenario()?)?;
    event_rows(cfg, &p, &s)
}

pub fn estimate_moments(cfg: &ExperimentConfig) -> Result<Vec<MomentRow>> {
    let p = cfg.problem()?;
    let s = sample_errors(cfg, &p, cfg.scenario()?)?;
    moment_rows(cfg, &p, &s)
}

/// Laplace estimate of `E exp(‖X₀ − X̂₀‖²/χ(P₀))` for `X₀ − X̂₀ ~ N(0, P₀)`.
#[derive(Clone, Debug, Serialize)]
pub struct Chi2Laplace {
    pub chi: f64,
    pub estimate: EstimateWithCI,
    pub bound: f64,
    pub pass: bool,
}

pub fn estimate_chi2_laplace(cfg: &ExperimentConfig) -> Result<Chi2Laplace> {
    let p = cfg.problem()?;
    let c = &p.constants;
    let chi = chi(c);
    if chi == 0.0 {
        // P₀ = 0: the error vanishes and the expectation is exactly 1
        let one = EstimateWithCI {
            point: 1.0,
            ci_low: 1.0,
            ci_high: 1.0,
            n: cfg.sim.n_trials,
            method: super::stats::CiMethod::Bootstrap,
        };
        return Ok(Chi2Laplace { chi, estimate: one, bound: chi_laplace_bound(), pass: true });
    }
    let root = sym_sqrt(&p.filter.cov)?;
    let n = p.model.dim();
    let seed = cfg.sim.seed;
    let samples = map_trials(cfg.sim.n_trials, |k| {
        let mut rng = stream_rng(seed, k as u64);
        let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let z = root.mul_vec(&Vector::from_vec_unchecked(xi)).map(|z| z.norm_sq());
        z.map(|q| (q / chi).exp())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let estimate = bootstrap_mean(&samples, BOOTSTRAP_RESAMPLES, seed, BOOTSTRAP_STREAM_BASE)?;
    let bound = chi_laplace_bound();
    Ok(Chi2Laplace { chi, estimate, bound, pass: estimate.ci_low <= bound })
}

/// Pathwise `max(tr P_t − τ_t)` over trials and grid steps.
#[derive(Clone, Debug, Serialize)]
pub struct TraceReport {
    pub max_violation: f64,
    pub tolerance: f64,
    pub worst_trial: usize,
    pub worst_t: f64,
    pub diverged: usize,
    pub pass: bool,
    /// `(t, τ_t, max over trials of tr P_t, mean over trials of tr P_t)` on the recording grid.
    #[serde(skip)]
    pub profile: Vec<[f64; 4]>,
}

pub fn verify_trace_bound(cfg: &ExperimentConfig) -> Result<TraceReport> {
    let p = cfg.problem()?;
    let c = p.constants;
    let dt = cfg.sim.dt;
    let steps = cfg.steps();
    let every = cfg.test.record_every;
    let (n, m) = (p.model.dim(), p.obs.obs_dim());
    let tau: Vec<f64> = (0..=steps).map(|k| tau_t(&c, k as f64 * dt)).collect::<Result<_>>()?;
    let inits = [p.filter.clone()];
    let seed = cfg.sim.seed;
    let none = Recording::At(Vec::new());
    let per_trial = map_trials(cfg.sim.n_trials, |k| -> Result<(f64, usize, bool, Vec<f64>)> {
        let bundle = PathBundle::from_seed(dt, steps, n, m, seed, k as u64)?;
        let rec = simulate_coupled(&p.model, &p.obs, &p.x0, &inits, &bundle, &none)?;
        let trace = &rec.trace[0];
        let (mut worst, mut at) = (f64::NEG_INFINITY, 0);
        for (s, (tr, t)) in trace.iter().zip(&tau).enumerate() {
            if tr - t > worst {
                worst = tr - t;
                at = s;
            }
        }
        let thin = trace.iter().step_by(every).copied().collect();
        Ok((worst, at, rec.diverged.is_some(), thin))
    });

    let grid: Vec<usize> = (0..=steps).step_by(every).collect();
    let mut max_tr = vec![f64::NEG_INFINITY; grid.len()];
    let mut sum_tr = vec![0.0; grid.len()];
    let mut count = vec![0usize; grid.len()];
    let mut report = TraceReport {
        max_violation: f64::NEG_INFINITY,
        tolerance: 5.0 * dt * c.tr_r1,
        worst_trial: 0,
        worst_t: 0.0,
        diverged: 0,
        pass: false,
        profile: Vec::new(),
    };
    for (k, trial) in per_trial.into_iter().enumerate() {
        let (worst, at, diverged, thin) = trial?;
        report.diverged += diverged as usize;
        if worst > report.max_violation {
            report.max_violation = worst;
            report.worst_trial = k;
            report.worst_t = at as f64 * dt;
        }
        for (i, v) in thin.into_iter().enumerate() {
            max_tr[i] = max_tr[i].max(v);
            sum_tr[i] += v;
            count[i] += 1;
        }
    }
    report.pass = report.diverged == 0 && report.max_violation <= report.tolerance;
    report.profile = grid
        .iter()
        .enumerate()
        .map(|(i, &s)| [s as f64 * dt, tau[s], max_tr[i], sum_tr[i] / count[i].max(1) as f64])
        .collect();
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformMoment {
    pub n: u32,
    pub sup: f64,
    pub trend: MannKendall,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ForgettingReport {
    pub flags: ConditionFlags,
    /// `Λ`
    pub lambda: f64,
    pub delta_exponent: f64,
    pub epsilon: f64,
    pub fitted_rate: f64,
    pub slack: f64,
    pub threshold: f64,
    pub fit_points: usize,
    pub rate_pass: bool,
    pub uniform: Vec<UniformMoment>,
    pub diverged: usize,
    pub pass: bool,
    /// `(t, mean Δ^{δ/2}, mean Δⁿ for each order)` on the recording grid.
    #[serde(skip)]
    pub profile: Vec<Vec<f64>>,
}

/// Fraction of the horizon discarded before the rate fit.
pub const BURN_IN_FRACTION: f64 = 0.2;
/// Mean values below this are excluded from the log-linear fit.
pub const FIT_FLOOR: f64 = 1e-12;

pub fn estimate_forgetting_rate(cfg: &ExperimentConfig) -> Result<ForgettingReport> {
    let p = cfg.problem()?;
    let c = p.constants;
    if p.filter == p.check {
        return Err(Error::DegenerateInput("the two filters start identically".into()));
    }
    let flags = check_conditions(&c, cfg.test.alpha)?;
    if !flags.all() {
        return Err(Error::ConditionsNotMet(format!(
            "reg-hyp {} (rhs {:.4e}), HAS-0 {} (lhs {:.4e})",
            flags.reg_hyp, flags.reg_hyp_rhs, flags.has0, flags.has0_lhs
        )));
    }
    let rate = lyapunov_rate(&c)?;
    let dt = cfg.sim.dt;
    let steps = cfg.steps();
    let recording = Recording::Every(cfg.test.record_every);
    let (n, m) = (p.model.dim(), p.obs.obs_dim());
    let seed = cfg.sim.seed;
    let inits = [p.filter.clone(), p.check.clone()];
    let runs = map_trials(cfg.sim.n_trials, |k| -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let bundle = PathBundle::from_seed(dt, steps, n, m, seed, k as u64)?;
        let rec = simulate_coupled(&p.model, &p.obs, &p.x0, &inits, &bundle, &recording)?;
        Ok(rec.diverged.is_none().then_some((rec.times, rec.delta)))
    });

    let orders = cfg.test.n_orders.clone();
    let half = 0.5 * rate.delta_exponent;
    let mut times = Vec::new();
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let (mut used, mut diverged) = (0usize, 0usize);
    for run in runs {
        match run? {
            None => diverged += 1,
            Some((t, delta)) => {
                if times.is_empty() {
                    times = t;
                    sums = vec![vec![0.0; times.len()]; 1 + orders.len()];
                }
                for (i, d) in delta.iter().enumerate() {
                    sums[0][i] += d.powf(half);
                    for (j, &o) in orders.iter().enumerate() {
                        sums[1 + j][i] += d.powi(o as i32);
                    }
                }
                used += 1;
            }
        }
    }
    if used == 0 {
        return Err(Error::Inconclusive("every coupled trial diverged".into()));
    }
    let means: Vec<Vec<f64>> = sums.iter().map(|s| s.iter().map(|v| v / used as f64).collect()).collect();

    let start = BURN_IN_FRACTION * cfg.sim.horizon;
    let (fx, fy): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&means[0])
        .filter(|(&t, &v)| t >= start - 1e-12 && v > FIT_FLOOR)
        .map(|(&t, &v)| (t, v.ln()))
        .unzip();
    let fit = ols(&fx, &fy).map_err(|e| Error::Inconclusive(format!("rate fit: {e}")))?;
    let eps = cfg.test.epsilon;
    let fitted_rate = -fit.slope;
    let slack = super::stats::Z95 * fit.slope_se;
    let threshold = (1.0 - eps) * rate.rate * half;
    let rate_pass = fitted_rate >= threshold - slack;

    let mut uniform = Vec::new();
    for (j, &o) in orders.iter().enumerate() {
        let series = &means[1 + j];
        let trend = mann_kendall(series)?;
        let sup = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        uniform.push(UniformMoment { n: o, sup, trend, pass: sup.is_finite() && !trend.increasing });
    }
    let pass = rate_pass && uniform.iter().all(|u| u.pass);
    let profile = times
        .iter()
        .enumerate()
        .map(|(i, &t)| std::iter::once(t).chain(means.iter().map(|m| m[i])).collect())
        .collect();
    Ok(ForgettingReport {
        flags,
        lambda: rate.rate,
        delta_exponent: rate.delta_exponent,
        epsilon: eps,
        fitted_rate,
        slack,
        threshold,
        fit_points: fx.len(),
        rate_pass,
        uniform,
        diverged,
        pass,
        profile,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GronwallRow {
    pub t: f64,
    pub n: u32,
    /// `E‖𝒳_t‖ⁿ` without sources, `E(‖𝒳_t‖ⁿ)^{2/n}` with sources.
    pub estimate: EstimateWithCI,
    pub bound: f64,
    pub pass: bool,
}

/// Paths of the synthetic process `Y = ‖𝒳‖²` at the checkpoints.
pub fn simulate_test_process(cfg: &ExperimentConfig, g: &GronwallSpec) -> Vec<Vec<f64>> {
    let dt = cfg.sim.dt;
    let steps = cfg.steps();
    let checkpoints = cfg.checkpoint_steps();
    let seed = cfg.sim.seed;
    let sourced = g.u > 0.0 || g.v > 0.0;
    let sqrt_dt = dt.sqrt();
    map_trials(cfg.sim.n_trials, |k| {
        let mut rng = stream_rng(seed, k as u64);
        let mut y = g.x0_norm * g.x0_norm;
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut next = 0;
        for s in 0..=steps {
            if next < checkpoints.len() && checkpoints[next] == s {
                out.push(y);
                next += 1;
            }
            if s == steps {
                break;
            }
            let dn: f64 = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
            if sourced {
                // full-truncation Euler keeps the square-root argument admissible
                let diffusion = (g.w * y * y + g.v * y).max(0.0).sqrt();
                y = (y + (-g.a * y + g.u) * dt + diffusion * dn).max(0.0);
            } else {
                // exact geometric step
                y *= ((-g.a - 0.5 * g.w) * dt + g.w.sqrt() * dn).exp();
            }
        }
        out
    })
}

pub fn gronwall_test_process(cfg: &ExperimentConfig) -> Result<Vec<GronwallRow>> {
    let g = cfg.gronwall_spec()?;
    let paths = simulate_test_process(cfg, &g);
    let times: Vec<f64> = cfg.checkpoint_steps().iter().map(|&s| s as f64 * cfg.sim.dt).collect();
    let sourced = g.u > 0.0 || g.v > 0.0;
    let mut rows = Vec::new();
    let mut stream = BOOTSTRAP_STREAM_BASE;
    for &n in &cfg.test.n_orders {
        for (i, &t) in times.iter().enumerate() {
            let half_n = 0.5 * n as f64;
            let samples: Vec<f64> = paths.iter().map(|p| p[i].powf(half_n)).collect();
            let raw = bootstrap_mean(&samples, BOOTSTRAP_RESAMPLES, cfg.sim.seed, stream)?;
            stream += 1;
            let (estimate, bound) = if sourced {
                let root = |v: f64| v.max(0.0).powf(2.0 / n as f64);
                let est = EstimateWithCI {
                    point: root(raw.point),
                    ci_low: root(raw.ci_low),
                    ci_high: root(raw.ci_high),
                    ..raw
                };
                let a = |_: f64| g.a;
                let w = |_: f64| g.w;
                let u = |_: f64| g.u;
                let v = |_: f64| g.v;
                (est, gronwall_moment_rhs(n, &a, &w, &u, &v, t, cfg.sim.dt)?)
            } else {
                (raw, hilbert_rhs(n, g.a, g.w, t, g.x0_norm)?)
            };
            rows.push(GronwallRow { t, n, estimate, bound, pass: estimate.ci_low <= bound });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowContraction {
    pub pairs: usize,
    /// `max_t ratio_t / envelope_t`; at most 1 when the contraction holds.
    pub worst: f64,
    pub pass: bool,
}

/// Checks `‖φ_t(x) − φ_t(y)‖ ≤ e^{−λ_∂A t/2}(1 + 10 dt)‖x − y‖` on random pairs
/// drawn in the ball of the given radius.
pub fn flow_contraction(
    model: &SignalModel,
    pairs: usize,
    radius: f64,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> Result<FlowContraction> {
    let lambda = model.regularity_constants()?.lambda_jac;
    let worst = map_trials(pairs, |k| -> Result<f64> {
        let mut rng = stream_rng(seed, k as u64);
        let x = sample_ball(model.dim(), radius, &mut rng);
        let y = sample_ball(model.dim(), radius, &mut rng);
        let gap = x.dist_sq(&y).sqrt();
        if gap == 0.0 {
            return Ok(0.0);
        }
        let fx = deterministic_flow(model, &x, dt, horizon)?;
        let fy = deterministic_flow(model, &y, dt, horizon)?;
        Ok(fx
            .iter()
            .zip(&fy)
            .enumerate()
            .map(|(s, (a, b))| {
                let envelope = (-0.5 * lambda * s as f64 * dt).exp() * (1.0 + 10.0 * dt);
                a.dist_sq(b).sqrt() / gap / envelope
            })
            .fold(0.0, f64::max))
    })
    .into_iter()
    .try_fold(0.0f64, |acc, r| r.map(|v| acc.max(v)))?;
    Ok(FlowContraction { pairs, worst, pass: worst <= 1.0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzCheck {
    pub kappa: f64,
    pub sampled: f64,
    pub pass: bool,
}

/// Largest sampled Jacobian difference ratio against `κ_∂A`, 1e-6 relative slack.
pub fn lipschitz_check(model: &SignalModel, samples: usize, radius: f64, seed: u64) -> Result<LipschitzCheck> {
    let kappa = model.regularity_constants()?.kappa_jac;
    let sampled = lipschitz_empirical_check(model, samples, radius, &mut stream_rng(seed, 0))?;
    Ok(LipschitzCheck { kappa, sampled, pass: sampled <= kappa * (1.0 + 1e-6) + 1e-12 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou(extra: &str, scenario: &str, trials: usize) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{
                "model": {{"variant": "linear", "A": [[-1.0]], "R1": [[1.0]]}},
                "sim": {{"dt": 0.01, "T": 4.0, "n_trials": {trials}, "seed": 3}},
                "test": {{"scenario": "{scenario}", "checkpoints": [1.0, 4.0]}}
                {extra}
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn noise_free_signal_has_unit_frequency() {
        let mut cfg = ou("", "signal-vs-flow", 50);
        cfg.model.as_mut().unwrap().r1 = vec![vec![0.0]];
        cfg.init.x0 = Some(vec![1.0]);
        // a zero R₁ leaves λ_A > 0 but makes every radius zero
        let p = cfg.problem().unwrap();
        let s = sample_errors(&cfg, &p, Scenario::SignalVsFlow).unwrap();
        assert!(s.event.iter().flatten().all(|&e| e == 0.0));
        assert!(event_rows(&cfg, &p, &s).unwrap().iter().all(|r| r.estimate.point == 1.0));
    }

    #[test]
    fn ou_events_and_moments_pass() {
        let cfg = ou("", "signal-vs-flow", 400);
        let p = cfg.problem().unwrap();
        let s = sample_errors(&cfg, &p, Scenario::SignalVsFlow).unwrap();
        let ev = event_rows(&cfg, &p, &s).unwrap();
        assert!(ev.iter().all(|r| r.pass));
        let mo = moment_rows(&cfg, &p, &s).unwrap();
        assert!(mo.iter().all(|r| r.pass));
        // E X_t² = ½(1 − e^{−2t}) at t = 4
        let m = mo.iter().find(|r| r.n == 1 && r.t == 4.0).unwrap();
        assert!((m.estimate.point - 0.5 * (1.0 - (-8.0f64).exp())).abs() < 0.1);
    }

    #[test]
    fn sampling_is_reproducible() {
        let cfg = ou("", "ekf-vs-signal", 20);
        let p = cfg.problem().unwrap();
        let a = sample_errors(&cfg, &p, Scenario::EkfVsSignal).unwrap();
        let b = sample_errors(&cfg, &p, Scenario::EkfVsSignal).unwrap();
        assert_eq!(a.event, b.event);
        assert_eq!(a.moment, b.moment);
    }

    #[test]
    fn forgetting_rejects_identical_filters() {
        let cfg = ou("", "coupled-forgetting", 4);
        assert!(matches!(estimate_forgetting_rate(&cfg), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn deterministic_gronwall_is_tight() {
        let cfg = ou(r#", "gronwall": {"a": 1.0, "w": 0.0, "x0_norm": 2.0}"#, "gronwall-test", 8);
        let rows = gronwall_test_process(&cfg).unwrap();
        for r in rows {
            // exact geometric step with w = 0 reproduces the bound up to rounding
            assert!((r.estimate.point - r.bound).abs() < 1e-12 * r.bound.max(1.0));
        }
    }

    #[test]
    fn linear_lipschitz_is_zero() {
        let cfg = ou("", "signal-vs-flow", 1);
        let p = cfg.problem().unwrap();
        let l = lipschitz_check(&p.model, 100, 2.0, 0).unwrap();
        assert!(l.pass && l.sampled == 0.0 && l.kappa == 0.0);
        let f = flow_contraction(&p.model, 10, 2.0, 0.01, 2.0, 0).unwrap();
        assert!(f.pass);
    }
}
