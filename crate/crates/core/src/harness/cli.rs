use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::config::{ExperimentConfig, Scenario};
use super::estimators::{
    estimate_chi2_laplace, estimate_forgetting_rate, event_rows, gronwall_test_process, laplace_rows, moment_rows,
    refs, sample_errors, verify_trace_bound,
};
use super::output::{
    chi2_table, event_table, fmt_f64, forgetting_table, gronwall_table, laplace_table, moment_table, trace_table,
    write_summary, Summary, Table,
};
use crate::bounds::BoundsReport;
use crate::dynamics::{simulate_coupled, PathBundle, Recording};
use crate::error::{Error, Result};

/// Monte-Carlo verification lab for the extended Kalman-Bucy filter.
#[derive(Debug, Parser)]
#[command(name = "ekbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate signal and filter trajectories and write them as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "ekbf-out")]
        out: PathBuf,
    },
    /// Print every closed-form constant, radius and condition flag as JSON.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one verification scenario and write CSV plus a JSON summary.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `test.scenario`.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, default_value = "ekbf-out")]
        out: PathBuf,
    },
    /// Shorthand for `verify --scenario coupled-forgetting`.
    Forgetting {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "ekbf-out")]
        out: PathBuf,
    },
    /// Shorthand for `verify --scenario gronwall-test`.
    Gronwall {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "ekbf-out")]
        out: PathBuf,
    },
    /// Collect the JSON summaries of a directory into one verdict.
    Report {
        #[arg(long, default_value = "ekbf-out")]
        dir: PathBuf,
    },
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 when every check passes, 1 on any failure, 2 on a configuration
/// or input error.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("ekbf: {e}");
            exit_code(&e)
        }
    }
}

/// Writes a line to stdout; a closed pipe is not an error worth dying for.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Inconclusive(_) | Error::DegenerateInput(_) | Error::ConditionsNotMet(_) | Error::DivergedFilter { .. } => 1,
        _ => 2,
    }
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Simulate { config, out } => simulate(&ExperimentConfig::load(&config)?, &out),
        Command::Check { config } => check(&ExperimentConfig::load(&config)?),
        Command::Verify { config, scenario, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let scenario = match scenario {
                Some(s) => Scenario::parse(&s)?,
                None => cfg.scenario()?,
            };
            verify(&cfg, scenario, &out)
        }
        Command::Forgetting { config, out } => verify(&ExperimentConfig::load(&config)?, Scenario::CoupledForgetting, &out),
        Command::Gronwall { config, out } => verify(&ExperimentConfig::load(&config)?, Scenario::GronwallTest, &out),
        Command::Report { dir } => report(&dir),
    }
}

fn check(cfg: &ExperimentConfig) -> Result<bool> {
    let p = cfg.problem()?;
    let times: Vec<f64> = cfg.checkpoint_steps().iter().map(|&s| s as f64 * cfg.sim.dt).collect();
    let report = BoundsReport::build(&p.constants, &times, &cfg.test.delta_grid, cfg.test.alpha)?;
    say(&serde_json::to_string_pretty(&report)?);
    Ok(true)
}

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    let p = cfg.problem()?;
    let n = p.model.dim();
    let two = p.filter != p.check;
    let inits = if two { vec![p.filter.clone(), p.check.clone()] } else { vec![p.filter.clone()] };
    let mut header = vec!["trial".to_string(), "t".to_string()];
    header.extend((0..n).map(|i| format!("x_{i}")));
    header.extend((0..n).map(|i| format!("xhat_{i}")));
    header.push("trace_p".into());
    if two {
        header.extend((0..n).map(|i| format!("xcheck_{i}")));
        header.push("trace_pcheck".into());
    }
    let mut table = Table { header, rows: Vec::new() };
    let recording = Recording::Every(cfg.test.record_every);
    let mut diverged = 0;
    for k in 0..cfg.sim.n_trials {
        let bundle = PathBundle::from_seed(cfg.sim.dt, cfg.steps(), n, p.obs.obs_dim(), cfg.sim.seed, k as u64)?;
        let rec = simulate_coupled(&p.model, &p.obs, &p.x0, &inits, &bundle, &recording)?;
        diverged += rec.diverged.is_some() as usize;
        for r in 0..rec.times.len() {
            let mut row = vec![k.to_string(), fmt_f64(rec.times[r])];
            row.extend(rec.signal[r].iter().map(|&v| fmt_f64(v)));
            for f in &rec.filters {
                row.extend(f[r].mean.iter().map(|&v| fmt_f64(v)));
                row.push(fmt_f64(f[r].cov.trace()));
            }
            table.push(row);
        }
    }
    std::fs::create_dir_all(out)?;
    let path = out.join("trajectories.csv");
    table.write(&path)?;
    eprintln!("wrote {} ({} trials, {} diverged)", path.display(), cfg.sim.n_trials, diverged);
    Ok(true)
}

/// Runs `scenario`, writes its tables and summary into `out` and returns the verdict.
pub fn verify(cfg: &ExperimentConfig, scenario: Scenario, out: &Path) -> Result<bool> {
    let name = scenario.name();
    let mut summary = Summary::new(name);
    let mut tables: Vec<(String, Table)> = Vec::new();
    match scenario {
        Scenario::SignalVsFlow | Scenario::EkfVsSignal => {
            let p = cfg.problem()?;
            let samples = sample_errors(cfg, &p, scenario)?;
            let ekf = scenario == Scenario::EkfVsSignal;
            let (ev, mo, la) = if ekf {
                (refs::EKF_EVENT, refs::FILTER_MOMENT, refs::FILTER_LAPLACE)
            } else {
                (refs::SIGNAL_EVENT, refs::SIGNAL_MOMENT, refs::SIGNAL_LAPLACE)
            };
            let events = event_rows(cfg, &p, &samples)?;
            tables.push((format!("{name}.csv"), event_table(&events, ev, &mut summary)));
            let moments = moment_rows(cfg, &p, &samples)?;
            tables.push((format!("{name}_moments.csv"), moment_table(&moments, mo, &mut summary)));
            let laplace = laplace_rows(cfg, &p, &samples)?;
            tables.push((format!("{name}_laplace.csv"), laplace_table(&laplace, la, &mut summary)));
        }
        Scenario::TraceBound => {
            let r = verify_trace_bound(cfg)?;
            tables.push((format!("{name}.csv"), trace_table(&r, &mut summary)));
        }
        Scenario::Chi2Laplace => {
            let r = estimate_chi2_laplace(cfg)?;
            tables.push((format!("{name}.csv"), chi2_table(&r, &mut summary)));
        }
        Scenario::CoupledForgetting => {
            let r = estimate_forgetting_rate(cfg)?;
            tables.push((format!("{name}.csv"), forgetting_table(&r, &cfg.test.n_orders, &mut summary)));
        }
        Scenario::GronwallTest => {
            let g = cfg.gronwall_spec()?;
            let rows = gronwall_test_process(cfg)?;
            tables.push((format!("{name}.csv"), gronwall_table(&rows, g.u > 0.0 || g.v > 0.0, &mut summary)));
        }
    }
    std::fs::create_dir_all(out)?;
    for (file, t) in &tables {
        t.write(&out.join(file))?;
    }
    write_summary(&out.join(format!("{name}_summary.json")), &summary)?;
    say(&format!(
        "{} {name}: {}/{} checks",
        if summary.pass { "PASS" } else { "FAIL" },
        summary.passed(),
        summary.details.len()
    ));
    Ok(summary.pass)
}

fn report(dir: &Path) -> Result<bool> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with("_summary.json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("no summaries in {}", dir.display())));
    }
    let mut all = true;
    for f in files {
        let s: Summary = serde_json::from_str(&std::fs::read_to_string(&f)?)
            .map_err(|e| Error::Config(format!("{}: {e}", f.display())))?;
        all &= s.pass;
        say(&format!(
            "{:<4} {:<20} {}/{}",
            if s.pass { "PASS" } else { "FAIL" },
            s.scenario,
            s.passed(),
            s.details.len()
        ));
        for c in s.details.iter().filter(|c| !c.pass) {
            say(&format!(
                "     failed {} t={:?} param={:?}: {} vs {} [{}]",
                c.name, c.t, c.param, c.value, c.bound, c.paper_ref
            ));
        }
    }
    Ok(all)
}
