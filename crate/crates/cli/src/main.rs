//! `rmfground` command-line front end.
//!
//! Every command prints a JSON summary on stdout and writes it, plus any CSV
//! artifacts, to the output directory. Exit status: 0 success, 1 invalid
//! input, 2 numerical failure. Errors go to stderr as one JSON line.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use rmfground::analysis::{self, ThresholdOptions};
use rmfground::energy::{self, Coupling};
use rmfground::minimizer::{self, InitProfile, MinimizeOptions, Status};
use rmfground::shooting::{self, ShootOptions};
use rmfground::{io, selftest, Error, RadialGrid};
use serde_json::{json, Value};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "rmfground",
    version,
    about = "Radial ground states of a saturating mean-field energy"
)]
struct Cli {
    /// Flat `key = value` configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config file and RMFGROUND_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Do not write CSV artifacts.
    #[arg(long, global = true)]
    no_csv: bool,
    /// Do not write the JSON summary file (stdout still gets it).
    #[arg(long, global = true)]
    no_json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sobolev and test-function constants.
    Constants,
    /// Minimize the energy at fixed mass.
    Minimize {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        init: Option<String>,
        #[arg(long)]
        starts: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Shoot for a decaying solution of the radial system.
    Shoot {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Bisect for the critical coupling.
    Threshold {
        #[arg(long = "tol-a")]
        tol_a: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Minimize over a uniform range of couplings (in parallel).
    Scan {
        #[arg(long = "a-from")]
        a_from: Option<f64>,
        #[arg(long = "a-to")]
        a_to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Signed-denominator energy on the concentrating family.
    UnboundedDemo {
        #[arg(long = "n-list")]
        n_list: Option<String>,
        #[arg(long)]
        a: Option<f64>,
    },
    /// Concentration functions of a stored `r,u` profile.
    Diagnose {
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        a: Option<f64>,
    },
    /// Reduced-resolution consistency checks.
    Selftest {
        #[command(flatten)]
        grid: GridArgs,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Minimize { .. } => "minimize",
            Command::Shoot { .. } => "shoot",
            Command::Threshold { .. } => "threshold",
            Command::Scan { .. } => "scan",
            Command::UnboundedDemo { .. } => "unbounded-demo",
            Command::Diagnose { .. } => "diagnose",
            Command::Selftest { .. } => "selftest",
        }
    }
}

struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_validation() { 1 } else { 2 },
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

fn numerical(kind: &str, message: String) -> Failure {
    Failure {
        code: 2,
        kind: kind.into(),
        message,
    }
}

fn invalid(message: String) -> Failure {
    Failure {
        code: 1,
        kind: "invalid_parameter".into(),
        message,
    }
}

type Outcome = Result<Value, Failure>;

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn apply_grid(cfg: &mut RunConfig, g: &GridArgs) {
    set(&mut cfg.r_max, g.rmax);
    set(&mut cfg.n, g.n);
    set(&mut cfg.seed, g.seed);
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(Error::from)?;
        cfg.apply_file(&text)?;
    }
    cfg.apply_env();
    set(&mut cfg.out_dir, cli.out.clone());
    if cli.no_csv {
        cfg.csv = false;
    }
    if cli.no_json {
        cfg.json = false;
    }
    match &cli.command {
        Command::Constants => {}
        Command::Selftest { grid } => apply_grid(&mut cfg, grid),
        Command::Minimize {
            a,
            nu,
            init,
            starts,
            grid,
        } => {
            cfg.a = a.or(cfg.a);
            set(&mut cfg.nu, *nu);
            set(&mut cfg.init, init.clone());
            set(&mut cfg.starts, *starts);
            apply_grid(&mut cfg, grid);
        }
        Command::Shoot { a, b, tol } => {
            cfg.a = a.or(cfg.a);
            cfg.b = b.or(cfg.b);
            set(&mut cfg.tol, *tol);
        }
        Command::Threshold { tol_a, grid } => {
            set(&mut cfg.tol_a, *tol_a);
            apply_grid(&mut cfg, grid);
        }
        Command::Scan {
            a_from,
            a_to,
            steps,
            grid,
        } => {
            cfg.a_from = a_from.or(cfg.a_from);
            cfg.a_to = a_to.or(cfg.a_to);
            cfg.steps = steps.or(cfg.steps);
            apply_grid(&mut cfg, grid);
        }
        Command::UnboundedDemo { n_list, a } => {
            if let Some(list) = n_list {
                cfg.n_list = config::parse_n_list(list)?;
            }
            cfg.a = a.or(cfg.a);
        }
        Command::Diagnose { profile, a } => {
            cfg.profile = profile.clone().or(cfg.profile.take());
            cfg.a = a.or(cfg.a);
        }
    }
    Ok(cfg)
}

fn required<T: Copy>(v: Option<T>, name: &str) -> Result<T, Failure> {
    v.ok_or_else(|| invalid(format!("missing required value `{name}`")))
}

fn grid(cfg: &RunConfig) -> Result<Arc<RadialGrid>, Failure> {
    Ok(Arc::new(RadialGrid::new(cfg.r_max, cfg.n)?))
}

fn minimize_options(cfg: &RunConfig) -> Result<MinimizeOptions, Failure> {
    Ok(MinimizeOptions {
        max_iters: cfg.max_iters,
        tol_residual: cfg.tol_residual,
        nu: cfg.nu,
        init: InitProfile::from_name(&cfg.init)?,
        seed: cfg.seed,
        starts: cfg.starts,
        ..MinimizeOptions::default()
    })
}

struct Artifacts<'a> {
    cfg: &'a RunConfig,
}

impl Artifacts<'_> {
    fn dir(&self) -> Result<&Path, Failure> {
        fs::create_dir_all(&self.cfg.out_dir).map_err(Error::from)?;
        Ok(&self.cfg.out_dir)
    }

    fn csv(
        &self,
        name: &str,
        write: impl FnOnce(&Path) -> rmfground::Result<()>,
    ) -> Result<Option<String>, Failure> {
        if !self.cfg.csv {
            return Ok(None);
        }
        let path = self.dir()?.join(name);
        write(&path)?;
        Ok(Some(path.display().to_string()))
    }
}

fn cmd_constants() -> Outcome {
    let report = analysis::constants_report()?;
    Ok(report.to_json())
}

fn cmd_minimize(cfg: &RunConfig, out: &Artifacts) -> Outcome {
    let c = Coupling::new(required(cfg.a, "a")?)?;
    let g = grid(cfg)?;
    let r = minimizer::minimize(&c, &g, &minimize_options(cfg)?)?;
    let mut v = io::minimize_json(&r);
    v["profile_csv"] = json!(out.csv("minimize_profile.csv", |p| io::save_profile(&r.field, p))?);
    v["history_csv"] = json!(out.csv("minimize_history.csv", |p| io::save_history(&r.history, p))?);
    match r.status {
        Status::Converged | Status::Vanishing => Ok(v),
        s => Err(numerical(
            "not_converged",
            format!(
                "minimization stopped with status {s:?} at residual {:e}",
                r.residual
            ),
        )),
    }
}

fn cmd_shoot(cfg: &RunConfig, out: &Artifacts) -> Outcome {
    let c = Coupling::with_multiplier(required(cfg.a, "a")?, required(cfg.b, "b")?)?;
    let opts = ShootOptions {
        tol: cfg.tol,
        ..ShootOptions::default()
    };
    let gs = shooting::find_ground_state(&c, &opts)?;
    let mut v = io::ground_state_json(&gs);
    v["existence_regime"] = json!(c.existence_regime());
    v["trajectory_csv"] = json!(out.csv("shoot_trajectory.csv", |p| io::save_trajectory(&gs.trajectory, p))?);
    Ok(v)
}

fn cmd_threshold(cfg: &RunConfig) -> Outcome {
    let opts = ThresholdOptions {
        tol_a: cfg.tol_a,
        minimize: MinimizeOptions {
            record_history: false,
            tol_residual: cfg.tol_residual.max(1e-6),
            ..minimize_options(cfg)?
        },
        ..ThresholdOptions::default()
    };
    let t = analysis::threshold_bisect(&grid(cfg)?, &opts)?;
    Ok(io::threshold_json(&t))
}

fn cmd_scan(cfg: &RunConfig, out: &Artifacts) -> Outcome {
    let from = required(cfg.a_from, "a_from")?;
    let to = required(cfg.a_to, "a_to")?;
    let steps = required(cfg.steps, "steps")?;
    if steps < 2 || to.partial_cmp(&from) != Some(std::cmp::Ordering::Greater) {
        return Err(invalid(format!(
            "need a_to > a_from and steps >= 2 (got {from}, {to}, {steps})"
        )));
    }
    let g = grid(cfg)?;
    let opts = MinimizeOptions {
        record_history: false,
        ..minimize_options(cfg)?
    };
    let rows = (0..steps)
        .into_par_iter()
        .map(|k| {
            let a = from + (to - from) * k as f64 / (steps - 1) as f64;
            let r = minimizer::minimize(&Coupling::new(a)?, &g, &opts)?;
            Ok(json!({
                "a": a,
                "energy": r.energy.total,
                "i_estimate": r.i_estimate,
                "b": r.multiplier_b,
                "regime": r.regime,
                "status": r.status,
                "residual": r.residual,
            }))
        })
        .collect::<Result<Vec<Value>, Error>>()?;
    let csv = out.csv("scan.csv", |p| {
        let mut text = String::from("a,energy,i_estimate,b\n");
        for r in &rows {
            text += &format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r["a"].as_f64().unwrap_or(f64::NAN),
                r["energy"].as_f64().unwrap_or(f64::NAN),
                r["i_estimate"].as_f64().unwrap_or(f64::NAN),
                r["b"].as_f64().unwrap_or(f64::NAN),
            );
        }
        fs::write(p, text)?;
        Ok(())
    })?;
    Ok(json!({ "points": rows, "scan_csv": csv }))
}

fn cmd_unbounded(cfg: &RunConfig) -> Outcome {
    let a = cfg.a.unwrap_or(1.0);
    let c = Coupling::new(a)?;
    let n_max = cfg
        .n_list
        .iter()
        .copied()
        .max()
        .ok_or_else(|| invalid("empty n_list".into()))?;
    // dedicated grid: resolves the 1/n scale of the largest member
    let nodes = (16 * n_max as usize + 1).max(2001);
    let g = Arc::new(RadialGrid::new(1.0, nodes)?);
    let xi4 = analysis::cutoff_moment(4);
    let mut members = Vec::new();
    let mut values = Vec::new();
    for &n in &cfg.n_list {
        let m = analysis::unbounded_family(n, &g)?;
        let f = energy::energy_signed(&m.field, &c, energy::DEFAULT_EXCLUSION);
        values.push(f);
        members.push(json!({
            "n": n,
            "radius": m.radius,
            "F": f,
            "leading_term": analysis::unbounded_leading_term(n, m.radius, a, xi4),
        }));
    }
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let ratios: Vec<f64> = values.windows(2).map(|w| w[1].abs() / w[0].abs()).collect();
    Ok(json!({
        "a": a,
        "grid": { "r_max": 1.0, "n": nodes },
        "members": members,
        "strictly_decreasing": decreasing,
        "successive_ratios": ratios,
        "limit_radius": analysis::unbounded_limit_radius(),
    }))
}

fn cmd_diagnose(cfg: &RunConfig, out: &Artifacts) -> Outcome {
    let path = cfg
        .profile
        .as_ref()
        .ok_or_else(|| invalid("missing required value `profile`".into()))?;
    let u = io::load_profile(path)?;
    let g = Arc::clone(u.grid());
    let mass = u.l2_mass();
    let floor = energy::DEFAULT_FLOOR;
    let radii: Vec<f64> = (0..=64).map(|k| g.r_max() * k as f64 / 64.0).collect();
    let q: Vec<f64> = radii.iter().map(|&r| analysis::levy_q(&u, r)).collect();
    let k: Vec<f64> = radii.iter().map(|&r| analysis::levy_k(&u, r, floor)).collect();
    let half_mass_radius = radii
        .iter()
        .zip(&q)
        .find(|(_, &m)| m >= 0.5 * mass)
        .map(|(&r, _)| r);
    let csv = out.csv("diagnose.csv", |p| {
        let mut text = String::from("radius,Q,K\n");
        for ((r, q), k) in radii.iter().zip(&q).zip(&k) {
            text += &format!("{r:.16e},{q:.16e},{k:.16e}\n");
        }
        fs::write(p, text)?;
        Ok(())
    })?;
    let mut v = json!({
        "profile": path.display().to_string(),
        "nodes": g.len(),
        "r_max": g.r_max(),
        "mass": mass,
        "max_abs_u": u.max_abs(),
        "admissible": u.is_admissible(),
        "kinetic": energy::kinetic_term(&u, floor),
        "quartic": energy::quartic_term(&u),
        "half_mass_radius": half_mass_radius,
        "mass_inside_half_rmax": analysis::levy_q(&u, 0.5 * g.r_max()),
        "levy_csv": csv,
    });
    if let Some(a) = cfg.a {
        let c = Coupling::new(a)?;
        v["energy"] = json!(energy::energy(&u, &c, floor));
        if mass > 0.0 {
            let b = minimizer::extract_multiplier(&u, &c)?;
            v["b"] = json!(b);
            v["residual"] = json!(energy::el_residual(&u, &c, b, floor));
        }
    }
    Ok(v)
}

fn cmd_selftest(cfg: &RunConfig) -> Outcome {
    let opts = selftest::SelfTestOptions {
        n: cfg.n,
        r_max: cfg.r_max,
        seed: cfg.seed,
    };
    let report = selftest::run(&opts)?;
    let v = serde_json::to_value(&report).map_err(Error::from)?;
    if report.passed() {
        Ok(v)
    } else {
        let names: Vec<&str> = report.failures().iter().map(|c| c.name).collect();
        emit(&serde_json::to_string_pretty(&v).unwrap_or_default());
        Err(numerical(
            "selftest_failed",
            format!("failed checks: {}", names.join(", ")),
        ))
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = resolve(cli)?;
    let out = Artifacts { cfg: &cfg };
    let result = match &cli.command {
        Command::Constants => cmd_constants(),
        Command::Minimize { .. } => cmd_minimize(&cfg, &out),
        Command::Shoot { .. } => cmd_shoot(&cfg, &out),
        Command::Threshold { .. } => cmd_threshold(&cfg),
        Command::Scan { .. } => cmd_scan(&cfg, &out),
        Command::UnboundedDemo { .. } => cmd_unbounded(&cfg),
        Command::Diagnose { .. } => cmd_diagnose(&cfg, &out),
        Command::Selftest { .. } => cmd_selftest(&cfg),
    };
    let mut v = result?;
    v["command"] = json!(cli.command.name());
    v["config"] = serde_json::to_value(&cfg).map_err(Error::from)?;
    let text = serde_json::to_string_pretty(&v).map_err(Error::from)?;
    if cfg.json {
        let path = out.dir()?.join(format!("{}.json", cli.command.name()));
        io::save_json(&v, &path)?;
    }
    emit(&text);
    Ok(())
}

/// Print to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn report(f: &Failure) -> ExitCode {
    let line = json!({ "error": { "kind": f.kind, "exit_code": f.code, "message": f.message } });
    eprintln!("{line}");
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            return report(&Failure {
                code: 1,
                kind: "usage".into(),
                message: first.to_string(),
            });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
