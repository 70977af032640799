//! Command-line entry point. Every command is a thin wrapper around a
//! library call: parse one declarative TOML config, run, and serialize the
//! result under `<out>/<command>-<confighash>.{csv,json}` together with a
//! manifest (config hash, seed, version) for replay.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use ggflow::config::ExperimentConfig;
use ggflow::convergence::{
    bridge_experiment, ldp_tube_experiment, lln_experiment, mosco_quadratic_experiment,
    mosco_ri_experiment, ConvergenceTable,
};
use ggflow::dissipation::check_conditions;
use ggflow::energy::WigglyLandscape;
use ggflow::flows::{
    solve_generalized_flow, solve_quadratic_flow, solve_rate_independent, BVCurve, SampledCurve,
};
use ggflow::functionals::{action_J_Q, action_J_alpha_beta};
use ggflow::stochastic::{
    langevin_dt_bound, simulate_jump_process, simulate_langevin_wiggly, simulate_sde,
};
use ggflow::{Error, Result};

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Command {
    /// Exact jump-process trajectory.
    Simulate,
    /// Euler-Maruyama path of the diffusive limit.
    Sde,
    /// Overdamped Langevin on the wiggly landscape.
    Langevin,
    /// Deterministic flow (sinh if alpha/beta given, quadratic if omega).
    Flow,
    /// Rate-independent stick-slip evolution.
    RiFlow,
    /// Evaluate an action functional on an input curve.
    Action,
    /// Quadratic-limit convergence table.
    MoscoQ,
    /// Rate-independent recovery-sequence convergence table.
    MoscoRi,
    /// Law-of-large-numbers trend table.
    Lln,
    /// Diffusive-bridge table.
    Bridge,
    /// Large-deviation tube table.
    Ldp,
    /// Dissipation-family limit-condition report.
    CheckDissipation,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sde => "sde",
            Command::Langevin => "langevin",
            Command::Flow => "flow",
            Command::RiFlow => "ri-flow",
            Command::Action => "action",
            Command::MoscoQ => "mosco-q",
            Command::MoscoRi => "mosco-ri",
            Command::Lln => "lln",
            Command::Bridge => "bridge",
            Command::Ldp => "ldp",
            Command::CheckDissipation => "check-dissipation",
        }
    }

    fn is_stochastic(self) -> bool {
        matches!(
            self,
            Command::Simulate
                | Command::Sde
                | Command::Langevin
                | Command::Lln
                | Command::Bridge
                | Command::Ldp
        )
    }
}

#[derive(Parser)]
#[command(name = "ggflow", version, about = "Lattice jump processes, their gradient-flow and rate-independent limits, and the associated action functionals")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Declarative TOML config.
    config: PathBuf,
    /// Override output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Escalate soft flags (domain exits, low statistics) to a nonzero exit.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(flagged) => {
            if flagged && cli.strict {
                eprintln!("{}", serde_json::json!({"error": "soft flags raised under --strict"}));
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({"error": e.to_string()}));
            ExitCode::FAILURE
        }
    }
}

struct Outputs {
    dir: PathBuf,
    stem: String,
    files: Vec<String>,
}

impl Outputs {
    fn path(&mut self, ext: &str) -> PathBuf {
        let name = format!("{}.{ext}", self.stem);
        self.files.push(name.clone());
        self.dir.join(name)
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    if cli.command.is_stochastic() {
        cfg.run.require_seed()?;
    }
    if let Some(threads) = cfg.run.threads {
        // best effort: ignored if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }

    let dir = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&dir)?;
    let mut outs = Outputs {
        dir,
        stem: format!("{}-{}", cli.command.name(), cfg.hash()),
        files: Vec::new(),
    };

    let flagged = dispatch(cli.command, &cfg, &mut outs)?;

    let manifest = serde_json::json!({
        "command": cli.command.name(),
        "config_hash": cfg.hash(),
        "config": cfg.canonical(),
        "seed": cfg.run.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "outputs": outs.files,
        "flagged": flagged,
    });
    let path = outs.path("manifest.json");
    write_json(&path, &manifest)?;
    Ok(flagged)
}

fn dispatch(command: Command, cfg: &ExperimentConfig, outs: &mut Outputs) -> Result<bool> {
    let landscape = cfg.landscape()?;
    let run = &cfg.run;
    let reg = &cfg.regime;
    match command {
        Command::Simulate => {
            let path = simulate_jump_process(
                &landscape,
                reg.require(reg.n, "n")?,
                reg.require(reg.alpha, "alpha")?,
                reg.require(reg.beta, "beta")?,
                run.x0,
                run.t_end,
                run.require_seed()?,
            )?;
            let mut rows = vec![(0.0, path.start)];
            for (k, &(t, _)) in path.events.iter().enumerate() {
                rows.push((t, path.position_after(k + 1)));
            }
            rows.push((path.horizon, path.final_position()));
            write_csv(&outs.path("csv"), "t,x", rows.iter().map(|&(t, x)| format!("{t},{x}")))?;
            Ok(path.exited)
        }
        Command::Sde => {
            let omega = reg.require(reg.omega, "omega")?;
            let lx = landscape.grad_space_lipschitz;
            let dt = run.dt.unwrap_or_else(|| {
                if lx > 0.0 { 0.4 / (2.0 * omega * lx) } else { run.t_end / 1000.0 }
            });
            let path = simulate_sde(
                &landscape,
                omega,
                reg.require(reg.h, "h")?,
                run.x0,
                run.t_end,
                dt,
                run.require_seed()?,
            )?;
            write_sample_csv(&outs.path("csv"), path.dt, &path.values)?;
            Ok(path.exited)
        }
        Command::Langevin => {
            let wiggly = WigglyLandscape::new(
                landscape,
                reg.require(reg.n, "n")?,
                reg.wiggle_amplitude.unwrap_or(1.0),
                1.0,
            );
            let dt = run.dt.unwrap_or_else(|| langevin_dt_bound(&wiggly));
            let path = simulate_langevin_wiggly(
                &wiggly,
                reg.require(reg.beta, "beta")?,
                run.x0,
                run.t_end,
                dt,
                run.require_seed()?,
            )?;
            write_sample_csv(&outs.path("csv"), path.dt, &path.values)?;
            Ok(path.exited)
        }
        Command::Flow => {
            let curve = match (reg.alpha, reg.beta, reg.omega) {
                (Some(alpha), Some(beta), _) => {
                    solve_generalized_flow(&landscape, alpha, beta, run.x0, run.t_end, run.tol)?
                }
                (None, None, Some(omega)) => {
                    solve_quadratic_flow(&landscape, omega, run.x0, run.t_end, run.tol)?
                }
                _ => {
                    return Err(Error::Config(
                        "flow needs regime.(alpha,beta) or regime.omega".into(),
                    ))
                }
            };
            write_sample_csv(&outs.path("csv"), curve.dt, &curve.values)?;
            Ok(false)
        }
        Command::RiFlow => {
            let a = reg.require(reg.a, "a")?;
            let dt_load = run.dt_load.unwrap_or(run.t_end / 2048.0);
            let curve = solve_rate_independent(&landscape, a, run.x0, run.t_end, dt_load)?;
            write_bv_csv(&outs.path("csv"), &curve)?;
            Ok(false)
        }
        Command::Action => {
            let input = run.input.as_ref().ok_or_else(|| {
                Error::Config("action needs run.input (CSV curve, `t,x`)".into())
            })?;
            let curve = read_curve_csv(Path::new(input))?;
            let report = match (reg.alpha, reg.beta, reg.omega) {
                (Some(alpha), Some(beta), _) => {
                    action_J_alpha_beta(&curve, &landscape, alpha, beta)?
                }
                (None, None, Some(omega)) => action_J_Q(&curve, &landscape, omega)?,
                _ => {
                    return Err(Error::Config(
                        "action needs regime.(alpha,beta) or regime.omega".into(),
                    ))
                }
            };
            write_json(&outs.path("json"), &report)?;
            Ok(report.violation_at.is_some())
        }
        Command::MoscoQ => {
            let omega = reg.require(reg.omega, "omega")?;
            let betas = reg.beta_list.clone().unwrap_or(vec![1.0, 0.1, 0.01]);
            let curve = match &run.input {
                Some(p) => read_curve_csv(Path::new(p))?,
                None => {
                    // default smooth non-solution test curve: a straight ramp
                    let k = 512;
                    SampledCurve {
                        dt: run.t_end / k as f64,
                        values: (0..=k)
                            .map(|i| run.x0 + 0.4 * run.t_end * i as f64 / k as f64)
                            .collect(),
                    }
                }
            };
            let table = mosco_quadratic_experiment(&landscape, &curve, omega, &betas)?;
            write_table_csv(&outs.path("csv"), &table)?;
            Ok(table_flagged(&table))
        }
        Command::MoscoRi => {
            let a = reg.require(reg.a, "a")?;
            let betas = reg.beta_list.clone().unwrap_or(vec![100.0, 1000.0]);
            let dt_load = run.dt_load.unwrap_or(run.t_end / 2048.0);
            let bv = solve_rate_independent(&landscape, a, run.x0, run.t_end, dt_load)?;
            let table = mosco_ri_experiment(&landscape, &bv, a, &betas)?;
            write_table_csv(&outs.path("csv"), &table)?;
            Ok(table_flagged(&table))
        }
        Command::Lln => {
            let table = lln_experiment(
                &landscape,
                &reg.n_list.clone().ok_or_else(|| Error::Config("regime.n_list required".into()))?,
                reg.require(reg.alpha, "alpha")?,
                reg.require(reg.beta, "beta")?,
                run.x0,
                run.t_end,
                run.replicas.unwrap_or(200),
                run.require_seed()?,
            )?;
            write_table_csv(&outs.path("csv"), &table)?;
            Ok(table_flagged(&table))
        }
        Command::Bridge => {
            let table = bridge_experiment(
                &landscape,
                &reg.n_list.clone().ok_or_else(|| Error::Config("regime.n_list required".into()))?,
                reg.require(reg.delta, "delta")?,
                reg.require(reg.omega, "omega")?,
                reg.h.unwrap_or(0.0),
                run.x0,
                run.t_end,
                run.replicas.unwrap_or(200),
                run.require_seed()?,
            )?;
            write_table_csv(&outs.path("csv"), &table)?;
            Ok(table_flagged(&table))
        }
        Command::Ldp => {
            let alpha = reg.require(reg.alpha, "alpha")?;
            let beta = reg.require(reg.beta, "beta")?;
            let radius = run
                .tube_radius
                .ok_or_else(|| Error::Config("run.tube_radius required".into()))?;
            let solution = solve_generalized_flow(&landscape, alpha, beta, run.x0, run.t_end, run.tol)?;
            let shift = run.reference_shift.unwrap_or(2.0 * radius);
            let reference = SampledCurve {
                dt: solution.dt,
                values: solution.values.iter().map(|x| x + shift).collect(),
            };
            let table = ldp_tube_experiment(
                &landscape,
                &reg.n_list.clone().ok_or_else(|| Error::Config("regime.n_list required".into()))?,
                alpha,
                beta,
                &reference,
                radius,
                run.replicas.unwrap_or(1000),
                run.require_seed()?,
            )?;
            write_table_csv(&outs.path("csv"), &table)?;
            Ok(table_flagged(&table))
        }
        Command::CheckDissipation => {
            let family = cfg.dissipation_family()?;
            let betas = reg
                .beta_list
                .clone()
                .ok_or_else(|| Error::Config("regime.beta_list required".into()))?;
            let report = check_conditions(&family, &betas, 1.0, landscape.grad_bound)?;
            write_json(&outs.path("json"), &report)?;
            Ok(!report.verdict)
        }
    }
}

fn table_flagged(table: &ConvergenceTable) -> bool {
    table.rows.iter().any(|r| r.flag.is_some())
}

fn write_csv(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = String>,
) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}

fn write_sample_csv(path: &Path, dt: f64, values: &[f64]) -> Result<()> {
    write_csv(
        path,
        "t,x",
        values
            .iter()
            .enumerate()
            .map(|(k, x)| format!("{},{x}", k as f64 * dt)),
    )
}

fn write_bv_csv(path: &Path, curve: &BVCurve) -> Result<()> {
    let mut rows = Vec::new();
    for (i, (&t, &x)) in curve.times.iter().zip(curve.values.iter()).enumerate() {
        if let Some(j) = curve.jump_at(i) {
            rows.push(format!("{t},{},1", j.x_left));
            if j.x_plateau != j.x_left {
                rows.push(format!("{t},{},1", j.x_plateau));
            }
            rows.push(format!("{t},{},1", j.x_right));
        } else {
            rows.push(format!("{t},{x},0"));
        }
    }
    write_csv(path, "t,x,jump", rows.into_iter())
}

fn write_table_csv(path: &Path, table: &ConvergenceTable) -> Result<()> {
    let header = std::iter::once(table.parameter_name.clone())
        .chain(table.columns.iter().cloned())
        .chain(std::iter::once("flag".into()))
        .collect::<Vec<_>>()
        .join(",");
    write_csv(
        path,
        &header,
        table.rows.iter().map(|r| {
            let mut cells = vec![format!("{}", r.parameter)];
            cells.extend(r.values.iter().map(|v| format!("{v}")));
            cells.push(r.flag.clone().unwrap_or_default());
            cells.join(",")
        }),
    )
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn read_curve_csv(path: &Path) -> Result<SampledCurve> {
    let text = std::fs::read_to_string(path)?;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for line in text.lines() {
        let mut parts = line.split(',');
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else { continue };
        if let (Ok(t), Ok(x)) = (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            points.push((t, x));
        }
    }
    if points.len() < 2 {
        return Err(Error::Config(format!("no curve data in {}", path.display())));
    }
    let dt = points[1].0 - points[0].0;
    for (k, &(t, _)) in points.iter().enumerate() {
        if (t - k as f64 * dt).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::Config("input curve grid is not uniform from t=0".into()));
        }
    }
    Ok(SampledCurve {
        dt,
        values: points.into_iter().map(|(_, x)| x).collect(),
    })
}
