//! `esst`: design, propagate and sweep enantioselective pulse sequences.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use esst_cli::config::{design_table, ConfigError, Ini, RunSpec};
use esst_core::areas::{condition_residuals, pulse_area, DesignSpec};
use esst_core::experiments::{
    self, sweep_delays, sweep_detuning, sweep_phase_duration, trace_pulses, DetuningCurves, Engine,
};
use esst_core::model::MoleculeSpec;
use esst_core::propagator::GridConfig;
use esst_core::pulses::{Channel, Pulse};

#[derive(Parser)]
#[command(name = "esst", version, about = "Enantioselective state transfer with three microwave pulses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complex pulse areas of the configured pulses and how well they meet the conditions.
    Areas(Common),
    /// Print the designed amplitudes, phases and timing.
    Design(Common),
    /// Propagate the configured pulses and write one trajectory CSV per hand.
    Propagate(Common),
    /// Propagate the designed sequence and write one trace CSV per hand.
    Trace(Common),
    /// Phase x duration landscape of the target population.
    SweepPhase(Common),
    /// Stage-2 delay landscape of the target population.
    SweepDelay(Common),
    /// Target population against detuning and amplitude scale.
    SweepDetuning(Common),
    /// List the built-in molecules.
    Presets,
}

#[derive(Args)]
struct Common {
    /// Run configuration (INI).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overrides [output] dir.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Which enantiomers to run.
    #[arg(long, value_enum)]
    hand: Option<HandArg>,
    /// 3 for A, B, C; 4 adds the spectator level.
    #[arg(long, value_parser = ["3", "4"])]
    levels: Option<String>,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Carrier phase reference.
    #[arg(long, value_enum)]
    convention: Option<ConventionArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum HandArg {
    Left,
    Right,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Analytic,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Absolute,
    Envelope,
}

impl ConventionArg {
    fn name(self) -> &'static str {
        match self {
            ConventionArg::Absolute => "absolute",
            ConventionArg::Envelope => "envelope",
        }
    }
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<esst_core::Error> for Failure {
    fn from(e: esst_core::Error) -> Self {
        if e.is_numerical_guard() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

/// The config text with command-line overrides applied on top.
struct Loaded {
    ini: Ini,
    spec: RunSpec,
}

fn load(common: &Common) -> Result<Loaded, Failure> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut ini = Ini::parse(&text)?;
    if let Some(dir) = &common.out {
        ini.set("output", "dir", &dir.to_string_lossy());
    }
    if let Some(h) = common.hand {
        let v = match h {
            HandArg::Left => "left",
            HandArg::Right => "right",
            HandArg::Both => "both",
        };
        ini.set("output", "hands", v);
    }
    if let Some(l) = &common.levels {
        ini.set("grid", "levels", l);
    }
    if let Some(e) = common.engine {
        ini.set("sweep", "engine", match e {
            EngineArg::Analytic => "analytic",
            EngineArg::Exact => "exact",
        });
    }
    if let Some(c) = common.convention {
        ini.set("design", "convention", c.name());
    }
    let spec = RunSpec::from_ini(&ini)?;
    Ok(Loaded { ini, spec })
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok((BufWriter::new(file), path))
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Config(format!("cannot write {}: {e}", path.display()))
}

fn write_with<F>(dir: &Path, name: &str, body: F) -> Outcome
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let (mut w, path) = create(dir, name)?;
    body(&mut w).and_then(|_| w.flush()).map_err(io_failure(&path))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Default grid for `pulses`, with any explicit [grid] values applied.
fn resolve_grid(spec: &RunSpec, pulses: &[Pulse]) -> Result<GridConfig, Failure> {
    let g = &spec.grid;
    let mut grid = GridConfig::for_pulses(&spec.molecule, pulses, g.levels, g.samples)?;
    if let Some(v) = g.t_start_ns {
        grid.t_start = v;
    }
    if let Some(v) = g.t_end_ns {
        grid.t_end = v;
    }
    if let Some(v) = g.dt_ns {
        grid.dt = v;
    }
    grid.sample_stride = (grid.steps() / g.samples).max(1);
    Ok(grid)
}

fn cmd_presets() -> Outcome {
    for name in MoleculeSpec::preset_names() {
        let m = MoleculeSpec::preset(name).expect("listed preset exists");
        println!("{name}");
        println!(
            "  omega_ab = {} MHz, omega_bc = {} MHz, omega_ac = {} MHz",
            m.omega_ab_mhz, m.omega_bc_mhz, m.omega_ac_mhz
        );
        println!("  mu_a = {} D, mu_b = {} D, mu_c = {} D", m.mu_a, m.mu_b, m.mu_c);
        if let Some(sp) = &m.spectator {
            println!(
                "  spectator: omega_abprime = {} MHz, omega_bprimec = {} MHz, mu_a' = {} D, mu_c' = {} D",
                sp.omega_abp_mhz, sp.omega_bpc_mhz, sp.mu_a_prime, sp.mu_c_prime
            );
        }
    }
    Ok(())
}

fn cmd_design(spec: &RunSpec) -> Outcome {
    let d = &spec.design;
    println!(
        "target {} for the {}-handed enantiomer, k = {}, k' = {}, l = {}, tau0 = {} ns, {} phases",
        d.target.label(),
        d.hand,
        d.k,
        d.k_prime,
        d.l,
        d.tau0,
        d.convention.name()
    );
    print!("{}", design_table(spec));
    Ok(())
}

fn cmd_areas(spec: &RunSpec) -> Outcome {
    let m = &spec.molecule;
    let areas = [Channel::A, Channel::B, Channel::C].map(|ch| pulse_area(m, spec.pulses.get(ch)));
    let [a, b, c] = [areas[0].clone()?, areas[1].clone()?, areas[2].clone()?];
    println!("channel  |theta| (rad)    phi_eff (rad)     Re theta          Im theta");
    for area in [&a, &b, &c] {
        println!(
            "{:<8} {:<16.10} {:<17.10} {:<17.10} {:.10}",
            area.channel,
            area.modulus(),
            area.effective_phase(),
            area.value.re,
            area.value.im
        );
    }
    let r = condition_residuals(&a, &b, &c, &spec.design)?;
    println!(
        "amplitude residuals (rad): a {:.3e}, b {:.3e}, c {:.3e}",
        r.amplitude_residuals.a, r.amplitude_residuals.b, r.amplitude_residuals.c
    );
    println!("loop phase residual: {:.3e} rad", r.phase_residual);
    println!(
        "predicted P_{}^{} = {:.9}, opposite hand amplitude {:.3e}",
        spec.design.target.label(),
        spec.design.hand.label(),
        r.predicted_target_population,
        r.suppression_residual
    );
    Ok(())
}

fn run_trajectories(loaded: &Loaded, pulses: &[Pulse], prefix: &str) -> Outcome {
    let spec = &loaded.spec;
    let grid = resolve_grid(spec, pulses)?;
    let hands = spec.output.hands.hands();
    let trajs = trace_pulses(&spec.molecule, pulses, &hands, spec.grid.levels, &grid)?;
    let meta = spec.snapshot_lines();
    for traj in &trajs {
        let fin = traj.final_populations();
        let labels = &traj.basis.labels;
        let shown: Vec<String> = labels.iter().zip(&fin).map(|(l, p)| format!("P_{l} = {p:.6}")).collect();
        println!("{}: {} (norm drift {:.2e})", traj.hand, shown.join(", "), traj.norm_drift);
        write_with(&spec.output.dir, &format!("{prefix}_{}.csv", traj.hand), |w| {
            experiments::write_trace_csv(w, traj, &meta)
        })?;
    }
    Ok(())
}

fn cmd_propagate(loaded: &Loaded) -> Outcome {
    run_trajectories(loaded, &loaded.spec.pulses.to_vec(), "trajectory")
}

fn cmd_trace(loaded: &Loaded) -> Outcome {
    let spec = &loaded.spec;
    let pulses = esst_core::areas::design_sequence(&spec.molecule, &spec.design)?.to_vec();
    run_trajectories(loaded, &pulses, "trace")
}

fn cmd_sweep_phase(loaded: &Loaded) -> Outcome {
    let spec = &loaded.spec;
    let engine = spec.sweep.engine.unwrap_or(Engine::Exact);
    let mut grid = sweep_phase_duration(
        &spec.molecule,
        &spec.design,
        &spec.sweep.phase,
        &spec.sweep.duration,
        spec.grid.levels,
        engine,
    )?;
    grid.metadata = spec.snapshot_lines();
    report_best(&grid);
    write_with(&spec.output.dir, "sweep_phase.csv", |w| experiments::write_landscape_csv(w, &grid))
}

fn report_best(grid: &experiments::SweepGrid) {
    let v1 = grid.axis1.values();
    let v2 = grid.axis2.values();
    for hand in esst_core::model::Handedness::BOTH {
        let (idx, best) = grid
            .payload(hand)
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        let (i1, i2) = (idx / grid.axis2.count, idx % grid.axis2.count);
        println!(
            "{hand}: max P_{} = {best:.6} at {} = {:.6}, {} = {:.6}",
            grid.target.label(),
            grid.axis1.name,
            v1[i1],
            grid.axis2.name,
            v2[i2]
        );
    }
}

fn cmd_sweep_delay(loaded: &Loaded, convention: Option<ConventionArg>) -> Outcome {
    // both conventions unless one was asked for
    let conventions = match convention {
        Some(c) => vec![c],
        None => vec![ConventionArg::Envelope, ConventionArg::Absolute],
    };
    for conv in conventions {
        let mut ini = loaded.ini.clone();
        ini.set("design", "convention", conv.name());
        let spec = RunSpec::from_ini(&ini)?;
        let mut grid =
            sweep_delays(&spec.molecule, &spec.design, &spec.sweep.delay1, &spec.sweep.delay2, spec.grid.levels)?;
        grid.metadata = spec.snapshot_lines();
        println!("{} convention:", conv.name());
        report_best(&grid);
        write_with(&spec.output.dir, &format!("sweep_delay_{}.csv", conv.name()), |w| {
            experiments::write_landscape_csv(w, &grid)
        })?;
    }
    Ok(())
}

fn cmd_sweep_detuning(loaded: &Loaded) -> Outcome {
    let spec = &loaded.spec;
    let engines = match spec.sweep.engine {
        Some(e) => vec![e],
        None => vec![Engine::Analytic, Engine::Exact],
    };
    let design: &DesignSpec = &spec.design;
    let deltas: Vec<f64> = spec.sweep.detunings_per_tau0.iter().map(|x| x / design.tau0).collect();
    let mut merged: Option<DetuningCurves> = None;
    for engine in engines {
        let curves = sweep_detuning(
            &spec.molecule,
            design,
            &deltas,
            &spec.sweep.scale,
            spec.sweep.mode,
            engine,
            spec.grid.levels,
        )?;
        merged = Some(match merged {
            None => curves,
            Some(mut m) => {
                m.points.extend(curves.points);
                m
            }
        });
    }
    let mut curves = merged.expect("at least one engine");
    curves.metadata = spec.snapshot_lines();
    for &delta in &deltas {
        for engine in [Engine::Analytic, Engine::Exact] {
            let curve = curves.curve(delta, engine, design.hand);
            if let Some(best) = curve.iter().max_by(|a, b| a.p_target.total_cmp(&b.p_target)) {
                println!(
                    "delta*tau0 = {:.3}, {engine}: max P_{}^{} = {:.6} at scale {:.4}",
                    delta * design.tau0,
                    design.target.label(),
                    design.hand.label(),
                    best.p_target,
                    best.scale
                );
            }
        }
    }
    write_with(&spec.output.dir, "sweep_detuning.csv", |w| experiments::write_curves_csv(w, &curves))
}

fn configure_threads() -> Outcome {
    let Ok(raw) = std::env::var("ESST_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Config(format!("ESST_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size the thread pool: {e}")))
}

fn dispatch(cli: Cli) -> Outcome {
    configure_threads()?;
    match cli.command {
        Command::Presets => cmd_presets(),
        Command::Areas(c) => cmd_areas(&load(&c)?.spec),
        Command::Design(c) => cmd_design(&load(&c)?.spec),
        Command::Propagate(c) => cmd_propagate(&load(&c)?),
        Command::Trace(c) => cmd_trace(&load(&c)?),
        Command::SweepPhase(c) => cmd_sweep_phase(&load(&c)?),
        Command::SweepDelay(c) => cmd_sweep_delay(&load(&c)?, c.convention),
        Command::SweepDetuning(c) => cmd_sweep_detuning(&load(&c)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(msg) | Failure::Numeric(msg)) = &f;
            eprintln!("esst: {msg}");
            ExitCode::from(f.code())
        }
    }
}
