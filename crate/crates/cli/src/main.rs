//! `attractorlab` command-line driver.
//!
//! Exit codes: 0 success, 1 validation or input error, 2 numerical failure.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use attractorlab::config::RunConfig;
use attractorlab::diagnostics::{
    detect_all, dispersion_lines, link_tracks, write_lines_csv, write_tracks_csv, LineConfig, LinkConfig, Vacuum,
    KINK_EPSILON, SOLITON_THRESHOLD,
};
use attractorlab::experiment::{
    dalembert_oracle, longest_track, read_tracks, run_effective, run_experiment, write_effective,
};
use attractorlab::output::{create, fmt_f64, read_snapshot_dir, Table};
use attractorlab::solitons::solve_profile;
use attractorlab::spectrum::spectral_report;
use attractorlab::{parse_config, to_canonical, Complex64, Error};
use clap::{Parser, Subcommand, ValueEnum};

/// `println!` that exits quietly when stdout is a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {
        stdout_or_exit(writeln!(std::io::stdout(), $($arg)*))
    };
}

macro_rules! say_raw {
    ($($arg:tt)*) => {
        stdout_or_exit(write!(std::io::stdout(), $($arg)*))
    };
}

fn stdout_or_exit(r: std::io::Result<()>) {
    if let Err(e) = r {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing to stdout: {e}");
        std::process::exit(1);
    }
}

#[derive(Parser)]
#[command(name = "attractorlab", version, about = "Attractor experiments for 1D Hamiltonian field equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VacuumArg {
    Zero,
    Pm1,
}

#[derive(Subcommand)]
enum Command {
    /// Run the PDE experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the soliton profile for the config's potential and write it.
    Soliton {
        config: PathBuf,
        /// Frequency (default: the config's init.omega).
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        dx: f64,
        /// Half width of the written profile (default: 20 half-widths).
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long, default_value = "profile.csv")]
        out: PathBuf,
    },
    /// Power spectrum of psi(0, t) from a series.csv.
    Spectrum {
        series: PathBuf,
        /// Trailing fraction of the series to analyse.
        #[arg(long, default_value_t = 0.25)]
        window: f64,
        #[arg(long, default_value_t = 0.05)]
        bandwidth: f64,
        /// Output file (default: spectrum.csv next to the series).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect and link structures in a snapshot directory.
    Track {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "zero")]
        vacuum: VacuumArg,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Also fit radiation line speeds (lines.csv).
        #[arg(long)]
        lines: bool,
        /// Output directory (default: the snapshot directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the effective soliton dynamics and compare with a track.
    Effective {
        config: PathBuf,
        /// tracks.csv of the matching PDE run; the longest track is used.
        #[arg(long)]
        tracks: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the exact free-wave solution of a massless force-free config.
    OracleDalembert {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several configs concurrently (ATTRACTORLAB_THREADS caps the pool).
    Sweep {
        configs: Vec<PathBuf>,
        /// Put each run in <out-root>/<config stem> instead of its output.dir.
        #[arg(long)]
        out_root: Option<PathBuf>,
    },
    /// Validate a config and print its canonical form.
    Check { config: PathBuf },
}

enum Failure {
    Invalid(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite { .. } | Error::BlowUp { .. } => Failure::Numerical(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn load(path: &Path) -> CliResult<(RunConfig, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text).map_err(|e| Failure::Invalid(format!("{}:\n{e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn print_manifest(manifest: &[(String, usize)], limit: usize) {
    for (name, rows) in manifest.iter().take(limit) {
        say!("  {name}: {rows} rows");
    }
    if manifest.len() > limit {
        say!("  ... {} more files", manifest.len() - limit);
    }
}

fn cmd_run(config: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let (cfg, base) = load(config)?;
    let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
    let o = run_experiment(&cfg, &base, Some(&dir))?;
    say!("{}: {} steps in {:.2?}", dir.display(), o.run.steps, o.run.wall_time);
    say!(
        "energy {} -> {}, radiated {}",
        fmt_f64(o.run.initial_energy),
        fmt_f64(o.run.final_energy),
        fmt_f64(o.run.radiated_energy)
    );
    print_manifest(&o.manifest, 8);
    Ok(())
}

fn cmd_soliton(config: &Path, omega: Option<f64>, dx: f64, x_max: Option<f64>, out: &Path) -> CliResult<()> {
    let (cfg, _) = load(config)?;
    let omega = match (omega, &cfg.init) {
        (Some(w), _) => w,
        (None, attractorlab::config::InitSpec::Soliton { omega, .. }) => *omega,
        _ => return Err(Failure::Invalid("pass --omega or use a soliton config".into())),
    };
    let profile = solve_profile(omega, &cfg.potential.build()?, cfg.kg_mass)?;
    let reach = x_max.unwrap_or(20.0 * profile.half_width());
    let mut w = BufWriter::new(create(out)?);
    writeln!(w, "x,phi,dphi")?;
    let n = (reach / dx).round() as i64;
    for k in -n..=n {
        let x = k as f64 * dx;
        writeln!(w, "{},{},{}", fmt_f64(x), fmt_f64(profile.value(x)), fmt_f64(profile.derivative(x)))?;
    }
    w.flush()?;
    say!("omega = {}", fmt_f64(omega));
    say!("amplitude = {}", fmt_f64(profile.amplitude));
    say!("decay_rate = {}", fmt_f64(profile.decay_rate));
    say!("half_width = {}", fmt_f64(profile.half_width()));
    say!("rest_mass = {}", fmt_f64(profile.rest_mass()));
    Ok(())
}

fn cmd_spectrum(series: &Path, window: f64, bandwidth: f64, out: Option<PathBuf>) -> CliResult<()> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Failure::Invalid(format!("--window {window} must lie in (0, 1]")));
    }
    let table = Table::read(series)?;
    let t = table.column("t")?;
    let re = table.column("psi0_re")?;
    let im = table.column("psi0_im")?;
    if t.len() < 8 {
        return Err(Failure::Invalid(format!("{}: need at least 8 rows", series.display())));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let z: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
    let n = ((z.len() as f64) * window).round() as usize;
    let report = spectral_report(&z, t[0], dt, n.max(4), bandwidth)?;
    let out = out.unwrap_or_else(|| series.with_file_name("spectrum.csv"));
    let mut w = BufWriter::new(create(&out)?);
    report.write_csv(&mut w)?;
    w.flush()?;
    say_raw!("{}", report.summary());
    Ok(())
}

fn cmd_track(dir: &Path, vacuum: VacuumArg, epsilon: Option<f64>, lines: bool, out: Option<PathBuf>) -> CliResult<()> {
    let snapshots = read_snapshot_dir(dir)?;
    let (vac, default_eps) = match vacuum {
        VacuumArg::Zero => (Vacuum::Zero, SOLITON_THRESHOLD),
        VacuumArg::Pm1 => (Vacuum::PlusMinusOne, KINK_EPSILON),
    };
    let frames = detect_all(&snapshots, vac, epsilon.unwrap_or(default_eps));
    let tracks = link_tracks(&frames, &LinkConfig::default());
    let out = out.unwrap_or_else(|| dir.to_path_buf());
    std::fs::create_dir_all(&out)?;
    let rows = write_tracks_csv(BufWriter::new(create(&out.join("tracks.csv"))?), &tracks)?;
    say!("{} snapshots, {} tracks ({rows} rows)", snapshots.len(), tracks.len());
    for tr in &tracks {
        say!(
            "  track {}: {} points, velocity {}, mean width {}",
            tr.id,
            tr.len(),
            fmt_f64(tr.velocity),
            fmt_f64(tr.mean_width)
        );
    }
    if lines {
        let found = dispersion_lines(&snapshots, &LineConfig { vacuum: vac, ..LineConfig::default() });
        write_lines_csv(BufWriter::new(create(&out.join("lines.csv"))?), &found)?;
        for l in &found {
            say!("  line speed {} ({} points)", fmt_f64(l.speed), l.strength);
        }
    }
    Ok(())
}

fn cmd_effective(config: &Path, tracks: Option<PathBuf>, out: Option<PathBuf>) -> CliResult<()> {
    let (cfg, base) = load(config)?;
    let all = tracks.as_deref().map(read_tracks).transpose()?;
    let track = all.as_deref().and_then(longest_track);
    if all.is_some() && track.is_none() {
        return Err(Failure::Invalid("tracks file holds no tracks".into()));
    }
    let e = run_effective(&cfg, &base, track)?;
    let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
    let manifest = write_effective(&dir, &e)?;
    say!("rest mass {}, effective depth {}", fmt_f64(e.kinetic.rest_mass), fmt_f64(e.potential.depth));
    say!("H_eff relative drift {}", fmt_f64(e.trajectory.energy_drift()));
    if let Some(rep) = &e.comparison {
        say!(
            "max deviation {}, first-two-period amplitude drift {}",
            fmt_f64(rep.max_deviation),
            fmt_f64(rep.first_two_period_drift)
        );
    }
    print_manifest(&manifest, 4);
    Ok(())
}

fn cmd_oracle(config: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let (cfg, _) = load(config)?;
    let dir = out.unwrap_or_else(|| cfg.output_dir.join("oracle"));
    let manifest = dalembert_oracle(&cfg, &dir)?;
    say!("{}: d'Alembert solution", dir.display());
    print_manifest(&manifest, 8);
    Ok(())
}

fn sweep_threads() -> CliResult<Option<usize>> {
    match std::env::var("ATTRACTORLAB_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Invalid(format!("ATTRACTORLAB_THREADS must be a positive integer, got '{v}'"))),
        },
    }
}

fn cmd_sweep(configs: &[PathBuf], out_root: Option<PathBuf>) -> CliResult<()> {
    if configs.is_empty() {
        return Err(Failure::Invalid("sweep needs at least one config".into()));
    }
    // Parse everything first so a bad file aborts before any compute.
    let loaded = configs.iter().map(|p| load(p)).collect::<CliResult<Vec<_>>>()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = sweep_threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::Invalid(e.to_string()))?;
    let results: Vec<(PathBuf, CliResult<usize>)> = pool.install(|| {
        use rayon::prelude::*;
        configs
            .par_iter()
            .zip(loaded.par_iter())
            .map(|(path, (cfg, base))| {
                let dir = match &out_root {
                    Some(root) => root.join(path.file_stem().unwrap_or_default()),
                    None => cfg.output_dir.clone(),
                };
                let r = run_experiment(cfg, base, Some(&dir)).map(|o| o.run.steps as usize).map_err(Failure::from);
                (dir, r)
            })
            .collect()
    });
    let mut worst: Option<Failure> = None;
    for (dir, r) in results {
        match r {
            Ok(steps) => say!("{}: ok ({steps} steps)", dir.display()),
            Err(f) => {
                eprintln!("{}: {}", dir.display(), f.message());
                if worst.as_ref().is_none_or(|w| f.code() > w.code()) {
                    worst = Some(f);
                }
            }
        }
    }
    worst.map_or(Ok(()), Err)
}

fn cmd_check(config: &Path) -> CliResult<()> {
    let (cfg, _) = load(config)?;
    say_raw!("{}", to_canonical(&cfg));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Soliton { config, omega, dx, x_max, out } => cmd_soliton(&config, omega, dx, x_max, &out),
        Command::Spectrum { series, window, bandwidth, out } => cmd_spectrum(&series, window, bandwidth, out),
        Command::Track { dir, vacuum, epsilon, lines, out } => cmd_track(&dir, vacuum, epsilon, lines, out),
        Command::Effective { config, tracks, out } => cmd_effective(&config, tracks, out),
        Command::OracleDalembert { config, out } => cmd_oracle(&config, out),
        Command::Sweep { configs, out_root } => cmd_sweep(&configs, out_root),
        Command::Check { config } => cmd_check(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
