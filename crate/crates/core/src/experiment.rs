//! Builds initial data from a [`RunConfig`], runs it, and writes the
//! output directory: `series.csv`, snapshots, optional diagnostics, and a
//! `summary.txt` with the file manifest.

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adiabatic::{
    compare_adiabatic, integrate_effective, windowed_momentum, AdiabaticReport, EffectiveConfig, EffectivePotential,
    EffectiveState, EffectiveTrajectory, KineticMap,
};
use crate::config::{InitSpec, RunConfig, SolitonVelocity, VacuumChoice};
use crate::diagnostics::{
    hough_lines, link_tracks, write_lines_csv, write_tracks_csv, DetectionSink, FollowSink, Line, LineConfig,
    LinkConfig, PointSink, TrackSeries, Vacuum,
};
use crate::error::{Error, Result};
use crate::fields::{FieldState, Grid1D};
use crate::integrator::{run, MemorySink, RunSink, RunSummary, SeriesRow};
use crate::orbits::{manifold_distance, solve_orbit, ManifoldFit};
use crate::output::{count_rows, create, fmt_f64, read_snapshot, CsvSink};
use crate::solitons::{
    kink_derivative, kink_internal_frequency, kink_profile, kink_shape_mode, kink_shape_mode_derivative, solve_profile,
    SolitonParams,
};
use crate::spectrum::{spectral_report, SpectrumReport};

/// Number of random cosine modes in a seeded gaussian start.
const NOISE_MODES: usize = 4;

/// Initial data `x -> (psi, pi)` at `t = 0`.
pub type StartFn = Box<dyn Fn(f64) -> (Complex64, Complex64) + Send + Sync>;

fn orbit_fn(cfg: &RunConfig, omega: f64, theta: f64) -> Result<impl Fn(f64) -> (Complex64, Complex64)> {
    let pot = cfg.potential.build()?;
    let orbit = solve_orbit(omega, &pot, cfg.kg_mass)?
        .ok_or_else(|| Error::InvalidArgument(format!("no nonzero stationary orbit at omega = {omega}")))?;
    let phase = Complex64::from_polar(1.0, theta);
    let rot = Complex64::new(0.0, -omega);
    Ok(move |x: f64| {
        let psi = phase * orbit.profile(x);
        (psi, rot * psi)
    })
}

/// Closed-form initial data for every start except `file`.
pub fn analytic_start(cfg: &RunConfig) -> Result<Option<StartFn>> {
    Ok(Some(match cfg.init.clone() {
        InitSpec::Kink { sign, v, q0, perturbation } => {
            let g = SolitonParams::new(0.0, v, q0, 0.0)?.gamma();
            // Lorentz image of the rest-frame breathing kink
            // S(xi) + eps a(xi) cos(Omega tau) at t = 0, where tau = -v xi.
            let big = kink_internal_frequency();
            Box::new(move |x| {
                let xi = g * (x - q0);
                let (sn, cs) = (big * v * xi).sin_cos();
                let a = perturbation * kink_shape_mode(xi);
                let da = perturbation * kink_shape_mode_derivative(xi);
                let psi = sign * kink_profile(xi) + a * cs;
                let pi = -g * v * (sign * kink_derivative(xi) + da * cs) + g * big * a * sn;
                (Complex64::new(psi, 0.0), Complex64::new(pi, 0.0))
            })
        }
        InitSpec::Soliton { omega, v, q0, theta, velocity } => {
            let profile = solve_profile(omega, &cfg.potential.build()?, cfg.kg_mass)?;
            let g = SolitonParams::new(omega, v, q0, theta)?.gamma();
            Box::new(move |x| {
                let xi = g * (x - q0);
                let phase = Complex64::from_polar(1.0, theta + omega * g * v * (x - q0));
                let (phi, dphi) = (profile.value(xi), profile.derivative(xi));
                let pi = match velocity {
                    SolitonVelocity::Zero => Complex64::default(),
                    SolitonVelocity::Manifold => phase * Complex64::new(-g * v * dphi, -omega * g * phi),
                };
                (phase * phi, pi)
            })
        }
        InitSpec::Orbit { omega, theta, amplitude } => {
            let f = orbit_fn(cfg, omega, theta)?;
            Box::new(move |x| {
                let (a, b) = f(x);
                (a * amplitude, b * amplitude)
            })
        }
        InitSpec::TwoTone { omega, omega2, theta, theta2, amplitude } => {
            let f = orbit_fn(cfg, omega, theta)?;
            let h = orbit_fn(cfg, omega2, theta2)?;
            Box::new(move |x| {
                let ((a, b), (c, d)) = (f(x), h(x));
                ((a + c) * amplitude, (b + d) * amplitude)
            })
        }
        InitSpec::Gaussian { background, amplitude, width, q0, wavenumber, omega, noise, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let modes: Vec<(f64, f64, f64)> = (0..NOISE_MODES)
                .map(|_| {
                    (rng.gen_range(-1.0..1.0), rng.gen_range(0.2..1.0), rng.gen_range(0.0..2.0 * std::f64::consts::PI))
                })
                .collect();
            let rot = Complex64::new(0.0, -omega);
            Box::new(move |x| {
                let y = x - q0;
                let r: f64 = modes.iter().map(|(a, k, p)| a * (k * y + p).cos()).sum::<f64>() / NOISE_MODES as f64;
                let env = amplitude * (-0.5 * y * y / (width * width)).exp() * (1.0 + noise * r);
                let bump = Complex64::from_polar(env, wavenumber * y);
                (bump + background, rot * bump)
            })
        }
        InitSpec::File { .. } => return Ok(None),
    }))
}

/// Initial state at `t = 0`; relative `init.path` values resolve against `base`.
pub fn initial_state(cfg: &RunConfig, base: &Path) -> Result<FieldState> {
    let grid = cfg.grid()?;
    if let Some(f) = analytic_start(cfg)? {
        let (psi, pi): (Vec<Complex64>, Vec<Complex64>) = grid.xs().into_iter().map(&f).unzip();
        return FieldState::new(grid, psi, pi, 0.0);
    }
    let InitSpec::File { path } = &cfg.init else { unreachable!("only file starts lack a closed form") };
    let s = read_snapshot(&resolve(base, path), 0.0)?;
    if s.grid.len() != grid.len() || (s.grid.x_min() - grid.x_min()).abs() > 1e-9 * grid.dx() {
        return Err(Error::GridMismatch { expected: grid.len(), got: s.grid.len() });
    }
    FieldState::new(grid, s.psi, s.pi, 0.0)
}

/// Exact free-wave solution at time `t` by d'Alembert's formula,
/// `psi = [psi0(x - t) + psi0(x + t)]/2 + 1/2 int_{x-t}^{x+t} pi0`.
pub fn dalembert_state(start: &StartFn, grid: Grid1D, t: f64) -> Result<FieldState> {
    use crate::numerics::adaptive_simpson;
    let h = 1e-5;
    let d = |x: f64| (start(x + h).0 - start(x - h).0) / (2.0 * h);
    let xs = grid.xs();
    // Antiderivative of pi0 at every endpoint x -/+ t, accumulated over the
    // sorted endpoints so each short segment is integrated once.
    let mut ends: Vec<f64> = xs.iter().flat_map(|&x| [x - t, x + t]).collect();
    ends.sort_by(f64::total_cmp);
    ends.dedup();
    let pieces: Vec<Complex64> = ends
        .par_windows(2)
        .map(|w| {
            let re = adaptive_simpson(&|y| start(y).1.re, w[0], w[1], 1e-15);
            let im = adaptive_simpson(&|y| start(y).1.im, w[0], w[1], 1e-15);
            Complex64::new(re, im)
        })
        .collect();
    let mut anti = Vec::with_capacity(ends.len());
    let mut acc = Complex64::default();
    anti.push(acc);
    for p in pieces {
        acc += p;
        anti.push(acc);
    }
    let at = |y: f64| anti[ends.partition_point(|&e| e < y)];
    let values: Vec<(Complex64, Complex64)> = xs
        .par_iter()
        .map(|&x| {
            let (a, b) = (x - t, x + t);
            let (pa, qa) = start(a);
            let (pb, qb) = start(b);
            let psi = (pa + pb) * 0.5 + (at(b) - at(a)) * 0.5;
            let pi = (d(b) - d(a)) * 0.5 + (qa + qb) * 0.5;
            (psi, pi)
        })
        .collect();
    let (psi, pi) = values.into_iter().unzip();
    FieldState::new(grid, psi, pi, t)
}

/// Writes the d'Alembert solution of a massless, force-free config on the
/// run's snapshot schedule, with `series.csv` holding `psi(0, t)`.
pub fn dalembert_oracle(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<(String, usize)>> {
    let model = cfg.model()?;
    let force_free = model.potential.is_zero() && model.kg_mass == 0.0 && !model.has_external();
    let massless_point = model.family == crate::fields::Family::Lamb && model.particle_mass == 0.0;
    if !force_free || (model.family.is_point_coupled() && !massless_point) {
        return Err(Error::InvalidModel("the d'Alembert oracle needs a massless, force-free model".into()));
    }
    let start = analytic_start(cfg)?
        .ok_or_else(|| Error::InvalidArgument("the d'Alembert oracle needs a closed-form start".into()))?;
    let grid = cfg.grid()?;
    let stepper = cfg.stepper();
    std::fs::create_dir_all(out_dir)?;
    let mut csv = CsvSink::new(out_dir)?;
    let n = stepper.n_steps();
    for k in 0..=n {
        let t = k as f64 * cfg.dt;
        let snap = k % stepper.snapshot_every == 0;
        let series = k % stepper.series_every == 0;
        if !(snap || series) {
            continue;
        }
        if snap {
            let s = dalembert_state(&start, grid, t)?;
            csv.on_snapshot(k, &s)?;
        }
        if series {
            let (a, b) = (start(-t), start(t));
            let int_re = crate::numerics::adaptive_simpson(&|y| start(y).1.re, -t, t, 1e-13);
            let int_im = crate::numerics::adaptive_simpson(&|y| start(y).1.im, -t, t, 1e-13);
            let psi0 = (a.0 + b.0) * 0.5 + Complex64::new(int_re, int_im) * 0.5;
            csv.on_series(&SeriesRow {
                step: k,
                t,
                psi0,
                energy: f64::NAN,
                momentum: f64::NAN,
                energy_inside: f64::NAN,
                radiated: f64::NAN,
            })?;
        }
    }
    let manifest: Vec<(String, usize)> = csv
        .finish()?
        .into_iter()
        .map(|(name, rows)| if name.starts_with("snap_") { (name, grid.len()) } else { (name, rows) })
        .collect();
    let mut text = String::from("oracle = dalembert\n");
    for (name, rows) in &manifest {
        text.push_str(&format!("manifest.{name} = {rows}\n"));
    }
    std::fs::write(out_dir.join("summary.txt"), text)?;
    Ok(manifest)
}

pub fn vacuum_of(cfg: &RunConfig) -> Vacuum {
    match cfg.diagnostics.vacuum {
        VacuumChoice::Zero => Vacuum::Zero,
        VacuumChoice::PlusMinusOne => Vacuum::PlusMinusOne,
    }
}

/// Everything a run produced besides its files.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub run: RunSummary,
    pub series: Vec<SeriesRow>,
    pub tracks: Vec<TrackSeries>,
    pub lines: Vec<Line>,
    pub spectrum: Option<SpectrumReport>,
    pub manifold: Vec<(f64, ManifoldFit)>,
    /// `(file, data rows)` relative to the output directory.
    pub manifest: Vec<(String, usize)>,
}

struct SeriesKeeper(Vec<SeriesRow>);

impl RunSink for SeriesKeeper {
    fn on_series(&mut self, row: &SeriesRow) -> Result<()> {
        self.0.push(*row);
        Ok(())
    }
}

struct ManifoldSink<'a> {
    cfg: &'a RunConfig,
    radius: f64,
    fits: Vec<(f64, ManifoldFit)>,
}

impl RunSink for ManifoldSink<'_> {
    fn on_snapshot(&mut self, _step: u64, state: &FieldState) -> Result<()> {
        let pot = self.cfg.potential.build()?;
        let fit = manifold_distance(state, &pot, self.cfg.kg_mass, self.radius)?;
        self.fits.push((state.t, fit));
        Ok(())
    }
}

/// Runs the configured experiment. With `out_dir` set, output files and
/// `summary.txt` are written there.
pub fn run_experiment(cfg: &RunConfig, base: &Path, out_dir: Option<&Path>) -> Result<ExperimentOutcome> {
    let model = cfg.model()?;
    let state0 = initial_state(cfg, base)?;
    let grid = state0.grid;
    let stepper = cfg.stepper();
    let d = &cfg.diagnostics;
    let vacuum = vacuum_of(cfg);
    let eps = cfg.detection_epsilon();

    let mut csv = match out_dir {
        Some(dir) => {
            let sink = CsvSink::new(dir)?;
            Some(if d.write_snapshots { sink } else { sink.without_snapshot_files() })
        }
        None => None,
    };
    let mut series = SeriesKeeper(Vec::new());
    let mut follow = d.follow_radius.filter(|_| d.tracks).map(|r| FollowSink::new(r, cfg.kg_mass));
    let mut detect = (d.tracks && follow.is_none()).then(|| DetectionSink::new(vacuum, eps));
    let line_cfg = LineConfig { vacuum, ..LineConfig::default() };
    let mut points = d.lines.then(|| PointSink::new(line_cfg.clone()));
    let mut manifold = d.manifold_radius.map(|radius| ManifoldSink { cfg, radius, fits: Vec::new() });

    let summary = {
        let mut sinks: Vec<&mut dyn RunSink> = vec![&mut series];
        if let Some(s) = csv.as_mut() {
            sinks.push(s);
        }
        if let Some(s) = detect.as_mut() {
            sinks.push(s);
        }
        if let Some(s) = follow.as_mut() {
            sinks.push(s);
        }
        if let Some(s) = points.as_mut() {
            sinks.push(s);
        }
        if let Some(s) = manifold.as_mut() {
            sinks.push(s);
        }
        run(state0, &model, &stepper, &mut sinks)?
    };

    let tracks = match (follow, detect) {
        (Some(f), _) => f.into_tracks(),
        (None, Some(s)) => link_tracks(&s.frames, &LinkConfig::default()),
        (None, None) => Vec::new(),
    };
    let lines = points.map(|p| hough_lines(&p.points, &line_cfg)).unwrap_or_default();
    let manifold = manifold.map(|m| m.fits).unwrap_or_default();
    let spectrum = if d.spectrum {
        let psi0: Vec<Complex64> = series.0.iter().map(|r| r.psi0).collect();
        let window = ((psi0.len() as f64) * d.spectrum_window).round() as usize;
        let dt = cfg.dt * cfg.series_every.max(1) as f64;
        Some(spectral_report(&psi0, 0.0, dt, window.max(4), d.bandwidth)?)
    } else {
        None
    };

    let mut manifest = Vec::new();
    if let (Some(dir), Some(csv)) = (out_dir, csv) {
        for (name, rows) in csv.finish()? {
            let rows = if name.starts_with("snap_") { grid.len() } else { rows };
            manifest.push((name, rows));
        }
        if d.tracks {
            let rows = write_tracks_csv(BufWriter::new(create(&dir.join("tracks.csv"))?), &tracks)?;
            manifest.push(("tracks.csv".into(), rows));
        }
        if d.lines {
            let rows = write_lines_csv(BufWriter::new(create(&dir.join("lines.csv"))?), &lines)?;
            manifest.push(("lines.csv".into(), rows));
        }
        if let Some(rep) = &spectrum {
            let mut w = BufWriter::new(create(&dir.join("spectrum.csv"))?);
            rep.write_csv(&mut w)?;
            w.flush()?;
            manifest.push(("spectrum.csv".into(), rep.spectrum.freqs.len()));
        }
        if d.manifold_radius.is_some() {
            let mut w = BufWriter::new(create(&dir.join("manifold.csv"))?);
            writeln!(w, "t,dist,omega,theta,amplitude")?;
            for (t, f) in &manifold {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    fmt_f64(*t),
                    fmt_f64(f.dist),
                    fmt_f64(f.omega),
                    fmt_f64(f.theta),
                    fmt_f64(f.amplitude)
                )?;
            }
            w.flush()?;
            manifest.push(("manifold.csv".into(), manifold.len()));
        }
    }
    let outcome = ExperimentOutcome { run: summary, series: series.0, tracks, lines, spectrum, manifold, manifest };
    if let Some(dir) = out_dir {
        std::fs::write(dir.join("summary.txt"), summary_text(cfg, &outcome))?;
    }
    Ok(outcome)
}

/// Flat `key = value` summary. Wall time is left out so reruns are
/// byte-identical.
pub fn summary_text(cfg: &RunConfig, o: &ExperimentOutcome) -> String {
    let r = &o.run;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
    kv("family", cfg.family.name().into());
    kv("init", cfg.init.kind().into());
    kv("steps", r.steps.to_string());
    kv("t_final", fmt_f64(r.final_state.t));
    kv("initial_energy", fmt_f64(r.initial_energy));
    kv("final_energy", fmt_f64(r.final_energy));
    kv("radiated_energy", fmt_f64(r.radiated_energy));
    if cfg.diagnostics.tracks {
        kv("tracks", o.tracks.len().to_string());
        for t in &o.tracks {
            kv(&format!("track.{}.velocity", t.id), fmt_f64(t.velocity));
            kv(&format!("track.{}.mean_width", t.id), fmt_f64(t.mean_width));
        }
    }
    if cfg.diagnostics.lines {
        for (k, l) in o.lines.iter().enumerate() {
            kv(&format!("line.{k}.speed"), fmt_f64(l.speed));
        }
    }
    if let Some(rep) = &o.spectrum {
        for line in rep.summary().lines() {
            s.push_str("spectrum.");
            s.push_str(line);
            s.push('\n');
        }
    }
    for (name, rows) in &o.manifest {
        s.push_str(&format!("manifest.{name} = {rows}\n"));
    }
    s
}

/// Reads the `manifest.*` entries of a `summary.txt`.
pub fn read_manifest(summary: &str) -> BTreeMap<String, usize> {
    summary
        .lines()
        .filter_map(|l| {
            let (k, v) = l.split_once(" = ")?;
            Some((k.strip_prefix("manifest.")?.to_string(), v.trim().parse().ok()?))
        })
        .collect()
}

/// Checks that every manifest file exists with the recorded row count.
pub fn verify_manifest(dir: &Path) -> Result<()> {
    let text = std::fs::read_to_string(dir.join("summary.txt"))?;
    for (name, rows) in read_manifest(&text) {
        let got = count_rows(&dir.join(&name))?;
        if got != rows {
            return Err(Error::InvalidArgument(format!("{name}: manifest says {rows} rows, file has {got}")));
        }
    }
    Ok(())
}

/// Effective-dynamics companion of a soliton run in an external potential.
#[derive(Debug, Clone)]
pub struct EffectiveOutcome {
    pub kinetic: KineticMap,
    pub potential: EffectivePotential,
    pub trajectory: EffectiveTrajectory,
    pub comparison: Option<AdiabaticReport>,
}

/// Integrates the effective equations for a soliton config and, given a
/// tracked centre, compares against it. `Pi(0)` is the field momentum
/// near the soliton in the initial state.
pub fn run_effective(cfg: &RunConfig, base: &Path, track: Option<&TrackSeries>) -> Result<EffectiveOutcome> {
    let InitSpec::Soliton { omega, q0, .. } = cfg.init else {
        return Err(Error::InvalidArgument("effective dynamics needs init.kind = soliton".into()));
    };
    let pot = cfg.potential.build()?;
    let profile = solve_profile(omega, &pot, cfg.kg_mass)?;
    let kinetic = KineticMap::from_rest_mass(omega, profile.rest_mass());
    let potential = EffectivePotential::from_profile(&profile, cfg.external_amp, cfg.external_wavenumber);
    let state0 = initial_state(cfg, base)?;
    let pi0 = windowed_momentum(&state0, q0, cfg.effective.momentum_widths * 2.0 * profile.half_width());
    let q_start = track.map(|t| t.positions[0]).unwrap_or(q0);
    let mut ecfg = EffectiveConfig::new(cfg.effective.dt, cfg.t_max);
    ecfg.record_every = ((0.1 / cfg.effective.dt).round() as u64).max(1);
    let trajectory = integrate_effective(EffectiveState { q: q_start, pi: pi0, t: 0.0 }, &kinetic, &potential, &ecfg)?;
    let comparison = track.map(|t| compare_adiabatic(t, &trajectory, cfg.effective.threshold)).transpose()?;
    Ok(EffectiveOutcome { kinetic, potential, trajectory, comparison })
}

/// Writes `effective.csv`, `comparison.csv` (when compared), and
/// `effective_summary.txt`.
pub fn write_effective(dir: &Path, e: &EffectiveOutcome) -> Result<Vec<(String, usize)>> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = Vec::new();
    let mut w = BufWriter::new(create(&dir.join("effective.csv"))?);
    manifest.push(("effective.csv".to_string(), e.trajectory.write_csv(&mut w)?));
    w.flush()?;
    let mut text = format!(
        "rest_mass = {}\ndepth = {}\nwavenumber = {}\nh_drift = {}\n",
        fmt_f64(e.kinetic.rest_mass),
        fmt_f64(e.potential.depth),
        fmt_f64(e.potential.wavenumber),
        fmt_f64(e.trajectory.energy_drift()),
    );
    if let Some(rep) = &e.comparison {
        let mut w = BufWriter::new(create(&dir.join("comparison.csv"))?);
        manifest.push(("comparison.csv".to_string(), rep.write_csv(&mut w)?));
        w.flush()?;
        text.push_str(&rep.summary());
    }
    for (name, rows) in &manifest {
        text.push_str(&format!("manifest.{name} = {rows}\n"));
    }
    std::fs::write(dir.join("effective_summary.txt"), text)?;
    Ok(manifest)
}

/// Reads `tracks.csv` back into per-track series.
pub fn read_tracks(path: &Path) -> Result<Vec<TrackSeries>> {
    let table = crate::output::Table::read(path)?;
    let t = table.column("t")?;
    let id = table.column("track_id")?;
    let pos = table.column("position")?;
    let width = table.column("width")?;
    let amp = table.column("amplitude")?;
    let mut by_id: BTreeMap<usize, TrackSeries> = BTreeMap::new();
    for k in 0..t.len() {
        let tr = by_id.entry(id[k] as usize).or_insert_with(|| TrackSeries {
            id: id[k] as usize,
            kind: crate::diagnostics::Kind::Soliton,
            times: Vec::new(),
            positions: Vec::new(),
            widths: Vec::new(),
            amplitudes: Vec::new(),
            velocity: 0.0,
            mean_width: 0.0,
            ambiguous: false,
        });
        tr.times.push(t[k]);
        tr.positions.push(pos[k]);
        tr.widths.push(width[k]);
        tr.amplitudes.push(amp[k]);
    }
    Ok(by_id
        .into_values()
        .map(|mut tr| {
            let h = tr.times.len() / 2;
            tr.velocity = crate::numerics::linear_fit(&tr.times[h..], &tr.positions[h..]).map(|f| f.1).unwrap_or(0.0);
            tr.mean_width = tr.widths.iter().sum::<f64>() / tr.widths.len().max(1) as f64;
            tr
        })
        .collect())
}

/// Longest track, the usual choice for a single-soliton comparison.
pub fn longest_track(tracks: &[TrackSeries]) -> Option<&TrackSeries> {
    tracks.iter().max_by(|a, b| a.duration().total_cmp(&b.duration()))
}

/// Snapshots held in memory, for callers that post-process directly.
pub fn run_in_memory(cfg: &RunConfig, base: &Path) -> Result<(RunSummary, MemorySink)> {
    let mut sink = MemorySink::default();
    let summary = run(initial_state(cfg, base)?, &cfg.model()?, &cfg.stepper(), &mut [&mut sink])?;
    Ok((summary, sink))
}

/// Resolves a config-relative path.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
