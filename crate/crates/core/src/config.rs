//! Experiment configuration: flat `key = value` lines, `#` comments, dotted
//! keys. Parsing is fail-closed and reports every problem with its line.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use crate::fields::{Family, ModelSpec, PolynomialPotential};
use crate::integrator::check_cfl;
use crate::output::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// `(line, message)`; line 0 marks problems not tied to one line.
    pub problems: Vec<(usize, String)>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (line, msg)) in self.problems.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            if *line > 0 {
                write!(f, "line {line}: {msg}")?;
            } else {
                write!(f, "{msg}")?;
            }
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialChoice {
    GinzburgLandau,
    Zero,
    Harmonic { k: f64 },
    TwoTerm { a: f64, m: usize, b: f64, n: usize },
    Coeffs(Vec<f64>),
}

impl PotentialChoice {
    pub fn build(&self) -> crate::Result<PolynomialPotential> {
        Ok(match self {
            Self::GinzburgLandau => PolynomialPotential::ginzburg_landau(),
            Self::Zero => PolynomialPotential::zero(),
            Self::Harmonic { k } => PolynomialPotential::harmonic(*k),
            Self::TwoTerm { a, m, b, n } => PolynomialPotential::two_term(*a, *m, *b, *n)?,
            Self::Coeffs(c) => PolynomialPotential::new(c.clone()),
        })
    }
}

/// Initial velocity of a soliton start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolitonVelocity {
    /// `psi_t = 0` at `t = 0`.
    Zero,
    /// The exact boosted soliton's own `psi_t`.
    Manifold,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Kink {
        sign: f64,
        v: f64,
        q0: f64,
        perturbation: f64,
    },
    Soliton {
        omega: f64,
        v: f64,
        q0: f64,
        theta: f64,
        velocity: SolitonVelocity,
    },
    Orbit {
        omega: f64,
        theta: f64,
        amplitude: f64,
    },
    /// `background + amplitude e^{-y^2/(2 width^2)} (1 + noise r(y)) e^{i k y}`
    /// with `y = x - q0`, `r` a seeded sum of cosines, and `pi = -i omega`
    /// times the bump.
    Gaussian {
        background: f64,
        amplitude: f64,
        width: f64,
        q0: f64,
        wavenumber: f64,
        omega: f64,
        noise: f64,
        seed: u64,
    },
    TwoTone {
        omega: f64,
        omega2: f64,
        theta: f64,
        theta2: f64,
        amplitude: f64,
    },
    File {
        path: PathBuf,
    },
}

impl InitSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Kink { .. } => "kink",
            Self::Soliton { .. } => "soliton",
            Self::Orbit { .. } => "orbit",
            Self::Gaussian { .. } => "gaussian",
            Self::TwoTone { .. } => "two_tone",
            Self::File { .. } => "file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VacuumChoice {
    Zero,
    PlusMinusOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSpec {
    pub write_snapshots: bool,
    pub tracks: bool,
    pub vacuum: VacuumChoice,
    /// Detection threshold; defaults by vacuum when absent.
    pub epsilon: Option<f64>,
    pub lines: bool,
    pub spectrum: bool,
    /// Fraction of the series analysed, counted from the end.
    pub spectrum_window: f64,
    pub bandwidth: f64,
    pub manifold_radius: Option<f64>,
    /// When set, tracks follow the single strongest lump with a centroid
    /// window of this half width instead of linking level-set detections.
    pub follow_radius: Option<f64>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            write_snapshots: true,
            tracks: false,
            vacuum: VacuumChoice::Zero,
            epsilon: None,
            lines: false,
            spectrum: false,
            spectrum_window: 0.25,
            bandwidth: 0.05,
            manifold_radius: None,
            follow_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveSpec {
    pub dt: f64,
    /// Position deviation reported as "first exceed".
    pub threshold: f64,
    /// Half window, in soliton widths, of the field momentum for `Pi(0)`.
    pub momentum_widths: f64,
}

impl Default for EffectiveSpec {
    fn default() -> Self {
        Self { dt: 0.01, threshold: 1.0, momentum_widths: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: Family,
    pub kg_mass: f64,
    pub particle_mass: f64,
    pub potential: PotentialChoice,
    pub external_amp: f64,
    pub external_wavenumber: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_max: f64,
    pub cfl_safety: f64,
    /// 0 disables snapshots.
    pub snapshot_every: u64,
    pub series_every: u64,
    pub flux_radius: Option<f64>,
    pub init: InitSpec,
    pub output_dir: PathBuf,
    pub diagnostics: DiagnosticsSpec,
    pub effective: EffectiveSpec,
}

impl RunConfig {
    pub fn model(&self) -> crate::Result<ModelSpec> {
        let pot = self.potential.build()?;
        let mut m = match self.family {
            Family::Lamb => ModelSpec::lamb(pot, self.particle_mass),
            Family::KgPointOscillator => ModelSpec::kg_point(pot, self.kg_mass),
            Family::Nlkg => ModelSpec::nlkg(pot, self.kg_mass),
        };
        if self.family == Family::KgPointOscillator {
            m.particle_mass = self.particle_mass;
        }
        if self.external_amp != 0.0 {
            m = m.with_external(self.external_amp, self.external_wavenumber);
        }
        m.validate()?;
        Ok(m)
    }

    pub fn grid(&self) -> crate::Result<crate::fields::Grid1D> {
        crate::fields::Grid1D::new(self.x_min, self.x_max, self.dx)
    }

    pub fn stepper(&self) -> crate::integrator::StepperConfig {
        let mut s = crate::integrator::StepperConfig::new(self.dt, self.t_max);
        s.cfl_safety = self.cfl_safety;
        s.snapshot_every = if self.snapshot_every == 0 { u64::MAX } else { self.snapshot_every };
        s.series_every = self.series_every.max(1);
        s.flux_radius = self.flux_radius;
        s
    }

    pub fn detection_epsilon(&self) -> f64 {
        self.diagnostics.epsilon.unwrap_or(match self.diagnostics.vacuum {
            VacuumChoice::PlusMinusOne => crate::diagnostics::KINK_EPSILON,
            VacuumChoice::Zero => crate::diagnostics::SOLITON_THRESHOLD,
        })
    }
}

/// Raw key/value pairs with the line each came from.
struct Entries {
    map: BTreeMap<String, (usize, String)>,
    used: std::collections::BTreeSet<String>,
    problems: Vec<(usize, String)>,
}

impl Entries {
    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.used.insert(key.to_string());
        self.map.get(key).cloned()
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let (line, v) = self.raw(key)?;
        match v.parse::<T>() {
            Ok(x) => Some(x),
            Err(_) => {
                self.problems.push((line, format!("{key}: expected {what}, got '{v}'")));
                None
            }
        }
    }

    fn num(&mut self, key: &str) -> Option<f64> {
        let (line, v) = self.raw(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.problems.push((line, format!("{key}: expected a finite number, got '{v}'")));
                None
            }
        }
    }

    fn num_or(&mut self, key: &str, default: f64) -> f64 {
        self.num(key).unwrap_or(default)
    }

    fn required_num(&mut self, key: &str) -> f64 {
        if !self.map.contains_key(key) {
            self.problems.push((0, format!("missing required key {key}")));
        }
        self.num(key).unwrap_or(f64::NAN)
    }

    fn flag(&mut self, key: &str, default: bool) -> bool {
        self.parse::<bool>(key, "true or false").unwrap_or(default)
    }

    fn line_of(&self, key: &str) -> usize {
        self.map.get(key).map(|v| v.0).unwrap_or(0)
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut e = Entries { map: BTreeMap::new(), used: Default::default(), problems: Vec::new() };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            e.problems.push((line, format!("expected 'key = value', got '{content}'")));
            continue;
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() || value.is_empty() {
            e.problems.push((line, format!("empty key or value in '{content}'")));
            continue;
        }
        if let Some((first, _)) = e.map.get(&key) {
            e.problems.push((line, format!("duplicate key {key} (first set on line {first})")));
            continue;
        }
        e.map.insert(key, (line, value));
    }

    let family = match e.raw("model.family") {
        Some((l, v)) => v.parse::<Family>().unwrap_or_else(|_| {
            e.problems.push((l, format!("model.family: unknown family '{v}' (lamb, kg_point_oscillator, nlkg)")));
            Family::Nlkg
        }),
        None => {
            e.problems.push((0, "missing required key model.family".into()));
            Family::Nlkg
        }
    };
    let kg_mass = e.num_or("model.kg_mass", if family == Family::Lamb { 0.0 } else { 1.0 });
    let particle_mass = e.num_or("model.particle_mass", 0.0);

    let potential = match e.raw("potential.kind") {
        Some((_, v)) if v == "gl" => PotentialChoice::GinzburgLandau,
        Some((_, v)) if v == "zero" => PotentialChoice::Zero,
        Some((_, v)) if v == "harmonic" => PotentialChoice::Harmonic { k: e.required_num("potential.k") },
        Some((_, v)) if v == "two_term" => {
            let a = e.required_num("potential.a");
            let b = e.required_num("potential.b");
            let m = e.parse::<usize>("potential.m", "an integer").unwrap_or(0);
            let n = e.parse::<usize>("potential.n", "an integer").unwrap_or(0);
            for key in ["potential.m", "potential.n"] {
                if !e.map.contains_key(key) {
                    e.problems.push((0, format!("missing required key {key}")));
                }
            }
            PotentialChoice::TwoTerm { a, m, b, n }
        }
        Some((_, v)) if v == "coeffs" => {
            let (line, list) = e.raw("potential.coeffs").unwrap_or((0, String::new()));
            let parsed: Result<Vec<f64>, _> = list.split_whitespace().map(str::parse::<f64>).collect();
            match parsed {
                Ok(c) if !c.is_empty() && c.iter().all(|x| x.is_finite()) => PotentialChoice::Coeffs(c),
                _ => {
                    e.problems.push((line, "potential.coeffs: expected space-separated numbers".into()));
                    PotentialChoice::Zero
                }
            }
        }
        Some((l, v)) => {
            e.problems.push((l, format!("potential.kind: unknown kind '{v}' (gl, zero, harmonic, two_term, coeffs)")));
            PotentialChoice::Zero
        }
        None => {
            e.problems.push((0, "missing required key potential.kind".into()));
            PotentialChoice::Zero
        }
    };
    let external_amp = e.num_or("external.amp", 0.0);
    let external_wavenumber = e.num_or("external.wavenumber", 0.0);

    let x_min = e.required_num("grid.x_min");
    let x_max = e.required_num("grid.x_max");
    let dx = e.required_num("grid.dx");
    let dt = e.required_num("stepper.dt");
    let t_max = e.required_num("stepper.t_max");
    let cfl_safety = e.num_or("stepper.cfl_safety", crate::integrator::DEFAULT_CFL_SAFETY);
    let snapshot_every = e.parse::<u64>("stepper.snapshot_every", "a non-negative integer").unwrap_or(0);
    let series_every = e.parse::<u64>("stepper.series_every", "a positive integer").unwrap_or(1);
    let flux_radius = e.num("stepper.flux_radius");

    let init_kind = e.raw("init.kind");
    let init = match init_kind.as_ref().map(|(_, v)| v.as_str()) {
        Some("kink") => InitSpec::Kink {
            sign: e.num_or("init.sign", 1.0),
            v: e.num_or("init.v", 0.0),
            q0: e.num_or("init.q0", 0.0),
            perturbation: e.num_or("init.perturbation", 0.0),
        },
        Some("soliton") => {
            let velocity = match e.raw("init.velocity") {
                None => SolitonVelocity::Zero,
                Some((_, v)) if v == "zero" => SolitonVelocity::Zero,
                Some((_, v)) if v == "manifold" => SolitonVelocity::Manifold,
                Some((l, v)) => {
                    e.problems.push((l, format!("init.velocity: expected zero or manifold, got '{v}'")));
                    SolitonVelocity::Zero
                }
            };
            InitSpec::Soliton {
                omega: e.required_num("init.omega"),
                v: e.num_or("init.v", 0.0),
                q0: e.num_or("init.q0", 0.0),
                theta: e.num_or("init.theta", 0.0),
                velocity,
            }
        }
        Some("orbit") => InitSpec::Orbit {
            omega: e.required_num("init.omega"),
            theta: e.num_or("init.theta", 0.0),
            amplitude: e.num_or("init.amplitude", 1.0),
        },
        Some("gaussian") => InitSpec::Gaussian {
            background: e.num_or("init.background", 0.0),
            amplitude: e.required_num("init.amplitude"),
            width: e.required_num("init.width"),
            q0: e.num_or("init.q0", 0.0),
            wavenumber: e.num_or("init.wavenumber", 0.0),
            omega: e.num_or("init.omega", 0.0),
            noise: e.num_or("init.noise", 0.0),
            seed: e.parse::<u64>("init.seed", "a non-negative integer").unwrap_or(0),
        },
        Some("two_tone") => InitSpec::TwoTone {
            omega: e.required_num("init.omega"),
            omega2: e.required_num("init.omega2"),
            theta: e.num_or("init.theta", 0.0),
            theta2: e.num_or("init.theta2", 0.0),
            amplitude: e.num_or("init.amplitude", 1.0),
        },
        Some("file") => match e.raw("init.path") {
            Some((_, p)) => InitSpec::File { path: PathBuf::from(p) },
            None => {
                e.problems.push((0, "missing required key init.path".into()));
                InitSpec::File { path: PathBuf::new() }
            }
        },
        Some(other) => {
            let line = init_kind.as_ref().map(|x| x.0).unwrap_or(0);
            e.problems.push((
                line,
                format!("init.kind: unknown kind '{other}' (kink, soliton, orbit, gaussian, two_tone, file)"),
            ));
            InitSpec::Kink { sign: 1.0, v: 0.0, q0: 0.0, perturbation: 0.0 }
        }
        None => {
            e.problems.push((0, "missing required key init.kind".into()));
            InitSpec::Kink { sign: 1.0, v: 0.0, q0: 0.0, perturbation: 0.0 }
        }
    };

    let output_dir = PathBuf::from(e.raw("output.dir").map(|x| x.1).unwrap_or_else(|| "out".into()));
    let d = DiagnosticsSpec::default();
    let vacuum = match e.raw("diagnostics.vacuum") {
        None => d.vacuum,
        Some((_, v)) if v == "zero" => VacuumChoice::Zero,
        Some((_, v)) if v == "pm1" => VacuumChoice::PlusMinusOne,
        Some((l, v)) => {
            e.problems.push((l, format!("diagnostics.vacuum: expected zero or pm1, got '{v}'")));
            d.vacuum
        }
    };
    let diagnostics = DiagnosticsSpec {
        write_snapshots: e.flag("diagnostics.write_snapshots", d.write_snapshots),
        tracks: e.flag("diagnostics.tracks", d.tracks),
        vacuum,
        epsilon: e.num("diagnostics.epsilon"),
        lines: e.flag("diagnostics.lines", d.lines),
        spectrum: e.flag("diagnostics.spectrum", d.spectrum),
        spectrum_window: e.num_or("diagnostics.spectrum_window", d.spectrum_window),
        bandwidth: e.num_or("diagnostics.bandwidth", d.bandwidth),
        manifold_radius: e.num("diagnostics.manifold_radius"),
        follow_radius: e.num("diagnostics.follow_radius"),
    };
    let f = EffectiveSpec::default();
    let effective = EffectiveSpec {
        dt: e.num_or("effective.dt", f.dt),
        threshold: e.num_or("effective.threshold", f.threshold),
        momentum_widths: e.num_or("effective.momentum_widths", f.momentum_widths),
    };

    let unknown: Vec<(usize, String)> = e
        .map
        .iter()
        .filter(|(k, _)| !e.used.contains(*k))
        .map(|(k, (l, _))| (*l, format!("unknown key {k}")))
        .collect();
    e.problems.extend(unknown);

    let cfg = RunConfig {
        family,
        kg_mass,
        particle_mass,
        potential,
        external_amp,
        external_wavenumber,
        x_min,
        x_max,
        dx,
        dt,
        t_max,
        cfl_safety,
        snapshot_every,
        series_every,
        flux_radius,
        init,
        output_dir,
        diagnostics,
        effective,
    };
    validate(&cfg, &mut e);
    if e.problems.is_empty() {
        Ok(cfg)
    } else {
        e.problems.sort_by_key(|p| p.0);
        Err(ConfigError { problems: e.problems })
    }
}

fn validate(c: &RunConfig, e: &mut Entries) {
    // Skip semantic checks whose inputs already failed to parse.
    let ok = |x: f64| x.is_finite();
    if ok(c.dx) && ok(c.dt) && ok(c.cfl_safety) {
        if let Err(err) = check_cfl(c.dt, c.dx, c.cfl_safety) {
            e.problems.push((e.line_of("stepper.dt"), format!("{err} (stepper.dt = {}, grid.dx = {})", c.dt, c.dx)));
        }
    }
    if ok(c.x_min) && ok(c.x_max) && ok(c.dx) {
        if let Err(err) = c.grid() {
            e.problems.push((e.line_of("grid.dx"), err.to_string()));
        }
    }
    if ok(c.t_max) && c.t_max < 0.0 {
        e.problems.push((e.line_of("stepper.t_max"), "stepper.t_max must be non-negative".into()));
    }
    if c.series_every == 0 {
        e.problems.push((e.line_of("stepper.series_every"), "stepper.series_every must be positive".into()));
    }
    if c.family == Family::Lamb && c.kg_mass != 0.0 {
        e.problems.push((e.line_of("model.kg_mass"), "the lamb family is massless; drop model.kg_mass".into()));
    }
    if let Err(err) = c.model() {
        e.problems.push((0, err.to_string()));
    }
    let v = match &c.init {
        InitSpec::Kink { v, sign, .. } => {
            if *sign != 1.0 && *sign != -1.0 {
                e.problems.push((e.line_of("init.sign"), format!("init.sign must be 1 or -1, got {sign}")));
            }
            Some(*v)
        }
        InitSpec::Soliton { v, .. } => Some(*v),
        InitSpec::Gaussian { width, .. } => {
            if !(*width > 0.0) {
                e.problems.push((e.line_of("init.width"), "init.width must be positive".into()));
            }
            None
        }
        _ => None,
    };
    if let Some(v) = v {
        if !(v.abs() < 1.0) {
            e.problems.push((e.line_of("init.v"), format!("init.v = {v}: speed must satisfy |v| < 1")));
        }
    }
    let point_only = matches!(c.init, InitSpec::Orbit { .. } | InitSpec::TwoTone { .. });
    if point_only && c.family != Family::KgPointOscillator {
        e.problems
            .push((e.line_of("init.kind"), "orbit and two_tone starts need model.family = kg_point_oscillator".into()));
    }
    if matches!(c.init, InitSpec::Kink { .. } | InitSpec::Soliton { .. }) && c.family != Family::Nlkg {
        e.problems.push((e.line_of("init.kind"), "kink and soliton starts need model.family = nlkg".into()));
    }
    // The kink profile solves the massless GL equation only.
    if matches!(c.init, InitSpec::Kink { .. }) && (c.potential != PotentialChoice::GinzburgLandau || c.kg_mass != 0.0) {
        e.problems.push((e.line_of("init.kind"), "kink starts need potential.kind = gl and model.kg_mass = 0".into()));
    }
    let frac = c.diagnostics.spectrum_window;
    if !(frac > 0.0 && frac <= 1.0) {
        e.problems
            .push((e.line_of("diagnostics.spectrum_window"), "diagnostics.spectrum_window must lie in (0, 1]".into()));
    }
    if let Some(r) = c.diagnostics.follow_radius {
        if !(r > 0.0) || c.diagnostics.vacuum != VacuumChoice::Zero {
            e.problems.push((
                e.line_of("diagnostics.follow_radius"),
                "diagnostics.follow_radius must be positive and needs diagnostics.vacuum = zero".into(),
            ));
        }
    }
}

/// Canonical text form; `parse_config(&to_canonical(c)) == Ok(c)`.
pub fn to_canonical(c: &RunConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("model.family", c.family.name().to_string());
    kv("model.kg_mass", fmt_f64(c.kg_mass));
    kv("model.particle_mass", fmt_f64(c.particle_mass));
    match &c.potential {
        PotentialChoice::GinzburgLandau => kv("potential.kind", "gl".into()),
        PotentialChoice::Zero => kv("potential.kind", "zero".into()),
        PotentialChoice::Harmonic { k } => {
            kv("potential.kind", "harmonic".into());
            kv("potential.k", fmt_f64(*k));
        }
        PotentialChoice::TwoTerm { a, m, b, n } => {
            kv("potential.kind", "two_term".into());
            kv("potential.a", fmt_f64(*a));
            kv("potential.m", m.to_string());
            kv("potential.b", fmt_f64(*b));
            kv("potential.n", n.to_string());
        }
        PotentialChoice::Coeffs(cs) => {
            kv("potential.kind", "coeffs".into());
            kv("potential.coeffs", cs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" "));
        }
    }
    kv("external.amp", fmt_f64(c.external_amp));
    kv("external.wavenumber", fmt_f64(c.external_wavenumber));
    kv("grid.x_min", fmt_f64(c.x_min));
    kv("grid.x_max", fmt_f64(c.x_max));
    kv("grid.dx", fmt_f64(c.dx));
    kv("stepper.dt", fmt_f64(c.dt));
    kv("stepper.t_max", fmt_f64(c.t_max));
    kv("stepper.cfl_safety", fmt_f64(c.cfl_safety));
    kv("stepper.snapshot_every", c.snapshot_every.to_string());
    kv("stepper.series_every", c.series_every.to_string());
    if let Some(r) = c.flux_radius {
        kv("stepper.flux_radius", fmt_f64(r));
    }
    kv("init.kind", c.init.kind().into());
    match &c.init {
        InitSpec::Kink { sign, v, q0, perturbation } => {
            kv("init.sign", fmt_f64(*sign));
            kv("init.v", fmt_f64(*v));
            kv("init.q0", fmt_f64(*q0));
            kv("init.perturbation", fmt_f64(*perturbation));
        }
        InitSpec::Soliton { omega, v, q0, theta, velocity } => {
            kv("init.omega", fmt_f64(*omega));
            kv("init.v", fmt_f64(*v));
            kv("init.q0", fmt_f64(*q0));
            kv("init.theta", fmt_f64(*theta));
            kv("init.velocity", if *velocity == SolitonVelocity::Zero { "zero" } else { "manifold" }.into());
        }
        InitSpec::Orbit { omega, theta, amplitude } => {
            kv("init.omega", fmt_f64(*omega));
            kv("init.theta", fmt_f64(*theta));
            kv("init.amplitude", fmt_f64(*amplitude));
        }
        InitSpec::Gaussian { background, amplitude, width, q0, wavenumber, omega, noise, seed } => {
            kv("init.background", fmt_f64(*background));
            kv("init.amplitude", fmt_f64(*amplitude));
            kv("init.width", fmt_f64(*width));
            kv("init.q0", fmt_f64(*q0));
            kv("init.wavenumber", fmt_f64(*wavenumber));
            kv("init.omega", fmt_f64(*omega));
            kv("init.noise", fmt_f64(*noise));
            kv("init.seed", seed.to_string());
        }
        InitSpec::TwoTone { omega, omega2, theta, theta2, amplitude } => {
            kv("init.omega", fmt_f64(*omega));
            kv("init.omega2", fmt_f64(*omega2));
            kv("init.theta", fmt_f64(*theta));
            kv("init.theta2", fmt_f64(*theta2));
            kv("init.amplitude", fmt_f64(*amplitude));
        }
        InitSpec::File { path } => kv("init.path", path.display().to_string()),
    }
    kv("output.dir", c.output_dir.display().to_string());
    let d = &c.diagnostics;
    kv("diagnostics.write_snapshots", d.write_snapshots.to_string());
    kv("diagnostics.tracks", d.tracks.to_string());
    kv("diagnostics.vacuum", if d.vacuum == VacuumChoice::Zero { "zero" } else { "pm1" }.into());
    if let Some(eps) = d.epsilon {
        kv("diagnostics.epsilon", fmt_f64(eps));
    }
    kv("diagnostics.lines", d.lines.to_string());
    kv("diagnostics.spectrum", d.spectrum.to_string());
    kv("diagnostics.spectrum_window", fmt_f64(d.spectrum_window));
    kv("diagnostics.bandwidth", fmt_f64(d.bandwidth));
    if let Some(r) = d.manifold_radius {
        kv("diagnostics.manifold_radius", fmt_f64(r));
    }
    if let Some(r) = d.follow_radius {
        kv("diagnostics.follow_radius", fmt_f64(r));
    }
    kv("effective.dt", fmt_f64(c.effective.dt));
    kv("effective.threshold", fmt_f64(c.effective.threshold));
    kv("effective.momentum_widths", fmt_f64(c.effective.momentum_widths));
    s
}
