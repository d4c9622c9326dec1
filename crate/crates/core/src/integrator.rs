//! Kick-drift-kick (velocity Verlet) time stepping for every model family.
//!
//! Space is discretized with the 3-point Laplacian. The point coupling
//! `delta(x) F(psi(0))` contributes `F(psi_0) / dx` at the origin node, and a
//! point mass `M` scales that node's acceleration by `1 / (1 + M / dx)`.
//! The two end nodes are frozen: domains are padded beyond the light cone of
//! the initial data instead of using absorbing layers.

use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{energy, momentum, FieldState, Grid1D, ModelSpec, PolynomialPotential};

pub const DEFAULT_CFL_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_max: f64,
    pub cfl_safety: f64,
    pub snapshot_every: u64,
    pub series_every: u64,
    /// Radius at which outgoing energy flux is accumulated; defaults to 90%
    /// of the domain half-width.
    pub flux_radius: Option<f64>,
}

impl StepperConfig {
    pub fn new(dt: f64, t_max: f64) -> Self {
        Self { dt, t_max, cfl_safety: DEFAULT_CFL_SAFETY, snapshot_every: u64::MAX, series_every: 1, flux_radius: None }
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::InvalidArgument(format!("t_max must be >= 0, got {}", self.t_max)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidArgument(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        check_cfl(self.dt, grid.dx(), self.cfl_safety)?;
        if self.snapshot_every == 0 || self.series_every == 0 {
            return Err(Error::InvalidArgument("output cadences must be >= 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> u64 {
        (self.t_max / self.dt).round() as u64
    }
}

pub fn check_cfl(dt: f64, dx: f64, cfl_safety: f64) -> Result<()> {
    if dt > cfl_safety * dx * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, dx, cfl_safety });
    }
    Ok(())
}

/// A field state together with the cached acceleration of the scheme.
#[derive(Debug, Clone)]
pub struct Evolution {
    state: FieldState,
    dt: f64,
    step_count: u64,
    t0: f64,
    inv_dx2: f64,
    mass2: f64,
    bulk: Option<PolynomialPotential>,
    point: Option<(usize, PolynomialPotential, f64)>,
    external: Option<Vec<f64>>,
    accel: Vec<Complex64>,
    accel_valid: bool,
}

impl Evolution {
    pub fn new(state: FieldState, model: &ModelSpec, dt: f64) -> Result<Self> {
        model.validate()?;
        let grid = state.grid;
        if state.psi.len() != grid.len() || state.pi.len() != grid.len() {
            return Err(Error::GridMismatch { expected: grid.len(), got: state.psi.len() });
        }
        if grid.len() < 3 {
            return Err(Error::InvalidGrid("need at least 3 nodes".into()));
        }
        check_cfl(dt, grid.dx(), 1.0)?;
        let dx = grid.dx();
        let point = match model.point_potential() {
            Some(u) => {
                let o = grid
                    .origin()
                    .ok_or_else(|| Error::InvalidGrid("point coupling requires a node at x = 0".into()))?;
                if o == 0 || o + 1 >= grid.len() {
                    return Err(Error::InvalidGrid("x = 0 must be an interior node".into()));
                }
                Some((o, u.clone(), 1.0 / (1.0 + model.particle_mass / dx)))
            }
            None => None,
        };
        let external = model.has_external().then(|| grid.xs().iter().map(|&x| model.external_at(x)).collect());
        let n = grid.len();
        Ok(Self {
            t0: state.t,
            state,
            dt,
            step_count: 0,
            inv_dx2: 1.0 / (dx * dx),
            mass2: model.kg_mass * model.kg_mass,
            bulk: model.bulk_potential().cloned(),
            point,
            external,
            accel: vec![Complex64::default(); n],
            accel_valid: false,
        })
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    /// Mutable access; invalidates the cached acceleration.
    pub fn state_mut(&mut self) -> &mut FieldState {
        self.accel_valid = false;
        &mut self.state
    }

    pub fn into_state(self) -> FieldState {
        self.state
    }

    pub fn steps_taken(&self) -> u64 {
        self.step_count
    }

    fn compute_accel(&mut self) {
        let psi = &self.state.psi;
        let a = &mut self.accel;
        let n = psi.len();
        let (inv_dx2, m2) = (self.inv_dx2, self.mass2);
        a[0] = Complex64::default();
        a[n - 1] = Complex64::default();
        match (&self.bulk, &self.external) {
            (None, None) => {
                for j in 1..n - 1 {
                    let lap = (psi[j + 1] + psi[j - 1] - psi[j] * 2.0) * inv_dx2;
                    a[j] = lap - psi[j] * m2;
                }
            }
            (Some(u), None) => {
                for j in 1..n - 1 {
                    let lap = (psi[j + 1] + psi[j - 1] - psi[j] * 2.0) * inv_dx2;
                    a[j] = lap - psi[j] * m2 + u.force(psi[j]);
                }
            }
            (bulk, Some(v)) => {
                for j in 1..n - 1 {
                    let lap = (psi[j + 1] + psi[j - 1] - psi[j] * 2.0) * inv_dx2;
                    let mut acc = lap - psi[j] * (m2 + v[j]);
                    if let Some(u) = bulk {
                        acc += u.force(psi[j]);
                    }
                    a[j] = acc;
                }
            }
        }
        if let Some((o, u, scale)) = &self.point {
            a[*o] = (a[*o] + u.force(psi[*o]) * (self.inv_dx2.sqrt())) * *scale;
        }
        self.accel_valid = true;
    }

    /// Advances one time step.
    pub fn step(&mut self) -> Result<()> {
        if !self.accel_valid {
            self.compute_accel();
        }
        let half = 0.5 * self.dt;
        let dt = self.dt;
        let n = self.state.psi.len();
        {
            let FieldState { psi, pi, .. } = &mut self.state;
            for j in 1..n - 1 {
                pi[j] += self.accel[j] * half;
                psi[j] += pi[j] * dt;
            }
        }
        self.compute_accel();
        let pi = &mut self.state.pi;
        for j in 1..n - 1 {
            pi[j] += self.accel[j] * half;
        }
        self.step_count += 1;
        self.state.t = self.t0 + self.step_count as f64 * dt;
        Ok(())
    }

    /// Scans for non-finite values.
    pub fn check_finite(&self) -> Result<()> {
        let s = &self.state;
        for (j, (p, q)) in s.psi.iter().zip(&s.pi).enumerate() {
            if !(p.re.is_finite() && p.im.is_finite() && q.re.is_finite() && q.im.is_finite()) {
                return Err(Error::NonFinite { t: s.t, index: j });
            }
        }
        Ok(())
    }

    /// The Hamiltonian the scheme is built from: link gradients, node masses
    /// `dx` (plus `M` at the origin), and node potentials.
    pub fn discrete_energy(&self) -> f64 {
        let s = &self.state;
        let dx = s.grid.dx();
        let n = s.psi.len();
        let mut e = 0.0;
        for j in 0..n - 1 {
            e += 0.5 * (s.psi[j + 1] - s.psi[j]).norm_sqr() / dx;
        }
        for j in 1..n - 1 {
            let sq = s.psi[j].norm_sqr();
            let mut d = 0.5 * s.pi[j].norm_sqr() + 0.5 * self.mass2 * sq;
            if let Some(u) = &self.bulk {
                d += u.u(sq);
            }
            if let Some(v) = &self.external {
                d += 0.5 * v[j] * sq;
            }
            e += d * dx;
        }
        if let Some((o, u, scale)) = &self.point {
            let particle_mass = dx * (1.0 / scale - 1.0);
            e += u.value(s.psi[*o]) + 0.5 * particle_mass * s.pi[*o].norm_sqr();
        }
        e
    }
}

/// One step of the scheme, returning the new state.
pub fn step(state: &FieldState, model: &ModelSpec, dt: f64) -> Result<FieldState> {
    let mut ev = Evolution::new(state.clone(), model, dt)?;
    ev.step()?;
    ev.check_finite()?;
    Ok(ev.into_state())
}

/// One row of the run time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub step: u64,
    pub t: f64,
    pub psi0: Complex64,
    pub energy: f64,
    pub momentum: f64,
    pub energy_inside: f64,
    pub radiated: f64,
}

/// Receiver of run output. Both hooks default to doing nothing.
pub trait RunSink {
    fn on_series(&mut self, _row: &SeriesRow) -> Result<()> {
        Ok(())
    }

    fn on_snapshot(&mut self, _step: u64, _state: &FieldState) -> Result<()> {
        Ok(())
    }
}

/// Keeps every series row and snapshot in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub series: Vec<SeriesRow>,
    pub snapshots: Vec<(u64, FieldState)>,
}

impl RunSink for MemorySink {
    fn on_series(&mut self, row: &SeriesRow) -> Result<()> {
        self.series.push(*row);
        Ok(())
    }

    fn on_snapshot(&mut self, step: u64, state: &FieldState) -> Result<()> {
        self.snapshots.push((step, state.clone()));
        Ok(())
    }
}

/// Adapts a closure into a snapshot sink.
pub struct SnapshotFn<F>(pub F);

impl<F: FnMut(u64, &FieldState) -> Result<()>> RunSink for SnapshotFn<F> {
    fn on_snapshot(&mut self, step: u64, state: &FieldState) -> Result<()> {
        (self.0)(step, state)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: u64,
    pub wall_time: Duration,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub radiated_energy: f64,
    pub final_state: FieldState,
}

/// Energy inside `|x| <= r` (trapezoid over the window, point terms
/// included when the origin lies inside).
pub fn energy_inside(state: &FieldState, model: &ModelSpec, r: f64) -> Result<f64> {
    let (lo, hi) = state.grid.window(r);
    let sub_grid = Grid1D::new(state.grid.x(lo), state.grid.x(hi), state.grid.dx())?;
    let sub = FieldState::new(sub_grid, state.psi[lo..=hi].to_vec(), state.pi[lo..=hi].to_vec(), state.t)?;
    energy(&sub, model)
}

/// Outward energy flux `-Re(conj(pi) psi') sign(x)` summed over the two
/// nodes at `|x| = r`.
fn outward_flux(state: &FieldState, lo: usize, hi: usize) -> f64 {
    let dx = state.grid.dx();
    let flux = |j: usize| {
        let d = (state.psi[j + 1] - state.psi[j - 1]) * (0.5 / dx);
        -(state.pi[j].conj() * d).re
    };
    flux(hi) - flux(lo)
}

/// Time integral of the outward flux through `|x| = r`, from equally spaced
/// boundary samples `(pi, psi')` at `-r` and `+r`, by the trapezoid rule.
pub fn radiated_energy(dt: f64, samples: &[[(Complex64, Complex64); 2]]) -> f64 {
    let f: Vec<f64> =
        samples.iter().map(|[(pi_l, d_l), (pi_r, d_r)]| -(pi_r.conj() * d_r).re + (pi_l.conj() * d_l).re).collect();
    crate::numerics::trapezoid(&f, dt)
}

/// Advances `state0` to `cfg.t_max`, feeding series rows and snapshots to
/// every sink. Output is bitwise deterministic for a fixed configuration.
pub fn run(
    state0: FieldState,
    model: &ModelSpec,
    cfg: &StepperConfig,
    sinks: &mut [&mut dyn RunSink],
) -> Result<RunSummary> {
    let started = Instant::now();
    cfg.validate(&state0.grid)?;
    let grid = state0.grid;
    let r_flux = cfg.flux_radius.unwrap_or(0.9 * grid.half_width());
    let (lo, hi) = grid.window(r_flux);
    if lo == 0 || hi + 1 >= grid.len() {
        return Err(Error::InvalidArgument(format!("flux radius {r_flux} must lie strictly inside the domain")));
    }
    let r_flux = grid.x(hi).min(-grid.x(lo));

    let mut ev = Evolution::new(state0, model, cfg.dt)?;
    ev.check_finite()?;
    let initial_energy = energy(ev.state(), model)?;
    let n_steps = cfg.n_steps();
    let mut radiated = 0.0;
    let mut flux_prev = outward_flux(ev.state(), lo, hi);

    let emit = |ev: &Evolution, step: u64, radiated: f64, sinks: &mut [&mut dyn RunSink]| -> Result<()> {
        let s = ev.state();
        if step % cfg.series_every == 0 {
            let row = SeriesRow {
                step,
                t: s.t,
                psi0: s.value_at_origin(),
                energy: energy(s, model)?,
                momentum: momentum(s),
                energy_inside: energy_inside(s, model, r_flux)?,
                radiated,
            };
            for sink in sinks.iter_mut() {
                sink.on_series(&row)?;
            }
        }
        if step % cfg.snapshot_every == 0 {
            for sink in sinks.iter_mut() {
                sink.on_snapshot(step, s)?;
            }
        }
        Ok(())
    };

    emit(&ev, 0, radiated, sinks)?;
    for k in 1..=n_steps {
        ev.step()?;
        if k % 16 == 0 || k == n_steps {
            ev.check_finite()?;
        }
        let flux_now = outward_flux(ev.state(), lo, hi);
        radiated += 0.5 * cfg.dt * (flux_prev + flux_now);
        flux_prev = flux_now;
        emit(&ev, k, radiated, sinks)?;
    }
    let final_energy = energy(ev.state(), model)?;
    Ok(RunSummary {
        steps: n_steps,
        wall_time: started.elapsed(),
        initial_energy,
        final_energy,
        radiated_energy: radiated,
        final_state: ev.into_state(),
    })
}

/// True when no signal launched from `|x| <= support` at unit speed reaches
/// the domain ends before `t_max + margin`.
pub fn light_cone_clear(grid: &Grid1D, support: f64, t_max: f64, margin: f64) -> bool {
    grid.half_width() >= support + t_max + margin
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn gl() -> ModelSpec {
        ModelSpec::nlkg(PolynomialPotential::ginzburg_landau(), 0.0)
    }

    #[test]
    fn vacuum_is_a_fixed_point() {
        let grid = Grid1D::symmetric(5.0, 0.1).unwrap();
        let s = FieldState::from_fn(grid, |_| c(1.0), |_| c(0.0));
        let mut ev = Evolution::new(s.clone(), &gl(), 0.05).unwrap();
        for _ in 0..100 {
            ev.step().unwrap();
        }
        assert_eq!(ev.state().psi, s.psi);
        assert_eq!(ev.state().pi, s.pi);
    }

    #[test]
    fn refuses_cfl_violation() {
        let grid = Grid1D::symmetric(1.0, 0.01).unwrap();
        let s = FieldState::zeros(grid);
        assert!(matches!(step(&s, &gl(), 0.02), Err(Error::Cfl { .. })));
        let cfg = StepperConfig::new(0.0095, 1.0);
        assert!(matches!(cfg.validate(&grid), Err(Error::Cfl { .. })));
    }

    #[test]
    fn detects_blow_up() {
        let grid = Grid1D::symmetric(2.0, 0.1).unwrap();
        let unstable = ModelSpec::nlkg(PolynomialPotential::new(vec![0.0, 0.0, -1.0]), 0.0);
        let s = FieldState::from_fn(grid, |x| c(5.0 * (-x * x).exp()), |_| c(0.0));
        let cfg = StepperConfig::new(0.05, 100.0);
        let err = run(s, &unstable, &cfg, &mut []).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err:?}");
    }

    #[test]
    fn point_coupling_needs_origin_node() {
        let grid = Grid1D::new(-1.05, 0.95, 0.1).unwrap();
        let model = ModelSpec::lamb(PolynomialPotential::ginzburg_landau(), 0.0);
        assert!(Evolution::new(FieldState::zeros(grid), &model, 0.05).is_err());
    }

    #[test]
    fn zero_horizon_run_records_initial_energy() {
        let grid = Grid1D::symmetric(20.0, 0.05).unwrap();
        let s = FieldState::from_fn(grid, |x| c((x / 2f64.sqrt()).tanh()), |_| c(0.0));
        let mut mem = MemorySink::default();
        let mut cfg = StepperConfig::new(0.04, 0.0);
        cfg.snapshot_every = 1;
        let summary = run(s, &gl(), &cfg, &mut [&mut mem]).unwrap();
        assert_eq!(summary.steps, 0);
        assert_eq!(mem.series.len(), 1);
        assert_eq!(mem.snapshots.len(), 1);
        assert!((summary.initial_energy - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-4);
        assert_eq!(summary.initial_energy, summary.final_energy);
    }

    #[test]
    fn static_state_radiates_nothing() {
        let grid = Grid1D::symmetric(10.0, 0.1).unwrap();
        let s = FieldState::from_fn(grid, |_| c(-1.0), |_| c(0.0));
        let summary = run(s, &gl(), &StepperConfig::new(0.05, 5.0), &mut []).unwrap();
        assert_eq!(summary.radiated_energy, 0.0);
        let samples = vec![[(c(0.0), c(0.0)); 2]; 10];
        assert_eq!(radiated_energy(0.1, &samples), 0.0);
    }
}
