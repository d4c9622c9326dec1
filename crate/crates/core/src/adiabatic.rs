//! Effective particle dynamics of a soliton in a slowly varying external
//! potential: `Q' = E'(Pi)`, `Pi' = -V'(Q)` with the relativistic kinetic
//! energy `E = sqrt(m0^2 + Pi^2)` at frozen frequency.

use std::io::Write;

use crate::diagnostics::TrackSeries;
use crate::error::{Error, Result};
use crate::fields::{FieldState, PolynomialPotential};
use crate::numerics::adaptive_simpson;
use crate::output::fmt_f64;
use crate::solitons::{boosted_energy_momentum, solve_profile, Profile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveState {
    pub q: f64,
    pub pi: f64,
    pub t: f64,
}

/// `E(Pi)` of a soliton with frozen frequency `omega0`.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticMap {
    pub omega0: f64,
    pub rest_mass: f64,
    /// `(P_v, E_v)` along boosts with `v` on a uniform grid in `(-v_max, v_max)`.
    pub table: Vec<(f64, f64)>,
}

const TABLE_V_MAX: f64 = 0.99;
const TABLE_SIZE: usize = 199;

impl KineticMap {
    pub fn from_rest_mass(omega0: f64, rest_mass: f64) -> Self {
        let table = (0..TABLE_SIZE)
            .map(|k| {
                let v = -TABLE_V_MAX + 2.0 * TABLE_V_MAX * k as f64 / (TABLE_SIZE - 1) as f64;
                let (e, p) = boosted_energy_momentum(rest_mass, v);
                (p, e)
            })
            .collect();
        Self { omega0, rest_mass, table }
    }

    pub fn energy(&self, pi: f64) -> f64 {
        self.rest_mass.hypot(pi)
    }

    /// `dE/dPi`, the particle velocity; always inside `(-1, 1)`.
    pub fn velocity(&self, pi: f64) -> f64 {
        pi / self.energy(pi)
    }

    /// Largest `|E^2 - P^2 - m0^2|` over the boost table.
    pub fn dispersion_residual(&self) -> f64 {
        let m2 = self.rest_mass * self.rest_mass;
        self.table.iter().map(|(p, e)| (e * e - p * p - m2).abs()).fold(0.0, f64::max)
    }
}

pub fn build_kinetic_map(omega0: f64, potential: &PolynomialPotential, kg_mass: f64) -> Result<KineticMap> {
    let profile = solve_profile(omega0, potential, kg_mass)?;
    Ok(KineticMap::from_rest_mass(omega0, profile.rest_mass()))
}

/// `V(Q) = -depth * cos(k Q)`, the restriction of `1/2 int V |psi|^2` to
/// the solitary manifold for `V(x) = -amp * cos(k x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectivePotential {
    pub depth: f64,
    pub wavenumber: f64,
}

impl EffectivePotential {
    pub fn zero() -> Self {
        Self { depth: 0.0, wavenumber: 0.0 }
    }

    /// Averages the external potential over the rest profile:
    /// `depth = amp/2 * int phi(y)^2 cos(k y) dy`.
    pub fn from_profile(profile: &Profile, external_amp: f64, wavenumber: f64) -> Self {
        let reach = profile.half_width() * 20.0 + 20.0;
        let f = |y: f64| {
            let p = profile.value(y);
            p * p * (wavenumber * y).cos()
        };
        // The integrand is even.
        let integral = 2.0 * adaptive_simpson(&f, 0.0, reach, 1e-12);
        Self { depth: 0.5 * external_amp * integral, wavenumber }
    }

    pub fn value(&self, q: f64) -> f64 {
        -self.depth * (self.wavenumber * q).cos()
    }

    pub fn gradient(&self, q: f64) -> f64 {
        self.depth * self.wavenumber * (self.wavenumber * q).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Store every n-th step.
    pub record_every: u64,
}

impl EffectiveConfig {
    pub fn new(dt: f64, t_max: f64) -> Self {
        Self { dt, t_max, record_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EffectiveTrajectory {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    pub pi: Vec<f64>,
    pub h: Vec<f64>,
}

impl EffectiveTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|H(t) - H(0)| / |H(0)|`.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.h[0];
        self.h.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max) / h0.abs().max(f64::MIN_POSITIVE)
    }

    /// Linear interpolation of `Q` at time `t`.
    pub fn q_at(&self, t: f64) -> f64 {
        let n = self.len();
        if t <= self.times[0] {
            return self.q[0];
        }
        if t >= self.times[n - 1] {
            return self.q[n - 1];
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.q[k] + s * (self.q[k + 1] - self.q[k])
    }

    /// Times of successive local maxima of `Q`, refined by a parabola.
    pub fn maxima(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for k in 1..self.len().saturating_sub(1) {
            if self.q[k] > self.q[k - 1] && self.q[k] >= self.q[k + 1] {
                let off = crate::numerics::parabolic_offset(self.q[k - 1], self.q[k], self.q[k + 1]);
                out.push(self.times[k] + off * (self.times[k + 1] - self.times[k]));
            }
        }
        out
    }

    /// Oscillation period from the spacing of maxima, counting `t = 0` as
    /// a maximum when the particle starts at rest.
    pub fn period(&self) -> Option<f64> {
        let mut m = self.maxima();
        if self.pi[0] == 0.0 && self.len() > 1 && self.q[1] < self.q[0] {
            m.insert(0, self.times[0]);
        }
        (m.len() >= 2).then(|| (m[m.len() - 1] - m[0]) / (m.len() - 1) as f64)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<usize> {
        writeln!(w, "t,Q,Pi,H_eff")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(self.times[k]),
                fmt_f64(self.q[k]),
                fmt_f64(self.pi[k]),
                fmt_f64(self.h[k])
            )?;
        }
        Ok(self.len())
    }
}

/// Leapfrog (kick-drift-kick) integration of the effective equations.
pub fn integrate_effective(
    start: EffectiveState,
    kinetic: &KineticMap,
    potential: &EffectivePotential,
    cfg: &EffectiveConfig,
) -> Result<EffectiveTrajectory> {
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) || !(cfg.t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("bad effective step dt = {}, t_max = {}", cfg.dt, cfg.t_max)));
    }
    let n = (cfg.t_max / cfg.dt).round() as u64;
    let every = cfg.record_every.max(1);
    let h = |q: f64, p: f64| kinetic.energy(p) + potential.value(q);
    let mut traj = EffectiveTrajectory::default();
    let (mut q, mut p) = (start.q, start.pi);
    let push = |traj: &mut EffectiveTrajectory, k: u64, q: f64, p: f64| {
        traj.times.push(start.t + k as f64 * cfg.dt);
        traj.q.push(q);
        traj.pi.push(p);
        traj.h.push(h(q, p));
    };
    push(&mut traj, 0, q, p);
    let half = 0.5 * cfg.dt;
    for k in 1..=n {
        p -= half * potential.gradient(q);
        q += cfg.dt * kinetic.velocity(p);
        p -= half * potential.gradient(q);
        if k % every == 0 || k == n {
            push(&mut traj, k, q, p);
        }
    }
    Ok(traj)
}

/// Field momentum within `half_window` of `center`.
pub fn windowed_momentum(state: &FieldState, center: f64, half_window: f64) -> f64 {
    let grid = state.grid;
    let dx = grid.dx();
    let lo = grid.nearest(center - half_window).max(1);
    let hi = grid.nearest(center + half_window).min(grid.len() - 2);
    (lo..=hi)
        .map(|j| {
            let d = (state.psi[j + 1] - state.psi[j - 1]) / (2.0 * dx);
            -(state.pi[j].conj() * d).re * dx
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticReport {
    pub max_deviation: f64,
    pub effective_period: f64,
    /// `(A_pde, A_eff)` half peak-to-peak amplitudes per effective period.
    pub amplitudes: Vec<(f64, f64)>,
    /// Largest `|A_pde / A_eff - 1|` over the first two periods.
    pub first_two_period_drift: f64,
    pub first_exceed: Option<f64>,
    pub threshold: f64,
    /// `(t, q_pde, Q_eff, deviation)`.
    pub rows: Vec<(f64, f64, f64, f64)>,
}

impl AdiabaticReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<usize> {
        writeln!(w, "t,q_pde,Q_eff,deviation")?;
        for &(t, a, b, d) in &self.rows {
            writeln!(w, "{},{},{},{}", fmt_f64(t), fmt_f64(a), fmt_f64(b), fmt_f64(d))?;
        }
        Ok(self.rows.len())
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "max_deviation = {}\neffective_period = {}\nfirst_two_period_drift = {}\nthreshold = {}\nfirst_exceed = {}\n",
            fmt_f64(self.max_deviation),
            fmt_f64(self.effective_period),
            fmt_f64(self.first_two_period_drift),
            fmt_f64(self.threshold),
            self.first_exceed.map(fmt_f64).unwrap_or_else(|| "none".into()),
        );
        for (k, (a, b)) in self.amplitudes.iter().enumerate() {
            s.push_str(&format!("amplitude.{k} = {} {}\n", fmt_f64(*a), fmt_f64(*b)));
        }
        s
    }
}

fn half_range(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    (hi >= lo).then_some(0.5 * (hi - lo))
}

/// Compares a tracked soliton centre against the effective trajectory.
pub fn compare_adiabatic(
    track: &TrackSeries,
    effective: &EffectiveTrajectory,
    threshold: f64,
) -> Result<AdiabaticReport> {
    let period =
        effective.period().ok_or_else(|| Error::TrackTooShort("effective trajectory shows no full period".into()))?;
    if track.duration() < period {
        return Err(Error::TrackTooShort(format!(
            "track spans {} but one effective period is {period}",
            track.duration()
        )));
    }
    let t0 = track.times[0];
    let rows: Vec<(f64, f64, f64, f64)> = track
        .times
        .iter()
        .zip(&track.positions)
        .map(|(&t, &q)| {
            let e = effective.q_at(t);
            (t, q, e, (q - e).abs())
        })
        .collect();
    let max_deviation = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let first_exceed = rows.iter().find(|r| r.3 > threshold).map(|r| r.0);
    let t_end = track.times[track.len() - 1].min(effective.times[effective.len() - 1]);
    let full = ((t_end - t0) / period).floor() as usize;
    let mut amplitudes = Vec::with_capacity(full);
    for k in 0..full {
        let (a, b) = (t0 + k as f64 * period, t0 + (k + 1) as f64 * period);
        let pde = half_range(rows.iter().filter(|r| r.0 >= a && r.0 <= b).map(|r| r.1));
        let eff =
            half_range(effective.times.iter().zip(&effective.q).filter(|(t, _)| **t >= a && **t <= b).map(|(_, q)| *q));
        if let (Some(p), Some(e)) = (pde, eff) {
            amplitudes.push((p, e));
        }
    }
    let first_two_period_drift = amplitudes
        .iter()
        .take(2)
        .map(|(p, e)| if *e > 0.0 { (p / e - 1.0).abs() } else { f64::INFINITY })
        .fold(0.0, f64::max);
    Ok(AdiabaticReport {
        max_deviation,
        effective_period: period,
        amplitudes,
        first_two_period_drift,
        first_exceed,
        threshold,
        rows,
    })
}
