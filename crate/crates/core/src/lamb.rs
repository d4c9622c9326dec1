//! The Lamb system: a string coupled to a nonlinear oscillator at `x = 0`.
//!
//! Splitting the solution into the free d'Alembert wave and an outgoing wave
//! emitted from the origin gives a closed ODE for `y(t) = psi(0, t)`:
//! `2 y' = F(y) + 2 w_in'` (or `M y'' = F(y) - 2 y' + 2 w_in'` with a point
//! mass). The field everywhere is then recovered from `y`.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{FieldState, Grid1D, PolynomialPotential};
use crate::numerics::{adaptive_simpson, bisect, derivative, hermite};
use crate::output::fmt_f64;

/// Cauchy data `(psi_0, pi_0)` on the line.
pub trait InitialData {
    fn psi(&self, x: f64) -> Complex64;
    fn dpsi(&self, x: f64) -> Complex64;
    fn pi(&self, x: f64) -> Complex64;

    /// `int_a^b pi_0(y) dy`. The default uses adaptive quadrature.
    fn pi_integral(&self, a: f64, b: f64) -> Complex64 {
        let re = adaptive_simpson(&|y| self.pi(y).re, a, b, 1e-13);
        let im = adaptive_simpson(&|y| self.pi(y).im, a, b, 1e-13);
        Complex64::new(re, im)
    }

    /// Samples the data on a grid as a field state at `t = 0`.
    fn sample(&self, grid: Grid1D) -> FieldState {
        FieldState::from_fn(grid, |x| self.psi(x), |x| self.pi(x))
    }
}

/// Compactly supported bump `amp (1 - r^2)^4`, `r = (x - center) / radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub amp: Complex64,
    pub center: f64,
    pub radius: f64,
}

impl Bump {
    pub fn new(amp: Complex64, center: f64, radius: f64) -> Self {
        Self { amp, center, radius }
    }

    /// A bump with the given total integral.
    pub fn with_integral(integral: Complex64, center: f64, radius: f64) -> Self {
        Self::new(integral / (radius * 256.0 / 315.0), center, radius)
    }

    fn r(&self, x: f64) -> f64 {
        (x - self.center) / self.radius
    }

    pub fn value(&self, x: f64) -> Complex64 {
        let r = self.r(x);
        if r.abs() >= 1.0 {
            return Complex64::default();
        }
        self.amp * (1.0 - r * r).powi(4)
    }

    pub fn derivative(&self, x: f64) -> Complex64 {
        let r = self.r(x);
        if r.abs() >= 1.0 {
            return Complex64::default();
        }
        self.amp * (-8.0 * r * (1.0 - r * r).powi(3) / self.radius)
    }

    /// `int_{-inf}^x` of the bump, in closed form.
    pub fn cumulative(&self, x: f64) -> Complex64 {
        let r = self.r(x).clamp(-1.0, 1.0);
        let anti = |r: f64| {
            let r2 = r * r;
            r * (1.0 + r2 * (-4.0 / 3.0 + r2 * (6.0 / 5.0 + r2 * (-4.0 / 7.0 + r2 / 9.0))))
        };
        self.amp * (self.radius * (anti(r) - anti(-1.0)))
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// Sums of bumps for `psi_0` and `pi_0`, on top of a constant `psi` offset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BumpData {
    pub offset: Complex64,
    pub psi: Vec<Bump>,
    pub pi: Vec<Bump>,
}

impl BumpData {
    /// Largest `|x|` touched by any bump.
    pub fn support_radius(&self) -> f64 {
        self.psi.iter().chain(&self.pi).map(|b| b.center.abs() + b.radius).fold(0.0, f64::max)
    }
}

impl InitialData for BumpData {
    fn psi(&self, x: f64) -> Complex64 {
        self.psi.iter().fold(self.offset, |acc, b| acc + b.value(x))
    }

    fn dpsi(&self, x: f64) -> Complex64 {
        self.psi.iter().map(|b| b.derivative(x)).sum()
    }

    fn pi(&self, x: f64) -> Complex64 {
        self.pi.iter().map(|b| b.value(x)).sum()
    }

    fn pi_integral(&self, a: f64, b: f64) -> Complex64 {
        self.pi.iter().map(|p| p.cumulative(b) - p.cumulative(a)).sum()
    }
}

/// Initial data given by closures, with `int pi_0` done numerically.
pub struct FnData<P, D, Q> {
    pub psi: P,
    pub dpsi: D,
    pub pi: Q,
}

impl<P, D, Q> InitialData for FnData<P, D, Q>
where
    P: Fn(f64) -> Complex64,
    D: Fn(f64) -> Complex64,
    Q: Fn(f64) -> Complex64,
{
    fn psi(&self, x: f64) -> Complex64 {
        (self.psi)(x)
    }

    fn dpsi(&self, x: f64) -> Complex64 {
        (self.dpsi)(x)
    }

    fn pi(&self, x: f64) -> Complex64 {
        (self.pi)(x)
    }
}

/// Free d'Alembert evolution of the data at `(x, t)`.
pub fn free_wave(data: &dyn InitialData, x: f64, t: f64) -> Complex64 {
    (data.psi(x + t) + data.psi(x - t)) * 0.5 + data.pi_integral(x - t, x + t) * 0.5
}

/// `w_in(t)`: the free evolution of the initial data observed at `x = 0`.
pub fn incoming_wave(data: &dyn InitialData, t: f64) -> Result<Complex64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(free_wave(data, 0.0, t))
}

/// `w_in'(t)`.
pub fn incoming_rate(data: &dyn InitialData, t: f64) -> Result<Complex64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok((data.dpsi(t) - data.dpsi(-t)) * 0.5 + (data.pi(t) + data.pi(-t)) * 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedConfig {
    pub dt: f64,
    pub t_max: f64,
    /// `|y|` above which the integration is declared blown up.
    pub blow_up: f64,
}

impl ReducedConfig {
    pub fn new(dt: f64, t_max: f64) -> Self {
        Self { dt, t_max, blow_up: 1e6 }
    }
}

/// Solution of the reduced equation sampled at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub y: Vec<Complex64>,
    pub ydot: Vec<Complex64>,
    /// `2 int_0^t |y'|^2 ds`, accumulated by the trapezoid rule.
    pub dissipation: Vec<f64>,
    pub particle_mass: f64,
}

impl ReducedTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// `y(tau)` by cubic Hermite interpolation between steps; `y(0)` for
    /// `tau <= 0`.
    pub fn y_at(&self, tau: f64) -> Complex64 {
        let n = self.times.len();
        if tau <= self.times[0] || n == 1 {
            return self.y[0];
        }
        let dt = self.dt();
        let k = (((tau - self.times[0]) / dt).floor() as usize).min(n - 2);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let (y0, y1, d0, d1) = (self.y[k], self.y[k + 1], self.ydot[k], self.ydot[k + 1]);
        Complex64::new(
            hermite(t0, t1, y0.re, y1.re, d0.re, d1.re, tau),
            hermite(t0, t1, y0.im, y1.im, d0.im, d1.im, tau),
        )
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,y_re,y_im,ydot_re,ydot_im,dissipation")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(self.times[k]),
                fmt_f64(self.y[k].re),
                fmt_f64(self.y[k].im),
                fmt_f64(self.ydot[k].re),
                fmt_f64(self.ydot[k].im),
                fmt_f64(self.dissipation[k]),
            )?;
        }
        Ok(())
    }
}

/// Integrates the reduced equation with classical RK4.
///
/// `rate` is `w_in'`. With `particle_mass > 0` the equation is second order
/// and `ydot0` is the initial velocity; otherwise `ydot0` is ignored.
pub fn integrate_reduced<F, W>(
    force: F,
    rate: W,
    y0: Complex64,
    ydot0: Complex64,
    particle_mass: f64,
    cfg: &ReducedConfig,
) -> Result<ReducedTrajectory>
where
    F: Fn(Complex64) -> Complex64,
    W: Fn(f64) -> Complex64,
{
    if !(y0.re.is_finite() && y0.im.is_finite()) {
        return Err(Error::InvalidArgument("y0 must be finite".into()));
    }
    if !(particle_mass >= 0.0) {
        return Err(Error::InvalidArgument(format!("particle mass {particle_mass} < 0")));
    }
    if !(cfg.dt > 0.0) || !(cfg.t_max >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and t_max >= 0".into()));
    }
    let steps = (cfg.t_max / cfg.dt).round() as usize;
    let dt = cfg.dt;
    let mut traj = ReducedTrajectory {
        times: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        ydot: Vec::with_capacity(steps + 1),
        dissipation: Vec::with_capacity(steps + 1),
        particle_mass,
    };
    let first_order = |t: f64, y: Complex64| (force(y) + rate(t) * 2.0) * 0.5;
    let m = particle_mass;
    let accel = |t: f64, y: Complex64, v: Complex64| (force(y) - v * 2.0 + rate(t) * 2.0) / m;

    let mut y = y0;
    let mut v = if m > 0.0 { ydot0 } else { first_order(0.0, y0) };
    let mut diss = 0.0;
    traj.times.push(0.0);
    traj.y.push(y);
    traj.ydot.push(v);
    traj.dissipation.push(0.0);
    for k in 0..steps {
        let t = k as f64 * dt;
        let h = 0.5 * dt;
        if m > 0.0 {
            let (k1y, k1v) = (v, accel(t, y, v));
            let (k2y, k2v) = (v + k1v * h, accel(t + h, y + k1y * h, v + k1v * h));
            let (k3y, k3v) = (v + k2v * h, accel(t + h, y + k2y * h, v + k2v * h));
            let (k4y, k4v) = (v + k3v * dt, accel(t + dt, y + k3y * dt, v + k3v * dt));
            y += (k1y + k2y * 2.0 + k3y * 2.0 + k4y) * (dt / 6.0);
            v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
        } else {
            let k1 = first_order(t, y);
            let k2 = first_order(t + h, y + k1 * h);
            let k3 = first_order(t + h, y + k2 * h);
            let k4 = first_order(t + dt, y + k3 * dt);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            v = first_order(t + dt, y);
        }
        let tn = (k + 1) as f64 * dt;
        let mag = y.norm();
        if !mag.is_finite() || mag > cfg.blow_up {
            return Err(Error::BlowUp { t: tn, magnitude: mag });
        }
        let v_prev = traj.ydot[k];
        diss += dt * (v_prev.norm_sqr() + v.norm_sqr());
        traj.times.push(tn);
        traj.y.push(y);
        traj.ydot.push(v);
        traj.dissipation.push(diss);
    }
    Ok(traj)
}

/// Max over the trajectory of
/// `2 int |y'|^2 + U(y(t)) - U(y(0)) - 2 int Re(conj(w_in') y')`,
/// plus `M/2 (|y'(t)|^2 - |y'(0)|^2)` for a particle of mass `M`.
/// Exact trajectories of the reduced equation make this vanish.
///
/// Both integrals use the trapezoid rule with the Euler-Maclaurin end
/// correction `dt^2/12 (f'_k - f'_{k+1})` per panel, the slopes taken by
/// fourth-order differences, so the quadrature error is `O(dt^4)` like RK4.
pub fn dissipation_check<W>(traj: &ReducedTrajectory, potential: &PolynomialPotential, rate: W) -> f64
where
    W: Fn(f64) -> Complex64,
{
    let n = traj.len();
    if n < 2 {
        return 0.0;
    }
    let dt = traj.dt();
    let speed: Vec<f64> = traj.ydot.iter().map(|v| v.norm_sqr()).collect();
    let work: Vec<f64> = traj.times.iter().zip(&traj.ydot).map(|(&t, v)| (rate(t).conj() * v).re).collect();
    let (dspeed, dwork) = (derivative(&speed, dt), derivative(&work, dt));
    let panel = |f: &[f64], df: &[f64], k: usize| 0.5 * dt * (f[k] + f[k + 1]) + dt * dt / 12.0 * (df[k] - df[k + 1]);
    let u0 = potential.value(traj.y[0]);
    let (mut diss, mut w) = (0.0, 0.0);
    let mut worst: f64 = 0.0;
    for k in 0..n - 1 {
        diss += 2.0 * panel(&speed, &dspeed, k);
        w += panel(&work, &dwork, k);
        let kinetic = 0.5 * traj.particle_mass * (speed[k + 1] - speed[0]);
        let res = diss + kinetic + potential.value(traj.y[k + 1]) - u0 - 2.0 * w;
        worst = worst.max(res.abs());
    }
    worst
}

/// `psi(x, t)` recovered from the reduced trajectory: the free wave plus the
/// wave `(y - w_in)(t - |x|)` emitted from the origin.
pub fn reconstruct_field(traj: &ReducedTrajectory, data: &dyn InitialData, x: f64, t: f64) -> Result<Complex64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let horizon = traj.times.last().copied().unwrap_or(0.0);
    let tau = t - x.abs();
    let mut value = free_wave(data, x, t);
    if tau > 0.0 {
        if tau > horizon * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "retarded time {tau} is beyond the trajectory horizon {horizon}"
            )));
        }
        value += traj.y_at(tau) - incoming_wave(data, tau)?;
    }
    Ok(value)
}

/// Isolated zeros of a force, used as the attractor of the reduced dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarySet {
    zeros: Vec<Complex64>,
    pub tolerance: f64,
}

impl StationarySet {
    /// Validates that every point is a zero of `potential`'s force and that
    /// the set is discrete at the given tolerance.
    pub fn new(potential: &PolynomialPotential, zeros: Vec<Complex64>, tolerance: f64) -> Result<Self> {
        if potential.is_zero() {
            return Err(Error::NonDiscrete("F vanishes identically".into()));
        }
        for z in &zeros {
            let r = potential.force(*z).norm();
            if r >= 1e-10 {
                return Err(Error::InvalidArgument(format!("|F({z})| = {r} is not a zero")));
            }
        }
        for (i, a) in zeros.iter().enumerate() {
            for b in &zeros[i + 1..] {
                if (a - b).norm() <= 2.0 * tolerance {
                    return Err(Error::NonDiscrete(format!("zeros {a} and {b} are closer than twice the tolerance")));
                }
            }
        }
        Ok(Self { zeros, tolerance })
    }

    /// Real zeros of `F(y) = -2 u'(y^2) y`: the origin plus `+-sqrt(s)` for
    /// every positive root `s` of `u'`.
    pub fn real_zeros(potential: &PolynomialPotential, tolerance: f64) -> Result<Self> {
        let c = potential.coeffs();
        if c.len() <= 2 {
            // u' is constant: either F is linear with the single zero 0, or F = 0.
            if c.len() == 2 && c[1] != 0.0 {
                return Self::new(potential, vec![Complex64::default()], tolerance);
            }
            return Err(Error::NonDiscrete("F vanishes identically".into()));
        }
        // Cauchy bound on the roots of u'(s).
        let lead = c.len() as f64 - 1.0;
        let top = lead * c[c.len() - 1];
        let bound = 1.0
            + c.iter()
                .enumerate()
                .skip(1)
                .take(c.len() - 2)
                .map(|(j, cj)| (j as f64 * cj / top).abs())
                .fold(0.0, f64::max);
        let du = |s: f64| potential.du(s);
        let n = 4000;
        let mut roots = Vec::new();
        let mut prev_s = 0.0;
        for k in 1..=n {
            let s = bound * k as f64 / n as f64;
            let (a, b) = (du(prev_s), du(s));
            if b == 0.0 {
                roots.push(s);
            } else if a != 0.0 && a.signum() != b.signum() {
                if let Some(r) = bisect(du, prev_s, s) {
                    roots.push(r);
                }
            }
            prev_s = s;
        }
        let mut zeros = vec![Complex64::default()];
        for s in roots.into_iter().filter(|&s| s > 0.0) {
            let r = s.sqrt();
            zeros.push(Complex64::new(-r, 0.0));
            zeros.push(Complex64::new(r, 0.0));
        }
        zeros.sort_by(|a, b| a.re.total_cmp(&b.re));
        Self::new(potential, zeros, tolerance)
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    /// Nearest zero and its distance.
    pub fn nearest(&self, y: Complex64) -> (Complex64, f64) {
        self.zeros
            .iter()
            .map(|z| (*z, (y - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("stationary set is never empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attraction {
    pub converged: bool,
    pub limit: Complex64,
    /// Start of the final stretch on which `y` stays within tolerance of
    /// `limit` with `|y'|` below tolerance.
    pub t_settle: Option<f64>,
}

/// Convergence of `y(t)` to the stationary set over the final 10% of the
/// trajectory.
pub fn attraction_check(traj: &ReducedTrajectory, set: &StationarySet) -> Result<Attraction> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let n = traj.len();
    let (limit, _) = set.nearest(traj.y[n - 1]);
    let tol = set.tolerance;
    let within = |k: usize| (traj.y[k] - limit).norm() < tol && traj.ydot[k].norm() < tol;
    let mut first_good = n;
    for k in (0..n).rev() {
        if !within(k) {
            break;
        }
        first_good = k;
    }
    let t_end = traj.times[n - 1];
    let window_start = t_end - 0.1 * (t_end - traj.times[0]);
    let t_settle = (first_good < n).then(|| traj.times[first_good]);
    let converged = t_settle.is_some_and(|ts| ts <= window_start);
    Ok(Attraction { converged, limit, t_settle })
}
