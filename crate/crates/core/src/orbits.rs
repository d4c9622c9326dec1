//! Stationary orbits `e^{-i omega t} C e^{-kappa |x|}` of the Klein-Gordon
//! string with a nonlinear oscillator at the origin, and distances to the
//! manifold they form.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{seminorm_dist, FieldState, Grid1D, PolynomialPotential};
use crate::numerics::bisect;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryOrbit {
    pub omega: f64,
    pub kappa: f64,
    /// Real amplitude `C >= 0` at the origin; `C = 0` is the zero orbit.
    pub amplitude: f64,
}

impl StationaryOrbit {
    pub fn zero(omega: f64, kg_mass: f64) -> Self {
        Self { omega, kappa: (kg_mass * kg_mass - omega * omega).max(0.0).sqrt(), amplitude: 0.0 }
    }

    pub fn profile(&self, x: f64) -> f64 {
        self.amplitude * (-self.kappa * x.abs()).exp()
    }

    /// `|2 kappa C - F(C)|`.
    pub fn residual(&self, potential: &PolynomialPotential) -> f64 {
        let c = Complex64::new(self.amplitude, 0.0);
        (c * (2.0 * self.kappa) - potential.force(c)).norm()
    }
}

/// Finds `C > 0` with `2 kappa C = F(C)`, `kappa = sqrt(m^2 - omega^2)`.
///
/// The equation reduces to `kappa + u'(C^2) = 0`; the smallest positive
/// root is bracketed by scanning up to a Cauchy bound and then bisected.
/// `Ok(None)` means the frequency carries no nonzero orbit.
pub fn solve_orbit(omega: f64, potential: &PolynomialPotential, kg_mass: f64) -> Result<Option<StationaryOrbit>> {
    if !(omega.abs() < kg_mass) {
        return Err(Error::InvalidArgument(format!(
            "orbit frequency {omega} must lie in the gap (-{kg_mass}, {kg_mass})"
        )));
    }
    let kappa = (kg_mass * kg_mass - omega * omega).sqrt();
    let g = |c: f64| 2.0 * kappa * c - potential.force(Complex64::new(c, 0.0)).re;
    let c_max = amplitude_bound(potential, kappa);
    let lo = 1e-8;
    if !(c_max > lo) {
        return Ok(None);
    }
    let n = 2000;
    let mut a = lo;
    let mut ga = g(a);
    for k in 1..=n {
        let b = lo + (c_max - lo) * k as f64 / n as f64;
        let gb = g(b);
        if ga == 0.0 || ga.signum() != gb.signum() {
            let root = if ga == 0.0 { Some(a) } else { bisect(g, a, b) };
            return Ok(root.map(|c| StationaryOrbit { omega, kappa, amplitude: c }));
        }
        a = b;
        ga = gb;
    }
    Ok(None)
}

/// Upper bound on positive roots `C` of `kappa + u'(C^2) = 0`.
fn amplitude_bound(potential: &PolynomialPotential, kappa: f64) -> f64 {
    let c = potential.coeffs();
    if c.len() < 3 {
        // u' constant: at most a degenerate continuum, never an isolated root.
        return 0.0;
    }
    // Polynomial in s: kappa + sum_{j>=1} j u_j s^{j-1}.
    let mut p: Vec<f64> = c.iter().enumerate().skip(1).map(|(j, u)| j as f64 * u).collect();
    p[0] += kappa;
    let top = p[p.len() - 1].abs();
    let bound = 1.0 + p[..p.len() - 1].iter().map(|q| q.abs() / top).fold(0.0, f64::max);
    bound.sqrt() * (1.0 + 1e-9)
}

/// `psi = e^{i theta} phi_omega`, `pi = -i omega psi` on `grid`.
pub fn orbit_state(orbit: &StationaryOrbit, theta: f64, grid: Grid1D) -> Result<FieldState> {
    if grid.origin().is_none() {
        return Err(Error::InvalidGrid("orbit states need a node at x = 0".into()));
    }
    let phase = Complex64::from_polar(1.0, theta);
    let rot = Complex64::new(0.0, -orbit.omega);
    Ok(FieldState::from_fn(grid, |x| phase * orbit.profile(x), |x| rot * phase * orbit.profile(x)))
}

/// Best fit of a state by a stationary orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldFit {
    pub dist: f64,
    pub omega: f64,
    pub theta: f64,
    pub amplitude: f64,
}

const OMEGA_STEP: f64 = 0.01;
const THETA_STEPS: usize = 64;

/// Distance from `state` to the solitary manifold in the local seminorm of
/// radius `radius`.
///
/// Scans `omega` on multiples of 0.01 inside the gap and `theta` on 64
/// angles anchored at `arg psi(0)` (so the result is gauge invariant), always
/// including the zero orbit, and then takes one safeguarded Newton step in
/// `(omega, theta)`.
pub fn manifold_distance(
    state: &FieldState,
    potential: &PolynomialPotential,
    kg_mass: f64,
    radius: f64,
) -> Result<ManifoldFit> {
    let grid = state.grid;
    let o = grid.origin().ok_or_else(|| Error::InvalidGrid("need a node at x = 0".into()))?;
    let r = radius.min(grid.half_width());
    let (lo, hi) = grid.window(r);
    let sub_grid = Grid1D::new(grid.x(lo), grid.x(hi), grid.dx())?;
    let local = FieldState::new(sub_grid, state.psi[lo..=hi].to_vec(), state.pi[lo..=hi].to_vec(), state.t)?;
    let anchor = state.psi[o].arg();

    let dist_to = |orbit: &StationaryOrbit, theta: f64| -> f64 {
        orbit_state(orbit, theta, sub_grid)
            .and_then(|s| seminorm_dist(&local, &s, r))
            .map(|s| s.value)
            .unwrap_or(f64::INFINITY)
    };
    let zero = StationaryOrbit::zero(0.0, kg_mass);
    let mut best = ManifoldFit { dist: dist_to(&zero, 0.0), omega: 0.0, theta: anchor, amplitude: 0.0 };

    let k_max = ((kg_mass / OMEGA_STEP).ceil() as i64) - 1;
    let candidates: Vec<ManifoldFit> = (-k_max..=k_max)
        .into_par_iter()
        .filter_map(|k| {
            let omega = k as f64 * OMEGA_STEP;
            if omega.abs() >= kg_mass {
                return None;
            }
            let orbit = solve_orbit(omega, potential, kg_mass).ok().flatten()?;
            (0..THETA_STEPS)
                .map(|j| {
                    let theta = anchor + 2.0 * std::f64::consts::PI * j as f64 / THETA_STEPS as f64;
                    ManifoldFit { dist: dist_to(&orbit, theta), omega, theta, amplitude: orbit.amplitude }
                })
                .min_by(|a, b| a.dist.total_cmp(&b.dist))
        })
        .collect();
    for c in candidates {
        if c.dist < best.dist {
            best = c;
        }
    }
    if best.amplitude == 0.0 || best.dist == 0.0 {
        return Ok(best);
    }

    // One Newton step on the squared distance, finite-difference derivatives.
    let eval = |omega: f64, theta: f64| -> Option<ManifoldFit> {
        if omega.abs() >= kg_mass {
            return None;
        }
        let orbit = solve_orbit(omega, potential, kg_mass).ok().flatten()?;
        Some(ManifoldFit { dist: dist_to(&orbit, theta), omega, theta, amplitude: orbit.amplitude })
    };
    let f = |w: f64, t: f64| eval(w, t).map(|m| m.dist * m.dist).unwrap_or(f64::INFINITY);
    let (hw, ht) = (1e-3, 1e-3);
    let (w0, t0) = (best.omega, best.theta);
    let f0 = best.dist * best.dist;
    let fwp = f(w0 + hw, t0);
    let fwm = f(w0 - hw, t0);
    let ftp = f(w0, t0 + ht);
    let ftm = f(w0, t0 - ht);
    let fpp = f(w0 + hw, t0 + ht);
    let fmm = f(w0 - hw, t0 - ht);
    let all = [fwp, fwm, ftp, ftm, fpp, fmm];
    if all.iter().all(|v| v.is_finite()) {
        let gw = (fwp - fwm) / (2.0 * hw);
        let gt = (ftp - ftm) / (2.0 * ht);
        let hww = (fwp - 2.0 * f0 + fwm) / (hw * hw);
        let htt = (ftp - 2.0 * f0 + ftm) / (ht * ht);
        let hwt = (fpp - fwp - ftp + 2.0 * f0 - fwm - ftm + fmm) / (2.0 * hw * ht);
        let det = hww * htt - hwt * hwt;
        if det > 0.0 && hww > 0.0 {
            let dw = -(htt * gw - hwt * gt) / det;
            let dtheta = -(hww * gt - hwt * gw) / det;
            let mut scale = 1.0;
            for _ in 0..4 {
                if let Some(m) = eval(w0 + scale * dw, t0 + scale * dtheta) {
                    if m.dist < best.dist {
                        best = m;
                        break;
                    }
                }
                scale *= 0.5;
            }
        }
    }
    Ok(best)
}
