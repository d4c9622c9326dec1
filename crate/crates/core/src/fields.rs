//! Grids, field states, potentials and the energy/momentum/seminorm
//! functionals shared by every model.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{derivative, trapezoid};

/// Uniform 1D mesh. When `x_min` is an integer multiple of `dx` the node
/// positions are generated as exact multiples of `dx`, so `x = 0` is a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    dx: f64,
    n_points: usize,
    origin: Option<usize>,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidGrid(format!("dx must be positive, got {dx}")));
        }
        if !(x_max > x_min) {
            return Err(Error::InvalidGrid(format!("x_max ({x_max}) must exceed x_min ({x_min})")));
        }
        let span = x_max - x_min;
        let cells = (span / dx).round();
        if ((cells * dx - span) / span).abs() > 1e-12 {
            return Err(Error::InvalidGrid(format!("span {span} is not an integer multiple of dx = {dx}")));
        }
        let n_points = cells as usize + 1;
        let shift = -x_min / dx;
        let origin = if (shift - shift.round()).abs() < 1e-9 && shift.round() >= 0.0 {
            let j = shift.round() as usize;
            (j < n_points).then_some(j)
        } else {
            None
        };
        Ok(Self { x_min, dx, n_points, origin })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, dx: f64) -> Result<Self> {
        Self::new(-half_width, half_width, dx)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn x_min(&self) -> f64 {
        self.x(0)
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n_points - 1)
    }

    /// Index of the node at `x = 0`, if the grid has one.
    pub fn origin(&self) -> Option<usize> {
        self.origin
    }

    pub fn x(&self, j: usize) -> f64 {
        match self.origin {
            Some(o) => (j as f64 - o as f64) * self.dx,
            None => self.x_min + j as f64 * self.dx,
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Distance from `x = 0` to the nearer domain end.
    pub fn half_width(&self) -> f64 {
        (-self.x_min()).min(self.x_max())
    }

    /// Nearest node to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let j = ((x - self.x_min()) / self.dx).round();
        j.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    /// Inclusive index range of nodes with `|x| <= r`.
    pub fn window(&self, r: f64) -> (usize, usize) {
        let lo = ((-r - self.x_min()) / self.dx - 1e-9).ceil().max(0.0) as usize;
        let hi = ((r - self.x_min()) / self.dx + 1e-9).floor() as usize;
        (lo.min(self.n_points - 1), hi.min(self.n_points - 1))
    }
}

/// Phase-space point `(psi, pi)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid1D,
    pub psi: Vec<Complex64>,
    pub pi: Vec<Complex64>,
    pub t: f64,
}

impl FieldState {
    pub fn new(grid: Grid1D, psi: Vec<Complex64>, pi: Vec<Complex64>, t: f64) -> Result<Self> {
        for v in [&psi, &pi] {
            if v.len() != grid.len() {
                return Err(Error::GridMismatch { expected: grid.len(), got: v.len() });
            }
        }
        Ok(Self { grid, psi, pi, t })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        let n = grid.len();
        Self { grid, psi: vec![Complex64::default(); n], pi: vec![Complex64::default(); n], t: 0.0 }
    }

    /// Samples `psi(x)` and `pi(x)` on the grid.
    pub fn from_fn<F, G>(grid: Grid1D, psi: F, pi: G) -> Self
    where
        F: Fn(f64) -> Complex64,
        G: Fn(f64) -> Complex64,
    {
        let xs = grid.xs();
        Self { grid, psi: xs.iter().map(|&x| psi(x)).collect(), pi: xs.iter().map(|&x| pi(x)).collect(), t: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.iter().chain(&self.pi).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Field value at `x = 0` (linear interpolation off-node).
    pub fn value_at_origin(&self) -> Complex64 {
        value_at(&self.grid, &self.psi, 0.0)
    }

    /// Multiplies both components by `e^{i theta}`.
    pub fn rotated(&self, theta: f64) -> Self {
        let w = Complex64::from_polar(1.0, theta);
        Self {
            grid: self.grid,
            psi: self.psi.iter().map(|z| z * w).collect(),
            pi: self.pi.iter().map(|z| z * w).collect(),
            t: self.t,
        }
    }

    pub fn max_imag(&self) -> f64 {
        self.psi.iter().chain(&self.pi).map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.psi.len() != other.psi.len() || self.pi.len() != other.pi.len() {
            return Err(Error::GridMismatch { expected: self.psi.len(), got: other.psi.len() });
        }
        Ok(())
    }
}

fn value_at(grid: &Grid1D, v: &[Complex64], x: f64) -> Complex64 {
    if let (Some(o), true) = (grid.origin(), x == 0.0) {
        return v[o];
    }
    let s = ((x - grid.x_min()) / grid.dx()).clamp(0.0, (grid.len() - 1) as f64);
    let j = (s.floor() as usize).min(grid.len().saturating_sub(2));
    let w = s - j as f64;
    v[j] * (1.0 - w) + v[j + 1] * w
}

/// `U(psi) = sum_j u_j |psi|^{2j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPotential {
    coeffs: Vec<f64>,
}

impl PolynomialPotential {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![0.0])
    }

    /// `(|psi|^2 - 1)^2 / 4`, i.e. `|psi|^4/4 - |psi|^2/2` shifted so the
    /// vacua `|psi| = 1` carry zero energy. Force `psi - |psi|^2 psi`.
    pub fn ginzburg_landau() -> Self {
        Self::new(vec![0.25, -0.5, 0.25])
    }

    /// `a |psi|^{2m} - b |psi|^{2n}` with `m > n`.
    pub fn two_term(a: f64, m_exp: usize, b: f64, n_exp: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || m_exp <= n_exp || n_exp < 1 {
            return Err(Error::InvalidModel(format!(
                "two-term potential needs a, b > 0 and m > n >= 1 (a={a}, m={m_exp}, b={b}, n={n_exp})"
            )));
        }
        let mut c = vec![0.0; m_exp + 1];
        c[m_exp] = a;
        c[n_exp] -= b;
        Ok(Self::new(c))
    }

    /// Harmonic point potential `k |psi|^2 / 2`, force `-k psi`.
    pub fn harmonic(k: f64) -> Self {
        Self::new(vec![0.0, 0.5 * k])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `u(s)` with `s = |psi|^2`.
    pub fn u(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    /// `u'(s)`.
    pub fn du(&self, s: f64) -> f64 {
        self.coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (j, c)| acc * s + j as f64 * c)
    }

    pub fn value(&self, psi: Complex64) -> f64 {
        self.u(psi.norm_sqr())
    }

    /// `F(psi) = -grad_{conj psi} U(psi) = -2 u'(|psi|^2) psi`.
    #[inline]
    pub fn force(&self, psi: Complex64) -> Complex64 {
        psi * (-2.0 * self.du(psi.norm_sqr()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// `u_N > 0` with `N >= 2`.
    pub fn is_strictly_nonlinear(&self) -> bool {
        self.degree() >= 2 && self.coeffs[self.degree()] > 0.0
    }

    /// `U(psi) -> infinity` as `|psi| -> infinity`.
    pub fn is_confining(&self) -> bool {
        self.degree() >= 1 && self.coeffs[self.degree()] > 0.0
    }
}

/// Free function form of [`PolynomialPotential::force`].
pub fn force(potential: &PolynomialPotential, psi: Complex64) -> Complex64 {
    potential.force(psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Wave equation with a point oscillator at `x = 0`.
    Lamb,
    /// Klein-Gordon equation with a point oscillator at `x = 0`.
    KgPointOscillator,
    /// Nonlinear Klein-Gordon equation with a bulk potential.
    Nlkg,
}

impl Family {
    pub fn is_point_coupled(self) -> bool {
        matches!(self, Family::Lamb | Family::KgPointOscillator)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Lamb => "lamb",
            Family::KgPointOscillator => "kg_point_oscillator",
            Family::Nlkg => "nlkg",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lamb" => Ok(Family::Lamb),
            "kg_point_oscillator" => Ok(Family::KgPointOscillator),
            "nlkg" => Ok(Family::Nlkg),
            other => Err(Error::InvalidModel(format!("unknown family '{other}'"))),
        }
    }
}

/// Which equation is integrated and with which coefficients.
///
/// `kg_mass` is `m` (the equation carries `-m^2 psi`). For point-coupled
/// families `potential` acts only at `x = 0`; for `nlkg` it is the bulk
/// potential. The external potential is `V(x) = -external_amp * cos(k x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub family: Family,
    pub kg_mass: f64,
    pub particle_mass: f64,
    pub potential: PolynomialPotential,
    pub external_amp: f64,
    pub external_wavenumber: f64,
}

impl ModelSpec {
    pub fn lamb(potential: PolynomialPotential, particle_mass: f64) -> Self {
        Self {
            family: Family::Lamb,
            kg_mass: 0.0,
            particle_mass,
            potential,
            external_amp: 0.0,
            external_wavenumber: 0.0,
        }
    }

    pub fn kg_point(potential: PolynomialPotential, kg_mass: f64) -> Self {
        Self {
            family: Family::KgPointOscillator,
            kg_mass,
            particle_mass: 0.0,
            potential,
            external_amp: 0.0,
            external_wavenumber: 0.0,
        }
    }

    pub fn nlkg(potential: PolynomialPotential, kg_mass: f64) -> Self {
        Self {
            family: Family::Nlkg,
            kg_mass,
            particle_mass: 0.0,
            potential,
            external_amp: 0.0,
            external_wavenumber: 0.0,
        }
    }

    pub fn with_external(mut self, amp: f64, wavenumber: f64) -> Self {
        self.external_amp = amp;
        self.external_wavenumber = wavenumber;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.kg_mass.is_finite()
            && self.particle_mass.is_finite()
            && self.external_amp.is_finite()
            && self.external_wavenumber.is_finite()
            && self.potential.coeffs().iter().all(|c| c.is_finite());
        if !finite {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        if self.kg_mass < 0.0 || self.particle_mass < 0.0 {
            return Err(Error::InvalidModel("masses must be non-negative".into()));
        }
        if self.family == Family::Lamb && self.kg_mass != 0.0 {
            return Err(Error::InvalidModel("lamb family requires kg_mass = 0".into()));
        }
        if self.family != Family::Nlkg && self.external_amp != 0.0 {
            return Err(Error::InvalidModel("external potential is only supported for the nlkg family".into()));
        }
        if self.family == Family::Nlkg && self.particle_mass != 0.0 {
            return Err(Error::InvalidModel("particle_mass requires a point-coupled family".into()));
        }
        Ok(())
    }

    pub fn has_external(&self) -> bool {
        self.family == Family::Nlkg && self.external_amp != 0.0
    }

    pub fn external_at(&self, x: f64) -> f64 {
        if self.has_external() {
            -self.external_amp * (self.external_wavenumber * x).cos()
        } else {
            0.0
        }
    }

    /// Potential acting on every node (zero for point-coupled families).
    pub fn bulk_potential(&self) -> Option<&PolynomialPotential> {
        (self.family == Family::Nlkg && !self.potential.is_zero()).then_some(&self.potential)
    }

    pub fn point_potential(&self) -> Option<&PolynomialPotential> {
        self.family.is_point_coupled().then_some(&self.potential)
    }
}

/// Derivative of `v` with the origin node (when present) treated as an
/// interface: each side is differentiated separately, and the two one-sided
/// derivatives at `x = 0` are returned as `(left, right)`.
fn split_derivative(grid: &Grid1D, v: &[Complex64], split: bool) -> (Vec<Complex64>, Option<(Complex64, Complex64)>) {
    let dx = grid.dx();
    match grid.origin() {
        Some(o) if split && o >= 1 && o + 1 < v.len() => {
            let left = derivative(&v[..=o], dx);
            let right = derivative(&v[o..], dx);
            let mut d = left.clone();
            d.extend_from_slice(&right[1..]);
            (d, Some((left[o], right[0])))
        }
        _ => (derivative(v, dx), None),
    }
}

/// Trapezoid integral of `density(j)` where the squared gradient is split at
/// the origin, so that kinks at `x = 0` are integrated exactly to the stencil
/// order on both sides.
fn integrate_split<F>(grid: &Grid1D, density: F, origin_terms: Option<(f64, f64)>) -> f64
where
    F: Fn(usize) -> f64,
{
    let vals: Vec<f64> = (0..grid.len()).map(&density).collect();
    match (grid.origin(), origin_terms) {
        (Some(o), Some((l, r))) => {
            let mut left = vals[..=o].to_vec();
            left[o] = l;
            let mut right = vals[o..].to_vec();
            right[0] = r;
            trapezoid(&left, grid.dx()) + trapezoid(&right, grid.dx())
        }
        _ => trapezoid(&vals, grid.dx()),
    }
}

/// Total energy of `state` under `model`.
///
/// Bulk density `|pi|^2/2 + |psi'|^2/2 + m^2|psi|^2/2 + U(psi) + V|psi|^2/2`
/// integrated by the trapezoid rule with fourth-order centered derivatives;
/// point-coupled families add `U(psi(0)) + M|pi(0)|^2/2` instead of the bulk
/// `U`.
pub fn energy(state: &FieldState, model: &ModelSpec) -> Result<f64> {
    let grid = &state.grid;
    if state.psi.len() != grid.len() || state.pi.len() != grid.len() {
        return Err(Error::GridMismatch { expected: grid.len(), got: state.psi.len().min(state.pi.len()) });
    }
    let (d, sides) = split_derivative(grid, &state.psi, model.family.is_point_coupled());
    let m2 = model.kg_mass * model.kg_mass;
    let bulk = model.bulk_potential();
    let xs = grid.xs();
    let base = |j: usize| {
        let psi = state.psi[j];
        let s = psi.norm_sqr();
        let mut e = 0.5 * state.pi[j].norm_sqr() + 0.5 * m2 * s;
        if let Some(u) = bulk {
            e += u.u(s);
        }
        if model.has_external() {
            e += 0.5 * model.external_at(xs[j]) * s;
        }
        e
    };
    let density = |j: usize| base(j) + 0.5 * d[j].norm_sqr();
    let origin_terms = sides.map(|(l, r)| {
        let o = grid.origin().unwrap();
        (base(o) + 0.5 * l.norm_sqr(), base(o) + 0.5 * r.norm_sqr())
    });
    let mut e = integrate_split(grid, density, origin_terms);
    if let (Some(u), Some(o)) = (model.point_potential(), grid.origin()) {
        e += u.value(state.psi[o]) + 0.5 * model.particle_mass * state.pi[o].norm_sqr();
    }
    Ok(e)
}

/// Total momentum `-Re int conj(pi) psi' dx`.
pub fn momentum(state: &FieldState) -> f64 {
    let grid = &state.grid;
    let d = derivative(&state.psi, grid.dx());
    let density: Vec<f64> = (0..grid.len()).map(|j| -(state.pi[j].conj() * d[j]).re).collect();
    trapezoid(&density, grid.dx())
}

/// Value of the local energy seminorm of a difference of states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seminorm {
    pub value: f64,
    /// The requested radius exceeded the domain half-width and was clamped.
    pub clamped: bool,
}

/// `||psi'||_R + |psi(0)| + ||pi||_R` of `a - b`, using only nodes with
/// `|x| <= R`.
pub fn seminorm_dist(a: &FieldState, b: &FieldState, radius: f64) -> Result<Seminorm> {
    a.check_same_grid(b)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let grid = &a.grid;
    let half = grid.half_width();
    let clamped = radius > half;
    let r = radius.min(half);
    let (lo, hi) = grid.window(r);
    let dpsi: Vec<Complex64> = (lo..=hi).map(|j| a.psi[j] - b.psi[j]).collect();
    let dpi: Vec<f64> = (lo..=hi).map(|j| (a.pi[j] - b.pi[j]).norm_sqr()).collect();

    let dx = grid.dx();
    let grad_sq = match grid.origin() {
        Some(o) if o > lo && o < hi => {
            let k = o - lo;
            let l: Vec<f64> = derivative(&dpsi[..=k], dx).iter().map(|z| z.norm_sqr()).collect();
            let r: Vec<f64> = derivative(&dpsi[k..], dx).iter().map(|z| z.norm_sqr()).collect();
            trapezoid(&l, dx) + trapezoid(&r, dx)
        }
        _ => {
            let g: Vec<f64> = derivative(&dpsi, dx).iter().map(|z| z.norm_sqr()).collect();
            trapezoid(&g, dx)
        }
    };
    let at_zero = (value_at(grid, &a.psi, 0.0) - value_at(grid, &b.psi, 0.0)).norm();
    let value = grad_sq.max(0.0).sqrt() + at_zero + trapezoid(&dpi, dx).max(0.0).sqrt();
    Ok(Seminorm { value, clamped })
}

/// `sum_{R=1}^{R_max} 2^{-R} s_R / (1 + s_R)` with `R_max = floor(half-width)`.
pub fn metric_dist(a: &FieldState, b: &FieldState) -> Result<f64> {
    a.check_same_grid(b)?;
    let r_max = a.grid.half_width().floor() as u32;
    let mut total = 0.0;
    let mut weight = 1.0;
    for r in 1..=r_max {
        weight *= 0.5;
        let s = seminorm_dist(a, b, r as f64)?.value;
        total += weight * s / (1.0 + s);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn kink_state(half: f64, dx: f64, center: f64) -> FieldState {
        let grid = Grid1D::symmetric(half, dx).unwrap();
        FieldState::from_fn(grid, |x| c(((x - center) / 2f64.sqrt()).tanh()), |_| c(0.0))
    }

    #[test]
    fn grid_places_origin_on_a_node() {
        let g = Grid1D::new(-40.0, 40.0, 0.01).unwrap();
        assert_eq!(g.len(), 8001);
        let o = g.origin().unwrap();
        assert_eq!(g.x(o), 0.0);
        assert_eq!(g.x(o + 3), -g.x(o - 3));
        assert!(Grid1D::new(0.0, 1.0, 0.3).is_err());
    }

    #[test]
    fn force_examples() {
        let gl = PolynomialPotential::ginzburg_landau();
        assert_eq!(gl.force(c(1.0)), c(0.0));
        assert!((gl.force(c(0.5)).re - 0.375).abs() < 1e-15);
        let p = PolynomialPotential::two_term(1.0, 3, 0.61, 2).unwrap();
        assert!((p.force(c(1.0)).re - (-3.56)).abs() < 1e-12);
    }

    #[test]
    fn energy_of_zero_and_vacuum() {
        let grid = Grid1D::symmetric(10.0, 0.1).unwrap();
        let lamb = ModelSpec::lamb(PolynomialPotential::harmonic(1.0), 0.0);
        assert_eq!(energy(&FieldState::zeros(grid), &lamb).unwrap(), 0.0);
        let gl = ModelSpec::nlkg(PolynomialPotential::ginzburg_landau(), 0.0);
        let vac = FieldState::from_fn(grid, |_| c(1.0), |_| c(0.0));
        assert_eq!(energy(&vac, &gl).unwrap(), 0.0);
    }

    #[test]
    fn kink_energy_matches_closed_form() {
        let gl = ModelSpec::nlkg(PolynomialPotential::ginzburg_landau(), 0.0);
        let exact = 2.0 * 2f64.sqrt() / 3.0;
        let e = energy(&kink_state(40.0, 0.01, 0.0), &gl).unwrap();
        assert!((e - exact).abs() < 1e-6, "{e}");
    }

    #[test]
    fn kink_energy_converges_with_dx() {
        let gl = ModelSpec::nlkg(PolynomialPotential::ginzburg_landau(), 0.0);
        let exact = 2.0 * 2f64.sqrt() / 3.0;
        let err = |dx| (energy(&kink_state(40.0, dx, 0.0), &gl).unwrap() - exact).abs();
        let (coarse, fine) = (err(0.08), err(0.04));
        assert!(coarse / fine >= 3.5, "{coarse} {fine}");
    }

    #[test]
    fn energy_rejects_mismatched_lengths() {
        let grid = Grid1D::symmetric(1.0, 0.5).unwrap();
        let mut s = FieldState::zeros(grid);
        s.pi.pop();
        let m = ModelSpec::nlkg(PolynomialPotential::ginzburg_landau(), 0.0);
        assert!(matches!(energy(&s, &m), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn static_states_have_zero_momentum() {
        assert_eq!(momentum(&kink_state(20.0, 0.05, 1.0)), 0.0);
    }

    #[test]
    fn seminorm_is_local() {
        let grid = Grid1D::symmetric(20.0, 0.05).unwrap();
        let a = FieldState::from_fn(grid, |x| c((-x * x).exp()), |x| c(x.sin()));
        let b = FieldState::from_fn(
            grid,
            |x| c((-x * x).exp() + if x > 6.0 { (x - 6.0).powi(2) } else { 0.0 }),
            |x| c(x.sin() + if x < -6.0 { 1.0 } else { 0.0 }),
        );
        assert!(seminorm_dist(&a, &b, 5.0).unwrap().value < 1e-15);
        assert!(seminorm_dist(&a, &b, 8.0).unwrap().value > 0.1);
        assert_eq!(seminorm_dist(&a, &a, 3.0).unwrap().value, 0.0);
    }

    #[test]
    fn seminorm_flags_clamped_radius() {
        let grid = Grid1D::symmetric(4.0, 0.1).unwrap();
        let a = FieldState::zeros(grid);
        let s = seminorm_dist(&a, &a, 10.0).unwrap();
        assert!(s.clamped);
        assert!(!seminorm_dist(&a, &a, 2.0).unwrap().clamped);
    }

    #[test]
    fn seminorm_of_two_kinks_matches_direct_sum() {
        // Oracle: analytic derivatives summed with plain trapezoid weights.
        let a = kink_state(30.0, 0.01, 0.0);
        let b = kink_state(30.0, 0.01, 10.0);
        let s = seminorm_dist(&a, &b, 2.0).unwrap().value;
        let sech2 = |x: f64| 1.0 / (x / 2f64.sqrt()).cosh().powi(2) / 2f64.sqrt();
        let n = 400;
        let h = 4.0 / n as f64;
        let mut grad = 0.0;
        for k in 0..=n {
            let x = -2.0 + k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            grad += w * h * (sech2(x) - sech2(x - 10.0)).powi(2);
        }
        let at0 = (0.0 - (-10.0 / 2f64.sqrt()).tanh()).abs();
        let oracle = grad.sqrt() + at0;
        assert!((s - oracle).abs() < 1e-6, "{s} vs {oracle}");
    }

    #[test]
    fn metric_bounds_and_identity() {
        let a = kink_state(12.0, 0.05, 0.0);
        let b = kink_state(12.0, 0.05, 3.0);
        assert_eq!(metric_dist(&a, &a).unwrap(), 0.0);
        let d = metric_dist(&a, &b).unwrap();
        assert!(d > 0.0 && d < 1.0);
    }

    #[test]
    fn metric_truncation_tail_is_bounded() {
        let pad = |half: f64| {
            let grid = Grid1D::symmetric(half, 0.05).unwrap();
            let a = FieldState::from_fn(grid, |x| c((-x * x / 4.0).exp()), |_| c(0.0));
            let b = FieldState::from_fn(grid, |x| c(0.5 * (-x * x / 9.0).exp()), |x| c(0.1 * (-x * x).exp()));
            metric_dist(&a, &b).unwrap()
        };
        let (short, long) = (pad(12.0), pad(22.0));
        assert!((short - long).abs() < 2f64.powi(-12), "{short} {long}");
    }

    fn random_state(grid: Grid1D, seed: &[f64; 6]) -> FieldState {
        FieldState::from_fn(
            grid,
            |x| Complex64::new(seed[0] * (-(x - seed[1]).powi(2)).exp(), seed[2] * (x * seed[3]).sin()),
            |x| Complex64::new(seed[4] * (-x * x).exp(), seed[5] * (0.3 * x).cos()),
        )
    }

    proptest! {
        #[test]
        fn force_is_u1_equivariant(re in -3.0f64..3.0, im in -3.0f64..3.0, theta in 0.0f64..6.3) {
            let pot = PolynomialPotential::two_term(10.0, 6, 8.75, 5).unwrap();
            let psi = Complex64::new(re, im);
            let w = Complex64::from_polar(1.0, theta);
            let lhs = pot.force(psi * w);
            let rhs = pot.force(psi) * w;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn metric_axioms(s1 in prop::array::uniform6(-1.0f64..1.0),
                         s2 in prop::array::uniform6(-1.0f64..1.0),
                         s3 in prop::array::uniform6(-1.0f64..1.0)) {
            let grid = Grid1D::symmetric(6.0, 0.1).unwrap();
            let (a, b, c) = (random_state(grid, &s1), random_state(grid, &s2), random_state(grid, &s3));
            let ab = metric_dist(&a, &b).unwrap();
            prop_assert_eq!(ab, metric_dist(&b, &a).unwrap());
            let ac = metric_dist(&a, &c).unwrap();
            let cb = metric_dist(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }

        #[test]
        fn energy_and_momentum_are_translation_invariant(shift in 0usize..40, seed in prop::array::uniform6(-1.0f64..1.0)) {
            let grid = Grid1D::symmetric(30.0, 0.05).unwrap();
            let model = ModelSpec::nlkg(PolynomialPotential::ginzburg_landau(), 1.0);
            let base = FieldState::from_fn(
                grid,
                |x| Complex64::new(seed[0] * (-(x - seed[1]).powi(2)).exp(), seed[2] * (-(x * x) / 2.0).exp()),
                |x| Complex64::new(seed[4] * (-x * x).exp(), seed[5] * (-(x - 1.0).powi(2)).exp()),
            );
            let n = grid.len();
            let mut moved = base.clone();
            for j in 0..n {
                moved.psi[(j + shift) % n] = base.psi[j];
                moved.pi[(j + shift) % n] = base.pi[j];
            }
            let (e0, e1) = (energy(&base, &model).unwrap(), energy(&moved, &model).unwrap());
            prop_assert!((e0 - e1).abs() <= 1e-12 * (1.0 + e0.abs()));
            let (p0, p1) = (momentum(&base), momentum(&moved));
            prop_assert!((p0 - p1).abs() <= 1e-12 * (1.0 + p0.abs()));
        }
    }
}
