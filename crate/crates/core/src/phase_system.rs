//! Soliton ODE vector fields, equilibria, nullclines and the scalar phase-plane ODEs.
//!
//! Variables: `x = ω'`, `y = -ω f'`, phase time `t` with `dt = dr / ω`. With `m = n - 1`
//! the first-order system reads
//!
//! ```text
//! (1-2mρ) ẋ = c1 (κ - x²) - x y - λ ω²
//! (1-2mρ) ẏ = -c2 (κ - x²) + c3 x y + (m-1) λ ω²
//!         ω̇ = x ω
//! ```
//!
//! with `c1 = (m-1)(1-mρ)`, `c2 = m(m-1)(1-(m+1)ρ)`, `c3 = 1+m-4mρ`.

use crate::scalar::Real;
use serde::Serialize;
use thiserror::Error;

/// Relative tolerance used to decide whether ρ sits exactly on a regime boundary.
const BOUNDARY_TOL: f64 = 1e-12;

/// Errors raised by the phase-system operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("rho = 1/(2m) is the Schouten value; the first-order system is singular there")]
    SchoutenSingular,
    #[error("steady field requested with lambda = {lambda} (kappa = {kappa})")]
    NotSteady { lambda: f64, kappa: i8 },
    #[error("denominator of the scalar ODE vanishes at x = {x}, y = {y}")]
    DenominatorZero { x: f64, y: f64 },
    #[error("operation not defined for rho = {rho} in this regime: {what}")]
    OutOfRegime { rho: f64, what: &'static str },
}

/// Dimension, ρ, λ and fiber curvature sign of a warped-product soliton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolitonParams<T> {
    /// Manifold dimension, at least 3.
    pub n: u32,
    /// Fiber dimension `n - 1`.
    pub m: u32,
    pub rho: T,
    pub lambda: T,
    /// Sign of the fiber curvature: -1, 0 or 1.
    pub kappa: i8,
}

/// Steady regimes of the shooting construction, split by ρ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyRegime {
    /// ρ < 1/(2m): trajectories leave P into y > 0.
    Case1,
    /// 1/(2m) ≤ ρ < 1/m: no complete noncompact steady soliton with positive curvature.
    Nonexistence,
    /// ρ ≥ 1/m: trajectories leave P into y < 0 (z = -y > 0).
    Case2,
}

impl<T: Real> SolitonParams<T> {
    pub fn new(n: u32, rho: T, lambda: T, kappa: i8) -> Result<Self, PhaseError> {
        if n < 3 {
            return Err(PhaseError::InvalidParameters(format!("dimension n = {n} must be at least 3")));
        }
        if !(-1..=1).contains(&kappa) {
            return Err(PhaseError::InvalidParameters(format!("kappa = {kappa} must be -1, 0 or 1")));
        }
        if !rho.is_finite() || !lambda.is_finite() {
            return Err(PhaseError::InvalidParameters("rho and lambda must be finite".into()));
        }
        Ok(Self { n, m: n - 1, rho, lambda, kappa })
    }

    /// Steady (λ = 0) parameters with spherical fibers (κ = 1).
    pub fn steady(n: u32, rho: T) -> Result<Self, PhaseError> {
        Self::new(n, rho, T::zero(), 1)
    }

    pub fn m_real(&self) -> T {
        T::int(self.m as i64)
    }

    pub fn n_real(&self) -> T {
        T::int(self.n as i64)
    }

    pub fn kappa_real(&self) -> T {
        T::int(self.kappa as i64)
    }

    /// `(m-1)(1-mρ)`.
    pub fn c1(&self) -> T {
        let m = self.m_real();
        (m - T::one()) * (T::one() - m * self.rho)
    }

    /// `m(m-1)(1-(m+1)ρ)`.
    pub fn c2(&self) -> T {
        let m = self.m_real();
        m * (m - T::one()) * (T::one() - (m + T::one()) * self.rho)
    }

    /// `1+m-4mρ`.
    pub fn c3(&self) -> T {
        let m = self.m_real();
        T::one() + m - T::lit(4.0) * m * self.rho
    }

    /// `1-2mρ`, the factor multiplying the derivatives in the first-order system.
    pub fn schouten_factor(&self) -> T {
        T::one() - T::lit(2.0) * self.m_real() * self.rho
    }

    /// `mρ` compared with `target` up to the boundary tolerance.
    fn m_rho_near(&self, target: f64) -> bool {
        let mr = (self.m_real() * self.rho).to_f64_lossy();
        (mr - target).abs() <= BOUNDARY_TOL * target.abs().max(1.0)
    }

    /// ρ = 1/(2m).
    pub fn is_schouten(&self) -> bool {
        self.m_rho_near(0.5)
    }

    /// ρ = 1/m, the cigar-type value.
    pub fn is_cigar(&self) -> bool {
        self.m_rho_near(1.0)
    }

    /// ρ = 1/n, where the unstable direction at P lies in y = 0.
    pub fn is_traceless(&self) -> bool {
        let nr = (self.n_real() * self.rho).to_f64_lossy();
        (nr - 1.0).abs() <= BOUNDARY_TOL
    }

    pub fn is_steady(&self) -> bool {
        self.lambda == T::zero() && self.kappa == 1
    }

    pub fn steady_regime(&self) -> SteadyRegime {
        let mr = (self.m_real() * self.rho).to_f64_lossy();
        if self.is_cigar() || mr > 1.0 {
            SteadyRegime::Case2
        } else if self.is_schouten() || mr > 0.5 {
            SteadyRegime::Nonexistence
        } else {
            SteadyRegime::Case1
        }
    }

    fn require_regular(&self) -> Result<(), PhaseError> {
        if self.is_schouten() {
            Err(PhaseError::SchoutenSingular)
        } else {
            Ok(())
        }
    }

    fn require_steady(&self) -> Result<(), PhaseError> {
        if self.is_steady() {
            Ok(())
        } else {
            Err(PhaseError::NotSteady { lambda: self.lambda.to_f64_lossy(), kappa: self.kappa })
        }
    }
}

/// A point of the first-order system at phase time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState<T> {
    /// `ω'`.
    pub x: T,
    /// `-ω f'`.
    pub y: T,
    pub omega: T,
    pub t: T,
}

impl<T: Real> PhaseState<T> {
    pub fn new(x: T, y: T, omega: T) -> Self {
        Self { x, y, omega, t: T::zero() }
    }
}

/// Right-hand side `(ẋ, ẏ, ω̇)` of the first-order system.
pub fn vector_field<T: Real>(p: &SolitonParams<T>, s: &PhaseState<T>) -> Result<[T; 3], PhaseError> {
    p.require_regular()?;
    Ok(field_unchecked(p, s.x, s.y, s.omega))
}

/// The first-order system restricted to λ = 0, κ = 1, where `(x, y)` decouples from ω.
pub fn steady_vector_field<T: Real>(p: &SolitonParams<T>, s: &PhaseState<T>) -> Result<[T; 3], PhaseError> {
    p.require_regular()?;
    p.require_steady()?;
    let [dx, dy] = steady_xy_field(p, s.x, s.y);
    Ok([dx, dy, s.x * s.omega])
}

/// Evaluates the full field without regime checks; callers guarantee `1-2mρ ≠ 0`.
pub(crate) fn field_unchecked<T: Real>(p: &SolitonParams<T>, x: T, y: T, omega: T) -> [T; 3] {
    let d = p.schouten_factor();
    let q = if p.kappa == 1 { (T::one() - x) * (T::one() + x) } else { p.kappa_real() - x * x };
    let lw2 = p.lambda * omega * omega;
    let dx = (p.c1() * q - x * y - lw2) / d;
    let dy = (-p.c2() * q + p.c3() * x * y + (p.m_real() - T::one()) * lw2) / d;
    [dx, dy, x * omega]
}

/// `(ẋ, ẏ)` of the decoupled steady subsystem; callers guarantee `1-2mρ ≠ 0`.
pub(crate) fn steady_xy_field<T: Real>(p: &SolitonParams<T>, x: T, y: T) -> [T; 2] {
    let d = p.schouten_factor();
    let q = (T::one() - x) * (T::one() + x);
    [(p.c1() * q - x * y) / d, (-p.c2() * q + p.c3() * x * y) / d]
}

fn checked_ratio<T: Real>(num: T, den: T, scale: T, x: T, y: T) -> Result<T, PhaseError> {
    if den == T::zero() || den.abs() <= T::lit(8.0) * T::epsilon() * scale || !den.is_finite() {
        return Err(PhaseError::DenominatorZero { x: x.to_f64_lossy(), y: y.to_f64_lossy() });
    }
    Ok(num / den)
}

/// `dx/dy` along a steady trajectory viewed as a graph `x = x(y)`.
pub fn scalar_field_f<T: Real>(p: &SolitonParams<T>, x: T, y: T) -> Result<T, PhaseError> {
    let q = (T::one() - x) * (T::one() + x);
    let num = p.c1() * q - x * y;
    let a = -p.c2() * q;
    let b = p.c3() * x * y;
    checked_ratio(num, a + b, a.abs() + b.abs(), x, y)
}

/// `dx/dz` along a steady trajectory viewed as a graph `x = x(z)` with `z = -y`.
pub fn scalar_field_g<T: Real>(p: &SolitonParams<T>, x: T, z: T) -> Result<T, PhaseError> {
    let q = (T::one() - x) * (T::one() + x);
    let num = p.c1() * q + x * z;
    let a = p.c2() * q;
    let b = p.c3() * x * z;
    checked_ratio(num, a + b, a.abs() + b.abs(), x, -z)
}

/// The x-nullcline of [`scalar_field_f`] for ρ < 1/m: the root of `c1(1-x²) = x y` in (0, 1].
pub fn nullcline_h<T: Real>(p: &SolitonParams<T>, y: T) -> Result<T, PhaseError> {
    let c1 = p.c1();
    if p.is_cigar() || c1 <= T::zero() {
        return Err(PhaseError::OutOfRegime { rho: p.rho.to_f64_lossy(), what: "nullcline h needs rho < 1/m" });
    }
    let two = T::lit(2.0);
    Ok(two * c1 / (y + (y * y + T::lit(4.0) * c1 * c1).sqrt()))
}

/// The x-nullcline of [`scalar_field_g`] for ρ ≥ 1/m: the root of `c1(1-x²) + x z = 0` in (0, 1],
/// with `k(z) = 0` for `z > 0` and `k(0) = 1` when ρ = 1/m.
pub fn nullcline_k<T: Real>(p: &SolitonParams<T>, z: T) -> Result<T, PhaseError> {
    if p.is_cigar() {
        return Ok(if z > T::zero() { T::zero() } else { T::one() });
    }
    let c1 = p.c1();
    if c1 >= T::zero() {
        return Err(PhaseError::OutOfRegime { rho: p.rho.to_f64_lossy(), what: "nullcline k needs rho >= 1/m" });
    }
    let a = c1.abs();
    let two = T::lit(2.0);
    Ok(two * a / (z + (z * z + T::lit(4.0) * a * a).sqrt()))
}

/// A connected set of states on which the first-order system vanishes, or a related invariant set.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Equilibrium<T> {
    /// An isolated zero of the field.
    Point { x: T, y: T, omega: T },
    /// Every `(x, y, ω)` with the given `x`, `ω` and arbitrary `y` is a zero (κ = 0, ω = 0).
    YLine { x: T, omega: T },
    /// Every state with `x = 0` and `ω > 0` is a zero (λ = 0, κ = 0).
    XZeroPlane,
    /// States `(0, y, ω0)`: `ẋ = ω̇ = 0` for every `y`, while `ẏ` is a nonzero constant.
    /// These carry the cylinder solutions; they are invariant lines rather than zeros.
    CylinderDrift { omega: T, dy: T },
}

/// Closed-form zero set of the first-order system with `ω ≥ 0`.
///
/// For λ = 0, κ = 1 this is exactly `{P, Q}`. Other `(λ, κ)` follow from the case split
/// `ω = 0` (where the `(κ - x², xy)` system has determinant `(m-1)(1-2mρ)² > 0`) versus
/// `x = 0, ω > 0`; the latter admits zeros only for λ = κ = 0.
pub fn equilibria<T: Real>(p: &SolitonParams<T>) -> Result<Vec<Equilibrium<T>>, PhaseError> {
    p.require_regular()?;
    let zero = T::zero();
    let mut out = Vec::new();
    match p.kappa {
        1 => {
            out.push(Equilibrium::Point { x: T::one(), y: zero, omega: zero });
            out.push(Equilibrium::Point { x: -T::one(), y: zero, omega: zero });
        }
        0 => out.push(Equilibrium::YLine { x: zero, omega: zero }),
        _ => {}
    }
    if p.kappa == 0 && p.lambda == zero {
        out.push(Equilibrium::XZeroPlane);
    }
    if p.lambda != zero && p.kappa != 0 {
        let w2 = p.c1() * p.kappa_real() / p.lambda;
        if w2 > zero {
            let omega = w2.sqrt();
            let [_, dy, _] = field_unchecked(p, zero, zero, omega);
            out.push(Equilibrium::CylinderDrift { omega, dy });
        }
    }
    Ok(out)
}

/// Linearization of the steady `(x, y)` subsystem at P = (1, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleData<T> {
    /// Jacobian entries `[[a, b], [c, d]]`.
    pub jacobian: [[T; 2]; 2],
    pub unstable_eigenvalue: T,
    pub stable_eigenvalue: T,
    /// Unit unstable eigenvector with negative x-component (pointing into x < 1).
    pub unstable_direction: [T; 2],
}

/// Eigen-analysis of the 2×2 Jacobian of the steady subsystem at P.
///
/// The Jacobian has determinant `-2(m-1) < 0`, so P is always a saddle.
pub fn saddle_at_p<T: Real>(p: &SolitonParams<T>) -> Result<SaddleData<T>, PhaseError> {
    p.require_regular()?;
    p.require_steady()?;
    let d = p.schouten_factor();
    let two = T::lit(2.0);
    let a = -two * p.c1() / d;
    let b = -T::one() / d;
    let c = two * p.c2() / d;
    let e = p.c3() / d;
    let tr = a + e;
    let det = a * e - b * c;
    let disc = (tr * tr - T::lit(4.0) * det).sqrt();
    let mu_u = (tr + disc) / two;
    let mu_s = (tr - disc) / two;
    // Two candidate eigenvectors; the one with larger norm is better conditioned.
    let v1 = [b, mu_u - a];
    let v2 = [mu_u - e, c];
    let n1 = v1[0].hypot(v1[1]);
    let n2 = v2[0].hypot(v2[1]);
    let (mut v, nv) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    v = [v[0] / nv, v[1] / nv];
    if v[0] > T::zero() || (v[0] == T::zero() && v[1] < T::zero()) {
        v = [-v[0], -v[1]];
    }
    // The y-component vanishes exactly when c2 does (ρ = 1/n).
    if p.is_traceless() {
        v = [-T::one(), T::zero()];
    }
    Ok(SaddleData { jacobian: [[a, b], [c, e]], unstable_eigenvalue: mu_u, stable_eigenvalue: mu_s, unstable_direction: v })
}
