//! Closed-form warped solutions: cylinders `ω ≡ ω0`, flat Gaussian-type solitons, and the local
//! shrinking Schouten solutions in dimension three.

use crate::phase_system::SolitonParams;
use crate::profile::{Normalization, RadialProfile};
use crate::scalar::Real;
use crate::warped_geometry::{scalar_curvature, TIP_OMEGA};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("gradient inequality needs a shrinking soliton (lambda > 0), got lambda = {0}")]
    NotShrinking(f64),
    #[error("gradient inequality needs the Schouten value rho = 1/(2(n-1)), got rho = {0}")]
    NotSchouten(f64),
    #[error("potential is not gauged to f(0) = 0 (f(0) = {0})")]
    GaugeViolation(f64),
}

/// One admissible cylinder `ω ≡ ω0` with `f = c r² + a0 r + b0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylinderSolution<T> {
    pub kappa: i8,
    pub omega0_sq: T,
    /// Quadratic coefficient `c` of the potential.
    pub f_coefficient: T,
    /// Flat branch `λ = 0, κ = 0` (linear potential).
    pub trivial: bool,
    /// `ω0` is a free parameter (ρ = 1/m or the trivial branch); `omega0_sq` is the representative used.
    pub omega0_free: bool,
    pub geometry: &'static str,
}

fn geometry_name(kappa: i8) -> &'static str {
    match kappa {
        1 => "round_cylinder",
        -1 => "hyperbolic_cylinder",
        _ => "flat_product",
    }
}

/// Cylinders with representative `ω0 = 1` for the branches where `ω0` is free.
pub fn cylinder_solutions<T: Real>(n: u32, rho: T, lambda: T) -> Result<Vec<CylinderSolution<T>>, ExactError> {
    cylinder_solutions_with(n, rho, lambda, T::one())
}

/// All cylinders `ω ≡ ω0` solving the reduced system for `(n, ρ, λ)`.
///
/// The second reduced equation gives `λ ω0² = (m-1)(1-mρ) κ`, the first `f'' = λ + m(m-1)ρκ/ω0²`.
/// `omega0_free` is the radius used where the equations leave it undetermined.
pub fn cylinder_solutions_with<T: Real>(n: u32, rho: T, lambda: T, omega0_free: T) -> Result<Vec<CylinderSolution<T>>, ExactError> {
    let p = SolitonParams::new(n, rho, lambda, 1).map_err(|e| ExactError::InvalidParameters(e.to_string()))?;
    if !(omega0_free > T::zero()) {
        return Err(ExactError::InvalidParameters("free cylinder radius must be positive".into()));
    }
    let m = p.m_real();
    let n_r = p.n_real();
    let one = T::one();
    let two = T::lit(2.0);
    let w2free = omega0_free * omega0_free;
    let mut out = Vec::new();
    if p.is_cigar() {
        if lambda == T::zero() {
            for kappa in [1i8, 0, -1] {
                let k = T::int(kappa as i64);
                out.push(CylinderSolution {
                    kappa,
                    omega0_sq: w2free,
                    f_coefficient: (n_r - two) * k / (two * w2free),
                    trivial: kappa == 0,
                    omega0_free: true,
                    geometry: geometry_name(kappa),
                });
            }
        }
        return Ok(out);
    }
    let c1 = (n_r - two) * (one - m * rho);
    if lambda == T::zero() {
        out.push(CylinderSolution {
            kappa: 0,
            omega0_sq: w2free,
            f_coefficient: T::zero(),
            trivial: true,
            omega0_free: true,
            geometry: geometry_name(0),
        });
        return Ok(out);
    }
    // λ ω0² = c1 κ with ω0² > 0 fixes the sign of κ.
    let kappa: i8 = if c1 / lambda > T::zero() { 1 } else { -1 };
    let w2 = c1 * T::int(kappa as i64) / lambda;
    out.push(CylinderSolution {
        kappa,
        omega0_sq: w2,
        f_coefficient: lambda / (two * (one - m * rho)),
        trivial: false,
        omega0_free: false,
        geometry: geometry_name(kappa),
    });
    Ok(out)
}

fn uniform_grid<T: Real>(r_max: T, samples: usize) -> Vec<T> {
    let last = T::int(samples as i64 - 1);
    (0..samples).map(|i| r_max * T::int(i as i64) / last).collect()
}

fn check_grid<T: Real>(r_max: T, samples: usize) -> Result<(), ExactError> {
    if samples < 5 || !(r_max > T::zero()) {
        return Err(ExactError::InvalidParameters("need r_max > 0 and at least 5 samples".into()));
    }
    Ok(())
}

impl<T: Real> CylinderSolution<T> {
    /// Samples the cylinder on `[0, r_max]` with `f = c r² + a0 r + b0`.
    pub fn profile(&self, n: u32, rho: T, lambda: T, a0: T, b0: T, r_max: T, samples: usize) -> Result<RadialProfile<T>, ExactError> {
        check_grid(r_max, samples)?;
        let params = SolitonParams::new(n, rho, lambda, self.kappa).map_err(|e| ExactError::InvalidParameters(e.to_string()))?;
        let r = uniform_grid(r_max, samples);
        let w0 = self.omega0_sq.sqrt();
        let c = self.f_coefficient;
        let two = T::lit(2.0);
        Ok(RadialProfile {
            params,
            omega: vec![w0; samples],
            omega_p: vec![T::zero(); samples],
            omega_pp: vec![T::zero(); samples],
            f: r.iter().map(|&s| c * s * s + a0 * s + b0).collect(),
            f_p: r.iter().map(|&s| two * c * s + a0).collect(),
            f_pp: Some(vec![two * c; samples]),
            r,
            normalization: Normalization::Raw,
        })
    }
}

/// Flat `ℝⁿ` soliton with `f = λ r²/2 + a0 r`.
///
/// The second reduced equation forces `f' = λ ω`, so `a0 ≠ 0` places the origin of `r` on the
/// sphere `ω = a0/λ` instead of the tip: `ω = r + a0/λ`.
pub fn flat_gaussian<T: Real>(n: u32, rho: T, lambda: T, a0: T, r_max: T, samples: usize) -> Result<RadialProfile<T>, ExactError> {
    check_grid(r_max, samples)?;
    let params = SolitonParams::new(n, rho, lambda, 1).map_err(|e| ExactError::InvalidParameters(e.to_string()))?;
    let shift = if lambda == T::zero() {
        if a0 != T::zero() {
            return Err(ExactError::InvalidParameters("a steady flat soliton has constant potential (a0 must be 0)".into()));
        }
        T::zero()
    } else {
        a0 / lambda
    };
    if shift < T::zero() {
        return Err(ExactError::InvalidParameters("a0/lambda must be nonnegative so that omega > 0".into()));
    }
    let r = uniform_grid(r_max, samples);
    let half = T::lit(0.5);
    Ok(RadialProfile {
        params,
        omega: r.iter().map(|&s| s + shift).collect(),
        omega_p: vec![T::one(); samples],
        omega_pp: vec![T::zero(); samples],
        f: r.iter().map(|&s| half * lambda * s * s + a0 * s).collect(),
        f_p: r.iter().map(|&s| lambda * s + a0).collect(),
        f_pp: Some(vec![lambda; samples]),
        r,
        normalization: Normalization::Raw,
    })
}

/// Parameters of the local shrinking Schouten solution `ω = a(r - r0) + b` in dimension three.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchoutenLocal<T> {
    pub a: T,
    pub b: T,
    pub lambda: T,
    pub r0: T,
    /// Linear coefficient of `f` for `a = 0`.
    pub c: T,
    /// Constant of `f` for `a = 0`.
    pub d: T,
    /// Constant of `f` for `a ≠ 0`.
    pub e: T,
}

impl<T: Real> SchoutenLocal<T> {
    pub fn new(a: T, b: T, lambda: T) -> Self {
        Self { a, b, lambda, r0: T::zero(), c: T::zero(), d: T::zero(), e: T::zero() }
    }
}

/// The local shrinking Schouten solutions (n = 3, ρ = 1/4), sampled on `[0, r_max]`.
///
/// `a = 0` is the cylinder `ℝ × S²` with `f = λ(r - r0)² + c(r - r0) + d`, which requires
/// `2λ b² = 1`; `a = 1` is flat `ℝ³` with `f = (λ/2)(r - r0)² + λ b (r - r0) + e`.
pub fn schouten_shrinker_local<T: Real>(s: &SchoutenLocal<T>, r_max: T, samples: usize) -> Result<RadialProfile<T>, ExactError> {
    check_grid(r_max, samples)?;
    if s.a < T::zero() || !(s.b > T::zero()) {
        return Err(ExactError::InvalidParameters("need a >= 0 and b > 0".into()));
    }
    if !(s.lambda > T::zero()) {
        return Err(ExactError::InvalidParameters("shrinking solutions need lambda > 0".into()));
    }
    let params = SolitonParams::new(3, T::lit(0.25), s.lambda, 1).map_err(|e| ExactError::InvalidParameters(e.to_string()))?;
    let r = uniform_grid(r_max, samples);
    let two = T::lit(2.0);
    let lam = s.lambda;
    if s.a == T::zero() {
        let defect = two * lam * s.b * s.b - T::one();
        if defect.abs() > T::lit(1e-12) {
            return Err(ExactError::InvalidParameters("the a = 0 solution needs 2 lambda b^2 = 1".into()));
        }
        return Ok(RadialProfile {
            params,
            omega: vec![s.b; samples],
            omega_p: vec![T::zero(); samples],
            omega_pp: vec![T::zero(); samples],
            f: r.iter().map(|&x| lam * (x - s.r0) * (x - s.r0) + s.c * (x - s.r0) + s.d).collect(),
            f_p: r.iter().map(|&x| two * lam * (x - s.r0) + s.c).collect(),
            f_pp: Some(vec![two * lam; samples]),
            r,
            normalization: Normalization::Raw,
        });
    }
    if s.a != T::one() {
        return Err(ExactError::InvalidParameters("with a != 0 the metric is flat, which forces a = 1".into()));
    }
    let omega: Vec<T> = r.iter().map(|&x| (x - s.r0) + s.b).collect();
    if omega.iter().any(|w| *w < T::lit(TIP_OMEGA)) {
        return Err(ExactError::InvalidParameters("omega must stay positive on [0, r_max]".into()));
    }
    let half = T::lit(0.5);
    Ok(RadialProfile {
        params,
        f: r.iter().map(|&x| half * lam * (x - s.r0) * (x - s.r0) + lam * s.b * (x - s.r0) + s.e).collect(),
        f_p: r.iter().map(|&x| lam * ((x - s.r0) + s.b)).collect(),
        f_pp: Some(vec![lam; samples]),
        omega,
        omega_p: vec![T::one(); samples],
        omega_pp: vec![T::zero(); samples],
        r,
        normalization: Normalization::Raw,
    })
}

/// Pointwise margins of `2λ f + f'(0)² ≤ f'² ≤ a f + f'(0)²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientInequalityReport<T> {
    pub a: T,
    /// `min (f'² - 2λ f - f'(0)²)`.
    pub lower_margin: T,
    /// `min (a f + f'(0)² - f'²)`.
    pub upper_margin: T,
    /// `min (a - 2λ - R/2)` over the samples away from the tip.
    pub sufficient_margin: T,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub sufficient_holds: bool,
}

/// The constant `a = 3λ + max R` used when none is supplied; it keeps `a - 2λ - R/2 ≥ λ > 0`.
pub fn default_gradient_constant<T: Real>(prof: &RadialProfile<T>) -> T {
    let p = &prof.params;
    let max_r = (0..prof.len())
        .filter(|&i| prof.omega[i] >= T::lit(TIP_OMEGA))
        .map(|i| scalar_curvature(p, prof.omega[i], prof.omega_p[i], prof.omega_pp[i]))
        .fold(T::zero(), |a, b| a.max(b));
    T::lit(3.0) * p.lambda + max_r
}

/// Checks the gradient inequality of shrinking Schouten solitons on every sample.
pub fn gradient_inequality_check<T: Real>(prof: &RadialProfile<T>, a: Option<T>) -> Result<GradientInequalityReport<T>, ExactError> {
    let p = &prof.params;
    if !(p.lambda > T::zero()) {
        return Err(ExactError::NotShrinking(p.lambda.to_f64_lossy()));
    }
    if !p.is_schouten() {
        return Err(ExactError::NotSchouten(p.rho.to_f64_lossy()));
    }
    let scale = prof.f.iter().fold(T::one(), |s, v| s.max(v.abs()));
    if prof.f[0].abs() > T::lit(1e-14) * scale {
        return Err(ExactError::GaugeViolation(prof.f[0].to_f64_lossy()));
    }
    let a = a.unwrap_or_else(|| default_gradient_constant(prof));
    let two = T::lit(2.0);
    let fp0 = prof.f_p[0] * prof.f_p[0];
    let mut lower = T::infinity();
    let mut upper = T::infinity();
    let mut suff = T::infinity();
    let mut mag = T::zero();
    for i in 0..prof.len() {
        let g = prof.f_p[i] * prof.f_p[i];
        let lo = two * p.lambda * prof.f[i] + fp0;
        let hi = a * prof.f[i] + fp0;
        mag = mag.max(g).max(lo.abs()).max(hi.abs());
        lower = lower.min(g - lo);
        upper = upper.min(hi - g);
        if prof.omega[i] >= T::lit(TIP_OMEGA) {
            let sc = scalar_curvature(p, prof.omega[i], prof.omega_p[i], prof.omega_pp[i]);
            suff = suff.min(a - two * p.lambda - sc / two);
        }
    }
    let tol = T::lit(1e-12) * (T::one() + mag);
    Ok(GradientInequalityReport {
        a,
        lower_margin: lower,
        upper_margin: upper,
        sufficient_margin: suff,
        lower_holds: lower >= -tol,
        upper_holds: upper >= -tol,
        sufficient_holds: suff > T::zero(),
    })
}
