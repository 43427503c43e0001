//! Growth exponents of steady profiles: closed-form predictions, log-log fits on sampled tails,
//! phase-time limits along the trajectory, and the bounded-ω checks of the cigar regime.
//!
//! For ρ < 1/(2m) or ρ > 1/m
//!
//! ```text
//! ω ~ r^a,  |f| ~ r^b,  Vol(B_r) ~ r^(m a + 1),   a = (1-mρ)/(2-3mρ),  b = (2-4mρ)/(2-3mρ)
//! ```
//!
//! while ρ = 1/m gives bounded ω, quadratic f and linear volume growth.

use crate::integrator::Trajectory;
use crate::phase_system::{SolitonParams, SteadyRegime};
use crate::profile::RadialProfile;
use crate::scalar::Real;
use crate::warped_geometry;
use serde::Serialize;
use thiserror::Error;

/// Tolerance on the fitted ω exponent.
pub const OMEGA_TOL: f64 = 0.02;
/// Tolerance on the fitted f and volume exponents.
pub const GROWTH_TOL: f64 = 0.05;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;
/// Tail fractions of the sensitivity re-fits.
pub const SENSITIVITY_FRACTIONS: [f64; 2] = [0.15, 0.35];

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("rho = {rho}: {what}")]
    OutOfRegime { rho: f64, what: &'static str },
    #[error("nonpositive value {value} at r = {r} in the fitted tail")]
    NonpositiveData { r: f64, value: f64 },
    #[error("invalid request: {0}")]
    InvalidInput(String),
    #[error("tail too short: t reaches {t_end}, need at least {needed}")]
    TailTooShort { t_end: f64, needed: f64 },
}

impl AsymptoticsError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::OutOfRegime { .. } => "out_of_regime",
            Self::NonpositiveData { .. } => "nonpositive_data",
            Self::InvalidInput(_) => "invalid_input",
            Self::TailTooShort { .. } => "tail_too_short",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticRegime {
    PowerLaw,
    Cigar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticPrediction<T> {
    pub omega_exp: T,
    pub f_exp: T,
    pub vol_exp: T,
    pub regime: AsymptoticRegime,
}

fn out_of_regime<T: Real>(p: &SolitonParams<T>, what: &'static str) -> AsymptoticsError {
    AsymptoticsError::OutOfRegime { rho: p.rho.to_f64_lossy(), what }
}

/// Growth exponents of ω, |f| and the volume of geodesic balls about the tip.
pub fn predicted_exponents<T: Real>(p: &SolitonParams<T>) -> Result<AsymptoticPrediction<T>, AsymptoticsError> {
    if !p.is_steady() {
        return Err(out_of_regime(p, "predictions hold for steady solitons"));
    }
    if p.is_cigar() {
        return Ok(AsymptoticPrediction { omega_exp: T::zero(), f_exp: T::lit(2.0), vol_exp: T::one(), regime: AsymptoticRegime::Cigar });
    }
    if p.steady_regime() == SteadyRegime::Nonexistence {
        return Err(out_of_regime(p, "no steady soliton for 1/(2m) <= rho < 1/m"));
    }
    let m = p.m_real();
    let mr = m * p.rho;
    let den = T::lit(2.0) - T::lit(3.0) * mr;
    let a = (T::one() - mr) / den;
    let b = (T::lit(2.0) - T::lit(4.0) * mr) / den;
    Ok(AsymptoticPrediction { omega_exp: a, f_exp: b, vol_exp: m * a + T::one(), regime: AsymptoticRegime::PowerLaw })
}

/// The exponents as ρ → ±∞: `(1/3, 4/3, (n+2)/3)`.
pub fn formal_limit_exponents<T: Real>(n: u32) -> AsymptoticPrediction<T> {
    let three = T::lit(3.0);
    AsymptoticPrediction {
        omega_exp: T::one() / three,
        f_exp: T::lit(4.0) / three,
        vol_exp: T::int(n as i64 + 2) / three,
        regime: AsymptoticRegime::PowerLaw,
    }
}

/// Least-squares slope of `ln v` against `ln r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit<T> {
    pub exponent: T,
    pub stderr: T,
    pub samples: usize,
    /// First and last radius of the fitted tail.
    pub r_from: T,
    pub r_to: T,
}

/// Fits `v ~ r^k` over the last `tail_fraction` of the samples.
pub fn fit_exponent<T: Real>(r: &[T], v: &[T], tail_fraction: T) -> Result<ExponentFit<T>, AsymptoticsError> {
    if r.len() != v.len() {
        return Err(AsymptoticsError::InvalidInput("r and v differ in length".into()));
    }
    if !(tail_fraction > T::zero() && tail_fraction <= T::lit(0.5)) {
        return Err(AsymptoticsError::InvalidInput(format!("tail fraction {tail_fraction} outside (0, 0.5]")));
    }
    let count = (tail_fraction * T::int(r.len() as i64)).round().to_f64_lossy() as usize;
    if count < 3 {
        return Err(AsymptoticsError::InvalidInput(format!("tail holds {count} samples, need at least 3")));
    }
    let start = r.len() - count;
    let mut xs = Vec::with_capacity(count);
    let mut ys = Vec::with_capacity(count);
    for i in start..r.len() {
        if !(r[i] > T::zero() && v[i] > T::zero()) {
            return Err(AsymptoticsError::NonpositiveData { r: r[i].to_f64_lossy(), value: v[i].to_f64_lossy() });
        }
        xs.push(r[i].ln());
        ys.push(v[i].ln());
    }
    let nn = T::int(count as i64);
    let mx = xs.iter().fold(T::zero(), |a, b| a + *b) / nn;
    let my = ys.iter().fold(T::zero(), |a, b| a + *b) / nn;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for (x, y) in xs.iter().zip(&ys) {
        sxx = sxx + (*x - mx) * (*x - mx);
        sxy = sxy + (*x - mx) * (*y - my);
    }
    if sxx <= T::zero() {
        return Err(AsymptoticsError::InvalidInput("tail radii are all equal".into()));
    }
    let k = sxy / sxx;
    let c = my - k * mx;
    let ssr = xs.iter().zip(&ys).fold(T::zero(), |a, (x, y)| {
        let e = *y - (c + k * *x);
        a + e * e
    });
    let stderr = if count > 2 { (ssr / T::int(count as i64 - 2) / sxx).sqrt() } else { T::zero() };
    Ok(ExponentFit { exponent: k, stderr, samples: count, r_from: r[start], r_to: r[r.len() - 1] })
}

/// One fitted exponent against its prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentCheck<T> {
    pub predicted: T,
    pub fit: ExponentFit<T>,
    pub tolerance: T,
    pub pass: bool,
}

impl<T: Real> ExponentCheck<T> {
    fn new(predicted: T, fit: ExponentFit<T>, tolerance: T) -> Self {
        Self { predicted, fit, tolerance, pass: (fit.exponent - predicted).abs() < tolerance }
    }
}

/// Exponents re-fitted on a different tail fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sensitivity<T> {
    pub tail_fraction: T,
    pub omega: T,
    pub f: T,
    pub volume: T,
}

/// Fitted growth exponents of a profile compared with the predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport<T> {
    pub prediction: AsymptoticPrediction<T>,
    pub tail_fraction: T,
    pub omega: ExponentCheck<T>,
    pub f: ExponentCheck<T>,
    pub volume: ExponentCheck<T>,
    pub sensitivity: Vec<Sensitivity<T>>,
    pub pass: bool,
}

/// Tail series `(r, ω, |f - f(r_0)|, Vol)` of a profile, dropping the tip sample.
fn series<T: Real>(prof: &RadialProfile<T>) -> (Vec<T>, Vec<T>, Vec<T>, Vec<T>) {
    let vol = warped_geometry::ball_volume_profile(prof);
    let f0 = prof.f[0];
    let keep: Vec<usize> = (0..prof.len()).filter(|&i| prof.r[i] > prof.r[0]).collect();
    (
        keep.iter().map(|&i| prof.r[i]).collect(),
        keep.iter().map(|&i| prof.omega[i]).collect(),
        keep.iter().map(|&i| (prof.f[i] - f0).abs()).collect(),
        keep.iter().map(|&i| vol[i]).collect(),
    )
}

/// Fits the ω, f and volume exponents on the profile tail and compares them with
/// [`predicted_exponents`] at the module tolerances.
pub fn profile_exponents<T: Real>(prof: &RadialProfile<T>, tail_fraction: T) -> Result<ExponentReport<T>, AsymptoticsError> {
    let prediction = predicted_exponents(&prof.params)?;
    let (r, w, f, v) = series(prof);
    let fits = |tf: T| -> Result<[ExponentFit<T>; 3], AsymptoticsError> {
        Ok([fit_exponent(&r, &w, tf)?, fit_exponent(&r, &f, tf)?, fit_exponent(&r, &v, tf)?])
    };
    let [fw, ff, fv] = fits(tail_fraction)?;
    let omega = ExponentCheck::new(prediction.omega_exp, fw, T::lit(OMEGA_TOL));
    let f = ExponentCheck::new(prediction.f_exp, ff, T::lit(GROWTH_TOL));
    let volume = ExponentCheck::new(prediction.vol_exp, fv, T::lit(GROWTH_TOL));
    let mut sensitivity = Vec::new();
    for tf in SENSITIVITY_FRACTIONS {
        let tf = T::lit(tf);
        let [a, b, c] = fits(tf)?;
        sensitivity.push(Sensitivity { tail_fraction: tf, omega: a.exponent, f: b.exponent, volume: c.exponent });
    }
    let pass = omega.pass && f.pass && volume.pass;
    Ok(ExponentReport { prediction, tail_fraction, omega, f, volume, sensitivity, pass })
}

/// An estimated phase-time limit with its predicted value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimate<T> {
    pub estimate: T,
    pub predicted: T,
}

/// Tail behavior of `(x, y)` along a steady trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitDiagnostics<T> {
    pub regime: AsymptoticRegime,
    pub t_end: T,
    /// Slope of `y` over the last quarter of phase time (free of the arbitrary time origin).
    pub y_over_t: LimitEstimate<T>,
    /// Power-law regime: `Δt / Δ(1/x)` over the last quarter.
    pub t_x: Option<LimitEstimate<T>>,
    /// Power-law regime: `x y` at the last sample.
    pub x_y: Option<LimitEstimate<T>>,
    /// Cigar: `-d²(ln x)/dt²` at the last time where `x ≥ GAUSSIAN_X_FLOOR`, against `n - 2`.
    /// A positive limit means `x` decays like a Gaussian, faster than any power of `t`.
    pub gaussian_rate: Option<LimitEstimate<T>>,
}

/// Below this, `x` in a trajectory integrated with absolute tolerance ~1e-14 is mostly error.
pub const GAUSSIAN_X_FLOOR: f64 = 1e-6;

/// Minimum phase time required by [`limit_diagnostics`].
pub const MIN_TAIL_T: f64 = 20.0;

/// Estimates the limits of `y/t`, `t x` and `x y` (or the Gaussian decay of `x` for the cigar)
/// from a trajectory whose states start with `(x, y)` and whose time is phase time.
pub fn limit_diagnostics<T: Real, const N: usize>(
    traj: &Trajectory<T, N>,
    p: &SolitonParams<T>,
) -> Result<LimitDiagnostics<T>, AsymptoticsError> {
    if N < 2 {
        return Err(AsymptoticsError::InvalidInput("trajectory states need x and y".into()));
    }
    let prediction = predicted_exponents(p)?;
    let ts = traj.times();
    let us = traj.states();
    let t_end = traj.t_end();
    if ts.len() < 8 || t_end < T::lit(MIN_TAIL_T) {
        return Err(AsymptoticsError::TailTooShort { t_end: t_end.to_f64_lossy(), needed: MIN_TAIL_T });
    }
    let t0 = traj.t_start();
    let t_q = t_end - (t_end - t0) / T::lit(4.0);
    let k = ts.partition_point(|&t| t < t_q).min(ts.len() - 2);
    let last = ts.len() - 1;
    let n2 = p.n_real() - T::lit(2.0);
    let d = p.schouten_factor();
    let y_over_t = LimitEstimate { estimate: (us[last][1] - us[k][1]) / (ts[last] - ts[k]), predicted: n2 * d };
    let mut out = LimitDiagnostics { regime: prediction.regime, t_end, y_over_t, t_x: None, x_y: None, gaussian_rate: None };
    match prediction.regime {
        AsymptoticRegime::PowerLaw => {
            let mr = p.m_real() * p.rho;
            let (xk, xl) = (us[k][0], us[last][0]);
            out.t_x = Some(LimitEstimate {
                estimate: (ts[last] - ts[k]) / (T::one() / xl - T::one() / xk),
                predicted: (T::one() - mr) / d,
            });
            out.x_y = Some(LimitEstimate { estimate: xl * us[last][1], predicted: n2 * (T::one() - mr) });
        }
        AsymptoticRegime::Cigar => {
            let h = T::lit(0.25);
            let j = (0..ts.len()).rev().find(|&i| us[i][0] >= T::lit(GAUSSIAN_X_FLOOR) && ts[i] - h - h >= t0);
            if let Some(j) = j {
                let t = ts[j];
                let lx = |s: T| traj.dense_eval(s).map(|u| u[0].ln()).map_err(|e| AsymptoticsError::InvalidInput(e.to_string()));
                let d2 = (lx(t)? - T::lit(2.0) * lx(t - h)? + lx(t - h - h)?) / (h * h);
                out.gaussian_rate = Some(LimitEstimate { estimate: -d2, predicted: n2 });
            }
        }
    }
    Ok(out)
}

/// Bounded-ω, quadratic-f and linear-volume checks for the cigar value ρ = 1/m.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CigarReport<T> {
    pub tail_fraction: T,
    pub omega_tail_mean: T,
    /// `(max - min) / mean` of ω over the tail.
    pub omega_tail_oscillation: T,
    pub omega_flat: bool,
    pub f: ExponentCheck<T>,
    pub volume: ExponentCheck<T>,
    pub pass: bool,
}

/// Checks that ω stays flat within 1% over the tail and that f and the volume grow with
/// exponents 2 and 1.
pub fn cigar_checks<T: Real>(prof: &RadialProfile<T>, tail_fraction: T) -> Result<CigarReport<T>, AsymptoticsError> {
    let p = &prof.params;
    if !(p.is_steady() && p.is_cigar()) {
        return Err(out_of_regime(p, "cigar checks need lambda = 0, kappa = 1, rho = 1/m"));
    }
    let (r, w, f, v) = series(prof);
    let ff = fit_exponent(&r, &f, tail_fraction)?;
    let fv = fit_exponent(&r, &v, tail_fraction)?;
    let start = r.len() - ff.samples;
    let tail = &w[start..];
    let mean = tail.iter().fold(T::zero(), |a, b| a + *b) / T::int(tail.len() as i64);
    let hi = tail.iter().fold(T::neg_infinity(), |a, b| a.max(*b));
    let lo = tail.iter().fold(T::infinity(), |a, b| a.min(*b));
    let osc = (hi - lo) / mean;
    let omega_flat = osc < T::lit(0.01);
    let f = ExponentCheck::new(T::lit(2.0), ff, T::lit(GROWTH_TOL));
    let volume = ExponentCheck::new(T::one(), fv, T::lit(GROWTH_TOL));
    let pass = omega_flat && f.pass && volume.pass;
    Ok(CigarReport { tail_fraction, omega_tail_mean: mean, omega_tail_oscillation: osc, omega_flat, f, volume, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steady(n: u32, rho: f64) -> SolitonParams<f64> {
        SolitonParams::steady(n, rho).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn predictions() {
        let e = predicted_exponents(&steady(3, 0.0)).unwrap();
        assert!(close(e.omega_exp, 0.5, 1e-15) && close(e.f_exp, 1.0, 1e-15) && close(e.vol_exp, 2.0, 1e-15));
        let e = predicted_exponents(&steady(3, -1.0)).unwrap();
        assert!(close(e.omega_exp, 0.375, 1e-15) && close(e.f_exp, 1.25, 1e-15) && close(e.vol_exp, 1.75, 1e-15));
        let e = predicted_exponents(&steady(3, 0.5)).unwrap();
        assert_eq!((e.omega_exp, e.f_exp, e.vol_exp, e.regime), (0.0, 2.0, 1.0, AsymptoticRegime::Cigar));
        assert!(matches!(predicted_exponents(&steady(3, 0.3)), Err(AsymptoticsError::OutOfRegime { .. })));
        let l = formal_limit_exponents::<f64>(3);
        assert!(close(l.omega_exp, 1.0 / 3.0, 1e-15) && close(l.f_exp, 4.0 / 3.0, 1e-15) && close(l.vol_exp, 5.0 / 3.0, 1e-15));
    }

    #[test]
    fn predictions_approach_formal_limit() {
        for rho in [-1e6, 1e6] {
            let e = predicted_exponents(&steady(4, rho)).unwrap();
            let l = formal_limit_exponents::<f64>(4);
            assert!(close(e.omega_exp, l.omega_exp, 1e-5) && close(e.f_exp, l.f_exp, 1e-5) && close(e.vol_exp, l.vol_exp, 1e-5));
        }
    }

    #[test]
    fn synthetic_power_laws() {
        let r: Vec<f64> = (1..=200).map(|i| i as f64 * 0.5).collect();
        let fit = fit_exponent(&r, &r, 0.25).unwrap();
        assert!(close(fit.exponent, 1.0, 1e-12) && fit.stderr < 1e-12);
        let v: Vec<f64> = r.iter().map(|x| 2.0 * x.powf(0.375)).collect();
        assert!(close(fit_exponent(&r, &v, 0.5).unwrap().exponent, 0.375, 1e-10));
    }

    #[test]
    fn fit_rejects_bad_input() {
        let r = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let v = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0];
        assert!(matches!(fit_exponent(&r, &v, 0.5), Err(AsymptoticsError::NonpositiveData { .. })));
        assert!(matches!(fit_exponent(&r, &r, 0.6), Err(AsymptoticsError::InvalidInput(_))));
        assert!(matches!(fit_exponent(&r, &r, 0.1), Err(AsymptoticsError::InvalidInput(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn volume_exponent_identity(n in 3u32..9, rho in -5.0f64..5.0) {
                let p = steady(n, rho);
                if let Ok(e) = predicted_exponents(&p) {
                    prop_assert!((e.vol_exp - ((n - 1) as f64 * e.omega_exp + 1.0)).abs() < 1e-12);
                }
            }

            #[test]
            fn fit_is_scale_invariant(k in -2.0f64..3.0, c in 1e-3f64..1e3) {
                let r: Vec<f64> = (1..=64).map(|i| (i as f64).powf(1.5)).collect();
                let v: Vec<f64> = r.iter().map(|x| c * x.powf(k)).collect();
                prop_assert!((fit_exponent(&r, &v, 0.5).unwrap().exponent - k).abs() < 1e-10);
            }
        }
    }
}
