//! Pointwise geometry of `g = dr² + ω(r)² g_can` with `Ric_can = (m-1) κ g_can`.
//!
//! Ricci eigenvalues are `Ric_rr = -m ω''/ω` on the radial direction and
//! `Ric_sph = ((m-1)(κ - ω'²) - ω ω'') / ω²` on the fibers, so that
//! `R = -2m ω''/ω + m(m-1)(κ - ω'²)/ω²`.

use crate::fd;
use crate::phase_system::SolitonParams;
use crate::profile::RadialProfile;
use crate::scalar::Real;
use serde::Serialize;
use thiserror::Error;

/// Samples with `ω` below this value are treated as the tip, where the formulas are 0/0.
pub const TIP_OMEGA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("no sample with omega above the tip threshold")]
    TipSingular,
    #[error("every sample lies on a critical level (f' = 0)")]
    CriticalLevel,
    #[error("radius {r} outside the profile range [{start}, {end}]")]
    OutOfRange { r: f64, start: f64, end: f64 },
    #[error("profile has too few regular samples ({0}) for this check")]
    TooFewSamples(usize),
}

/// Curvature quantities at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample<T> {
    pub index: usize,
    pub r: T,
    /// Scalar curvature.
    #[serde(rename = "R")]
    pub scalar: T,
    pub ric_rr: T,
    pub ric_sph: T,
    pub k_rad: T,
    pub k_sph: T,
    /// Mean curvature `m ω'/ω` of the level `{r = const}`.
    #[serde(rename = "H")]
    pub mean_curvature: T,
    /// Scalar curvature of the level with its induced metric.
    pub r_sigma: T,
    pub residual_1: T,
    pub residual_2: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport<T> {
    pub samples: Vec<CurvatureSample<T>>,
    /// Indices skipped because `ω` is below the tip threshold.
    pub tip_samples: Vec<usize>,
}

/// Radial Ricci eigenvalue `-m ω''/ω`.
pub fn ric_rr<T: Real>(p: &SolitonParams<T>, w: T, wpp: T) -> T {
    -p.m_real() * wpp / w
}

/// Fiber Ricci eigenvalue `((m-1)(κ - ω'²) - ω ω'')/ω²`.
pub fn ric_sph<T: Real>(p: &SolitonParams<T>, w: T, wp: T, wpp: T) -> T {
    ((p.m_real() - T::one()) * (p.kappa_real() - wp * wp) - w * wpp) / (w * w)
}

/// Scalar curvature `-2m ω''/ω + m(m-1)(κ - ω'²)/ω²`.
pub fn scalar_curvature<T: Real>(p: &SolitonParams<T>, w: T, wp: T, wpp: T) -> T {
    let m = p.m_real();
    let two = T::lit(2.0);
    -two * m * wpp / w + m * (m - T::one()) * (p.kappa_real() - wp * wp) / (w * w)
}

/// The two reduced soliton equations `(res1, res2)` at one sample.
pub fn residuals<T: Real>(p: &SolitonParams<T>, w: T, wp: T, wpp: T, fp: T, fpp: T) -> ([T; 5], [T; 5]) {
    let m = p.m_real();
    let one = T::one();
    let rho = p.rho;
    let lam = p.lambda;
    let k = p.kappa_real();
    let t1 = [
        fpp * w * w,
        -(m - T::lit(2.0) * m * rho) * w * wpp,
        m * (m - one) * rho * wp * wp,
        -lam * w * w,
        -m * (m - one) * rho * k,
    ];
    let c1 = (m - one) * (one - m * rho);
    let t2 = [fp * w * wp, -p.schouten_factor() * w * wpp, -c1 * wp * wp, -lam * w * w, c1 * k];
    (t1, t2)
}

fn sum5<T: Real>(t: &[T; 5]) -> T {
    t.iter().fold(T::zero(), |a, b| a + *b)
}

fn max_abs<T: Real>(t: &[T]) -> T {
    t.iter().fold(T::zero(), |a, b| a.max(b.abs()))
}

/// `|lhs - rhs|` relative to the largest constituent term (absolute when all terms vanish).
fn relative<T: Real>(dev: T, terms: &[T]) -> T {
    let s = max_abs(terms);
    if s > T::zero() {
        dev.abs() / s
    } else {
        dev.abs()
    }
}

fn regular_indices<T: Real>(prof: &RadialProfile<T>) -> Vec<usize> {
    (0..prof.len()).filter(|&i| prof.omega[i] >= T::lit(TIP_OMEGA)).collect()
}

/// All curvature quantities at every sample away from the tip.
pub fn curvature<T: Real>(prof: &RadialProfile<T>) -> Result<CurvatureReport<T>, GeometryError> {
    let p = &prof.params;
    let fpp = prof.f_pp_values();
    let m = p.m_real();
    let mut samples = Vec::new();
    let mut tip_samples = Vec::new();
    for i in 0..prof.len() {
        let (w, wp, wpp) = (prof.omega[i], prof.omega_p[i], prof.omega_pp[i]);
        if w < T::lit(TIP_OMEGA) {
            tip_samples.push(i);
            continue;
        }
        let (t1, t2) = residuals(p, w, wp, wpp, prof.f_p[i], fpp[i]);
        samples.push(CurvatureSample {
            index: i,
            r: prof.r[i],
            scalar: scalar_curvature(p, w, wp, wpp),
            ric_rr: ric_rr(p, w, wpp),
            ric_sph: ric_sph(p, w, wp, wpp),
            k_rad: -wpp / w,
            k_sph: (p.kappa_real() - wp * wp) / (w * w),
            mean_curvature: m * wp / w,
            r_sigma: m * (m - T::one()) * p.kappa_real() / (w * w),
            residual_1: sum5(&t1),
            residual_2: sum5(&t2),
        });
    }
    if samples.is_empty() {
        return Err(GeometryError::TipSingular);
    }
    Ok(CurvatureReport { samples, tip_samples })
}

/// `f''` and `Δf = f'' + m (ω'/ω) f'` at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HessianSample<T> {
    pub index: usize,
    pub r: T,
    pub f_pp: T,
    pub laplacian: T,
}

/// Radial Hessian eigenvalue `f''` and Laplacian of the potential away from the tip.
pub fn hessian_laplacian<T: Real>(prof: &RadialProfile<T>) -> Result<Vec<HessianSample<T>>, GeometryError> {
    let fpp = prof.f_pp_values();
    let m = prof.params.m_real();
    let out: Vec<_> = regular_indices(prof)
        .into_iter()
        .map(|i| HessianSample {
            index: i,
            r: prof.r[i],
            f_pp: fpp[i],
            laplacian: fpp[i] + m * prof.omega_p[i] / prof.omega[i] * prof.f_p[i],
        })
        .collect();
    if out.is_empty() {
        return Err(GeometryError::TipSingular);
    }
    Ok(out)
}

/// Residuals of the reduced soliton system with their sup norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport<T> {
    pub res1: Vec<T>,
    pub res2: Vec<T>,
    /// Per-sample residuals divided by the largest term of either equation at that sample. The two
    /// equations are the radial and spherical components of one tensor equation; in the far tail of
    /// a steady profile the radial component can be many orders smaller than the spherical one.
    pub rel1: Vec<T>,
    pub rel2: Vec<T>,
    pub sup_rel: T,
    /// Sample index of the largest relative residual.
    pub worst_index: usize,
    /// Indices of the evaluated samples (tip samples are skipped).
    pub indices: Vec<usize>,
}

impl<T: Real> ResidualReport<T> {
    pub fn passes(&self, tol: T) -> bool {
        self.sup_rel < tol
    }
}

/// Both reduced soliton equations evaluated at every sample away from the tip.
pub fn soliton_residual<T: Real>(prof: &RadialProfile<T>) -> ResidualReport<T> {
    let p = &prof.params;
    let fpp = prof.f_pp_values();
    let mut rep = ResidualReport {
        res1: Vec::new(),
        res2: Vec::new(),
        rel1: Vec::new(),
        rel2: Vec::new(),
        sup_rel: T::zero(),
        worst_index: 0,
        indices: Vec::new(),
    };
    for i in regular_indices(prof) {
        let (t1, t2) = residuals(p, prof.omega[i], prof.omega_p[i], prof.omega_pp[i], prof.f_p[i], fpp[i]);
        let (a, b) = (sum5(&t1), sum5(&t2));
        let scale = max_abs(&t1).max(max_abs(&t2));
        let (ra, rb) = (relative(a, &[scale]), relative(b, &[scale]));
        let worst = ra.max(rb);
        if worst > rep.sup_rel || worst.is_nan() {
            rep.sup_rel = worst;
            rep.worst_index = i;
        }
        rep.res1.push(a);
        rep.res2.push(b);
        rep.rel1.push(ra);
        rep.rel2.push(rb);
        rep.indices.push(i);
    }
    rep
}

/// Sup deviations of the radial forms of the trace, divergence and Laplacian identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport<T> {
    /// `Δf = (nρ - 1) R + nλ`.
    pub equ1_sup: T,
    /// `(1 - 2mρ) R' = 2 Ric_rr f'`.
    pub equ2_sup: T,
    /// `(1 - 2mρ) ΔR = R' f' + 2(ρ R² - |Ric|² + λ R)`.
    pub equ3_sup: T,
    /// Sup of `|Ric_rr f'|` for the Schouten value ρ = 1/(2m), where the divergence identity forces it to vanish.
    pub schouten_ric_grad_f_sup: Option<T>,
    pub samples_checked: usize,
    /// Radius of the worst sample for each identity.
    pub worst_r: [T; 3],
}

impl<T: Real> IdentityReport<T> {
    pub fn max_deviation(&self) -> T {
        self.equ1_sup.max(self.equ2_sup).max(self.equ3_sup)
    }
}

/// Evaluates the radial forms of the three soliton identities; derivatives of `R` use
/// finite differences over the regular samples.
///
/// Deviations are relative to the largest term of each identity, with the natural magnitudes
/// `|1-2mρ| |R| / (r - r_0)` of `R'` and `|1-2mρ| |R| / (r - r_0)² + R²` of the `ΔR` balance added
/// to the term lists, so that identities whose terms all vanish (cylinders) are not judged on
/// rounding noise alone.
pub fn identity_checks<T: Real>(prof: &RadialProfile<T>) -> Result<IdentityReport<T>, GeometryError> {
    let p = &prof.params;
    let idx = regular_indices(prof);
    if idx.len() < 7 {
        return Err(GeometryError::TooFewSamples(idx.len()));
    }
    let m = p.m_real();
    let n = p.n_real();
    let two = T::lit(2.0);
    let d = p.schouten_factor();
    let fpp_all = prof.f_pp_values();
    let r: Vec<T> = idx.iter().map(|&i| prof.r[i]).collect();
    let scal: Vec<T> = idx.iter().map(|&i| scalar_curvature(p, prof.omega[i], prof.omega_p[i], prof.omega_pp[i])).collect();
    let dr = fd::derivative(&r, &scal, 1, 5);
    let ddr = fd::derivative(&r, &scal, 2, 7);

    let mut rep = IdentityReport {
        equ1_sup: T::zero(),
        equ2_sup: T::zero(),
        equ3_sup: T::zero(),
        schouten_ric_grad_f_sup: if p.is_schouten() { Some(T::zero()) } else { None },
        samples_checked: idx.len(),
        worst_r: [T::zero(); 3],
    };
    let mut sups = [T::zero(); 3];
    for (k, &i) in idx.iter().enumerate() {
        let (w, wp, wpp, fp) = (prof.omega[i], prof.omega_p[i], prof.omega_pp[i], prof.f_p[i]);
        let fpp = fpp_all[i];
        let rr = ric_rr(p, w, wpp);
        let rs = ric_sph(p, w, wp, wpp);
        let sc = scal[k];

        let lap_terms = [fpp, m * wp / w * fp];
        let rhs1 = [(n * p.rho - T::one()) * sc, n * p.lambda];
        let dev1 = lap_terms[0] + lap_terms[1] - rhs1[0] - rhs1[1];
        let e1 = relative(dev1, &[lap_terms[0], lap_terms[1], rhs1[0], rhs1[1]]);

        let dist = prof.r[i] - prof.r[0];
        let nat1 = if dist > T::zero() { (d * sc).abs() / dist } else { T::infinity() };
        let nat2 = if dist > T::zero() { (d * sc).abs() / (dist * dist) + sc * sc } else { T::infinity() };
        let l2 = d * dr[k];
        let r2 = two * rr * fp;
        let e2 = relative(l2 - r2, &[l2, r2, nat1]);

        let ric2 = rr * rr + m * rs * rs;
        let t3 = [
            d * ddr[k],
            d * m * wp / w * dr[k],
            -dr[k] * fp,
            -two * p.rho * sc * sc,
            two * ric2,
            -two * p.lambda * sc,
        ];
        let dev3 = t3.iter().fold(T::zero(), |a, b| a + *b);
        let e3 = relative(dev3, &[t3[0], t3[1], t3[2], t3[3], t3[4], t3[5], nat2]);
        for (j, e) in [e1, e2, e3].into_iter().enumerate() {
            if e > sups[j] || e.is_nan() {
                sups[j] = e;
                rep.worst_r[j] = prof.r[i];
            }
        }

        if let Some(s) = rep.schouten_ric_grad_f_sup.as_mut() {
            *s = s.max((rr * fp).abs());
        }
    }
    [rep.equ1_sup, rep.equ2_sup, rep.equ3_sup] = sups;
    Ok(rep)
}

/// Level-set quantities at one regular sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSetSample<T> {
    pub index: usize,
    pub r: T,
    /// `|h|² = m (ω'/ω)²` from the warped form.
    pub h_norm2: T,
    /// `|h|² = -H' - R_rr` with `H'` from the carried `ω''`.
    pub h_norm2_riccati: T,
    #[serde(rename = "H")]
    pub mean_curvature: T,
    pub r_sigma_gauss: T,
    pub r_sigma_direct: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetReport<T> {
    pub samples: Vec<LevelSetSample<T>>,
    /// Indices skipped because `f' = 0` there (or the sample is at the tip).
    pub critical_samples: Vec<usize>,
    /// Sup of `|R^Σ_gauss - R^Σ_direct| / (1 + |R^Σ_direct|)`.
    pub gauss_sup: T,
    /// Same comparison with `H'` taken by finite differences of `H`.
    pub gauss_fd_sup: T,
}

/// Second fundamental form, mean curvature and induced scalar curvature of the levels of `f`,
/// computed directly and through the Riccati and Gauss equations.
pub fn level_set_geometry<T: Real>(prof: &RadialProfile<T>) -> Result<LevelSetReport<T>, GeometryError> {
    let p = &prof.params;
    let m = p.m_real();
    let two = T::lit(2.0);
    let mut critical = Vec::new();
    let mut idx = Vec::new();
    for i in 0..prof.len() {
        if prof.omega[i] < T::lit(TIP_OMEGA) || prof.f_p[i] == T::zero() {
            critical.push(i);
        } else {
            idx.push(i);
        }
    }
    if idx.is_empty() {
        return Err(GeometryError::CriticalLevel);
    }
    let r: Vec<T> = idx.iter().map(|&i| prof.r[i]).collect();
    let hs: Vec<T> = idx.iter().map(|&i| m * prof.omega_p[i] / prof.omega[i]).collect();
    let dh_fd = if idx.len() >= 5 { fd::derivative(&r, &hs, 1, 5) } else { vec![T::nan(); idx.len()] };

    let mut rep = LevelSetReport { samples: Vec::new(), critical_samples: critical, gauss_sup: T::zero(), gauss_fd_sup: T::zero() };
    for (k, &i) in idx.iter().enumerate() {
        let (w, wp, wpp) = (prof.omega[i], prof.omega_p[i], prof.omega_pp[i]);
        let h = hs[k];
        let rr = ric_rr(p, w, wpp);
        let sc = scalar_curvature(p, w, wp, wpp);
        let dh = m * (wpp / w - wp * wp / (w * w));
        let h2_ric = -dh - rr;
        let gauss = sc - two * rr - h2_ric + h * h;
        let direct = m * (m - T::one()) * p.kappa_real() / (w * w);
        rep.gauss_sup = rep.gauss_sup.max((gauss - direct).abs() / (T::one() + direct.abs()));
        let gauss_fd = sc - two * rr - (-dh_fd[k] - rr) + h * h;
        rep.gauss_fd_sup = rep.gauss_fd_sup.max((gauss_fd - direct).abs() / (T::one() + direct.abs()));
        rep.samples.push(LevelSetSample {
            index: i,
            r: prof.r[i],
            h_norm2: m * (wp / w) * (wp / w),
            h_norm2_riccati: h2_ric,
            mean_curvature: h,
            r_sigma_gauss: gauss,
            r_sigma_direct: direct,
        });
    }
    Ok(rep)
}

/// Area of the unit `k`-sphere, `2 π^{(k+1)/2} / Γ((k+1)/2)`.
pub fn unit_sphere_area<T: Real>(k: u32) -> T {
    let pi = T::PI();
    let j = k + 1;
    // Γ(j/2) by the recurrence Γ(a + 1) = a Γ(a), tracking twice the argument.
    let (mut gamma, mut twice_arg) = if j % 2 == 0 { (T::one(), 2u32) } else { (pi.sqrt(), 1u32) };
    while twice_arg < j {
        gamma = gamma * T::int(twice_arg as i64) / T::lit(2.0);
        twice_arg += 2;
    }
    T::lit(2.0) * pi.powf(T::int(j as i64) / T::lit(2.0)) / gamma
}

/// Cumulative `|S^m| ∫_{r_0}^{r_i} ω^m ds` at every sample, using the cubic Hermite
/// interpolant of `(ω, ω')` on each interval and 4-point Gauss–Legendre quadrature.
pub fn ball_volume_profile<T: Real>(prof: &RadialProfile<T>) -> Vec<T> {
    let m = prof.params.m;
    let area = unit_sphere_area::<T>(m);
    let mut out = Vec::with_capacity(prof.len());
    let mut acc = T::zero();
    out.push(acc);
    for i in 1..prof.len() {
        acc = acc + segment_integral(prof, i - 1, prof.r[i], m);
        out.push(acc);
    }
    out.into_iter().map(|v| v * area).collect()
}

/// Volume of the ball of radius `r` about the start of the profile grid.
pub fn ball_volume<T: Real>(prof: &RadialProfile<T>, r: T) -> Result<T, GeometryError> {
    let (a, b) = (prof.r[0], *prof.r.last().expect("nonempty profile"));
    if !(r >= a && r <= b) {
        return Err(GeometryError::OutOfRange { r: r.to_f64_lossy(), start: a.to_f64_lossy(), end: b.to_f64_lossy() });
    }
    let m = prof.params.m;
    let mut acc = T::zero();
    for i in 1..prof.len() {
        if prof.r[i] <= r {
            acc = acc + segment_integral(prof, i - 1, prof.r[i], m);
        } else {
            if prof.r[i - 1] < r {
                acc = acc + segment_integral(prof, i - 1, r, m);
            }
            break;
        }
    }
    Ok(acc * unit_sphere_area::<T>(m))
}

/// `∫_{r_i}^{upper} ω^m ds` over part of the interval `[r_i, r_{i+1}]`.
fn segment_integral<T: Real>(prof: &RadialProfile<T>, i: usize, upper: T, m: u32) -> T {
    let (a, b) = (prof.r[i], prof.r[i + 1]);
    let h = b - a;
    let (w0, w1) = (prof.omega[i], prof.omega[i + 1]);
    let (d0, d1) = (prof.omega_p[i] * h, prof.omega_p[i + 1] * h);
    let hermite = |s: T| {
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        (two * s3 - three * s2 + T::one()) * w0 + (s3 - two * s2 + s) * d0 + (-two * s3 + three * s2) * w1 + (s3 - s2) * d1
    };
    let nodes = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    let weights = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let lo = a;
    let hi = upper;
    let half = (hi - lo) / T::lit(2.0);
    let mid = (hi + lo) / T::lit(2.0);
    let mut acc = T::zero();
    for k in 0..4 {
        let s = mid + half * T::lit(nodes[k]);
        acc = acc + T::lit(weights[k]) * hermite((s - a) / h).powi(m as i32);
    }
    acc * half
}

/// Scalar curvature at the first grid point, extrapolated quadratically from the first
/// three samples away from the tip.
pub fn tip_scalar_curvature<T: Real>(prof: &RadialProfile<T>) -> Result<T, GeometryError> {
    let idx = regular_indices(prof);
    if idx.len() < 3 {
        return Err(GeometryError::TooFewSamples(idx.len()));
    }
    let p = &prof.params;
    let xs: Vec<T> = idx[..3].iter().map(|&i| prof.r[i]).collect();
    let vs: Vec<T> = idx[..3].iter().map(|&i| scalar_curvature(p, prof.omega[i], prof.omega_p[i], prof.omega_pp[i])).collect();
    let w = fd::fornberg_weights(prof.r[0], &xs, 0);
    Ok(w[0].iter().zip(&vs).fold(T::zero(), |a, (x, y)| a + *x * *y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Normalization;

    fn profile_from(n: u32, lambda: f64, kappa: i8, r: Vec<f64>, w: impl Fn(f64) -> [f64; 3], f: impl Fn(f64) -> [f64; 3]) -> RadialProfile<f64> {
        let ws: Vec<[f64; 3]> = r.iter().map(|&s| w(s)).collect();
        let fs: Vec<[f64; 3]> = r.iter().map(|&s| f(s)).collect();
        RadialProfile {
            params: SolitonParams::new(n, 0.0, lambda, kappa).unwrap(),
            omega: ws.iter().map(|v| v[0]).collect(),
            omega_p: ws.iter().map(|v| v[1]).collect(),
            omega_pp: ws.iter().map(|v| v[2]).collect(),
            f: fs.iter().map(|v| v[0]).collect(),
            f_p: fs.iter().map(|v| v[1]).collect(),
            f_pp: Some(fs.iter().map(|v| v[2]).collect()),
            r,
            normalization: Normalization::Raw,
        }
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn round_cylinder_curvatures() {
        let w0 = 0.8;
        let p = profile_from(4, 0.0, 1, grid(0.0, 3.0, 11), |_| [w0, 0.0, 0.0], |_| [0.0; 3]);
        for s in curvature(&p).unwrap().samples {
            assert_eq!(s.k_rad, 0.0);
            assert!((s.k_sph - 1.0 / (w0 * w0)).abs() < 1e-14);
            assert!((s.scalar - 6.0 / (w0 * w0)).abs() < 1e-13);
            assert_eq!(s.mean_curvature, 0.0);
        }
    }

    #[test]
    fn flat_cone_and_sphere() {
        let p = profile_from(3, 0.0, 1, grid(0.0, 2.0, 21), |s| [s, 1.0, 0.0], |_| [0.0; 3]);
        let rep = curvature(&p).unwrap();
        assert_eq!(rep.tip_samples, vec![0]);
        for s in rep.samples {
            assert_eq!((s.k_rad, s.k_sph, s.scalar), (0.0, 0.0, 0.0));
        }
        let q = std::f64::consts::FRAC_PI_4;
        let sph = profile_from(3, 0.0, 1, vec![0.5, q, 1.0, 1.2, 1.4], |s| [s.sin(), s.cos(), -s.sin()], |_| [0.0; 3]);
        let s = curvature(&sph).unwrap().samples[1];
        assert!((s.k_rad - 1.0).abs() < 1e-15 && (s.k_sph - 1.0).abs() < 1e-15);
        assert!((s.scalar - 6.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_curvature_is_ricci_trace() {
        let p = profile_from(5, 0.0, 1, grid(0.1, 2.0, 40), |s| [s.sin() + 0.1 * s * s, s.cos() + 0.2 * s, -s.sin() + 0.2], |_| [0.0; 3]);
        for s in curvature(&p).unwrap().samples {
            let trace = s.ric_rr + 4.0 * s.ric_sph;
            assert!((trace - s.scalar).abs() <= 1e-10 * s.scalar.abs().max(1.0));
        }
    }

    #[test]
    fn homothety_scales_curvatures() {
        let p = profile_from(3, 0.0, 1, grid(0.2, 2.0, 30), |s| [s.sin(), s.cos(), -s.sin()], |s| [s * s, 2.0 * s, 2.0]);
        let c = 2.0;
        let a = curvature(&p).unwrap();
        let b = curvature(&p.scaled(c)).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((y.scalar - x.scalar / (c * c)).abs() < 1e-13);
            assert!((y.k_rad - x.k_rad / (c * c)).abs() < 1e-13);
            assert!((y.k_sph - x.k_sph / (c * c)).abs() < 1e-13);
            assert!((y.mean_curvature - x.mean_curvature / c).abs() < 1e-13);
        }
    }

    #[test]
    fn hessian_examples() {
        let p = profile_from(3, 0.0, 1, grid(0.0, 2.0, 21), |s| [s, 1.0, 0.0], |_| [4.0, 0.0, 0.0]);
        assert!(hessian_laplacian(&p).unwrap().iter().all(|h| h.f_pp == 0.0 && h.laplacian == 0.0));
        let lam = 0.7;
        let p = profile_from(3, lam, 1, grid(0.0, 2.0, 21), |s| [s, 1.0, 0.0], |s| [lam * s * s / 2.0, lam * s, lam]);
        for h in hessian_laplacian(&p).unwrap() {
            assert!((h.laplacian - 3.0 * lam).abs() < 1e-14);
        }
    }

    #[test]
    fn level_sets_direct_quantities() {
        let w0 = 1.3;
        let p = profile_from(3, 0.0, 1, grid(0.0, 2.0, 21), |_| [w0, 0.0, 0.0], |s| [s * s, 2.0 * s, 2.0]);
        let rep = level_set_geometry(&p).unwrap();
        assert_eq!(rep.critical_samples, vec![0]);
        let sc = curvature(&p).unwrap().samples[0].scalar;
        for s in &rep.samples {
            assert_eq!(s.mean_curvature, 0.0);
            assert_eq!(s.h_norm2, 0.0);
            assert!((s.r_sigma_direct - 2.0 / (w0 * w0)).abs() < 1e-15);
            assert!((s.r_sigma_gauss - sc).abs() < 1e-14);
        }
        let flat = profile_from(3, 0.0, 1, grid(0.0, 2.0, 21), |_| [1.0, 0.0, 0.0], |_| [1.0, 0.0, 0.0]);
        assert_eq!(level_set_geometry(&flat), Err(GeometryError::CriticalLevel));
    }

    #[test]
    fn gauss_route_matches_direct_on_generic_profile() {
        let p = profile_from(4, 0.0, 1, grid(0.5, 3.0, 300), |s| [s.sin() + s, s.cos() + 1.0, -s.sin()], |s| [s.exp(), s.exp(), s.exp()]);
        let rep = level_set_geometry(&p).unwrap();
        assert!(rep.gauss_sup < 1e-12);
        assert!(rep.gauss_fd_sup < 1e-5, "{}", rep.gauss_fd_sup);
    }

    #[test]
    fn volumes() {
        let p = profile_from(3, 0.0, 1, grid(0.0, 2.0, 21), |s| [s, 1.0, 0.0], |_| [0.0; 3]);
        for r in [0.0, 0.35, 1.0, 2.0] {
            let v = ball_volume(&p, r).unwrap();
            assert!((v - 4.0 * std::f64::consts::PI / 3.0 * r * r * r).abs() < 1e-13);
        }
        let w0 = 0.6;
        let c = profile_from(3, 0.0, 1, grid(0.0, 5.0, 11), |_| [w0, 0.0, 0.0], |_| [0.0; 3]);
        let cum = ball_volume_profile(&c);
        for (r, v) in c.r.iter().zip(&cum) {
            assert!((v - 4.0 * std::f64::consts::PI * w0 * w0 * r).abs() < 1e-13);
        }
        assert!(matches!(ball_volume(&c, 6.0), Err(GeometryError::OutOfRange { .. })));
        assert!((unit_sphere_area::<f64>(1) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_sphere_area::<f64>(3) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-13);
    }

    #[test]
    fn tip_extrapolation_on_sphere() {
        // ω = sin r on S³ has R = 6 everywhere.
        let p = profile_from(3, 0.0, 1, grid(0.0, 0.5, 51), |s| [s.sin(), s.cos(), -s.sin()], |_| [0.0; 3]);
        assert!((tip_scalar_curvature(&p).unwrap() - 6.0).abs() < 1e-8);
    }
}
