//! Steady solitons from the ε-family construction.
//!
//! In the regime ρ < 1/(2m) the trajectory leaving P is the limit of the solutions of
//! `dx/dy = F(x, y)` with `x(0) = 1 + ε`; for ρ ≥ 1/m it is the limit of `dx/dz = G(x, z)`
//! with `x(0) = 1 - ε` and `z = -y`. The limit curve is turned back into a profile `ω(r), f(r)`
//! by quadrature in the same variable, joined to a short phase-time integration that resolves
//! the tip.

use crate::integrator::{integrate, Direction, EventSpec, IntegrateError, IntegrationConfig, Trajectory};
use crate::phase_system::{self, PhaseError, SolitonParams, SteadyRegime};
use crate::profile::{Normalization, RadialProfile};
use crate::scalar::Real;
use crate::warped_geometry::{self, GeometryError};
use serde::Serialize;
use thiserror::Error;

/// Default ε-ladder.
pub const DEFAULT_LADDER: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

#[derive(Debug, Error)]
pub enum ShootingError {
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error("rho = {rho}: {what}")]
    OutOfRegime { rho: f64, what: &'static str },
    #[error("invalid request: {0}")]
    InvalidInput(String),
    #[error("integration failed ({kind}): {message}")]
    Integrator { kind: &'static str, message: String },
    #[error("epsilon family not converged at {} grid points, worst gap {worst_gap:e}", points.len())]
    NotConverged { points: Vec<f64>, worst_gap: f64 },
    #[error("ordering invariant violated at {count} grid points, worst excess {worst:e}")]
    OrderingViolated { count: usize, worst: f64 },
    #[error("tip anchoring failed: fitted r* = {r_star:e}, slope {slope}")]
    AnchoringFailed { r_star: f64, slope: f64 },
    #[error("tip scalar curvature {0} is not positive")]
    NonpositiveTipCurvature(f64),
    #[error("x = 0 not reached within t span {0}; enlarge the span")]
    NoEventWithinSpan(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl ShootingError {
    /// Short machine-readable name of the failure.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Phase(_) => "invalid_parameters",
            Self::OutOfRegime { .. } => "out_of_regime",
            Self::InvalidInput(_) => "invalid_input",
            Self::Integrator { .. } => "integrator",
            Self::NotConverged { .. } => "not_converged",
            Self::OrderingViolated { .. } => "ordering_violated",
            Self::AnchoringFailed { .. } => "anchoring_failed",
            Self::NonpositiveTipCurvature(_) => "nonpositive_tip_curvature",
            Self::NoEventWithinSpan(_) => "no_event_within_span",
            Self::Geometry(_) => "geometry",
        }
    }
}

fn integ_err<T: Real, const N: usize>(e: IntegrateError<T, N>) -> ShootingError {
    ShootingError::Integrator { kind: e.kind(), message: e.to_string() }
}

/// Which scalar ODE carries the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyCase {
    /// ρ < 1/(2m): `dx/dy = F`, `x(0) = 1 + ε`.
    Case1,
    /// ρ ≥ 1/m: `dx/dz = G`, `x(0) = 1 - ε`.
    Case2,
}

/// Classifies steady parameters; the nonexistence regime is rejected.
pub fn family_case<T: Real>(p: &SolitonParams<T>) -> Result<FamilyCase, ShootingError> {
    if !p.is_steady() {
        return Err(ShootingError::OutOfRegime { rho: p.rho.to_f64_lossy(), what: "construction needs lambda = 0, kappa = 1" });
    }
    match p.steady_regime() {
        SteadyRegime::Case1 => Ok(FamilyCase::Case1),
        SteadyRegime::Case2 => Ok(FamilyCase::Case2),
        SteadyRegime::Nonexistence => {
            Err(ShootingError::OutOfRegime { rho: p.rho.to_f64_lossy(), what: "no steady soliton for 1/(2m) <= rho < 1/m" })
        }
    }
}

/// Span of the y (or z) variable used by default: `1000 (n-2) |1-2mρ|`, which puts the
/// trajectory at phase time of order 10³.
pub fn default_span<T: Real>(p: &SolitonParams<T>) -> T {
    T::lit(1000.0) * (p.n_real() - T::lit(2.0)) * p.schouten_factor().abs()
}

/// The scalar ODE in the variable `s` (= y or z). For the cigar value the unknown is `ln x`,
/// since `x` decays like a Gaussian in phase time and would otherwise underflow into sign noise.
#[derive(Debug, Clone, Copy)]
struct ScalarOde<T> {
    p: SolitonParams<T>,
    case: FamilyCase,
    log_form: bool,
}

impl<T: Real> ScalarOde<T> {
    fn new(p: &SolitonParams<T>) -> Result<Self, ShootingError> {
        let case = family_case(p)?;
        Ok(Self { p: *p, case, log_form: p.is_cigar() })
    }

    fn x_of(&self, v: T) -> T {
        if self.log_form {
            flush(v.exp())
        } else {
            v
        }
    }

    fn v_of(&self, x: T) -> T {
        if self.log_form {
            x.ln()
        } else {
            x
        }
    }

    /// `y` as a function of the family variable.
    fn y_of(&self, s: T) -> T {
        match self.case {
            FamilyCase::Case1 => s,
            FamilyCase::Case2 => -s,
        }
    }

    /// Denominator `D ds/dt`, so that `dt/ds = D / den`.
    fn den(&self, x: T, s: T) -> T {
        let q = (T::one() - x) * (T::one() + x);
        match self.case {
            FamilyCase::Case1 => -self.p.c2() * q + self.p.c3() * x * s,
            FamilyCase::Case2 => self.p.c2() * q + self.p.c3() * x * s,
        }
    }

    fn rhs(&self, s: T, v: T) -> T {
        let x = self.x_of(v);
        let q = (T::one() - x) * (T::one() + x);
        let den = self.den(x, s);
        match (self.case, self.log_form) {
            (FamilyCase::Case1, _) => (self.p.c1() * q - x * s) / den,
            (FamilyCase::Case2, false) => (self.p.c1() * q + x * s) / den,
            // c1 = 0 at the cigar value, so d(ln x)/dz = z / den.
            (FamilyCase::Case2, true) => s / den,
        }
    }

    fn start(&self, eps: T) -> T {
        match self.case {
            FamilyCase::Case1 => self.v_of(T::one() + eps),
            FamilyCase::Case2 => self.v_of(T::one() - eps),
        }
    }
}

/// Subnormal values of `x` carry too few bits for the curvature formulas; they are set to zero.
fn flush<T: Real>(x: T) -> T {
    if x.abs() < T::min_positive_value() {
        T::zero()
    } else {
        x
    }
}

/// One member `x_ε` of the family, with dense output in the family variable.
#[derive(Debug, Clone)]
pub struct EpsilonTrajectory<T: Real> {
    pub eps: T,
    pub case: FamilyCase,
    log_form: bool,
    traj: Trajectory<T, 1>,
}

impl<T: Real> EpsilonTrajectory<T> {
    /// `x_ε(s)` for `s` within the integrated span.
    pub fn x_at(&self, s: T) -> Result<T, ShootingError> {
        let v = self.traj.dense_eval(s).map_err(integ_err)?[0];
        Ok(if self.log_form { flush(v.exp()) } else { v })
    }

    pub fn span(&self) -> T {
        self.traj.t_end()
    }

    /// Accepted integration nodes `(s, x)`.
    pub fn nodes(&self) -> Vec<(T, T)> {
        self.traj
            .times()
            .iter()
            .zip(self.traj.states())
            .map(|(s, v)| (*s, if self.log_form { flush(v[0].exp()) } else { v[0] }))
            .collect()
    }
}

/// Tolerances and layout of an ε-family computation.
#[derive(Debug, Clone)]
pub struct FamilyConfig<T> {
    /// Decreasing positive ε values in (0, 1).
    pub epsilons: Vec<T>,
    /// Extent of the y (or z) variable; [`default_span`] when `None`.
    pub span: Option<T>,
    /// Number of shared grid points (the first is `s = 0`, the rest log-spaced from 1e-3).
    pub grid_points: usize,
    pub rel_tol: T,
    pub abs_tol: T,
    /// Number of members integrated concurrently.
    pub jobs: usize,
}

impl<T: Real> Default for FamilyConfig<T> {
    fn default() -> Self {
        Self {
            epsilons: DEFAULT_LADDER.iter().map(|&e| T::lit(e)).collect(),
            span: None,
            grid_points: 400,
            rel_tol: T::lit(1e-11),
            abs_tol: T::lit(1e-14),
            jobs: 1,
        }
    }
}

fn member<T: Real>(ode: &ScalarOde<T>, eps: T, span: T, rel_tol: T, abs_tol: T) -> Result<EpsilonTrajectory<T>, ShootingError> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(ShootingError::InvalidInput(format!("eps = {eps} must lie in (0, 1)")));
    }
    if !(span > T::zero() && span.is_finite()) {
        return Err(ShootingError::InvalidInput(format!("span = {span} must be positive")));
    }
    let cfg = IntegrationConfig::with_tolerances(rel_tol, abs_tol);
    let o = *ode;
    let traj = integrate(|s, v: &[T; 1]| [o.rhs(s, v[0])], [ode.start(eps)], T::zero(), span, &cfg).map_err(integ_err)?;
    Ok(EpsilonTrajectory { eps, case: ode.case, log_form: ode.log_form, traj })
}

/// Integrates one member of the family out to `span` in the y (or z) variable.
pub fn epsilon_trajectory<T: Real>(p: &SolitonParams<T>, eps: T, span: T) -> Result<EpsilonTrajectory<T>, ShootingError> {
    let d = FamilyConfig::<T>::default();
    member(&ScalarOde::new(p)?, eps, span, d.rel_tol, d.abs_tol)
}

/// The members of an ε-ladder sampled on a shared grid.
#[derive(Debug, Clone)]
pub struct EpsilonFamily<T: Real> {
    pub params: SolitonParams<T>,
    pub case: FamilyCase,
    pub span: T,
    pub grid: Vec<T>,
    pub members: Vec<EpsilonTrajectory<T>>,
    /// `x_ε` on the grid, one row per member in ladder order.
    pub x_grid: Vec<Vec<T>>,
}

/// Log-spaced points from `a` to `b` inclusive.
pub fn geomspace<T: Real>(a: T, b: T, count: usize) -> Vec<T> {
    if count == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    let last = T::int(count as i64 - 1);
    let mut out: Vec<T> = (0..count).map(|i| (la + (lb - la) * T::int(i as i64) / last).exp()).collect();
    out[0] = a;
    out[count - 1] = b;
    out
}

/// Integrates every member of the ladder, up to `cfg.jobs` at a time, and samples them on the grid.
pub fn build_family<T: Real>(p: &SolitonParams<T>, cfg: &FamilyConfig<T>) -> Result<EpsilonFamily<T>, ShootingError> {
    let ode = ScalarOde::new(p)?;
    let span = cfg.span.unwrap_or_else(|| default_span(p));
    if cfg.epsilons.is_empty() || cfg.epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ShootingError::InvalidInput("epsilons must be nonempty and strictly decreasing".into()));
    }
    if cfg.grid_points < 3 {
        return Err(ShootingError::InvalidInput("need at least 3 grid points".into()));
    }
    let start = T::lit(1e-3).min(span / T::lit(10.0));
    let mut grid = vec![T::zero()];
    grid.extend(geomspace(start, span, cfg.grid_points - 1));

    let jobs = cfg.jobs.max(1);
    let mut members = Vec::with_capacity(cfg.epsilons.len());
    for batch in cfg.epsilons.chunks(jobs) {
        let results: Vec<Result<EpsilonTrajectory<T>, ShootingError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = batch
                .iter()
                .map(|&eps| scope.spawn(move || member(&ode, eps, span, cfg.rel_tol, cfg.abs_tol)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("family worker panicked")).collect()
        });
        for r in results {
            let m = r?;
            log::debug!("eps = {}: {} steps", m.eps, m.traj.len());
            members.push(m);
        }
    }
    let x_grid = members
        .iter()
        .map(|m| grid.iter().map(|&s| m.x_at(s)).collect::<Result<Vec<T>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EpsilonFamily { params: *p, case: ode.case, span, grid, members, x_grid })
}

/// Outcome of the pointwise ordering and bound invariants of a family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport<T> {
    pub pairs_checked: usize,
    /// Comparisons where the ordering holds by more than the noise allowance.
    pub strict: usize,
    /// Comparisons where both members agree to within the noise allowance.
    pub ties: usize,
    /// Comparisons where the ordering is reversed by more than the noise allowance.
    pub violations: usize,
    pub worst_violation: T,
    /// Grid points outside `[h(y), 1 + ε]` (case 1) or above 1 (case 2), beyond the allowance.
    pub bound_violations: usize,
    /// Case 2: every member rises to a single maximum and then decreases.
    pub unimodal: Option<bool>,
    /// Allowance used: `noise_rel |x| + noise_abs`.
    pub noise_rel: T,
    pub noise_abs: T,
}

impl<T: Real> OrderingReport<T> {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.bound_violations == 0 && self.unimodal != Some(false)
    }
}

impl<T: Real> EpsilonFamily<T> {
    pub fn epsilons(&self) -> Vec<T> {
        self.members.iter().map(|m| m.eps).collect()
    }

    /// Checks the ε-ordering (`x_ε` increasing in ε for case 1, decreasing for case 2) and the
    /// a priori bounds at every shared grid point. Differences below `noise_rel |x| + noise_abs`
    /// are below the integration accuracy and are counted as ties rather than decided.
    pub fn ordering(&self, noise_rel: T, noise_abs: T) -> OrderingReport<T> {
        let allowance = |x: T| noise_rel * x.abs() + noise_abs;
        let mut rep = OrderingReport {
            pairs_checked: 0,
            strict: 0,
            ties: 0,
            violations: 0,
            worst_violation: T::zero(),
            bound_violations: 0,
            unimodal: None,
            noise_rel,
            noise_abs,
        };
        // Members are stored with decreasing ε; for case 1 the smaller ε must give the smaller x.
        for k in 0..self.members.len().saturating_sub(1) {
            let (big, small) = (&self.x_grid[k], &self.x_grid[k + 1]);
            for i in 1..self.grid.len() {
                let excess = match self.case {
                    FamilyCase::Case1 => small[i] - big[i],
                    FamilyCase::Case2 => big[i] - small[i],
                };
                let tol = allowance(big[i].abs().max(small[i].abs()));
                rep.pairs_checked += 1;
                if excess < -tol {
                    rep.strict += 1;
                } else if excess <= tol {
                    rep.ties += 1;
                } else {
                    rep.violations += 1;
                    rep.worst_violation = rep.worst_violation.max(excess);
                }
            }
        }
        for (k, m) in self.members.iter().enumerate() {
            let xs = &self.x_grid[k];
            for i in 1..self.grid.len() {
                let x = xs[i];
                let tol = allowance(x);
                let ok = match self.case {
                    FamilyCase::Case1 => {
                        let h = phase_system::nullcline_h(&self.params, self.grid[i]).unwrap_or(T::zero());
                        x >= h - tol && x <= T::one() + m.eps + tol
                    }
                    FamilyCase::Case2 => x <= T::one() + tol,
                };
                if !ok {
                    rep.bound_violations += 1;
                }
            }
        }
        if self.case == FamilyCase::Case2 {
            let uni = self.x_grid.iter().all(|xs| {
                let top = xs.iter().enumerate().fold(0, |b, (i, v)| if *v > xs[b] { i } else { b });
                xs[..=top].windows(2).all(|w| w[1] >= w[0] - allowance(w[0]))
                    && xs[top..].windows(2).all(|w| w[1] <= w[0] + allowance(w[0]))
            });
            rep.unimodal = Some(uni);
        }
        rep
    }
}

/// Default noise allowance for ordering checks at the default family tolerances.
pub const ORDERING_NOISE_REL: f64 = 1e-9;
pub const ORDERING_NOISE_ABS: f64 = 1e-13;

/// The smallest-ε member of a family together with its Cauchy gap to the previous member.
#[derive(Debug, Clone)]
pub struct LimitCurve<T: Real> {
    pub params: SolitonParams<T>,
    pub case: FamilyCase,
    pub grid: Vec<T>,
    pub x: Vec<T>,
    /// `|x_{ε_last} - x_{ε_prev}|` per grid point.
    pub gap: Vec<T>,
    pub tol: T,
    /// First grid index of the converged tail: the gap is below `tol` from here on.
    pub converged_from: usize,
    /// Whether the gap shrinks along the ladder at every grid point (up to the noise allowance).
    pub gap_monotone: bool,
    curve: EpsilonTrajectory<T>,
}

impl<T: Real> LimitCurve<T> {
    pub fn x_at(&self, s: T) -> Result<T, ShootingError> {
        self.curve.x_at(s)
    }

    pub fn span(&self) -> T {
        self.curve.span()
    }

    pub fn eps(&self) -> T {
        self.curve.eps
    }

    /// First grid value of the converged tail.
    pub fn converged_start(&self) -> T {
        self.grid[self.converged_from]
    }

    /// `|dx/ds - F(x, s)|` at `s`, with the derivative of the dense solution taken by a
    /// 5-point central difference of step `h`.
    pub fn ode_residual(&self, s: T, h: T) -> Result<T, ShootingError> {
        let ode = ScalarOde { p: self.params, case: self.case, log_form: false };
        let xs = [s - h - h, s - h, s + h, s + h + h].iter().map(|&v| self.x_at(v)).collect::<Result<Vec<_>, _>>()?;
        let d = (xs[0] - T::lit(8.0) * xs[1] + T::lit(8.0) * xs[2] - xs[3]) / (T::lit(12.0) * h);
        Ok((d - ode.rhs(s, self.x_at(s)?)).abs())
    }
}

/// Extracts the limit curve from a family and locates its converged tail.
pub fn extract_limit<T: Real>(fam: &EpsilonFamily<T>, tol: T) -> Result<LimitCurve<T>, ShootingError> {
    let k = fam.members.len();
    if k < 3 {
        return Err(ShootingError::InvalidInput(format!("need at least 3 epsilon levels, got {k}")));
    }
    let ord = fam.ordering(T::lit(ORDERING_NOISE_REL), T::lit(ORDERING_NOISE_ABS));
    if ord.violations > 0 {
        return Err(ShootingError::OrderingViolated { count: ord.violations, worst: ord.worst_violation.to_f64_lossy() });
    }
    let allowance = |x: T| T::lit(ORDERING_NOISE_REL) * x.abs() + T::lit(ORDERING_NOISE_ABS);
    let last = &fam.x_grid[k - 1];
    let prev = &fam.x_grid[k - 2];
    let gap: Vec<T> = last.iter().zip(prev).map(|(a, b)| (*a - *b).abs()).collect();
    let gap_monotone = (1..k - 1).all(|j| {
        (0..fam.grid.len()).all(|i| {
            let g_new = (fam.x_grid[j + 1][i] - fam.x_grid[j][i]).abs();
            let g_old = (fam.x_grid[j][i] - fam.x_grid[j - 1][i]).abs();
            g_new <= g_old + allowance(fam.x_grid[j][i])
        })
    });
    let mut from = gap.len();
    while from > 0 && gap[from - 1] < tol {
        from -= 1;
    }
    let half = fam.span / T::lit(2.0);
    if from == gap.len() || fam.grid[from] > half {
        let points: Vec<f64> = fam.grid.iter().zip(&gap).filter(|(_, g)| **g >= tol).map(|(s, _)| s.to_f64_lossy()).collect();
        let worst_gap = gap.iter().fold(T::zero(), |a, b| a.max(*b)).to_f64_lossy();
        return Err(ShootingError::NotConverged { points, worst_gap });
    }
    Ok(LimitCurve {
        params: fam.params,
        case: fam.case,
        grid: fam.grid.clone(),
        x: last.clone(),
        gap,
        tol,
        converged_from: from,
        gap_monotone,
        curve: fam.members[k - 1].clone(),
    })
}

/// Layout of the reconstructed profile.
#[derive(Debug, Clone)]
pub struct ReconstructConfig<T> {
    /// Offset of the seed from P along the unstable direction, measured in x.
    pub tip_offset: T,
    /// Warping factor at the seed; fixes the homothety scale of the raw profile.
    pub tip_omega: T,
    /// Phase-time spacing of the tip samples.
    pub tip_dt: T,
    /// Tip samples start once `1 - x` reaches this value. Closer to the tip `ω' = x` carries too
    /// few significant digits of `1 - x²` for finite-difference curvature derivatives.
    pub tip_sample_offset: T,
    /// Number of log-spaced samples along the limit curve.
    pub samples: usize,
    /// The tip segment hands over to the limit curve at the first grid point `s ≥ 1` from which
    /// the Cauchy gap stays below this value; a larger mismatch shows up as a kink in `R''`.
    pub join_gap: T,
    pub rel_tol: T,
    pub abs_tol: T,
}

impl<T: Real> Default for ReconstructConfig<T> {
    fn default() -> Self {
        Self {
            tip_offset: T::lit(1e-6),
            tip_omega: T::lit(1e-3),
            tip_dt: T::lit(0.01),
            tip_sample_offset: T::lit(1e-4),
            samples: 3000,
            join_gap: T::lit(1e-12),
            rel_tol: T::lit(1e-13),
            abs_tol: T::lit(1e-16),
        }
    }
}

/// Integrates through consecutive `nodes` (the first is the start time), restarting at each
/// one, so that every returned state is an integration node rather than an interpolated value;
/// the sampling error is then the smooth global error, which finite differences tolerate.
fn march<T: Real, const N: usize>(
    mut field: impl FnMut(T, &[T; N]) -> [T; N],
    start: [T; N],
    nodes: &[T],
    cfg: &IntegrationConfig<T, N>,
) -> Result<Vec<[T; N]>, ShootingError> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut u = start;
    out.push(u);
    for w in nodes.windows(2) {
        u = integrate(&mut field, u, w[0], w[1], cfg).map_err(integ_err)?.last_state();
        out.push(u);
    }
    Ok(out)
}

/// Linear fit `ω ≈ a (r - r*)` over the first samples of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TipFit<T> {
    pub r_star: T,
    pub slope: T,
    /// Last radius of the fit window.
    pub window_end: T,
    pub samples: usize,
}

/// A reconstructed profile with the diagnostics of the join.
#[derive(Debug, Clone)]
pub struct Reconstruction<T: Real> {
    pub profile: RadialProfile<T>,
    /// Value of the family variable where the tip segment hands over to the limit curve.
    pub join: T,
    /// `|x_tip - x̄|` at the join.
    pub splice_gap: T,
    /// Number of samples taken from the tip segment (including `r = 0`).
    pub tip_samples: usize,
    pub tip_fit: TipFit<T>,
    /// Phase time at each sample, with `t = 0` at the seed (the `r = 0` sample carries `-inf`).
    pub t: Vec<T>,
    /// `y = -ω f'` at each sample.
    pub y: Vec<T>,
}

/// Seed on the unstable manifold of P: `(x, y)` at distance `delta` in x.
pub fn saddle_seed<T: Real>(p: &SolitonParams<T>, delta: T) -> Result<[T; 2], ShootingError> {
    let sd = phase_system::saddle_at_p(p)?;
    let v = sd.unstable_direction;
    let scale = delta / v[0].abs();
    Ok([T::one() + scale * v[0], scale * v[1]])
}

fn tip_field<T: Real>(p: &SolitonParams<T>, u: &[T; 5]) -> [T; 5] {
    let [dx, dy] = phase_system::steady_xy_field(p, u[0], u[1]);
    let w = u[2].exp();
    [dx, dy, u[0], w, -u[1]]
}

struct Sample<T> {
    t: T,
    x: T,
    y: T,
    ln_w: T,
    r: T,
    f: T,
}

/// Turns a converged limit curve into a sampled profile `ω(r), f(r)` with `f(0) = 0`.
pub fn reconstruct_profile<T: Real>(
    p: &SolitonParams<T>,
    limit: &LimitCurve<T>,
    cfg: &ReconstructConfig<T>,
) -> Result<Reconstruction<T>, ShootingError> {
    let ode = ScalarOde::new(p)?;
    if ode.case != limit.case {
        return Err(ShootingError::InvalidInput("limit curve belongs to other parameters".into()));
    }
    let span = limit.span();
    let mut tight = limit.gap.len();
    while tight > limit.converged_from && limit.gap[tight - 1] < cfg.join_gap {
        tight -= 1;
    }
    let pick = |from: usize| limit.grid[from..].iter().copied().find(|s| *s >= T::one());
    let join = match pick(tight) {
        Some(s) if s < span => s,
        _ => {
            log::warn!("Cauchy gap never drops below {}; joining at the converged start", cfg.join_gap);
            pick(limit.converged_from).ok_or_else(|| ShootingError::InvalidInput("converged tail does not reach s = 1".into()))?
        }
    };
    if join >= span {
        return Err(ShootingError::InvalidInput("join point at the end of the span".into()));
    }

    // Tip segment in phase time.
    let seed = saddle_seed(p, cfg.tip_offset)?;
    let w0 = cfg.tip_omega;
    let start = [seed[0], seed[1], w0.ln(), w0 * (T::one() + cfg.tip_offset / T::lit(3.0)), -seed[1] / T::lit(2.0)];
    let sign = match ode.case {
        FamilyCase::Case1 => T::one(),
        FamilyCase::Case2 => -T::one(),
    };
    let tcfg = IntegrationConfig::with_tolerances(cfg.rel_tol, cfg.abs_tol)
        .event(EventSpec::new("join", Direction::Rising, true, move |_, u: &[T; 5]| sign * u[1] - join));
    let pp = *p;
    let t_max = T::lit(1e3);
    let tip = integrate(|_, u: &[T; 5]| tip_field(&pp, u), start, T::zero(), t_max, &tcfg).map_err(integ_err)?;
    let hit = tip
        .event("join")
        .ok_or_else(|| ShootingError::InvalidInput(format!("tip segment did not reach s = {join}")))?
        .clone();
    let t_join = hit.t;

    let mut tip_times = vec![T::zero()];
    let mut k = 0i64;
    while cfg.tip_dt * T::int(k) < t_join && T::one() - tip.dense_eval(cfg.tip_dt * T::int(k)).map_err(integ_err)?[0] < cfg.tip_sample_offset {
        k += 1;
    }
    k = k.max(1);
    loop {
        let t = cfg.tip_dt * T::int(k);
        if t > t_join - cfg.tip_dt / T::lit(2.0) {
            break;
        }
        tip_times.push(t);
        k += 1;
    }
    tip_times.push(t_join);
    let plain = IntegrationConfig::with_tolerances(cfg.rel_tol, cfg.abs_tol);
    let tip_states = march(|_, u: &[T; 5]| tip_field(&pp, u), start, &tip_times, &plain)?;
    let mut rows: Vec<Sample<T>> = tip_times[1..tip_times.len() - 1]
        .iter()
        .zip(&tip_states[1..])
        .map(|(&t, u)| Sample { t, x: u[0], y: u[1], ln_w: u[2], r: u[3], f: u[4] })
        .collect();
    let at_join = tip_states[tip_states.len() - 1];
    let tip_samples = rows.len() + 1;

    // Main segment: quadratures along the limit curve in the family variable.
    let x_bar = limit.x_at(join)?;
    let splice_gap = (at_join[0] - x_bar).abs();
    let d = p.schouten_factor();
    let main_field = move |s: T, u: &[T; 5]| {
        let x = ode.x_of(u[0]);
        let dt = d / ode.den(x, s);
        let w = u[2].exp();
        [ode.rhs(s, u[0]), dt, x * dt, w * dt, -ode.y_of(s) * dt]
    };
    let mstart = [ode.v_of(x_bar), t_join, at_join[2], at_join[3], at_join[4]];
    let nodes = geomspace(join, span, cfg.samples.max(2));
    let states = march(main_field, mstart, &nodes, &plain)?;
    for (s, u) in nodes.iter().zip(&states) {
        rows.push(Sample { t: u[1], x: ode.x_of(u[0]), y: ode.y_of(*s), ln_w: u[2], r: u[3], f: u[4] });
    }

    let n = rows.len() + 1;
    let mut prof = RadialProfile {
        params: *p,
        r: Vec::with_capacity(n),
        omega: Vec::with_capacity(n),
        omega_p: Vec::with_capacity(n),
        omega_pp: Vec::with_capacity(n),
        f: Vec::with_capacity(n),
        f_p: Vec::with_capacity(n),
        f_pp: Some(Vec::with_capacity(n)),
        normalization: Normalization::Raw,
    };
    let mut ts = vec![T::neg_infinity()];
    let mut ys = vec![T::zero()];
    let fpp = prof.f_pp.as_mut().expect("allocated above");
    prof.r.push(T::zero());
    prof.omega.push(T::zero());
    prof.omega_p.push(T::one());
    prof.omega_pp.push(T::zero());
    prof.f.push(T::zero());
    prof.f_p.push(T::zero());
    fpp.push(T::zero());
    for row in &rows {
        let w = row.ln_w.exp();
        let [dx, dy] = phase_system::steady_xy_field(p, row.x, row.y);
        prof.r.push(row.r);
        prof.omega.push(w);
        prof.omega_p.push(row.x);
        prof.omega_pp.push(dx / w);
        prof.f.push(row.f);
        prof.f_p.push(-row.y / w);
        fpp.push((row.x * row.y - dy) / (w * w));
        ts.push(row.t);
        ys.push(row.y);
    }
    // f'' is smooth through the tip; carry the value of the first interior sample.
    fpp[0] = fpp[1];
    // The phase-variable f'' satisfies the radial equation identically; dropping it makes residual
    // checks difference the sampled f' instead, exactly as for a profile read back from a file.
    prof.f_pp = None;
    prof.validate().map_err(|e| ShootingError::InvalidInput(e.to_string()))?;

    let tip_fit = fit_tip(&prof);
    let tol = T::lit(1e-2);
    if !(tip_fit.r_star.abs() <= tol * tip_fit.window_end && (tip_fit.slope - T::one()).abs() <= tol) {
        return Err(ShootingError::AnchoringFailed { r_star: tip_fit.r_star.to_f64_lossy(), slope: tip_fit.slope.to_f64_lossy() });
    }
    Ok(Reconstruction { profile: prof, join, splice_gap, tip_samples, tip_fit, t: ts, y: ys })
}

/// Least-squares line through `(r, ω)` over the first 5% of the samples after `r = 0`.
pub fn fit_tip<T: Real>(prof: &RadialProfile<T>) -> TipFit<T> {
    let count = (prof.len() / 20).max(3).min(prof.len() - 1);
    let idx = 1..=count;
    let nn = T::int(count as i64);
    let (mut sx, mut sy, mut sxx, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero());
    for i in idx.clone() {
        let (x, y) = (prof.r[i], prof.omega[i]);
        sx = sx + x;
        sy = sy + y;
        sxx = sxx + x * x;
        sxy = sxy + x * y;
    }
    let slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    let icpt = (sy - slope * sx) / nn;
    TipFit { r_star: -icpt / slope, slope, window_end: prof.r[count], samples: count }
}

/// Rescales a profile so that its scalar curvature extrapolates to 1 at the tip.
pub fn normalize_profile<T: Real>(prof: &RadialProfile<T>) -> Result<RadialProfile<T>, ShootingError> {
    let r0 = warped_geometry::tip_scalar_curvature(prof)?;
    if !(r0 > T::zero() && r0.is_finite()) {
        return Err(ShootingError::NonpositiveTipCurvature(r0.to_f64_lossy()));
    }
    let mut out = prof.scaled(r0.sqrt());
    out.normalization = Normalization::ROriginOne;
    Ok(out)
}

/// Settings for the full construction.
#[derive(Debug, Clone)]
pub struct ConstructConfig<T> {
    pub family: FamilyConfig<T>,
    /// Cauchy-gap tolerance of the limit extraction.
    pub limit_tol: T,
    pub reconstruct: ReconstructConfig<T>,
    pub normalize: bool,
}

impl<T: Real> Default for ConstructConfig<T> {
    fn default() -> Self {
        Self { family: FamilyConfig::default(), limit_tol: T::lit(1e-8), reconstruct: ReconstructConfig::default(), normalize: false }
    }
}

/// Summary of a construction run.
#[derive(Debug, Clone, Serialize)]
pub struct ConstructionSummary<T> {
    pub case: FamilyCase,
    pub epsilons: Vec<T>,
    pub span: T,
    pub ordering: OrderingReport<T>,
    pub converged_from: T,
    pub max_tail_gap: T,
    pub gap_monotone: bool,
    pub join: T,
    pub splice_gap: T,
    pub tip_fit: TipFit<T>,
    /// Factor `c` of the homothety applied by normalization (1 when not normalized).
    pub scale: T,
}

/// A constructed soliton profile.
#[derive(Debug, Clone)]
pub struct Construction<T: Real> {
    pub profile: RadialProfile<T>,
    pub summary: ConstructionSummary<T>,
    pub reconstruction: Reconstruction<T>,
}

/// ε-family, limit extraction, reconstruction and optional normalization in one call.
pub fn construct<T: Real>(p: &SolitonParams<T>, cfg: &ConstructConfig<T>) -> Result<Construction<T>, ShootingError> {
    let fam = build_family(p, &cfg.family)?;
    let ordering = fam.ordering(T::lit(ORDERING_NOISE_REL), T::lit(ORDERING_NOISE_ABS));
    let limit = extract_limit(&fam, cfg.limit_tol)?;
    let rec = reconstruct_profile(p, &limit, &cfg.reconstruct)?;
    let (profile, scale) = if cfg.normalize {
        let r0 = warped_geometry::tip_scalar_curvature(&rec.profile)?;
        (normalize_profile(&rec.profile)?, r0.sqrt())
    } else {
        (rec.profile.clone(), T::one())
    };
    let max_tail_gap = limit.gap[limit.converged_from..].iter().fold(T::zero(), |a, b| a.max(*b));
    let summary = ConstructionSummary {
        case: fam.case,
        epsilons: fam.epsilons(),
        span: fam.span,
        ordering,
        converged_from: limit.converged_start(),
        max_tail_gap,
        gap_monotone: limit.gap_monotone,
        join: rec.join,
        splice_gap: rec.splice_gap,
        tip_fit: rec.tip_fit,
        scale,
    };
    Ok(Construction { profile, summary, reconstruction: rec })
}

/// The `(x, y)` trajectory leaving P along its unstable direction, in phase time.
pub fn phase_trajectory<T: Real>(p: &SolitonParams<T>, delta: T, t_span: T) -> Result<Trajectory<T, 2>, ShootingError> {
    let seed = saddle_seed(p, delta)?;
    let pp = *p;
    let cfg = IntegrationConfig::with_tolerances(T::lit(1e-11), T::lit(1e-14));
    integrate(move |_, u: &[T; 2]| phase_system::steady_xy_field(&pp, u[0], u[1]), seed, T::zero(), t_span, &cfg).map_err(integ_err)
}

/// How a steady soliton fails to exist for 1/(2m) ≤ ρ < 1/m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    /// ρ = 1/(2m): the divergence identity forces `Ric_rr f' = 0`, incompatible with `Ric_rr > 0`.
    SchoutenConstraint,
    /// ρ = 1/n: the unstable direction at P lies in `y = 0`, and off that line `y ẏ < 0`,
    /// so `|y|` grows towards `t → -∞` and no nontrivial trajectory leaves P.
    YSign,
    /// The trajectory leaving P reaches `x = ω' = 0` in finite phase time.
    XZeroCrossing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonexistenceReport<T> {
    pub n: u32,
    pub rho: T,
    pub mode: FailureMode,
    /// Whether an integration was performed.
    pub integrated: bool,
    /// Phase time of the `x = 0` event.
    pub event_time: Option<T>,
    /// `(x, y)` at the event.
    pub event_state: Option<[T; 2]>,
    /// Ratio `|y(end)| / |y(start)|` of the backward runs (ρ = 1/n).
    pub y_growth: Option<T>,
    /// Samples of the backward runs with `x > 0` where `y ẏ ≥ 0` (ρ = 1/n).
    pub y_sign_violations: Option<usize>,
}

/// Demonstrates the obstruction to a steady soliton for 1/(2m) ≤ ρ < 1/m.
pub fn verify_nonexistence<T: Real>(p: &SolitonParams<T>, eps: T, t_span: T) -> Result<NonexistenceReport<T>, ShootingError> {
    if !p.is_steady() {
        return Err(ShootingError::OutOfRegime { rho: p.rho.to_f64_lossy(), what: "nonexistence check needs lambda = 0, kappa = 1" });
    }
    if p.steady_regime() != SteadyRegime::Nonexistence {
        return Err(ShootingError::OutOfRegime { rho: p.rho.to_f64_lossy(), what: "nonexistence check needs 1/(2m) <= rho < 1/m" });
    }
    if !(eps > T::zero() && eps < T::one() && t_span > T::zero()) {
        return Err(ShootingError::InvalidInput("eps must lie in (0, 1) and t_span be positive".into()));
    }
    let mut rep = NonexistenceReport {
        n: p.n,
        rho: p.rho,
        mode: FailureMode::SchoutenConstraint,
        integrated: false,
        event_time: None,
        event_state: None,
        y_growth: None,
        y_sign_violations: None,
    };
    if p.is_schouten() {
        return Ok(rep);
    }
    let pp = *p;
    let field = move |_: T, u: &[T; 2]| phase_system::steady_xy_field(&pp, u[0], u[1]);
    rep.integrated = true;
    if p.is_traceless() {
        rep.mode = FailureMode::YSign;
        let mut growth = T::infinity();
        let mut violations = 0;
        for sign in [T::one(), -T::one()] {
            let start = [T::one() - eps, sign * eps];
            let cfg = IntegrationConfig::with_tolerances(T::lit(1e-11), T::lit(1e-14))
                .event(EventSpec::new("escape", Direction::Rising, true, |_, u: &[T; 2]| u[1].abs() - T::one()));
            let tr = integrate(field, start, T::zero(), -t_span, &cfg).map_err(integ_err)?;
            for u in tr.states() {
                let [_, dy] = field(T::zero(), u);
                if u[0] > T::zero() && u[1] * dy >= T::zero() {
                    violations += 1;
                }
            }
            growth = growth.min(tr.last_state()[1].abs() / eps);
        }
        rep.y_growth = Some(growth);
        rep.y_sign_violations = Some(violations);
        return Ok(rep);
    }
    rep.mode = FailureMode::XZeroCrossing;
    let seed = saddle_seed(p, eps)?;
    let cfg = IntegrationConfig::with_tolerances(T::lit(1e-11), T::lit(1e-14))
        .event(EventSpec::new("x_zero", Direction::Falling, true, |_, u: &[T; 2]| u[0]));
    let tr = match integrate(field, seed, T::zero(), t_span, &cfg) {
        Ok(tr) => tr,
        Err(IntegrateError::BlowUp { partial, .. }) => *partial,
        Err(e) => return Err(integ_err(e)),
    };
    let hit = tr.event("x_zero").ok_or_else(|| ShootingError::NoEventWithinSpan(t_span.to_f64_lossy()))?;
    rep.event_time = Some(hit.t);
    rep.event_state = Some(hit.state);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, rho: f64) -> SolitonParams<f64> {
        SolitonParams::steady(n, rho).unwrap()
    }

    #[test]
    fn regimes() {
        assert_eq!(family_case(&params(3, 0.0)).unwrap(), FamilyCase::Case1);
        assert_eq!(family_case(&params(3, 0.5)).unwrap(), FamilyCase::Case2);
        assert!(matches!(family_case(&params(3, 0.3)), Err(ShootingError::OutOfRegime { .. })));
        assert!(matches!(epsilon_trajectory(&params(3, 0.4), 0.1, 10.0), Err(ShootingError::OutOfRegime { .. })));
    }

    #[test]
    fn case1_member_stays_between_bounds() {
        let p = params(3, 0.0);
        let m = epsilon_trajectory(&p, 0.1, 50.0).unwrap();
        for (y, x) in m.nodes().into_iter().skip(1) {
            let h = phase_system::nullcline_h(&p, y).unwrap();
            assert!(x >= h - 1e-12 && x <= 1.1 + 1e-12, "y = {y}: {h} <= {x} <= 1.1");
        }
    }

    #[test]
    fn case2_member_is_unimodal_below_one() {
        let p = params(3, 1.0);
        let m = epsilon_trajectory(&p, 0.1, 50.0).unwrap();
        let nodes = m.nodes();
        let top = (0..nodes.len()).max_by(|&a, &b| nodes[a].1.partial_cmp(&nodes[b].1).unwrap()).unwrap();
        assert!(top > 0 && top < nodes.len() - 1);
        assert!(nodes.iter().all(|(_, x)| *x <= 1.0));
        assert!(nodes[..=top].windows(2).all(|w| w[1].1 >= w[0].1));
        assert!(nodes[top..].windows(2).all(|w| w[1].1 <= w[0].1));
        // The maximum sits on the nullcline k.
        let (z, x) = nodes[top];
        assert!((x - phase_system::nullcline_k(&p, z).unwrap()).abs() < 1e-2);
    }

    #[test]
    fn seed_lies_on_unstable_direction() {
        let s = saddle_seed(&params(3, 0.0), 1e-6).unwrap();
        assert!((s[0] - (1.0 - 1e-6)).abs() < 1e-15);
        assert!((s[1] - 4e-6).abs() < 1e-15);
    }

    #[test]
    fn schouten_needs_no_integration() {
        let r = verify_nonexistence(&params(3, 0.25), 1e-6, 100.0).unwrap();
        assert_eq!(r.mode, FailureMode::SchoutenConstraint);
        assert!(!r.integrated);
        assert!(matches!(verify_nonexistence(&params(3, 0.0), 1e-6, 10.0), Err(ShootingError::OutOfRegime { .. })));
    }

    #[test]
    fn geomspace_endpoints() {
        let g: Vec<f64> = geomspace(1e-3, 1e3, 7);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[6], 1e3);
        assert!((g[3] - 1.0).abs() < 1e-12);
    }
}
