//! Adaptive Dormand–Prince 5(4) integration with dense output and event location.
//!
//! Step control is the proportional-integral controller of Hairer, Nørsett and Wanner;
//! the continuous extension is the standard fourth-order interpolant of the pair, and
//! events are located by bisection on that interpolant.

use crate::scalar::Real;
use std::fmt;
use thiserror::Error;

/// Threshold on the max-norm of the state above which integration stops with [`IntegrateError::BlowUp`].
pub const BLOW_UP_NORM: f64 = 1e12;

/// Which sign changes of an event guard are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Any,
}

/// Scalar event function `g(t, state)`; a crossing of zero triggers the event.
pub type Guard<T, const N: usize> = Box<dyn Fn(T, &[T; N]) -> T + Send + Sync>;

/// A named zero-crossing condition monitored during integration.
pub struct EventSpec<T, const N: usize> {
    pub name: String,
    pub guard: Guard<T, N>,
    pub direction: Direction,
    /// Stop integration at the first occurrence.
    pub terminal: bool,
}

impl<T, const N: usize> EventSpec<T, N> {
    pub fn new(name: &str, direction: Direction, terminal: bool, guard: impl Fn(T, &[T; N]) -> T + Send + Sync + 'static) -> Self {
        Self { name: name.to_string(), guard: Box::new(guard), direction, terminal }
    }
}

impl<T, const N: usize> fmt::Debug for EventSpec<T, N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventSpec")
            .field("name", &self.name)
            .field("direction", &self.direction)
            .field("terminal", &self.terminal)
            .finish()
    }
}

/// Tolerances, step bounds and events for one integration.
#[derive(Debug)]
pub struct IntegrationConfig<T, const N: usize> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Upper bound on `|h|`; infinite by default.
    pub max_step: T,
    /// Hard floor on `|h|`; a step at the floor is accepted even if its error estimate exceeds tolerance.
    pub min_step: T,
    pub max_steps: usize,
    /// Optional first trial step; chosen automatically otherwise.
    pub initial_step: Option<T>,
    pub events: Vec<EventSpec<T, N>>,
}

impl<T: Real, const N: usize> Default for IntegrationConfig<T, N> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-10),
            abs_tol: T::lit(1e-12),
            max_step: T::infinity(),
            min_step: T::lit(1e-14),
            max_steps: 1_000_000,
            initial_step: None,
            events: Vec::new(),
        }
    }
}

impl<T: Real, const N: usize> IntegrationConfig<T, N> {
    pub fn with_tolerances(rel_tol: T, abs_tol: T) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn event(mut self, ev: EventSpec<T, N>) -> Self {
        self.events.push(ev);
        self
    }
}

/// A located event occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct EventHit<T, const N: usize> {
    pub name: String,
    pub t: T,
    pub state: [T; N],
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    TEndReached,
    Event,
    StepLimit,
    BlowUp,
}

#[derive(Debug, Clone)]
struct DenseStep<T, const N: usize> {
    t0: T,
    h: T,
    coef: [[T; N]; 5],
}

/// Accepted steps of an integration together with their continuous extension.
#[derive(Debug, Clone)]
pub struct Trajectory<T, const N: usize> {
    times: Vec<T>,
    states: Vec<[T; N]>,
    steps: Vec<DenseStep<T, N>>,
    pub events_hit: Vec<EventHit<T, N>>,
    pub termination: Termination,
    pub rejected_steps: usize,
    /// Steps accepted at the minimum step size despite an error estimate above tolerance.
    pub forced_steps: usize,
}

/// Failures of [`integrate`] and [`Trajectory::dense_eval`].
#[derive(Debug, Error)]
pub enum IntegrateError<T: Real, const N: usize> {
    #[error("invalid integration request: {0}")]
    InvalidInput(String),
    #[error("state norm exceeded {BLOW_UP_NORM:e} at t = {t}")]
    BlowUp { t: f64, partial: Box<Trajectory<T, N>> },
    #[error("step limit reached at t = {t}")]
    StepLimit { t: f64, partial: Box<Trajectory<T, N>> },
    #[error("non-finite derivative near t = {t}")]
    NonFinite { t: f64 },
    #[error("time {t} outside trajectory range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
}

impl<T: Real, const N: usize> IntegrateError<T, N> {
    /// Short machine-readable name of the failure.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::InvalidInput(_) => "invalid_input",
            Self::BlowUp { .. } => "blow_up",
            Self::StepLimit { .. } => "step_limit",
            Self::NonFinite { .. } => "non_finite",
            Self::OutOfRange { .. } => "out_of_range",
        }
    }
}

impl<T: Real, const N: usize> Trajectory<T, N> {
    /// Sample times, monotone in the direction of integration.
    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn states(&self) -> &[[T; N]] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_start(&self) -> T {
        self.times[0]
    }

    pub fn t_end(&self) -> T {
        *self.times.last().expect("trajectory has at least the start sample")
    }

    pub fn last_state(&self) -> [T; N] {
        *self.states.last().expect("trajectory has at least the start sample")
    }

    fn forward(&self) -> bool {
        self.t_end() >= self.t_start()
    }

    /// Interpolated state at `t`; stored samples are returned exactly.
    pub fn dense_eval(&self, t: T) -> Result<[T; N], IntegrateError<T, N>> {
        let (a, b) = (self.t_start(), self.t_end());
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if !(t >= lo && t <= hi) {
            return Err(IntegrateError::OutOfRange { t: t.to_f64_lossy(), start: a.to_f64_lossy(), end: b.to_f64_lossy() });
        }
        let fwd = self.forward();
        // Index of the first sample strictly beyond t in the integration direction.
        let idx = self.times.partition_point(|&s| if fwd { s <= t } else { s >= t });
        if idx > 0 && self.times[idx - 1] == t {
            return Ok(self.states[idx - 1]);
        }
        let k = idx.clamp(1, self.steps.len()) - 1;
        Ok(eval_step(&self.steps[k], t))
    }

    /// Dense output sampled at each of `ts`.
    pub fn sample(&self, ts: &[T]) -> Result<Vec<[T; N]>, IntegrateError<T, N>> {
        ts.iter().map(|&t| self.dense_eval(t)).collect()
    }

    /// First recorded occurrence of the named event.
    pub fn event(&self, name: &str) -> Option<&EventHit<T, N>> {
        self.events_hit.iter().find(|e| e.name == name)
    }
}

fn eval_step<T: Real, const N: usize>(s: &DenseStep<T, N>, t: T) -> [T; N] {
    let th = (t - s.t0) / s.h;
    let th1 = T::one() - th;
    let c = &s.coef;
    let mut out = [T::zero(); N];
    for i in 0..N {
        out[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
    }
    out
}

struct Tableau<T> {
    c: [T; 6],
    a: [[T; 6]; 7],
    e: [T; 7],
    d: [T; 7],
}

fn tableau<T: Real>() -> Tableau<T> {
    let l = |v: f64| T::lit(v);
    let z = T::zero();
    Tableau {
        c: [z, l(1.0 / 5.0), l(3.0 / 10.0), l(4.0 / 5.0), l(8.0 / 9.0), T::one()],
        a: [
            [z; 6],
            [l(1.0 / 5.0), z, z, z, z, z],
            [l(3.0 / 40.0), l(9.0 / 40.0), z, z, z, z],
            [l(44.0 / 45.0), l(-56.0 / 15.0), l(32.0 / 9.0), z, z, z],
            [l(19372.0 / 6561.0), l(-25360.0 / 2187.0), l(64448.0 / 6561.0), l(-212.0 / 729.0), z, z],
            [l(9017.0 / 3168.0), l(-355.0 / 33.0), l(46732.0 / 5247.0), l(49.0 / 176.0), l(-5103.0 / 18656.0), z],
            [l(35.0 / 384.0), z, l(500.0 / 1113.0), l(125.0 / 192.0), l(-2187.0 / 6784.0), l(11.0 / 84.0)],
        ],
        e: [
            l(71.0 / 57600.0),
            z,
            l(-71.0 / 16695.0),
            l(71.0 / 1920.0),
            l(-17253.0 / 339200.0),
            l(22.0 / 525.0),
            l(-1.0 / 40.0),
        ],
        d: [
            l(-12715105075.0 / 11282082432.0),
            z,
            l(87487479700.0 / 32700410799.0),
            l(-10690763975.0 / 1880347072.0),
            l(701980252875.0 / 199316789632.0),
            l(-1453857185.0 / 822651844.0),
            l(69997945.0 / 29380423.0),
        ],
    }
}

fn finite<T: Real, const N: usize>(v: &[T; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn max_norm<T: Real, const N: usize>(v: &[T; N]) -> T {
    v.iter().fold(T::zero(), |a, x| a.max(x.abs()))
}

fn crossed(dir: Direction, g0: f64, g1: f64) -> bool {
    let rising = g0 < 0.0 && g1 >= 0.0;
    let falling = g0 > 0.0 && g1 <= 0.0;
    match dir {
        Direction::Rising => rising,
        Direction::Falling => falling,
        Direction::Any => rising || falling,
    }
}

/// Integrates `dy/dt = field(t, y)` from `(t0, start)` towards `t1`.
///
/// `t1 < t0` integrates backwards. Events are checked after every accepted step.
pub fn integrate<T: Real, const N: usize>(
    mut field: impl FnMut(T, &[T; N]) -> [T; N],
    start: [T; N],
    t0: T,
    t1: T,
    cfg: &IntegrationConfig<T, N>,
) -> Result<Trajectory<T, N>, IntegrateError<T, N>> {
    if t0 == t1 || !t0.is_finite() || !t1.is_finite() {
        return Err(IntegrateError::InvalidInput("t0 and t1 must be finite and distinct".into()));
    }
    if !(cfg.rel_tol > T::zero() && cfg.abs_tol > T::zero() && cfg.max_steps > 0) {
        return Err(IntegrateError::InvalidInput("tolerances and max_steps must be positive".into()));
    }
    if !finite(&start) {
        return Err(IntegrateError::InvalidInput("start state is not finite".into()));
    }
    let mut k1 = field(t0, &start);
    if !finite(&k1) {
        return Err(IntegrateError::NonFinite { t: t0.to_f64_lossy() });
    }

    let tab = tableau::<T>();
    let dir = if t1 > t0 { T::one() } else { -T::one() };
    let rtol = cfg.rel_tol;
    let atol = cfg.abs_tol;
    let nr = T::int(N as i64);
    let err_norm = |e: &[T; N], y0: &[T; N], y1: &[T; N]| -> T {
        let mut s = T::zero();
        for i in 0..N {
            let sk = atol + rtol * y0[i].abs().max(y1[i].abs());
            s = s + (e[i] / sk).powi(2);
        }
        (s / nr).sqrt()
    };

    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![start],
        steps: Vec::new(),
        events_hit: Vec::new(),
        termination: Termination::TEndReached,
        rejected_steps: 0,
        forced_steps: 0,
    };

    let span = (t1 - t0).abs();
    let hmax = cfg.max_step.min(span);
    let hmin = cfg.min_step;
    let mut h = match cfg.initial_step {
        Some(h0) => h0.abs().min(hmax),
        None => initial_step(&mut field, t0, &start, &k1, dir, hmax, atol, rtol),
    }
    .max(hmin);

    let mut g_prev: Vec<f64> = cfg.events.iter().map(|e| (e.guard)(t0, &start).to_f64_lossy()).collect();

    let beta = T::lit(0.04);
    let expo1 = T::lit(0.2) - beta * T::lit(0.75);
    let safe = T::lit(0.9);
    let facc1 = T::lit(5.0);
    let facc2 = T::lit(0.1);
    let mut facold = T::lit(1e-4);
    let mut last_rejected = false;

    let mut t = t0;
    let mut y = start;
    let mut accepted = 0usize;
    loop {
        if accepted + traj.rejected_steps >= cfg.max_steps {
            traj.termination = Termination::StepLimit;
            return Err(IntegrateError::StepLimit { t: t.to_f64_lossy(), partial: Box::new(traj) });
        }
        let mut last = false;
        if (t + dir * h - t1) * dir >= T::zero() || (t1 - t).abs() <= hmin {
            h = (t1 - t).abs();
            last = true;
        }
        let hs = dir * h;

        let mut k = [[T::zero(); N]; 7];
        k[0] = k1;
        let mut ok = true;
        for s in 1..7 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = T::zero();
                for j in 0..s {
                    acc = acc + tab.a[s][j] * k[j][i];
                }
                ys[i] = y[i] + hs * acc;
            }
            if s == 6 {
                // Stage 7 is evaluated at the new solution (FSAL).
                if !finite(&ys) {
                    ok = false;
                    break;
                }
                let kn = field(t + hs, &ys);
                if !finite(&kn) {
                    ok = false;
                    break;
                }
                k[6] = kn;
            } else {
                let kn = field(t + tab.c[s] * hs, &ys);
                if !finite(&kn) {
                    ok = false;
                    break;
                }
                k[s] = kn;
            }
        }
        if !ok {
            if h <= hmin {
                return Err(IntegrateError::NonFinite { t: t.to_f64_lossy() });
            }
            traj.rejected_steps += 1;
            h = (h * T::lit(0.1)).max(hmin);
            last_rejected = true;
            continue;
        }

        let mut ynew = y;
        let mut errv = [T::zero(); N];
        for i in 0..N {
            let mut acc = T::zero();
            let mut eacc = T::zero();
            for j in 0..6 {
                acc = acc + tab.a[6][j] * k[j][i];
            }
            for j in 0..7 {
                eacc = eacc + tab.e[j] * k[j][i];
            }
            ynew[i] = y[i] + hs * acc;
            errv[i] = hs * eacc;
        }
        let err = err_norm(&errv, &y, &ynew);
        let fac11 = err.powf(expo1);

        let at_floor = h <= hmin;
        if err <= T::one() || at_floor {
            if err > T::one() {
                traj.forced_steps += 1;
            }
            // Dense output coefficients.
            let mut coef = [[T::zero(); N]; 5];
            for i in 0..N {
                let ydiff = ynew[i] - y[i];
                let bspl = hs * k[0][i] - ydiff;
                let mut dd = T::zero();
                for j in 0..7 {
                    dd = dd + tab.d[j] * k[j][i];
                }
                coef[0][i] = y[i];
                coef[1][i] = ydiff;
                coef[2][i] = bspl;
                coef[3][i] = ydiff - hs * k[6][i] - bspl;
                coef[4][i] = hs * dd;
            }
            let step = DenseStep { t0: t, h: hs, coef };
            let tnew = if last { t1 } else { t + hs };

            // Event detection on the accepted step.
            let mut hits: Vec<(usize, T, [T; N])> = Vec::new();
            let mut g_new = Vec::with_capacity(cfg.events.len());
            for (ei, ev) in cfg.events.iter().enumerate() {
                let g1 = (ev.guard)(tnew, &ynew).to_f64_lossy();
                g_new.push(g1);
                if crossed(ev.direction, g_prev[ei], g1) {
                    let (te, ye) = locate(&step, ev, t, tnew, g_prev[ei]);
                    hits.push((ei, te, ye));
                }
            }
            hits.sort_by(|a, b| {
                let (ta, tb) = ((a.1 - t) * dir, (b.1 - t) * dir);
                ta.partial_cmp(&tb).unwrap_or(std::cmp::Ordering::Equal)
            });
            let mut stop: Option<(T, [T; N])> = None;
            for (ei, te, ye) in hits {
                let ev = &cfg.events[ei];
                traj.events_hit.push(EventHit { name: ev.name.clone(), t: te, state: ye });
                if ev.terminal {
                    stop = Some((te, ye));
                    break;
                }
            }

            traj.steps.push(step);
            accepted += 1;
            if let Some((te, ye)) = stop {
                if te != t {
                    traj.times.push(te);
                    traj.states.push(ye);
                } else {
                    traj.steps.pop();
                }
                traj.termination = Termination::Event;
                return Ok(traj);
            }
            traj.times.push(tnew);
            traj.states.push(ynew);
            g_prev = g_new;

            if max_norm(&ynew) > T::lit(BLOW_UP_NORM) {
                traj.termination = Termination::BlowUp;
                return Err(IntegrateError::BlowUp { t: tnew.to_f64_lossy(), partial: Box::new(traj) });
            }
            if last {
                traj.termination = Termination::TEndReached;
                return Ok(traj);
            }

            let mut fac = fac11 / facold.powf(beta);
            facold = err.max(T::lit(1e-4));
            fac = facc2.max(facc1.min(fac / safe));
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            last_rejected = false;
            k1 = k[6];
            t = tnew;
            y = ynew;
            h = hnew.min(hmax).max(hmin);
        } else {
            traj.rejected_steps += 1;
            let hnew = h / facc1.min(fac11 / safe);
            last_rejected = true;
            h = hnew.max(hmin);
        }
    }
}

/// Bisection on the dense output for the zero of the guard inside one accepted step.
fn locate<T: Real, const N: usize>(step: &DenseStep<T, N>, ev: &EventSpec<T, N>, ta: T, tb: T, ga: f64) -> (T, [T; N]) {
    let mut lo = ta;
    let mut hi = tb;
    let mut glo = ga;
    for _ in 0..400 {
        let tol = T::lit(1e-12) * lo.abs().max(hi.abs()) + T::lit(1e-12);
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid == lo || mid == hi {
            break;
        }
        let gm = (ev.guard)(mid, &eval_step(step, mid)).to_f64_lossy();
        let same_side = (gm < 0.0 && glo < 0.0) || (gm > 0.0 && glo > 0.0);
        if same_side {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    let ylo = eval_step(step, lo);
    let yhi = eval_step(step, hi);
    let ghi = (ev.guard)(hi, &yhi).to_f64_lossy();
    if glo.abs() < ghi.abs() {
        (lo, ylo)
    } else {
        (hi, yhi)
    }
}

#[allow(clippy::too_many_arguments)]
fn initial_step<T: Real, const N: usize>(
    field: &mut impl FnMut(T, &[T; N]) -> [T; N],
    t0: T,
    y0: &[T; N],
    f0: &[T; N],
    dir: T,
    hmax: T,
    atol: T,
    rtol: T,
) -> T {
    let mut dnf = T::zero();
    let mut dny = T::zero();
    for i in 0..N {
        let sk = atol + rtol * y0[i].abs();
        dnf = dnf + (f0[i] / sk).powi(2);
        dny = dny + (y0[i] / sk).powi(2);
    }
    let small = T::lit(1e-10);
    let mut h = if dnf <= small || dny <= small { T::lit(1e-6) } else { (dny / dnf).sqrt() * T::lit(0.01) };
    h = h.min(hmax);
    let mut y1 = *y0;
    for i in 0..N {
        y1[i] = y0[i] + dir * h * f0[i];
    }
    let f1 = field(t0 + dir * h, &y1);
    let mut der2 = T::zero();
    for i in 0..N {
        let sk = atol + rtol * y0[i].abs();
        der2 = der2 + ((f1[i] - f0[i]) / sk).powi(2);
    }
    if !der2.is_finite() {
        return h * T::lit(1e-3);
    }
    der2 = der2.sqrt() / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= T::lit(1e-15) {
        T::lit(1e-6).max(h.abs() * T::lit(1e-3))
    } else {
        (T::lit(0.01) / der12).powf(T::lit(0.2))
    };
    (h * T::lit(100.0)).min(h1).min(hmax)
}
