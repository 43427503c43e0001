//! Generalized Ricci potentials `Ric + α ∇²f = β df⊗df + γ R g + ζ g + η P` with coefficients
//! depending on `f`, the nondegeneracy conditions
//!
//! ```text
//! nd1 = α,   nd2 = α² - α' - β,
//! nd3 = ((2αα' - α'' - β') / nd2 + 2β/α) (1 - 2(n-1)γ)/2 - ((1 - nγ)(α' + β) + α²γ) / α
//! ```
//!
//! and a radial check of the divergence identity on warped profiles. Coefficient derivatives
//! come from truncated Taylor arithmetic, so they are exact up to rounding.

use crate::fd;
use crate::profile::RadialProfile;
use crate::scalar::Real;
use crate::warped_geometry::{self, ric_rr, scalar_curvature, GeometryError, TIP_OMEGA};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;
use thiserror::Error;

/// Number of Taylor coefficients carried by a [`Jet`].
pub const JET_LEN: usize = 5;
/// `|nd_i|` at or below this counts as vanishing.
pub const ND_THRESHOLD: f64 = 1e-10;
/// Fraction of random samples that must be nondegenerate for a family to count as generically so.
pub const GENERIC_FRACTION: f64 = 0.95;
pub const DEFAULT_PROBE_SAMPLES: usize = 200;
pub const DEFAULT_PROBE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("{family}: coefficients cannot be evaluated at f = {f}: {reason}")]
    Evaluation { family: String, f: f64, reason: String },
    #[error("invalid request: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl PotentialError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Evaluation { .. } => "evaluation",
            Self::InvalidInput(_) => "invalid_input",
            Self::Geometry(_) => "geometry",
        }
    }
}

/// Truncated Taylor series `Σ c_k s^k`, `k < JET_LEN`, about a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub c: [T; JET_LEN],
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T) -> Self {
        let mut c = [T::zero(); JET_LEN];
        c[0] = v;
        Self { c }
    }

    /// The independent variable at `x`.
    pub fn variable(x: T) -> Self {
        let mut j = Self::constant(x);
        j.c[1] = T::one();
        j
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> T {
        (1..=k).fold(self.c[k], |a, i| a * T::int(i as i64))
    }

    /// Derivative as a jet; the top coefficient is unknown and set to NaN, which never reaches
    /// lower orders under the arithmetic below.
    pub fn derive(&self) -> Self {
        let mut c = [T::nan(); JET_LEN];
        for k in 0..JET_LEN - 1 {
            c[k] = T::int(k as i64 + 1) * self.c[k + 1];
        }
        Self { c }
    }

    pub fn recip(&self) -> Self {
        let mut c = [T::zero(); JET_LEN];
        c[0] = T::one() / self.c[0];
        for k in 1..JET_LEN {
            let s = (1..=k).fold(T::zero(), |a, j| a + self.c[j] * c[k - j]);
            c[k] = -s / self.c[0];
        }
        Self { c }
    }

    pub fn exp(&self) -> Self {
        let mut c = [T::zero(); JET_LEN];
        c[0] = self.c[0].exp();
        for k in 1..JET_LEN {
            let s = (1..=k).fold(T::zero(), |a, j| a + T::int(j as i64) * self.c[j] * c[k - j]);
            c[k] = s / T::int(k as i64);
        }
        Self { c }
    }

    pub fn ln(&self) -> Self {
        let mut c = [T::zero(); JET_LEN];
        c[0] = self.c[0].ln();
        for k in 1..JET_LEN {
            let s = (1..k).fold(T::zero(), |a, j| a + T::int(j as i64) * c[j] * self.c[k - j]);
            c[k] = (self.c[k] - s / T::int(k as i64)) / self.c[0];
        }
        Self { c }
    }

    pub fn powi(&self, e: i32) -> Self {
        if e < 0 {
            return self.recip().powi(-e);
        }
        (0..e).fold(Self::constant(T::one()), |a, _| a * *self)
    }

    fn is_finite_to(&self, order: usize) -> bool {
        self.c[..=order].iter().all(|v| v.is_finite())
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { c: std::array::from_fn(|k| self.c[k] + o.c[k]) }
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { c: std::array::from_fn(|k| self.c[k] - o.c[k]) }
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { c: self.c.map(|v| -v) }
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { c: std::array::from_fn(|k| (0..=k).fold(T::zero(), |a, j| a + self.c[j] * o.c[k - j])) }
    }
}

impl<T: Real> Div for Jet<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<T: Real> Add<T> for Jet<T> {
    type Output = Self;
    fn add(mut self, v: T) -> Self {
        self.c[0] = self.c[0] + v;
        self
    }
}

impl<T: Real> Sub<T> for Jet<T> {
    type Output = Self;
    fn sub(mut self, v: T) -> Self {
        self.c[0] = self.c[0] - v;
        self
    }
}

impl<T: Real> Mul<T> for Jet<T> {
    type Output = Self;
    fn mul(self, v: T) -> Self {
        Self { c: self.c.map(|x| x * v) }
    }
}

impl<T: Real> Div<T> for Jet<T> {
    type Output = Self;
    fn div(self, v: T) -> Self {
        Self { c: self.c.map(|x| x / v) }
    }
}

/// The six example families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    GradientRicciSoliton,
    RhoEinstein,
    QuasiEinstein,
    FischerMarsden,
    ScalarTensor,
    BergmannWagonerNordtvedt,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        Self::GradientRicciSoliton,
        Self::RhoEinstein,
        Self::QuasiEinstein,
        Self::FischerMarsden,
        Self::ScalarTensor,
        Self::BergmannWagonerNordtvedt,
    ];

    /// Position in the usual list of examples: "1" to "5", and "5-bis".
    pub fn label(self) -> &'static str {
        match self {
            Self::GradientRicciSoliton => "1",
            Self::RhoEinstein => "2",
            Self::QuasiEinstein => "3",
            Self::FischerMarsden => "4",
            Self::ScalarTensor => "5",
            Self::BergmannWagonerNordtvedt => "5-bis",
        }
    }

    /// Expected classification at generic parameters. The scalar-tensor coefficients do not bear
    /// this out: nd3 cancels identically for (5), and for (5-bis) it is proportional to
    /// `(n - 4) ω'`, so [`probe_family`] reports a mismatch for both.
    pub fn generically_nondegenerate(self) -> bool {
        matches!(self, Self::RhoEinstein | Self::ScalarTensor | Self::BergmannWagonerNordtvedt)
    }
}

/// Scalar function of `f` evaluated on jets (for `a`, `b` and `ω` callbacks).
pub type JetFn<T> = Arc<dyn Fn(Jet<T>) -> Jet<T> + Send + Sync>;
type CoeffFn<T> = Arc<dyn Fn(u32, Jet<T>) -> [Jet<T>; 5] + Send + Sync>;

/// Value, first and second `f`-derivatives of one coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficient<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
}

/// `(α, β, γ, ζ, η)` with derivatives at one value of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientValues<T> {
    pub alpha: Coefficient<T>,
    pub beta: Coefficient<T>,
    pub gamma: Coefficient<T>,
    pub zeta: Coefficient<T>,
    pub eta: Coefficient<T>,
}

impl<T: Real> CoefficientValues<T> {
    pub fn values(&self) -> [T; 5] {
        [self.alpha.value, self.beta.value, self.gamma.value, self.zeta.value, self.eta.value]
    }
}

/// A coefficient family with its parameters.
#[derive(Clone)]
pub struct CoefficientSet<T> {
    pub family_name: String,
    pub kind: FamilyKind,
    /// Named scalar parameters, for reports.
    pub params: Vec<(String, T)>,
    /// Whether this set is the `f → -f` reparametrization of a registry member.
    pub sign_flipped: bool,
    eval: CoeffFn<T>,
}

impl<T: Real> fmt::Debug for CoefficientSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("family_name", &self.family_name)
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("sign_flipped", &self.sign_flipped)
            .finish()
    }
}

impl<T: Real> CoefficientSet<T> {
    fn new(kind: FamilyKind, name: &str, params: Vec<(String, T)>, eval: impl Fn(u32, Jet<T>) -> [Jet<T>; 5] + Send + Sync + 'static) -> Self {
        Self { family_name: name.to_string(), kind, params, sign_flipped: false, eval: Arc::new(eval) }
    }

    /// Coefficients and their first two derivatives at `f`.
    pub fn evaluate(&self, n: u32, f: T) -> Result<CoefficientValues<T>, PotentialError> {
        if n < 3 {
            return Err(PotentialError::InvalidInput(format!("dimension n = {n} must be at least 3")));
        }
        if !f.is_finite() {
            return Err(self.eval_err(f, "f is not finite"));
        }
        let js = (self.eval)(n, Jet::variable(f));
        if let Some(k) = js.iter().position(|j| !j.is_finite_to(2)) {
            let names = ["alpha", "beta", "gamma", "zeta", "eta"];
            return Err(self.eval_err(f, &format!("{} is not finite", names[k])));
        }
        let c = |j: &Jet<T>| Coefficient { value: j.value(), d1: j.derivative(1), d2: j.derivative(2) };
        Ok(CoefficientValues { alpha: c(&js[0]), beta: c(&js[1]), gamma: c(&js[2]), zeta: c(&js[3]), eta: c(&js[4]) })
    }

    fn eval_err(&self, f: T, reason: &str) -> PotentialError {
        PotentialError::Evaluation { family: self.family_name.clone(), f: f.to_f64_lossy(), reason: reason.to_string() }
    }

    /// The same structure written for `-f`: `α̃(s) = -α(-s)`, `β̃(s) = β(-s)`, `γ̃(s) = γ(-s)`.
    pub fn sign_flipped(&self) -> Self {
        let inner = self.eval.clone();
        let mut out = self.clone();
        out.family_name = format!("{} (f -> -f)", self.family_name);
        out.sign_flipped = !self.sign_flipped;
        // Families differentiate with respect to the jet variable, so evaluate at the reflected
        // point and reflect the resulting series rather than composing with `-s`.
        out.eval = Arc::new(move |n, s: Jet<T>| {
            let reflect = |j: Jet<T>| Jet { c: std::array::from_fn(|k| if k % 2 == 1 { -j.c[k] } else { j.c[k] }) };
            let [a, b, g, z, e] = inner(n, Jet::variable(-s.value())).map(reflect);
            [-a, b, g, z, e]
        });
        out
    }
}

/// `(1, 0, 0, λ, 0)`.
pub fn gradient_ricci_soliton<T: Real>(lambda: T) -> CoefficientSet<T> {
    CoefficientSet::new(FamilyKind::GradientRicciSoliton, "gradient Ricci soliton", vec![("lambda".into(), lambda)], move |_, _| {
        let k = Jet::constant;
        [k(T::one()), k(T::zero()), k(T::zero()), k(lambda), k(T::zero())]
    })
}

/// `(1, 0, ρ, λ, 0)`.
pub fn rho_einstein<T: Real>(rho: T, lambda: T) -> CoefficientSet<T> {
    let params = vec![("rho".into(), rho), ("lambda".into(), lambda)];
    CoefficientSet::new(FamilyKind::RhoEinstein, "gradient rho-Einstein soliton", params, move |_, _| {
        let k = Jet::constant;
        [k(T::one()), k(T::zero()), k(rho), k(lambda), k(T::zero())]
    })
}

/// `(1, μ, 0, λ, 0)`.
pub fn quasi_einstein<T: Real>(mu: T, lambda: T) -> CoefficientSet<T> {
    let params = vec![("mu".into(), mu), ("lambda".into(), lambda)];
    CoefficientSet::new(FamilyKind::QuasiEinstein, "quasi-Einstein", params, move |_, _| {
        let k = Jet::constant;
        [k(T::one()), k(mu), k(T::zero()), k(lambda), k(T::zero())]
    })
}

/// `(-1/f, 0, 1/(n-1), 0, 0)`, valid where `f ≠ 0`.
pub fn fischer_marsden<T: Real>() -> CoefficientSet<T> {
    CoefficientSet::new(FamilyKind::FischerMarsden, "Fischer-Marsden", Vec::new(), |n, f| {
        let k = Jet::constant;
        [-f.recip(), k(T::zero()), k(T::one() / T::int(n as i64 - 1)), k(T::zero()), k(T::zero())]
    })
}

/// Vacuum equations of the action `∫ a(f) R + b(f) |∇f|²`:
/// `α = -a'/a`, `β = (a'' - b)/a`,
/// `γ = (a'b' - 2a''b + a'² b/a) / (2(n-2)b² + 2(n-1)a'b' - 4(n-1)a''b)`.
pub fn scalar_tensor<T: Real>(name: &str, params: Vec<(String, T)>, a: JetFn<T>, b: JetFn<T>) -> CoefficientSet<T> {
    CoefficientSet::new(FamilyKind::ScalarTensor, name, params, move |n, f| {
        let (av, bv) = (a(f), b(f));
        let (a1, b1) = (av.derive(), bv.derive());
        let a2 = a1.derive();
        let nn = T::int(n as i64);
        let two = T::lit(2.0);
        let num = a1 * b1 - a2 * bv * two + a1 * a1 * bv / av;
        let den = bv * bv * (two * (nn - two)) + a1 * b1 * (two * (nn - T::one())) - a2 * bv * (T::lit(4.0) * (nn - T::one()));
        let k = Jet::constant;
        [-(a1 / av), (a2 - bv) / av, num / den, k(T::zero()), k(T::zero())]
    })
}

/// Bergmann–Wagoner–Nordtvedt vacuum: `α = -1/f`, `β = ω/f²`,
/// `γ = -ω' f / ((n-2)(3+2ω)ω - 2(n-1) ω' f)`, valid where `f ≠ 0`.
pub fn bergmann_wagoner_nordtvedt<T: Real>(name: &str, params: Vec<(String, T)>, omega: JetFn<T>) -> CoefficientSet<T> {
    CoefficientSet::new(FamilyKind::BergmannWagonerNordtvedt, name, params, move |n, f| {
        let w = omega(f);
        let w1 = w.derive();
        let nn = T::int(n as i64);
        let two = T::lit(2.0);
        let den = (w * two + T::lit(3.0)) * w * (nn - two) - w1 * f * (two * (nn - T::one()));
        let k = Jet::constant;
        [-f.recip(), w / (f * f), -(w1 * f) / den, k(T::zero()), k(T::zero())]
    })
}

/// The six families at representative parameters: λ = 1 for (1), (ρ, λ) = (1/2, 0) for (2),
/// (μ, λ) = (1/2, 1) for (3), `a = 1 + f²`, `b = 1 + f` for (5) and `ω = 1 + f²` for (5-bis).
pub fn family_registry<T: Real>() -> Vec<CoefficientSet<T>> {
    let one = T::one();
    vec![
        gradient_ricci_soliton(one),
        rho_einstein(T::lit(0.5), T::zero()),
        quasi_einstein(T::lit(0.5), one),
        fischer_marsden(),
        scalar_tensor("scalar-tensor a = 1 + f^2, b = 1 + f", Vec::new(), Arc::new(|f: Jet<T>| f * f + T::one()), Arc::new(|f: Jet<T>| f + T::one())),
        bergmann_wagoner_nordtvedt("Bergmann-Wagoner-Nordtvedt omega = 1 + f^2", Vec::new(), Arc::new(|f: Jet<T>| f * f + T::one())),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Nondegenerate,
    Degenerate,
    Boundary,
}

/// The three nondegeneracy quantities at one value of `f`. `nd3` is NaN where `α` or `nd2` vanish.
pub fn nd_triple<T: Real>(c: &CoefficientValues<T>, n: u32) -> [T; 3] {
    let (a, a1, a2) = (c.alpha.value, c.alpha.d1, c.alpha.d2);
    let (b, b1) = (c.beta.value, c.beta.d1);
    let g = c.gamma.value;
    let nn = T::int(n as i64);
    let two = T::lit(2.0);
    let nd1 = a;
    let nd2 = a * a - a1 - b;
    let nd3 = if a == T::zero() || nd2 == T::zero() {
        T::nan()
    } else {
        ((two * a * a1 - a2 - b1) / nd2 + two * b / a) * ((T::one() - two * (nn - T::one()) * g) / two)
            - ((T::one() - nn * g) * (a1 + b) + a * a * g) / a
    };
    [nd1, nd2, nd3]
}

fn vanishes<T: Real>(v: T) -> bool {
    !(v.abs() > T::lit(ND_THRESHOLD))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyReport<T> {
    pub family: String,
    pub kind: FamilyKind,
    pub n: u32,
    pub f_value: T,
    pub nd1: T,
    pub nd2: T,
    pub nd3: T,
    pub verdict: Verdict,
    /// Per condition: vanishing (or undefined) at every evaluable probe point.
    pub identically_zero: [bool; 3],
    pub probe_points: usize,
}

/// Half-width of the probe grid in steps; the grid has `2 PROBE_HALF + 1` points.
pub const PROBE_HALF: i64 = 8;

/// Evaluates `nd1`–`nd3` at `f_value` and classifies the potential there: nondegenerate when all
/// three exceed the threshold, degenerate when one of them vanishes on the whole probe grid
/// `f_value + k h` (`h = 0.01 max(1, |f|)`), boundary otherwise.
pub fn nondegeneracy_check<T: Real>(c: &CoefficientSet<T>, n: u32, f_value: T) -> Result<NondegeneracyReport<T>, PotentialError> {
    let vals = c.evaluate(n, f_value)?;
    let [nd1, nd2, nd3] = nd_triple(&vals, n);
    let h = T::lit(0.01) * f_value.abs().max(T::one());
    let mut identically_zero = [true; 3];
    let mut probe_points = 0;
    for k in -PROBE_HALF..=PROBE_HALF {
        let Ok(v) = c.evaluate(n, f_value + T::int(k) * h) else { continue };
        probe_points += 1;
        for (z, nd) in identically_zero.iter_mut().zip(nd_triple(&v, n)) {
            *z &= vanishes(nd);
        }
    }
    let verdict = if [nd1, nd2, nd3].iter().all(|v| !vanishes(*v)) {
        Verdict::Nondegenerate
    } else if probe_points >= 5 && identically_zero.iter().any(|z| *z) {
        Verdict::Degenerate
    } else {
        Verdict::Boundary
    };
    Ok(NondegeneracyReport { family: c.family_name.clone(), kind: c.kind, n, f_value, nd1, nd2, nd3, verdict, identically_zero, probe_points })
}

/// Uniform draws from the declared admissible box of one family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSummary {
    pub kind: FamilyKind,
    pub label: &'static str,
    pub samples: usize,
    pub seed: u64,
    pub nondegenerate: usize,
    pub degenerate: usize,
    pub boundary: usize,
    /// Draws rejected as inadmissible before `samples` admissible ones were found.
    pub rejected: usize,
    pub nondegenerate_fraction: f64,
    /// The box the parameters were drawn from.
    pub admissible_box: &'static str,
    pub expected: Verdict,
    /// Generically nondegenerate families need `GENERIC_FRACTION` nondegenerate samples,
    /// the others must be degenerate at every sample.
    pub matches_expectation: bool,
}

fn admissible_box(kind: FamilyKind) -> &'static str {
    match kind {
        FamilyKind::GradientRicciSoliton => "n in 3..=6, lambda in [-2, 2], f in [-5, 5]",
        FamilyKind::RhoEinstein => "n in 3..=6, rho in [-2, 2] \\ {|rho| < 1e-3}, lambda in [-2, 2], f in [-5, 5]",
        FamilyKind::QuasiEinstein => "n in 3..=6, mu in [-2, 2], lambda in [-2, 2], f in [-5, 5]",
        FamilyKind::FischerMarsden => "n in 3..=6, |f| in [0.1, 5]",
        FamilyKind::ScalarTensor => {
            "n in 3..=6, a = a0 + a1 f + a2 f^2 + a3 f^3, b = b0 + b1 f + b2 f^2 with coefficients in [-1, 1], f in [-2, 2]; \
             |a|, |b| >= 0.05 and |gamma denominator| >= 1e-3"
        }
        FamilyKind::BergmannWagonerNordtvedt => {
            "n in 3..=6, omega = w0 + w1 f + w2 f^2 with coefficients in [-1, 1], f in [0.1, 3]; \
             |omega| >= 0.05 and |gamma denominator| >= 1e-3"
        }
    }
}

fn poly(coeffs: Vec<f64>) -> JetFn<f64> {
    Arc::new(move |f: Jet<f64>| coeffs.iter().rev().fold(Jet::constant(0.0), |acc, c| acc * f + *c))
}

fn draw(kind: FamilyKind, rng: &mut ChaCha8Rng) -> Option<(CoefficientSet<f64>, u32, f64)> {
    let n = rng.gen_range(3..=6u32);
    let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    let set = match kind {
        FamilyKind::GradientRicciSoliton => (gradient_ricci_soliton(u(-2.0, 2.0)), n, u(-5.0, 5.0)),
        FamilyKind::RhoEinstein => {
            let rho = u(-2.0, 2.0);
            if rho.abs() < 1e-3 {
                return None;
            }
            (rho_einstein(rho, u(-2.0, 2.0)), n, u(-5.0, 5.0))
        }
        FamilyKind::QuasiEinstein => (quasi_einstein(u(-2.0, 2.0), u(-2.0, 2.0)), n, u(-5.0, 5.0)),
        FamilyKind::FischerMarsden => {
            let f = u(0.1, 5.0) * if u(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
            (fischer_marsden(), n, f)
        }
        FamilyKind::ScalarTensor => {
            let a: Vec<f64> = (0..4).map(|_| u(-1.0, 1.0)).collect();
            let b: Vec<f64> = (0..3).map(|_| u(-1.0, 1.0)).collect();
            let f = u(-2.0, 2.0);
            let (pa, pb) = (poly(a.clone()), poly(b.clone()));
            let (av, bv) = (pa(Jet::variable(f)), pb(Jet::variable(f)));
            if av.value().abs() < 0.05 || bv.value().abs() < 0.05 {
                return None;
            }
            let nn = n as f64;
            let (a1, b1, a2) = (av.derivative(1), bv.derivative(1), av.derivative(2));
            let den = 2.0 * (nn - 2.0) * bv.value().powi(2) + 2.0 * (nn - 1.0) * a1 * b1 - 4.0 * (nn - 1.0) * a2 * bv.value();
            if den.abs() < 1e-3 {
                return None;
            }
            let params = a.iter().enumerate().map(|(i, v)| (format!("a{i}"), *v)).chain(b.iter().enumerate().map(|(i, v)| (format!("b{i}"), *v)));
            (scalar_tensor("scalar-tensor (random polynomial a, b)", params.collect(), pa, pb), n, f)
        }
        FamilyKind::BergmannWagonerNordtvedt => {
            let w: Vec<f64> = (0..3).map(|_| u(-1.0, 1.0)).collect();
            let f = u(0.1, 3.0);
            let pw = poly(w.clone());
            let wj = pw(Jet::variable(f));
            let nn = n as f64;
            let den = (nn - 2.0) * (3.0 + 2.0 * wj.value()) * wj.value() - 2.0 * (nn - 1.0) * wj.derivative(1) * f;
            if wj.value().abs() < 0.05 || den.abs() < 1e-3 {
                return None;
            }
            let params = w.iter().enumerate().map(|(i, v)| (format!("w{i}"), *v)).collect();
            (bergmann_wagoner_nordtvedt("Bergmann-Wagoner-Nordtvedt (random polynomial omega)", params, pw), n, f)
        }
    };
    Some(set)
}

/// Draws `samples` admissible parameter sets of a family with a seeded ChaCha generator and
/// tallies the verdicts at the drawn `f`.
pub fn probe_family(kind: FamilyKind, samples: usize, seed: u64) -> Result<ProbeSummary, PotentialError> {
    if samples == 0 {
        return Err(PotentialError::InvalidInput("need at least one probe sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kind as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let (mut nondegenerate, mut degenerate, mut boundary, mut rejected) = (0, 0, 0, 0);
    let mut taken = 0;
    while taken < samples {
        if rejected > 100 * samples {
            return Err(PotentialError::InvalidInput(format!("admissible box of family {} is nearly empty", kind.label())));
        }
        let Some((set, n, f)) = draw(kind, &mut rng) else {
            rejected += 1;
            continue;
        };
        match nondegeneracy_check(&set, n, f) {
            Ok(rep) => {
                taken += 1;
                match rep.verdict {
                    Verdict::Nondegenerate => nondegenerate += 1,
                    Verdict::Degenerate => degenerate += 1,
                    Verdict::Boundary => boundary += 1,
                }
            }
            Err(PotentialError::Evaluation { .. }) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
    let fraction = nondegenerate as f64 / samples as f64;
    let generic = kind.generically_nondegenerate();
    Ok(ProbeSummary {
        kind,
        label: kind.label(),
        samples,
        seed,
        nondegenerate,
        degenerate,
        boundary,
        rejected,
        nondegenerate_fraction: fraction,
        admissible_box: admissible_box(kind),
        expected: if generic { Verdict::Nondegenerate } else { Verdict::Degenerate },
        matches_expectation: if generic { fraction >= GENERIC_FRACTION } else { degenerate == samples },
    })
}

/// Radial checks of the divergence identity `(1 - 2mρ) R' = 2 Ric_rr f'` and of the chain
/// `(f'²)' = 2 f' f'' = 2(ρR + λ) f' - (1 - 2mρ) R'` obtained from it and the radial soliton equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectifiabilityReport<T> {
    /// `|∇f| = |f'|`, `H` and `R^Σ` are functions of `r` in the warped representation.
    pub radial_by_construction: bool,
    /// Relative sup deviation of the divergence identity.
    pub eq2_sup: T,
    /// Relative sup deviation of the gradient chain.
    pub chain_sup: T,
    /// Sup of `|(1 - 2mρ) R'|` and of `|2 Ric_rr f'|`.
    pub eq2_lhs_sup: T,
    pub eq2_rhs_sup: T,
    pub samples_checked: usize,
}

impl<T: Real> RectifiabilityReport<T> {
    pub fn max_deviation(&self) -> T {
        self.eq2_sup.max(self.chain_sup)
    }
}

pub fn rectifiability_witness<T: Real>(prof: &RadialProfile<T>) -> Result<RectifiabilityReport<T>, PotentialError> {
    let p = &prof.params;
    let idx: Vec<usize> = (0..prof.len()).filter(|&i| prof.omega[i] >= T::lit(TIP_OMEGA)).collect();
    if idx.len() < 7 {
        return Err(GeometryError::TooFewSamples(idx.len()).into());
    }
    let eq2_sup = warped_geometry::identity_checks(prof)?.equ2_sup;
    let d = p.schouten_factor();
    let two = T::lit(2.0);
    let fpp = prof.f_pp_values();
    let r: Vec<T> = idx.iter().map(|&i| prof.r[i]).collect();
    let scal: Vec<T> = idx.iter().map(|&i| scalar_curvature(p, prof.omega[i], prof.omega_p[i], prof.omega_pp[i])).collect();
    let dr = fd::derivative(&r, &scal, 1, 5);
    let mut rep = RectifiabilityReport {
        radial_by_construction: true,
        eq2_sup,
        chain_sup: T::zero(),
        eq2_lhs_sup: T::zero(),
        eq2_rhs_sup: T::zero(),
        samples_checked: idx.len(),
    };
    for (k, &i) in idx.iter().enumerate() {
        let fp = prof.f_p[i];
        let rr = ric_rr(p, prof.omega[i], prof.omega_pp[i]);
        let lhs = two * fp * fpp[i];
        let t1 = two * (p.rho * scal[k] + p.lambda) * fp;
        let t2 = d * dr[k];
        let dist = prof.r[i] - prof.r[0];
        let nat = if dist > T::zero() { (d * scal[k] * fp).abs() / dist } else { T::infinity() };
        let scale = lhs.abs().max(t1.abs()).max(t2.abs()).max(nat);
        let dev = (lhs - t1 + t2).abs();
        let rel = if scale > T::zero() { dev / scale } else { dev };
        if rel > rep.chain_sup || rel.is_nan() {
            rep.chain_sup = rel;
        }
        rep.eq2_lhs_sup = rep.eq2_lhs_sup.max(t2.abs());
        rep.eq2_rhs_sup = rep.eq2_rhs_sup.max((two * rr * fp).abs());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn jet_arithmetic_matches_closed_forms() {
        let x = Jet::variable(0.7);
        let e = (x * x).exp();
        let v = 0.49f64.exp();
        assert!(close(e.derivative(1), 1.4 * v, 1e-14));
        assert!(close(e.derivative(2), (2.0 + 4.0 * 0.49) * v, 1e-13));
        assert!(close(e.derivative(3), (12.0 * 0.7 + 8.0 * 0.343) * v, 1e-12));
        let l = x.ln();
        assert!(close(l.derivative(3), 2.0 / 0.343, 1e-12));
        let q = (x + 1.0).recip();
        assert!(close(q.derivative(2), 2.0 / 1.7f64.powi(3), 1e-14));
        let d = (x * x * x).derive();
        assert!(close(d.derivative(1), 6.0 * 0.7, 1e-14) && d.c[JET_LEN - 1].is_nan());
        assert!(close(x.powi(-2).derivative(1), -2.0 / 0.343, 1e-12));
    }

    #[test]
    fn registry_values() {
        let reg = family_registry::<f64>();
        assert_eq!(reg.len(), 6);
        let labels: Vec<_> = reg.iter().map(|c| c.kind.label()).collect();
        assert_eq!(labels, ["1", "2", "3", "4", "5", "5-bis"]);
        let v = rho_einstein(0.3, -2.0).evaluate(3, 17.0).unwrap().values();
        assert_eq!(v, [1.0, 0.0, 0.3, -2.0, 0.0]);
        let v = fischer_marsden::<f64>().evaluate(4, 2.0).unwrap().values();
        assert!(close(v[0], -0.5, 1e-15) && v[1] == 0.0 && close(v[2], 1.0 / 3.0, 1e-15));
        assert!(matches!(fischer_marsden::<f64>().evaluate(4, 0.0), Err(PotentialError::Evaluation { .. })));
    }

    #[test]
    fn rho_einstein_triple() {
        for rho in [-1.0, 0.25, 2.0] {
            let rep = nondegeneracy_check(&rho_einstein(rho, 0.5), 4, 1.3).unwrap();
            assert_eq!((rep.nd1, rep.nd2), (1.0, 1.0));
            assert!(close(rep.nd3, -rho, 1e-15));
            assert_eq!(rep.verdict, Verdict::Nondegenerate);
        }
        assert_eq!(nondegeneracy_check(&rho_einstein(0.0, 1.0), 3, 0.0).unwrap().verdict, Verdict::Degenerate);
    }

    #[test]
    fn degenerate_examples() {
        let rep = nondegeneracy_check(&gradient_ricci_soliton(1.0), 3, 0.4).unwrap();
        assert_eq!(rep.nd3, 0.0);
        assert_eq!(rep.verdict, Verdict::Degenerate);
        let rep = nondegeneracy_check(&quasi_einstein(0.5, 0.0), 4, 2.0).unwrap();
        assert_eq!(rep.nd3, 0.0);
        assert_eq!(rep.verdict, Verdict::Degenerate);
        let rep = nondegeneracy_check(&fischer_marsden(), 4, 2.0).unwrap();
        assert_eq!(rep.nd2, 0.0);
        assert!(rep.identically_zero[1]);
        assert_eq!(rep.verdict, Verdict::Degenerate);
    }

    #[test]
    fn constant_brans_dicke_is_degenerate() {
        let bd = bergmann_wagoner_nordtvedt("Brans-Dicke", vec![("omega".into(), 1.0)], Arc::new(|_| Jet::<f64>::constant(1.0)));
        let rep = nondegeneracy_check(&bd, 4, 2.0).unwrap();
        assert!(rep.nd3.abs() < 1e-14);
        assert_eq!(rep.verdict, Verdict::Degenerate);
    }

    #[test]
    fn scalar_tensor_nd3_vanishes_identically() {
        // With the general scalar-tensor coefficients nd3 cancels for every a, b and n; the
        // displayed Bergmann-Wagoner-Nordtvedt gamma gives nd3 proportional to (n - 4) omega'.
        let reg = family_registry::<f64>();
        for n in 3..=6 {
            for f in [-1.5, 0.3, 2.0] {
                let rep = nondegeneracy_check(&reg[4], n, f).unwrap();
                assert!(rep.nd3.abs() < 1e-13 && rep.verdict == Verdict::Degenerate, "{rep:?}");
            }
            let rep = nondegeneracy_check(&reg[5], n, 2.0).unwrap();
            let expect = if n == 4 { Verdict::Degenerate } else { Verdict::Nondegenerate };
            assert_eq!(rep.verdict, expect, "{rep:?}");
        }
    }

    #[test]
    fn derivatives_agree_with_central_differences() {
        for c in family_registry::<f64>() {
            for f in [0.6, 1.7] {
                let v = c.evaluate(4, f).unwrap();
                let h = 1e-4;
                let (lo, hi) = (c.evaluate(4, f - h).unwrap(), c.evaluate(4, f + h).unwrap());
                let pairs = [(v.alpha, lo.alpha, hi.alpha), (v.beta, lo.beta, hi.beta), (v.gamma, lo.gamma, hi.gamma)];
                for (mid, l, r) in pairs {
                    let d1 = (r.value - l.value) / (2.0 * h);
                    let d2 = (r.value - 2.0 * mid.value + l.value) / (h * h);
                    assert!(close(d1, mid.d1, 1e-6 * mid.d1.abs().max(1.0)), "{}: {d1} vs {}", c.family_name, mid.d1);
                    assert!(close(d2, mid.d2, 1e-5 * mid.d2.abs().max(1.0)), "{}: {d2} vs {}", c.family_name, mid.d2);
                }
            }
        }
    }

    #[test]
    fn probes() {
        for kind in [FamilyKind::GradientRicciSoliton, FamilyKind::RhoEinstein, FamilyKind::QuasiEinstein, FamilyKind::FischerMarsden] {
            let s = probe_family(kind, DEFAULT_PROBE_SAMPLES, DEFAULT_PROBE_SEED).unwrap();
            assert!(s.matches_expectation, "{s:?}");
        }
        let s = probe_family(FamilyKind::ScalarTensor, DEFAULT_PROBE_SAMPLES, DEFAULT_PROBE_SEED).unwrap();
        assert_eq!(s.nondegenerate, 0, "{s:?}");
        let s = probe_family(FamilyKind::BergmannWagonerNordtvedt, DEFAULT_PROBE_SAMPLES, DEFAULT_PROBE_SEED).unwrap();
        assert!(s.nondegenerate_fraction > 0.5 && s.nondegenerate_fraction < GENERIC_FRACTION, "{s:?}");
        let a = probe_family(FamilyKind::ScalarTensor, 50, 7).unwrap();
        assert_eq!(a, probe_family(FamilyKind::ScalarTensor, 50, 7).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rho_einstein_constant_in_f(rho in -3.0f64..3.0, f in -10.0f64..10.0, n in 3u32..8) {
                let rep = nondegeneracy_check(&rho_einstein(rho, 0.0), n, f).unwrap();
                prop_assert_eq!((rep.nd1, rep.nd2), (1.0, 1.0));
                prop_assert!((rep.nd3 + rho).abs() < 1e-15);
            }

            #[test]
            fn sign_flip_preserves_verdicts(idx in 0usize..6, f in 0.2f64..3.0, n in 3u32..7) {
                let c = &family_registry::<f64>()[idx];
                let fl = c.sign_flipped();
                let (a, b) = (nondegeneracy_check(c, n, f).unwrap(), nondegeneracy_check(&fl, n, -f).unwrap());
                prop_assert_eq!(a.verdict, b.verdict);
                prop_assert!((a.nd1 + b.nd1).abs() <= 1e-12 * a.nd1.abs().max(1.0));
                prop_assert!((a.nd2 - b.nd2).abs() <= 1e-12 * a.nd2.abs().max(1.0));
                if a.nd3.is_finite() {
                    prop_assert!((a.nd3 + b.nd3).abs() <= 1e-10 * a.nd3.abs().max(1.0));
                }
            }
        }
    }
}
