//! Cohesive fracture energy densities.
//!
//! A density `g : [0, inf) -> [0, inf)` prices a crack opening. The reduced
//! energy charges `g(2|u|)` per unit area of the plane `{y = 0}`, so the
//! solver needs the exact proximal map of `s -> g(2|s|)`, provided here by
//! [`scalar_prox`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// An admissible fracture energy density together with its analytic
/// derivatives and the sup-norms that enter the regularity constants.
pub trait Density<T: Real>: Send + Sync {
    fn g(&self, s: T) -> T;
    fn g1(&self, s: T) -> T;
    fn g2(&self, s: T) -> T;
    fn g3(&self, s: T) -> T;
    /// `g'(0+)`, the maximal sustainable stress.
    fn gp0(&self) -> T;
    /// `sup |g''|`.
    fn g2_sup(&self) -> T;
    /// `sup |g'''|`.
    fn g3_sup(&self) -> T;
    /// `sup g`; infinite for unbounded densities.
    fn g_sup(&self) -> T;
}

/// Built-in density families with closed-form derivatives.
///
/// Config files name a law by family plus parameters, e.g.
/// `{ family = "exponential", kappa = 1.0, lambda = 1.0 }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CohesiveLaw<T> {
    /// `g(s) = kappa (1 - exp(-lambda s))`
    Exponential { kappa: T, lambda: T },
    /// `g(s) = kappa s / (1 + lambda s)`
    Rational { kappa: T, lambda: T },
    /// `g(s) = slope * s`. Unbounded, so never admissible; it linearizes the
    /// cohesive term and is useful for identities where `g'` is constant.
    Linear { slope: T },
}

impl<T: Real> CohesiveLaw<T> {
    pub fn exponential(kappa: T, lambda: T) -> Self {
        CohesiveLaw::Exponential { kappa, lambda }
    }

    pub fn rational(kappa: T, lambda: T) -> Self {
        CohesiveLaw::Rational { kappa, lambda }
    }

    pub fn linear(slope: T) -> Self {
        CohesiveLaw::Linear { slope }
    }

    pub fn family(&self) -> &'static str {
        match self {
            CohesiveLaw::Exponential { .. } => "exponential",
            CohesiveLaw::Rational { .. } => "rational",
            CohesiveLaw::Linear { .. } => "linear",
        }
    }
}

impl<T: Real> Density<T> for CohesiveLaw<T> {
    fn g(&self, s: T) -> T {
        match *self {
            CohesiveLaw::Exponential { kappa, lambda } => -kappa * (-lambda * s).exp_m1(),
            CohesiveLaw::Rational { kappa, lambda } => kappa * s / (T::one() + lambda * s),
            CohesiveLaw::Linear { slope } => slope * s,
        }
    }

    fn g1(&self, s: T) -> T {
        match *self {
            CohesiveLaw::Exponential { kappa, lambda } => kappa * lambda * (-lambda * s).exp(),
            CohesiveLaw::Rational { kappa, lambda } => kappa / (T::one() + lambda * s).powi(2),
            CohesiveLaw::Linear { slope } => slope,
        }
    }

    fn g2(&self, s: T) -> T {
        match *self {
            CohesiveLaw::Exponential { kappa, lambda } => {
                -kappa * lambda * lambda * (-lambda * s).exp()
            }
            CohesiveLaw::Rational { kappa, lambda } => {
                -T::lit(2.0) * kappa * lambda / (T::one() + lambda * s).powi(3)
            }
            CohesiveLaw::Linear { .. } => T::zero(),
        }
    }

    fn g3(&self, s: T) -> T {
        match *self {
            CohesiveLaw::Exponential { kappa, lambda } => {
                kappa * lambda.powi(3) * (-lambda * s).exp()
            }
            CohesiveLaw::Rational { kappa, lambda } => {
                T::lit(6.0) * kappa * lambda * lambda / (T::one() + lambda * s).powi(4)
            }
            CohesiveLaw::Linear { .. } => T::zero(),
        }
    }

    fn gp0(&self) -> T {
        match *self {
            CohesiveLaw::Exponential { kappa, lambda } => kappa * lambda,
            CohesiveLaw::Rational { kappa, .. } => kappa,
            CohesiveLaw::Linear { slope } => slope,
        }
    }

    fn g2_sup(&self) -> T {
        match *self {
            CohesiveLaw::Exponential { kappa, lambda } => (kappa * lambda * lambda).abs(),
            CohesiveLaw::Rational { kappa, lambda } => (T::lit(2.0) * kappa * lambda).abs(),
            CohesiveLaw::Linear { .. } => T::zero(),
        }
    }

    fn g3_sup(&self) -> T {
        match *self {
            CohesiveLaw::Exponential { kappa, lambda } => (kappa * lambda.powi(3)).abs(),
            CohesiveLaw::Rational { kappa, lambda } => (T::lit(6.0) * kappa * lambda * lambda).abs(),
            CohesiveLaw::Linear { .. } => T::zero(),
        }
    }

    fn g_sup(&self) -> T {
        match *self {
            CohesiveLaw::Exponential { kappa, .. } => kappa,
            CohesiveLaw::Rational { kappa, lambda } => kappa / lambda,
            CohesiveLaw::Linear { .. } => T::infinity(),
        }
    }
}

/// The named reference laws shipped with the crate.
pub fn builtin_laws<T: Real>() -> Vec<(&'static str, CohesiveLaw<T>)> {
    vec![
        ("exponential", CohesiveLaw::exponential(T::one(), T::one())),
        ("rational", CohesiveLaw::rational(T::one(), T::one())),
        ("exponential-soft", CohesiveLaw::exponential(T::lit(0.5), T::lit(0.5))),
        ("rational-soft", CohesiveLaw::rational(T::lit(0.5), T::lit(0.25))),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    ZeroAtOrigin,
    StrictlyIncreasing,
    Concave,
    Bounded,
    PositiveInitialSlope,
    DerivativeNorms,
    StripHeight,
    FiniteDifferences,
}

impl Axiom {
    pub fn label(self) -> &'static str {
        match self {
            Axiom::ZeroAtOrigin => "g(0)=0",
            Axiom::StrictlyIncreasing => "monotone",
            Axiom::Concave => "concave",
            Axiom::Bounded => "bounded",
            Axiom::PositiveInitialSlope => "g'(0+)>0",
            Axiom::DerivativeNorms => "sup norms",
            Axiom::StripHeight => "2 A sup|g''| < 1",
            Axiom::FiniteDifferences => "derivative consistency",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<AxiomCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, axiom: Axiom) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }

    pub fn failures(&self) -> Vec<Axiom> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.axiom).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ValidationOptions {
    /// Sampling interval is `[0, s_max]`.
    pub s_max: f64,
    pub samples: usize,
    /// Finite-difference cross-check runs on `[fd_lo, fd_hi]`.
    pub fd_lo: f64,
    pub fd_hi: f64,
    pub fd_rel_tol: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            s_max: 20.0,
            samples: 4001,
            fd_lo: 0.01,
            fd_hi: 10.0,
            fd_rel_tol: 1e-6,
        }
    }
}

/// Checks every admissibility axiom by dense sampling on `[0, s_max]`, plus
/// the strip condition `2 A sup|g''| < 1` against height `a`.
pub fn validate<T: Real, L: Density<T> + ?Sized>(
    law: &L,
    a: T,
    opts: &ValidationOptions,
) -> Result<ValidationReport> {
    if !(a > T::zero()) {
        return Err(Error::InvalidArgument(format!("strip height must be positive, got {a}")));
    }
    let n = opts.samples.max(3);
    let smax = T::lit(opts.s_max);
    let samples: Vec<T> = (0..n)
        .map(|k| smax * T::from_usize(k).unwrap() / T::from_usize(n - 1).unwrap())
        .collect();

    let finite = |axiom: Axiom, s: T, v: T| -> Result<T> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidLaw { axiom: axiom.label(), at: s.to_f64_lossy() })
        }
    };

    let mut checks = Vec::new();

    let g0 = finite(Axiom::ZeroAtOrigin, T::zero(), law.g(T::zero()))?;
    checks.push(AxiomCheck {
        axiom: Axiom::ZeroAtOrigin,
        passed: g0 == T::zero(),
        detail: format!("g(0) = {g0}"),
    });

    let mut min_g1 = T::infinity();
    let mut max_g2 = T::neg_infinity();
    let mut max_g = T::zero();
    let mut max_abs_g2 = T::zero();
    let mut max_abs_g3 = T::zero();
    for &s in &samples {
        let g = finite(Axiom::Bounded, s, law.g(s))?;
        let g1 = finite(Axiom::StrictlyIncreasing, s, law.g1(s))?;
        let g2 = finite(Axiom::Concave, s, law.g2(s))?;
        let g3 = finite(Axiom::DerivativeNorms, s, law.g3(s))?;
        max_g = max_g.max(g);
        min_g1 = min_g1.min(g1);
        if s > T::zero() {
            max_g2 = max_g2.max(g2);
            max_abs_g3 = max_abs_g3.max(g3.abs());
        }
        max_abs_g2 = max_abs_g2.max(g2.abs());
    }

    checks.push(AxiomCheck {
        axiom: Axiom::StrictlyIncreasing,
        passed: min_g1 > T::zero(),
        detail: format!("min sampled g' = {min_g1:e}"),
    });
    checks.push(AxiomCheck {
        axiom: Axiom::Concave,
        passed: max_g2 <= T::zero(),
        detail: format!("max sampled g'' = {max_g2:e}"),
    });
    let g_sup = law.g_sup();
    checks.push(AxiomCheck {
        axiom: Axiom::Bounded,
        passed: g_sup.is_finite() && max_g <= g_sup * (T::one() + T::epsilon() * T::lit(16.0)),
        detail: format!("sup g = {g_sup}, max sampled g = {max_g}"),
    });
    let gp0 = law.gp0();
    checks.push(AxiomCheck {
        axiom: Axiom::PositiveInitialSlope,
        passed: gp0.is_finite() && gp0 > T::zero(),
        detail: format!("g'(0+) = {gp0}"),
    });
    let slack = T::one() + T::epsilon() * T::lit(64.0);
    let (g2s, g3s) = (law.g2_sup(), law.g3_sup());
    checks.push(AxiomCheck {
        axiom: Axiom::DerivativeNorms,
        passed: max_abs_g2 <= g2s * slack && max_abs_g3 <= g3s * slack,
        detail: format!(
            "sampled |g''| <= {max_abs_g2} (declared {g2s}), |g'''| <= {max_abs_g3} (declared {g3s})"
        ),
    });
    let strip = T::lit(2.0) * a * g2s;
    checks.push(AxiomCheck {
        axiom: Axiom::StripHeight,
        passed: strip < T::one(),
        detail: format!("2 A sup|g''| = {strip}"),
    });

    // Central differences of each coded derivative against the next one. The
    // allowance is relative, plus the rounding noise of the difference quotient.
    let m = 200usize;
    let (lo, hi) = (opts.fd_lo, opts.fd_hi);
    let step = T::epsilon().cbrt();
    let rel = T::lit(opts.fd_rel_tol).max(T::lit(32.0) * step * step);
    let floor = T::lit(1e-8) * gp0.abs().max(T::lit(1e-300));
    let mut worst = T::zero();
    for k in 0..=m {
        let s = T::lit(lo + (hi - lo) * k as f64 / m as f64);
        let h = step * s.max(T::one());
        let two_h = h + h;
        let fns: [(T, T, T); 3] = [
            (law.g(s + h), law.g(s - h), law.g1(s)),
            (law.g1(s + h), law.g1(s - h), law.g2(s)),
            (law.g2(s + h), law.g2(s - h), law.g3(s)),
        ];
        for (fp, fm, coded) in fns {
            let fd = finite(Axiom::FiniteDifferences, s, (fp - fm) / two_h)?;
            let noise = T::lit(64.0) * T::epsilon() * fp.abs().max(fm.abs()) / h;
            let allowed = rel * coded.abs().max(floor) + noise;
            worst = worst.max((fd - coded).abs() / allowed);
        }
    }
    checks.push(AxiomCheck {
        axiom: Axiom::FiniteDifferences,
        passed: worst <= T::one(),
        detail: format!("worst finite-difference mismatch is {worst:e} of the allowance"),
    });

    Ok(ValidationReport { checks })
}

/// Default absolute tolerance on the stationarity equation in [`scalar_prox`].
pub const PROX_ROOT_TOL: f64 = 1e-12;

/// Unique minimizer of `(s - w)^2 / (2 tau) + g(2|s|)`.
///
/// Requires `4 tau sup|g''| < 1`, which makes the objective strongly convex.
/// The stick test `|w| <= 2 tau g'(0+)` is evaluated in closed form before
/// any root finding, so stuck nodes come back as exact zeros.
pub fn scalar_prox<T: Real, L: Density<T> + ?Sized>(law: &L, w: T, tau: T) -> Result<T> {
    scalar_prox_tol(law, w, tau, T::lit(PROX_ROOT_TOL))
}

pub fn scalar_prox_tol<T: Real, L: Density<T> + ?Sized>(
    law: &L,
    w: T,
    tau: T,
    root_tol: T,
) -> Result<T> {
    let two = T::lit(2.0);
    let product = T::lit(4.0) * tau * law.g2_sup();
    if !(tau > T::zero()) || !(product < T::one()) {
        return Err(Error::StepTooLarge { product: product.to_f64_lossy() });
    }
    let a = w.abs();
    if a <= two * tau * law.gp0() {
        return Ok(T::zero());
    }

    // h(s) = (s - a)/tau + 2 g'(2s) is strictly increasing on [0, a] with
    // h(0) < 0 < h(a).
    let h = |s: T| (s - a) / tau + two * law.g1(two * s);
    let dh = |s: T| T::one() / tau + T::lit(4.0) * law.g2(two * s);
    let (mut lo, mut hi) = (T::zero(), a);
    let mut s = (a - two * tau * law.g1(two * a)).max(T::zero()).min(a);
    if s <= lo || s >= hi {
        s = (lo + hi) / two;
    }
    let scale = a.max(T::one());
    for _ in 0..200 {
        let hs = h(s);
        if (hs * tau).abs() <= root_tol * scale {
            break;
        }
        if hs < T::zero() {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - hs / dh(s);
        let next = if newton > lo && newton < hi { newton } else { (lo + hi) / two };
        if next == s || hi - lo <= T::epsilon() * scale {
            s = next;
            break;
        }
        s = next;
    }
    Ok(if w < T::zero() { -s } else { s })
}
