//! Scalar constants of the Hardy-type problem: `Λ_N`, `B(∞)`, `λ(m)`,
//! `α_m`, the map `F(α)` with its maximizer and inverse branches, and the
//! classification of power solutions `r^{-α}` by integrability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect, golden_max};
use crate::serde_ext::extended;

/// Nonnegative continuous coefficient `β` of the gradient term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSpec {
    Zero,
    /// `β(t) = β₀ e^{-κ t}`.
    Exponential { beta0: f64, rate: f64 },
    /// `β(t) = β₀ (1 + t)^{-s}`.
    PowerTail { beta0: f64, s: f64 },
    /// Linear interpolation of `(t_k, β_k)`, `t_0 = 0`, constant past the
    /// last node.
    Tabulated { t: Vec<f64>, beta: Vec<f64> },
}

impl BetaSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            BetaSpec::Zero => Ok(()),
            BetaSpec::Exponential { beta0, rate } => {
                if !(beta0.is_finite() && *beta0 >= 0.0) {
                    return Err(Error::invalid("beta0 must be finite and nonnegative"));
                }
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::invalid("exponential rate must be positive"));
                }
                Ok(())
            }
            BetaSpec::PowerTail { beta0, s } => {
                if !(beta0.is_finite() && *beta0 >= 0.0) {
                    return Err(Error::invalid("beta0 must be finite and nonnegative"));
                }
                if !(s.is_finite() && *s >= 0.0) {
                    return Err(Error::invalid("power tail exponent must be nonnegative"));
                }
                Ok(())
            }
            BetaSpec::Tabulated { t, beta } => {
                if t.len() != beta.len() || t.is_empty() {
                    return Err(Error::invalid("tabulated beta: t and beta differ in length"));
                }
                if t[0] != 0.0 {
                    return Err(Error::invalid("tabulated beta must start at t = 0"));
                }
                if t.windows(2).any(|w| !(w[1] > w[0])) || t.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("tabulated beta: t must increase strictly"));
                }
                if beta.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
                    return Err(Error::invalid("tabulated beta values must be nonnegative"));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BetaSpec::Zero => true,
            BetaSpec::Exponential { beta0, .. } | BetaSpec::PowerTail { beta0, .. } => *beta0 == 0.0,
            BetaSpec::Tabulated { beta, .. } => beta.iter().all(|b| *b == 0.0),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            BetaSpec::Zero => 0.0,
            BetaSpec::Exponential { beta0, rate } => beta0 * (-rate * t).exp(),
            BetaSpec::PowerTail { beta0, s } => beta0 * (1.0 + t).powf(-s),
            BetaSpec::Tabulated { t: ts, beta } => {
                let k = ts.partition_point(|x| *x <= t);
                if k >= ts.len() {
                    return beta[ts.len() - 1];
                }
                let w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
                beta[k - 1] * (1.0 - w) + beta[k] * w
            }
        }
    }

    /// `∫_0^∞ β(t)^e dt` in closed form; `+∞` when divergent.
    pub fn power_integral(&self, e: f64) -> f64 {
        match self {
            BetaSpec::Zero => 0.0,
            _ if self.is_zero() => 0.0,
            BetaSpec::Exponential { beta0, rate } => beta0.powf(e) / (rate * e),
            BetaSpec::PowerTail { beta0, s } => {
                let k = s * e;
                if k > 1.0 {
                    beta0.powf(e) / (k - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            BetaSpec::Tabulated { t, beta } => {
                if beta[beta.len() - 1] > 0.0 {
                    return f64::INFINITY;
                }
                let mut total = 0.0;
                for k in 0..t.len() - 1 {
                    let (a, b) = (beta[k], beta[k + 1]);
                    let dt = t[k + 1] - t[k];
                    total += if a == b {
                        a.powf(e) * dt
                    } else {
                        // ∫ (a + slope τ)^e dτ over the segment
                        (b.powf(e + 1.0) - a.powf(e + 1.0)) / ((b - a) / dt * (e + 1.0))
                    };
                }
                total
            }
        }
    }
}

/// Exponents and geometry `(N, p, q, m, σ, |Ω|, κ_N)` with
/// `0 < p − 1 < q ≤ p < N` and `1 < m < N/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentBox {
    pub n: f64,
    pub p: f64,
    pub q: f64,
    pub m: f64,
    #[serde(with = "extended")]
    pub sigma: f64,
    pub omega_volume: f64,
    pub kappa_n: f64,
}

impl ExponentBox {
    pub fn new(n: f64, p: f64, q: f64, m: f64, sigma: f64, omega_volume: f64, kappa_n: f64) -> Result<Self> {
        let b = ExponentBox {
            n,
            p,
            q,
            m,
            sigma,
            omega_volume,
            kappa_n,
        };
        b.validate()?;
        Ok(b)
    }

    /// `q = p`, `σ = ∞`, `|Ω| = κ_N`: the unit Wulff ball with no gradient
    /// exponent gap.
    pub fn unit_ball(n: f64, p: f64, m: f64, kappa_n: f64) -> Result<Self> {
        ExponentBox::new(n, p, p, m, f64::INFINITY, kappa_n, kappa_n)
    }

    pub fn validate(&self) -> Result<()> {
        let ExponentBox {
            n,
            p,
            q,
            m,
            sigma,
            omega_volume,
            kappa_n,
        } = *self;
        if !(n >= 2.0 && n.is_finite()) {
            return Err(Error::domain(format!("N = {n} must be a finite real ≥ 2")));
        }
        if !(p > 1.0 && p < n) {
            return Err(Error::domain(format!("p = {p} must lie in (1, N)")));
        }
        if !(q > p - 1.0 && q <= p) {
            return Err(Error::domain(format!("q = {q} must lie in (p - 1, p]")));
        }
        if !(m > 1.0 && m < n / p) {
            return Err(Error::domain(format!("m = {m} must lie in (1, N/p)")));
        }
        if !(sigma >= 1.0) {
            return Err(Error::domain(format!("sigma = {sigma} must be ≥ 1")));
        }
        if !(omega_volume > 0.0 && omega_volume.is_finite()) {
            return Err(Error::domain("|Ω| must be positive"));
        }
        if !(kappa_n > 0.0 && kappa_n.is_finite()) {
            return Err(Error::domain("κ_N must be positive"));
        }
        Ok(())
    }

    pub fn hardy_constant(&self) -> f64 {
        ((self.n - self.p) / self.p).powf(self.p)
    }

    pub fn alpha_m(&self) -> f64 {
        alpha_m(self.n, self.p, self.m)
    }

    /// `q̄ = Nm(p−1)/(N−mp)`.
    pub fn q_bar(&self) -> f64 {
        self.n * self.m * (self.p - 1.0) / (self.n - self.m * self.p)
    }

    /// `(p*)′ = Np/(Np − N + p)`.
    pub fn p_star_dual(&self) -> f64 {
        p_star_dual(self.n, self.p)
    }

    pub fn f(&self, alpha: f64) -> f64 {
        f_alpha(self.n, self.p, alpha)
    }

    /// `(|Ω|/κ_N)^{1/N}`, the radius of the Wulff ball of measure `|Ω|`.
    pub fn radius(&self) -> f64 {
        (self.omega_volume / self.kappa_n).powf(1.0 / self.n)
    }
}

/// `π^{N/2} / Γ(N/2 + 1)`, also for non-integer `N`.
pub fn euclidean_ball_volume(n: f64) -> f64 {
    std::f64::consts::PI.powf(n / 2.0) / statrs::function::gamma::gamma(n / 2.0 + 1.0)
}

/// `Λ_N = ((N − p)/p)^p`.
pub fn hardy_constant(n: f64, p: f64) -> Result<f64> {
    if !(p > 1.0 && p < n) {
        return Err(Error::domain(format!("p = {p} must lie in (1, N = {n})")));
    }
    Ok(((n - p) / p).powf(p))
}

/// `F(α) = −(p−1)α^p + (N−p)α^{p−1}`.
pub fn f_alpha(n: f64, p: f64, alpha: f64) -> f64 {
    alpha.powf(p - 1.0) * ((n - p) - (p - 1.0) * alpha)
}

/// `F′(α) = (p−1) α^{p−2} ((N−p) − pα)`.
pub fn f_alpha_prime(n: f64, p: f64, alpha: f64) -> f64 {
    (p - 1.0) * alpha.powf(p - 2.0) * ((n - p) - p * alpha)
}

/// `α_m = (N − mp)/(m(p − 1))`.
pub fn alpha_m(n: f64, p: f64, m: f64) -> f64 {
    (n - m * p) / (m * (p - 1.0))
}

pub fn p_star_dual(n: f64, p: f64) -> f64 {
    n * p / (n * p - n + p)
}

/// `B(∞) = (|Ω|/κ_N)^{(p−q)/N} (∫_0^∞ β^{1/(q−p+1)})^{q−p+1}`; `+∞` when
/// the integral diverges.
pub fn b_infinity(beta: &BetaSpec, bx: &ExponentBox) -> Result<f64> {
    beta.validate()?;
    bx.validate()?;
    if beta.is_zero() {
        return Ok(0.0);
    }
    let gap = bx.q - (bx.p - 1.0);
    let integral = beta.power_integral(1.0 / gap);
    if integral.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let prefactor = (bx.omega_volume / bx.kappa_n).powf((bx.p - bx.q) / bx.n);
    Ok(prefactor * integral.powf(gap))
}

/// `λ(m) = e^{−B} N(m−1)(N−mp)^{p−1} / (m^p (p−1)^{p−1})`; `0` (with a
/// warning) when `B = ∞`.
pub fn critical_lambda(m: f64, bx: &ExponentBox, b_inf: f64) -> Result<f64> {
    let (n, p) = (bx.n, bx.p);
    if !(m > 1.0 && m < n / p) {
        return Err(Error::domain(format!("m = {m} must lie in (1, N/p = {})", n / p)));
    }
    if b_inf.is_nan() || b_inf < 0.0 {
        return Err(Error::invalid("B(∞) must be nonnegative"));
    }
    if b_inf.is_infinite() {
        log::warn!("B(∞) diverges; the critical threshold collapses to 0");
        return Ok(0.0);
    }
    let core = n * (m - 1.0) * (n - m * p).powf(p - 1.0) / (m.powf(p) * (p - 1.0).powf(p - 1.0));
    Ok((-b_inf).exp() * core)
}

/// Integrability class of the power solution `r^{-α}` on the Wulff ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `α < α_m`: finite energy and `L^{q̄}`.
    SobolevAndLebesgue,
    /// `α_m ≤ α < (N−p)/p`: finite energy, not in `L^{q̄}`.
    SobolevNotLebesgue,
    /// `α ≥ (N−p)/p`: infinite energy.
    NotSobolev,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::SobolevAndLebesgue => "W^{1,p} ∩ L^q̄",
            Regime::SobolevNotLebesgue => "W^{1,p} ∖ L^q̄",
            Regime::NotSobolev => "∉ W^{1,p}",
        }
    }
}

pub fn classify(alpha: f64, bx: &ExponentBox) -> Regime {
    if alpha >= (bx.n - bx.p) / bx.p {
        Regime::NotSobolev
    } else if alpha >= bx.alpha_m() {
        Regime::SobolevNotLebesgue
    } else {
        Regime::SobolevAndLebesgue
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FRoots {
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_regime: Regime,
    pub upper_regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FAnalysis {
    pub argmax: f64,
    pub max: f64,
    /// Maximizer found numerically: golden-section bracket, then bisection
    /// on the sign of `F′`.
    pub numeric_argmax: f64,
    pub numeric_max: f64,
    /// `(N−p)/(p−1)`, the positive zero of `F`.
    pub zero: f64,
    pub alpha_m: f64,
    pub q_bar: f64,
    pub roots: Option<FRoots>,
}

/// The landscape of `F` and, if asked, both solutions of `F(α) = λ`.
pub fn analyze_f(bx: &ExponentBox, lambda_query: Option<f64>) -> Result<FAnalysis> {
    bx.validate()?;
    let (n, p) = (bx.n, bx.p);
    let argmax = (n - p) / p;
    let zero = (n - p) / (p - 1.0);
    let (numeric_argmax, numeric_max) = maximize_f(n, p);
    let roots = match lambda_query {
        None => None,
        Some(lambda) => Some(invert_f(bx, lambda)?),
    };
    Ok(FAnalysis {
        argmax,
        max: bx.f(argmax),
        numeric_argmax,
        numeric_max,
        zero,
        alpha_m: bx.alpha_m(),
        q_bar: bx.q_bar(),
        roots,
    })
}

/// Numeric maximizer of `F` on `(0, (N−p)/(p−1))`.
///
/// Golden section alone cannot place a flat maximum closer than about
/// `√ε`, so its bracket is refined by bisection on the sign of `F′`.
pub fn maximize_f(n: f64, p: f64) -> (f64, f64) {
    let zero = (n - p) / (p - 1.0);
    let (g, _) = golden_max(|a| f_alpha(n, p, a), 0.0, zero, 1e-9);
    let width = 1e-6 * zero;
    let (mut lo, mut hi) = ((g - width).max(0.0), (g + width).min(zero));
    // widen if the coarse bracket missed the sign change
    while f_alpha_prime(n, p, lo) <= 0.0 && lo > 0.0 {
        lo = (lo - width).max(0.0);
    }
    while f_alpha_prime(n, p, hi) >= 0.0 && hi < zero {
        hi = (hi + width).min(zero);
    }
    let x = bisect(|a| f_alpha_prime(n, p, a), lo, hi, 0.0).unwrap_or(g);
    (x, f_alpha(n, p, x))
}

/// Both roots `α⁻ < (N−p)/p < α⁺` of `F(α) = λ` for `0 < λ < Λ_N`.
pub fn invert_f(bx: &ExponentBox, lambda: f64) -> Result<FRoots> {
    let (n, p) = (bx.n, bx.p);
    let cap = bx.hardy_constant();
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("λ = {lambda} must be positive")));
    }
    if lambda >= cap {
        return Err(Error::NoRealRoots(format!(
            "λ = {lambda} is not below the maximum Λ_N = {cap} of F"
        )));
    }
    let argmax = (n - p) / p;
    let zero = (n - p) / (p - 1.0);
    let g = |a: f64| f_alpha(n, p, a) - lambda;
    let lower = bisect(g, 0.0, argmax, 0.0)
        .ok_or_else(|| Error::NoRealRoots("no sign change on the rising branch".into()))?;
    let upper = bisect(g, argmax, zero, 0.0)
        .ok_or_else(|| Error::NoRealRoots("no sign change on the falling branch".into()))?;
    Ok(FRoots {
        lambda,
        lower,
        upper,
        lower_regime: classify(lower, bx),
        upper_regime: classify(upper, bx),
    })
}

/// Summary of all constants for one box and coefficient `β`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub hardy_constant: f64,
    #[serde(with = "extended")]
    pub b_infinity: f64,
    pub lambda_m: f64,
    pub alpha_m: f64,
    pub q_bar: f64,
    pub p_star_dual: f64,
    pub f_argmax: f64,
    pub roots: Option<FRoots>,
    pub alpha_m_regime: Regime,
}

pub fn constants_report(bx: &ExponentBox, beta: &BetaSpec, lambda_query: Option<f64>) -> Result<ConstantsReport> {
    let b = b_infinity(beta, bx)?;
    let lambda_m = critical_lambda(bx.m, bx, b)?;
    let analysis = analyze_f(bx, lambda_query)?;
    Ok(ConstantsReport {
        hardy_constant: bx.hardy_constant(),
        b_infinity: b,
        lambda_m,
        alpha_m: bx.alpha_m(),
        q_bar: bx.q_bar(),
        p_star_dual: bx.p_star_dual(),
        f_argmax: analysis.argmax,
        roots: analysis.roots,
        alpha_m_regime: classify(bx.alpha_m(), bx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench() -> ExponentBox {
        ExponentBox::unit_ball(4.0, 2.0, 1.5, 1.0).unwrap()
    }

    #[test]
    fn hardy_examples() {
        assert_eq!(hardy_constant(4.0, 2.0).unwrap(), 1.0);
        assert_eq!(hardy_constant(3.0, 2.0).unwrap(), 0.25);
        assert!(matches!(hardy_constant(3.0, 3.0), Err(Error::Domain(_))));
        assert!(hardy_constant(3.0, 1.0).is_err());
    }

    #[test]
    fn b_infinity_examples() {
        let bx = bench();
        assert_eq!(b_infinity(&BetaSpec::Zero, &bx).unwrap(), 0.0);
        let e = BetaSpec::Exponential { beta0: 1.0, rate: 1.0 };
        assert!((b_infinity(&e, &bx).unwrap() - 1.0).abs() < 1e-15);
        let bx = ExponentBox::new(4.0, 2.0, 1.5, 1.5, f64::INFINITY, 1.0, 1.0).unwrap();
        assert!((b_infinity(&e, &bx).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let slow = BetaSpec::PowerTail { beta0: 1.0, s: 0.5 };
        assert!(b_infinity(&slow, &bench()).unwrap().is_infinite());
    }

    #[test]
    fn tabulated_beta_integrates_exactly() {
        // hat function 0 → 2 → 0 on [0, 2]; ∫β^2 = 2·∫_0^1 (2t)^2 = 8/3
        let tab = BetaSpec::Tabulated {
            t: vec![0.0, 1.0, 2.0],
            beta: vec![0.0, 2.0, 0.0],
        };
        assert!((tab.power_integral(2.0) - 8.0 / 3.0).abs() < 1e-14);
        assert!((tab.eval(0.5) - 1.0).abs() < 1e-15);
        let open = BetaSpec::Tabulated { t: vec![0.0, 1.0], beta: vec![1.0, 0.5] };
        assert!(open.power_integral(1.0).is_infinite());
    }

    #[test]
    fn critical_lambda_examples() {
        let bx = bench();
        let l = critical_lambda(4.0 / 3.0, &bx, 0.0).unwrap();
        assert!((l - 1.0).abs() < 1e-14);
        let l = critical_lambda(1.5, &bx, 0.0).unwrap();
        assert!((l - 8.0 / 9.0).abs() < 1e-14);
        assert!((bx.f(bx.alpha_m()) - 8.0 / 9.0).abs() < 1e-14);
        assert_eq!(critical_lambda(1.5, &bx, f64::INFINITY).unwrap(), 0.0);
        assert!(critical_lambda(2.0, &bx, 0.0).is_err());
    }

    #[test]
    fn f_roots_and_regimes() {
        let bx = bench();
        let r = invert_f(&bx, 0.75).unwrap();
        assert!((r.lower - 0.5).abs() < 1e-12);
        assert!((r.upper - 1.5).abs() < 1e-12);
        assert_eq!(classify(0.5, &bx), Regime::SobolevAndLebesgue);
        assert_eq!(classify(0.8, &bx), Regime::SobolevNotLebesgue);
        assert_eq!(classify(1.5, &bx), Regime::NotSobolev);
        assert!(bx.f(2.0).abs() < 1e-15);
        assert!(matches!(invert_f(&bx, 1.0), Err(Error::NoRealRoots(_))));
        assert!(matches!(invert_f(&bx, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn numeric_maximizer() {
        for (n, p) in [(4.0, 2.0), (3.0, 1.5), (7.5, 3.2), (2.5, 1.1)] {
            let (a, f) = maximize_f(n, p);
            assert!((a - (n - p) / p).abs() < 1e-12, "{n} {p} {a}");
            assert!((f - hardy_constant(n, p).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_json() {
        let b: BetaSpec = serde_json::from_str(r#"{"kind":"exponential","beta0":1,"rate":2}"#).unwrap();
        assert_eq!(b, BetaSpec::Exponential { beta0: 1.0, rate: 2.0 });
        let z: BetaSpec = serde_json::from_str(r#"{"kind":"zero"}"#).unwrap();
        assert!(z.is_zero());
    }
}
