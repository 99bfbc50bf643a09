//! The power datum `g` that makes the integrability threshold sharp.
//!
//! At `λ = λ(m)` the function `z = r^{−α_m} − 1` solves the Hardy problem
//! with datum `g`. The datum lies in `L^m` while `z` just misses `L^{q̄}`,
//! because `α_m q̄ = N`.

use serde::Serialize;

use super::shifted_power;
use crate::constants::ExponentBox;
use crate::error::{Error, Result};
use crate::numerics::{fit_line, integrate_log, Tolerance};

/// Partial integrals `∫_{ε_k}^1` along a decreasing ladder of cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyTail {
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    /// `values[k+1] − values[k]`.
    pub increments: Vec<f64>,
    /// Increments shrink and the last is below `1e-3` of the value.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessReport {
    pub alpha_m: f64,
    pub q_bar: f64,
    pub lambda: f64,
    /// `N κ_N ∫ |g|^m r^{N−1}`.
    pub datum: CauchyTail,
    /// `N κ_N ∫ |z|^{q̄} r^{N−1}` for `z = r^{−α_m} − 1`.
    pub critical: CauchyTail,
    /// Slope of the critical integrals against `ln(1/ε)`.
    pub critical_slope: f64,
    pub critical_r_squared: f64,
    /// The slope `N κ_N` of the logarithmic blow-up.
    pub predicted_slope: f64,
    /// Same integrals for `r^{−α} − 1` with the given `α < α_m`.
    pub subcritical_alpha: f64,
    pub subcritical: CauchyTail,
}

const TOL: Tolerance = Tolerance::new(0.0, 1e-12).with_max_intervals(4000);

fn ladder<F: Fn(f64) -> f64>(f: F, epsilons: &[f64]) -> CauchyTail {
    let mut values = Vec::with_capacity(epsilons.len());
    let mut upper = 1.0;
    let mut acc = 0.0;
    for &e in epsilons {
        acc += integrate_log(&f, e, upper, TOL).value;
        values.push(acc);
        upper = e;
    }
    let increments: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let shrinking = increments.windows(2).all(|w| w[1].abs() <= w[0].abs());
    let last_ok = match (increments.last(), values.last()) {
        (Some(d), Some(v)) => d.abs() <= 1e-3 * v.abs().max(f64::MIN_POSITIVE),
        _ => false,
    };
    CauchyTail {
        epsilons: epsilons.to_vec(),
        values,
        increments,
        converged: shrinking && last_ok,
    }
}

/// Integrability of `g` and blow-up of `‖z‖_{L^{q̄}(W ∖ W_ε)}` along
/// `epsilons` (decreasing, in `(0, 1)`), at `λ` (default `λ(m)` with `B = 0`).
pub fn sharpness_experiment(
    bx: &ExponentBox,
    lambda: Option<f64>,
    epsilons: &[f64],
    subcritical_alpha: f64,
) -> Result<SharpnessReport> {
    bx.validate()?;
    if epsilons.len() < 3 {
        return Err(Error::insufficient("need at least 3 cutoffs"));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) || epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::invalid("cutoffs must decrease inside (0, 1)"));
    }
    let (n, p, m, kappa) = (bx.n, bx.p, bx.m, bx.kappa_n);
    let window = bx.p_star_dual();
    if !(m > window) {
        return Err(Error::domain(format!(
            "m = {m} must lie in ((p*)′, N/p) = ({window}, {})",
            n / p
        )));
    }
    let alpha_m = bx.alpha_m();
    if !(subcritical_alpha > 0.0 && subcritical_alpha < alpha_m) {
        return Err(Error::domain(format!("subcritical α must lie in (0, α_m = {alpha_m})")));
    }
    let q_bar = bx.q_bar();
    let lambda = match lambda {
        Some(l) => l,
        None => crate::constants::critical_lambda(m, bx, 0.0)?,
    };
    let w = n * kappa;
    let datum = ladder(
        |r| w * shifted_power(lambda, alpha_m, p, r).abs().powf(m) * r.powf(n - 1.0),
        epsilons,
    );
    let z = |alpha: f64, r: f64| (-alpha * r.ln()).exp_m1();
    let critical = ladder(|r| w * z(alpha_m, r).powf(q_bar) * r.powf(n - 1.0), epsilons);
    let logs: Vec<f64> = epsilons.iter().map(|e| -e.ln()).collect();
    let fit = fit_line(&logs, &critical.values).ok_or_else(|| Error::insufficient("degenerate ladder"))?;
    let subcritical = ladder(|r| w * z(subcritical_alpha, r).powf(q_bar) * r.powf(n - 1.0), epsilons);
    Ok(SharpnessReport {
        alpha_m,
        q_bar,
        lambda,
        datum,
        critical,
        critical_slope: fit.slope,
        critical_r_squared: fit.r_squared,
        predicted_slope: w,
        subcritical_alpha,
        subcritical,
    })
}

/// `10^{−2}, …, 10^{−12}`.
pub fn default_ladder() -> Vec<f64> {
    (2..=12).map(|k| 10f64.powi(-k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn benchmark_sharpness() {
        let kappa = PI * PI / 2.0;
        let bx = ExponentBox::unit_ball(4.0, 2.0, 1.5, kappa).unwrap();
        let rep = sharpness_experiment(&bx, None, &default_ladder(), 0.5).unwrap();
        assert!((rep.alpha_m - 2.0 / 3.0).abs() < 1e-14);
        assert!((rep.q_bar - 6.0).abs() < 1e-12);
        assert!(rep.datum.converged, "{:?}", rep.datum);
        assert!(rep.subcritical.converged, "{:?}", rep.subcritical);
        assert!(!rep.critical.converged, "{:?}", rep.critical);
        assert!(rep.critical_r_squared > 0.99);
        assert!((rep.critical_slope / rep.predicted_slope - 1.0).abs() < 0.01);
    }
}
