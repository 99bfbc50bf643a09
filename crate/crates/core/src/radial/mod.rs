//! The prototype Hardy problem on a Wulff ball in radial form.
//!
//! For `v(x) = φ(H°(x))` the anisotropic operator reduces to the radial
//! p-Laplacian, because `H(∇H°) = 1`. The solver works on
//! `−r^{1−N}(r^{N−1}Φ_ε(v′))′ = T_n(β(|v|)|v′|^q) + T_n(λ r^{−p}|v|^{p−2}v) + T_n(f)`
//! with `v(R) = 0` and zero flux at the center (or at an inner cutoff).

mod sharpness;
mod solver;
mod verify;

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::{BetaSpec, ExponentBox};
use crate::error::{Error, Result};
use crate::numerics::{integrate, Tolerance};
use crate::rearrangement::{format_f64, MonotoneProfile, PiecewisePower};
use crate::serde_ext::extended_opt;

pub use sharpness::{default_ladder, sharpness_experiment, CauchyTail, SharpnessReport};
pub use solver::{solve_radial_bvp, MeshControl};
pub use verify::{
    default_tail_grid, tail_gradient_bound, verify_lorentz_estimates, verify_talenti_bounds,
    LorentzReport, TailReport, TalentiReport, INNER_FRACTION,
};

/// A radial source term `f(r)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Zero,
    /// `f(r) = c r^{−γ}`.
    Power { c: f64, gamma: f64 },
    /// Linear interpolation of `(r_k, f_k)`, constant beyond the ends.
    Tabulated { r: Vec<f64>, f: Vec<f64> },
    /// `λ((z+1)^{p−1} − z^{p−1})/r^p` with `z = r^{−α} − 1`: the datum for
    /// which `z` solves the Hardy problem with coefficient `λ`.
    ShiftedPower { lambda: f64, alpha: f64, p: f64 },
    /// Arbitrary closure, e.g. for manufactured solutions; not serializable.
    #[serde(skip)]
    Custom(SourceFn),
}

/// Shared closure `r ↦ f(r)`.
#[derive(Clone)]
pub struct SourceFn(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl SourceFn {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        SourceFn(Arc::new(f))
    }
}

impl fmt::Debug for SourceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SourceFn(..)")
    }
}

impl fmt::Debug for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Zero => f.write_str("Zero"),
            SourceSpec::Power { c, gamma } => write!(f, "Power {{ c: {c}, gamma: {gamma} }}"),
            SourceSpec::Tabulated { r, .. } => write!(f, "Tabulated({} nodes)", r.len()),
            SourceSpec::ShiftedPower { lambda, alpha, p } => {
                write!(f, "ShiftedPower {{ lambda: {lambda}, alpha: {alpha}, p: {p} }}")
            }
            SourceSpec::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl PartialEq for SourceSpec {
    fn eq(&self, other: &Self) -> bool {
        use SourceSpec::*;
        match (self, other) {
            (Zero, Zero) => true,
            (Power { c: a, gamma: b }, Power { c: x, gamma: y }) => a == x && b == y,
            (Tabulated { r: a, f: b }, Tabulated { r: x, f: y }) => a == x && b == y,
            (
                ShiftedPower { lambda: a, alpha: b, p: c },
                ShiftedPower { lambda: x, alpha: y, p: z },
            ) => a == x && b == y && c == z,
            (Custom(a), Custom(b)) => Arc::ptr_eq(&a.0, &b.0),
            _ => false,
        }
    }
}

const SOURCE_TOL: Tolerance = Tolerance::new(0.0, 1e-12).with_max_intervals(2000);

/// `T_n(s) = max(−n, min(s, n))`; identity when `n` is `None`.
pub fn truncate(s: f64, n: Option<f64>) -> f64 {
    match n {
        Some(n) => s.clamp(-n, n),
        None => s,
    }
}

impl SourceSpec {
    pub fn validate(&self, n: f64) -> Result<()> {
        match self {
            SourceSpec::Zero | SourceSpec::Custom(_) => Ok(()),
            SourceSpec::Power { c, gamma } => {
                if !c.is_finite() || !gamma.is_finite() {
                    return Err(Error::invalid("power source needs finite c and gamma"));
                }
                if *gamma >= n {
                    return Err(Error::invalid(format!(
                        "power source r^-{gamma} is not integrable in dimension {n}"
                    )));
                }
                Ok(())
            }
            SourceSpec::Tabulated { r, f } => {
                if r.len() != f.len() || r.is_empty() {
                    return Err(Error::invalid("tabulated source: r and f differ in length"));
                }
                if r.windows(2).any(|w| !(w[1] > w[0])) || r.iter().chain(f).any(|x| !x.is_finite()) {
                    return Err(Error::invalid("tabulated source: r must increase, entries finite"));
                }
                Ok(())
            }
            SourceSpec::ShiftedPower { lambda, alpha, p } => {
                if !(lambda.is_finite() && *lambda >= 0.0 && *alpha > 0.0 && *p > 1.0) {
                    return Err(Error::invalid("shifted power source needs λ ≥ 0, α > 0, p > 1"));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SourceSpec::Zero => true,
            SourceSpec::Power { c, .. } => *c == 0.0,
            SourceSpec::Tabulated { f, .. } => f.iter().all(|x| *x == 0.0),
            SourceSpec::ShiftedPower { lambda, .. } => *lambda == 0.0,
            SourceSpec::Custom(_) => false,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Power { c, gamma } => {
                if *gamma == 0.0 {
                    *c
                } else {
                    c * r.powf(-gamma)
                }
            }
            SourceSpec::Tabulated { r: rs, f } => {
                let k = rs.partition_point(|x| *x <= r);
                if k == 0 {
                    f[0]
                } else if k == rs.len() {
                    f[rs.len() - 1]
                } else {
                    let w = (r - rs[k - 1]) / (rs[k] - rs[k - 1]);
                    f[k - 1] * (1.0 - w) + f[k] * w
                }
            }
            SourceSpec::ShiftedPower { lambda, alpha, p } => shifted_power(*lambda, *alpha, *p, r),
            SourceSpec::Custom(g) => (g.0)(r),
        }
    }

    /// `∫_a^b r^{N−1} T_n(f(r)) dr`.
    pub fn cv_integral(&self, a: f64, b: f64, n: f64, trunc: Option<f64>) -> f64 {
        match self {
            SourceSpec::Zero => 0.0,
            SourceSpec::Power { c, gamma } => {
                let (v, _) = truncated_power_cv(c.abs(), *gamma, a, b, n, trunc);
                c.signum() * v
            }
            _ => {
                let f = |r: f64| r.powf(n - 1.0) * truncate(self.eval(r), trunc);
                integrate(f, a, b, SOURCE_TOL).value
            }
        }
    }

    /// Decreasing rearrangement of `|f|` on the Wulff ball of radius `R`:
    /// exact for power sources, a fine sampled step function otherwise.
    pub fn rearrangement(&self, n: f64, kappa: f64, radius: f64) -> Result<MonotoneProfile> {
        let total = kappa * radius.powf(n);
        match self {
            SourceSpec::Zero => MonotoneProfile::steps(&[total], &[0.0]),
            SourceSpec::Power { c, gamma } if *gamma >= 0.0 => {
                // f*(s) = |c| (s/κ)^{−γ/N}
                MonotoneProfile::power(c.abs() * kappa.powf(gamma / n), -gamma / n, total)
            }
            _ => {
                let cells = 20_000;
                let mut vals: Vec<(f64, f64)> = Vec::with_capacity(cells);
                for i in 0..cells {
                    let a = radius * (i as f64 / cells as f64).powi(2);
                    let b = radius * ((i + 1) as f64 / cells as f64).powi(2);
                    let vol = (b.powf(n) - a.powf(n)) / n;
                    let mean = self.cv_integral_abs(a, b, n) / vol;
                    vals.push((mean, n * kappa * vol));
                }
                vals.sort_by(|x, y| y.0.total_cmp(&x.0));
                let mut breaks = Vec::with_capacity(cells);
                let mut values = Vec::with_capacity(cells);
                let mut s = 0.0;
                for (v, w) in vals {
                    s += w;
                    breaks.push(s);
                    values.push(v);
                }
                MonotoneProfile::steps(&breaks, &values)
            }
        }
    }

    fn cv_integral_abs(&self, a: f64, b: f64, n: f64) -> f64 {
        let f = |r: f64| r.powf(n - 1.0) * self.eval(r).abs();
        integrate(f, a, b, SOURCE_TOL).value
    }
}

/// `λ r^{−α(p−1)−p} (1 − (1 − r^α)^{p−1})`, written with `expm1`/`ln_1p`
/// so that small `r^α` keeps its digits.
pub fn shifted_power(lambda: f64, alpha: f64, p: f64, r: f64) -> f64 {
    let ra = r.powf(alpha);
    let bracket = if ra >= 1.0 {
        1.0
    } else {
        -((p - 1.0) * (-ra).ln_1p()).exp_m1()
    };
    lambda * r.powf(-alpha * (p - 1.0) - p) * bracket
}

/// `∫_a^b r^{N−1} min(n, c r^{−γ}) dr` for `c ≥ 0`, and its derivative in `c`.
pub(crate) fn truncated_power_cv(c: f64, gamma: f64, a: f64, b: f64, n: f64, trunc: Option<f64>) -> (f64, f64) {
    if c == 0.0 || b <= a {
        return (0.0, 0.0);
    }
    let plain = |lo: f64, hi: f64| {
        let k = n - gamma;
        if k == 0.0 {
            (hi / lo).ln()
        } else {
            (hi.powf(k) - lo.powf(k)) / k
        }
    };
    let capped = |cap: f64, lo: f64, hi: f64| cap * (hi.powf(n) - lo.powf(n)) / n;
    let Some(cap) = trunc else {
        let w = plain(a, b);
        return (c * w, w);
    };
    if gamma == 0.0 {
        return if c > cap {
            (capped(cap, a, b), 0.0)
        } else {
            let w = plain(a, b);
            (c * w, w)
        };
    }
    // c r^{−γ} = cap at r*
    let rstar = (c / cap).powf(1.0 / gamma);
    let rs = rstar.clamp(a, b);
    if gamma > 0.0 {
        // truncated below r*
        let w = plain(rs, b);
        (capped(cap, a, rs) + c * w, w)
    } else {
        // truncated above r*
        let w = plain(a, rs);
        (c * w + capped(cap, rs, b), w)
    }
}

/// Data of the radial problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    #[serde(rename = "box")]
    pub bx: ExponentBox,
    pub lambda: f64,
    pub beta: BetaSpec,
    pub source: SourceSpec,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Cap `n` of the truncation `T_n`; `None` means no truncation.
    #[serde(default, with = "extended_opt", skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
}

fn default_radius() -> f64 {
    1.0
}

impl ProblemParams {
    pub fn new(bx: ExponentBox, lambda: f64, beta: BetaSpec, source: SourceSpec) -> Self {
        ProblemParams {
            bx,
            lambda,
            beta,
            source,
            radius: 1.0,
            truncation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bx.validate()?;
        self.beta.validate()?;
        self.source.validate(self.bx.n)?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid("λ must be finite and nonnegative"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::invalid("radius must be positive"));
        }
        if let Some(n) = self.truncation {
            if !(n > 0.0) {
                return Err(Error::invalid("truncation level must be positive"));
            }
        }
        let ball = self.bx.kappa_n * self.radius.powf(self.bx.n);
        if (ball - self.bx.omega_volume).abs() > 1e-9 * ball {
            log::warn!(
                "|Ω| = {} differs from κ_N R^N = {ball}; the geometric factor of B(∞) uses |Ω|",
                self.bx.omega_volume
            );
        }
        Ok(())
    }

    /// `|Ω| = κ_N R^N` of the solver domain.
    pub fn ball_measure(&self) -> f64 {
        self.bx.kappa_n * self.radius.powf(self.bx.n)
    }
}

/// Solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub newton_iterations: usize,
    pub picard_iterations: usize,
    /// Final max-norm residual divided by the flux/source scale.
    pub residual: f64,
    pub epsilon: f64,
    pub intervals: usize,
    pub grading: f64,
    pub inner_cutoff: f64,
    pub warnings: Vec<String>,
}

/// Nodal solution on the graded mesh `r_0 < … < r_M = R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSolution {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    /// Derivative reconstruction: second-order three-point formula inside,
    /// zero flux at `r_0`, one-sided at `R`.
    pub dv: Vec<f64>,
    pub report: SolveReport,
}

impl RadialSolution {
    /// `(v_{i+1} − v_i)/(r_{i+1} − r_i)` on each mesh interval.
    pub fn face_slopes(&self) -> Vec<f64> {
        self.r
            .windows(2)
            .zip(self.v.windows(2))
            .map(|(r, v)| (v[1] - v[0]) / (r[1] - r[0]))
            .collect()
    }

    /// `max |v_i − exact(r_i)|` over nodes with `r_i ≥ r_min`.
    pub fn max_error<F: Fn(f64) -> f64>(&self, exact: F, r_min: f64) -> f64 {
        self.r
            .iter()
            .zip(&self.v)
            .filter(|(r, _)| **r >= r_min)
            .map(|(r, v)| (v - exact(*r)).abs())
            .fold(0.0, f64::max)
    }

    /// Linear interpolation of the nodal values.
    pub fn value_at(&self, r: f64) -> f64 {
        let k = self.r.partition_point(|x| *x <= r);
        if k == 0 {
            return self.v[0];
        }
        if k >= self.r.len() {
            return self.v[self.v.len() - 1];
        }
        let w = (r - self.r[k - 1]) / (self.r[k] - self.r[k - 1]);
        self.v[k - 1] * (1.0 - w) + self.v[k] * w
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.v.windows(2).all(|w| w[1] <= w[0])
    }

    /// CSV with columns `r,v,dv`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::parse(e.to_string());
        wr.write_record(["r", "v", "dv"]).map_err(err)?;
        for i in 0..self.r.len() {
            wr.write_record([format_f64(self.r[i]), format_f64(self.v[i]), format_f64(self.dv[i])])
                .map_err(err)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Residual of the power function `r^{−α}` in the homogeneous radial
/// equation, with exact derivatives substituted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `max |LHS − RHS|`.
    pub max_abs: f64,
    /// `max |LHS − RHS| · r^{α(p−1)+p}`, which equals `|F(α) − λ|` exactly.
    pub max_scaled: f64,
}

pub fn radial_residual(alpha: f64, lambda: f64, bx: &ExponentBox, mesh: &[f64]) -> Result<ResidualReport> {
    if !(alpha > 0.0) {
        return Err(Error::domain("α must be positive"));
    }
    if mesh.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::invalid("mesh must avoid r = 0"));
    }
    let (n, p) = (bx.n, bx.p);
    let mut out = ResidualReport {
        max_abs: 0.0,
        max_scaled: 0.0,
    };
    for &r in mesh {
        let v = r.powf(-alpha);
        let d1 = -alpha * r.powf(-alpha - 1.0);
        let d2 = alpha * (alpha + 1.0) * r.powf(-alpha - 2.0);
        let lhs = -d1.abs().powf(p - 2.0) * ((p - 1.0) * d2 + (n - 1.0) / r * d1);
        let rhs = lambda / r.powf(p) * v.abs().powf(p - 2.0) * v;
        let res = (lhs - rhs).abs();
        out.max_abs = out.max_abs.max(res);
        out.max_scaled = out.max_scaled.max(res * r.powf(alpha * (p - 1.0) + p));
    }
    Ok(out)
}

/// Graded mesh `R (i/M)^γ`, `i = 1..=M`, for residual checks.
pub fn graded_nodes(radius: f64, intervals: usize, grading: f64) -> Vec<f64> {
    (1..=intervals)
        .map(|i| radius * (i as f64 / intervals as f64).powf(grading))
        .collect()
}

/// Rayleigh quotient `∫|u′|^p r^{N−1} / ∫|u|^p r^{N−1−p}` of
/// `u_ε = r^{−(N−p)/p+ε} − R^{−(N−p)/p+ε}`.
///
/// With `b = (N−p)/p − ε` and `c = b/(εp)` the substitution `y = (r/R)^{εp}`
/// gives `Q(ε) = |b|^p / ∫_0^1 |1 − y^c|^p dy`, independent of `R`; for
/// `c > 0` the integral is the Beta value `B(1/c, p+1)/c`.
pub fn hardy_quotient(epsilon: f64, n: f64, p: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain("ε must be positive"));
    }
    if !(p > 1.0 && p < n) {
        return Err(Error::domain("need 1 < p < N"));
    }
    let a = (n - p) / p;
    let b = a - epsilon;
    if b == 0.0 {
        return Err(Error::domain("ε = (N−p)/p makes u_ε vanish identically"));
    }
    let c = b / (epsilon * p);
    let denom = if c > 0.0 {
        use statrs::function::gamma::ln_gamma;
        let ln_beta = ln_gamma(1.0 / c) + ln_gamma(p + 1.0) - ln_gamma(1.0 / c + p + 1.0);
        ln_beta.exp() / c
    } else {
        let f = |y: f64| (1.0 - y.powf(c)).abs().powf(p);
        integrate(f, 0.0, 1.0, Tolerance::new(0.0, 1e-13).with_max_intervals(4000)).value
    };
    Ok(b.abs().powf(p) / denom)
}

/// `Q(ε)` for each `ε` in the list, in order.
pub fn hardy_quotient_scan(epsilons: &[f64], bx: &ExponentBox) -> Result<Vec<f64>> {
    epsilons
        .iter()
        .map(|&e| hardy_quotient(e, bx.n, bx.p))
        .collect()
}

/// Profile through nodal values `w_i` at `s_i` (`s_0 = 0`), power-law
/// interpolated between positive values and linear where a value is 0.
///
/// The center value is not used: at a singular solution it is a cell value,
/// not a point value. The first interval carries the constant `w_1`.
pub(crate) fn profile_from_nodes(s: &[f64], w: &[f64]) -> Result<MonotoneProfile> {
    use crate::rearrangement::{Piece, Term};
    let mut pieces = Vec::with_capacity(s.len());
    for k in 0..s.len() - 1 {
        let (a, b) = (s[k], s[k + 1]);
        let (wa, wb) = (w[k].max(0.0), w[k + 1].max(0.0));
        let terms = if k == 0 || a == 0.0 {
            vec![Term::constant(wb)]
        } else if wa > 0.0 && wb > 0.0 {
            let e = (wb / wa).ln() / (b / a).ln();
            vec![Term::new(wa / a.powf(e), e)]
        } else {
            let slope = (wb - wa) / (b - a);
            vec![Term::constant(wa - slope * a), Term::new(slope, 1.0)]
        };
        pieces.push(Piece { start: a, end: b, terms });
    }
    MonotoneProfile::new(PiecewisePower::new(pieces)?)
}

/// Decreasing rearrangement of a step function with values `vals` on cells
/// of measure `meas`.
pub(crate) fn step_rearrangement(vals: &[f64], meas: &[f64]) -> Result<MonotoneProfile> {
    let mut pairs: Vec<(f64, f64)> = vals.iter().map(|v| v.abs()).zip(meas.iter().copied()).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut breaks = Vec::with_capacity(pairs.len());
    let mut values = Vec::with_capacity(pairs.len());
    let mut s = 0.0;
    for (v, m) in pairs {
        let next = s + m;
        if next <= s {
            continue;
        }
        s = next;
        breaks.push(s);
        values.push(v);
    }
    MonotoneProfile::steps(&breaks, &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench() -> ExponentBox {
        ExponentBox::unit_ball(4.0, 2.0, 1.5, 1.0).unwrap()
    }

    #[test]
    fn residual_examples() {
        let bx = bench();
        let mesh = graded_nodes(1.0, 200, 2.0);
        let r = radial_residual(0.5, 0.75, &bx, &mesh).unwrap();
        assert!(r.max_scaled <= 1e-10, "{r:?}");
        let r = radial_residual(0.5, 0.5, &bx, &mesh).unwrap();
        assert!((r.max_scaled - 0.25).abs() < 1e-10);
        let r = radial_residual(1.0, 1.0, &bx, &mesh).unwrap();
        assert!(r.max_scaled <= 1e-10);
    }

    #[test]
    fn hardy_quotient_examples() {
        let q: Vec<f64> = [0.5, 0.1, 0.01, 0.001]
            .iter()
            .map(|e| hardy_quotient(*e, 4.0, 2.0).unwrap())
            .collect();
        assert!(q.windows(2).all(|w| w[1] < w[0]));
        assert!(q.iter().all(|x| *x > 1.0));
        assert!((q[3] - 1.0).abs() < 0.01);
        assert!(hardy_quotient(1.0, 4.0, 2.0).is_err());
        let q2 = hardy_quotient(2.0, 4.0, 2.0).unwrap();
        assert!(q2.is_finite() && q2 > 1.0);
    }

    #[test]
    fn hardy_quotient_against_direct_quadrature() {
        // u = r^{-b} - 1 on (0, 1), N = 3, p = 1.5
        let (n, p, eps) = (3.0f64, 1.5f64, 0.2f64);
        let b = (n - p) / p - eps;
        let tol = Tolerance::new(0.0, 1e-12).with_max_intervals(4000);
        let num = integrate(|r| (b * r.powf(-b - 1.0)).powf(p) * r.powf(n - 1.0), 0.0, 1.0, tol).value;
        let den = integrate(|r| (r.powf(-b) - 1.0).powf(p) * r.powf(n - 1.0 - p), 0.0, 1.0, tol).value;
        let q = hardy_quotient(eps, n, p).unwrap();
        assert!((q - num / den).abs() < 1e-6 * q, "{q} {}", num / den);
    }

    #[test]
    fn shifted_power_matches_direct_formula() {
        let (l, a, p) = (0.8, 0.6, 2.5);
        for r in [0.9f64, 0.5, 0.1, 1e-3] {
            let z: f64 = r.powf(-a) - 1.0;
            let direct = l * ((z + 1.0).powf(p - 1.0) - z.powf(p - 1.0)) / r.powf(p);
            let got = shifted_power(l, a, p, r);
            assert!((got - direct).abs() < 1e-10 * direct.abs(), "{r} {got} {direct}");
        }
        assert!((shifted_power(l, a, p, 1.0) - l).abs() < 1e-15);
    }

    #[test]
    fn truncated_power_integral() {
        // ∫_0^1 r^3 min(10, r^-2) dr: r* = 10^{-1/2}
        let (v, _) = truncated_power_cv(1.0, 2.0, 0.0, 1.0, 4.0, Some(10.0));
        let rs = 10f64.powf(-0.5);
        let exact = 10.0 * rs.powi(4) / 4.0 + (1.0 - rs * rs) / 2.0;
        assert!((v - exact).abs() < 1e-15);
        let (v, d) = truncated_power_cv(3.0, 2.0, 0.2, 0.7, 4.0, None);
        assert!((v - 3.0 * (0.49 - 0.04) / 2.0).abs() < 1e-15);
        assert!((d - (0.49 - 0.04) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn params_json() {
        let text = r#"{
            "box": {"n": 4, "p": 2, "q": 2, "m": 1.5, "sigma": "inf", "omega_volume": 4.934802200544679, "kappa_n": 4.934802200544679},
            "lambda": 0.5,
            "beta": {"kind": "zero"},
            "source": {"kind": "power", "c": 1, "gamma": 1.9},
            "truncation": null
        }"#;
        let p: ProblemParams = serde_json::from_str(text).unwrap();
        assert_eq!(p.radius, 1.0);
        assert_eq!(p.truncation, None);
        p.validate().unwrap();
        let back = serde_json::to_string(&p).unwrap();
        let again: ProblemParams = serde_json::from_str(&back).unwrap();
        assert_eq!(p, again);
    }
}
