//! A-posteriori checks of computed radial solutions against the symmetrization
//! estimates: pointwise comparison for `u*` and `H(Du)*`, Lorentz ratios and
//! the decay of the gradient term on superlevel sets.

use serde::Serialize;

use super::{profile_from_nodes, step_rearrangement, truncate, ProblemParams, RadialSolution};
use crate::constants::b_infinity;
use crate::error::{Error, Result};
use crate::numerics::{fit_line, integrate, Tolerance};
use crate::rearrangement::{lorentz_quasinorm, power_integral, LorentzIndex, MonotoneProfile};

/// Smallest relative margins `(rhs − lhs)/rhs` over the checked nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TalentiReport {
    /// Comparison of `u*(s)` with the integral bound.
    pub level_margin: f64,
    /// Comparison of `[H(Du)*(s)]^p` with the two-term bound.
    pub gradient_margin: f64,
    /// The same comparison with the first term multiplied by `α + 1`, which
    /// turns it into the `t^α`-weighted mean of `Ψ` over `(0, s)`.
    pub gradient_margin_normalized: f64,
    /// Weight exponent used in the gradient bound.
    pub alpha: f64,
    pub b_infinity: f64,
    /// Nodes with `r ≥ r_min` (and `r < R`) that entered the minima.
    pub nodes_checked: usize,
    pub r_min: f64,
}

/// Radius fraction below which nodes are ignored.
pub const INNER_FRACTION: f64 = 0.01;

/// Per-node data in the measure variable `t = κ_N r^N`.
struct Levels {
    t: Vec<f64>,
    /// `Z(t_i) = ∫_0^{t_i} [(c⁺)* u*^{p−1} + f_n*]`.
    z_int: Vec<f64>,
    ustar: Vec<f64>,
}

fn level_data(sol: &RadialSolution, params: &ProblemParams) -> Result<Levels> {
    let (n, p, kappa, lam) = (params.bx.n, params.bx.p, params.bx.kappa_n, params.lambda);
    let r = &sol.r;
    let m = r.len();
    if m < 3 {
        return Err(Error::insufficient("solution needs at least 3 nodes"));
    }
    let t: Vec<f64> = r.iter().map(|x| kappa * x.powf(n)).collect();
    // u* at the nodes: nodal values if radially nonincreasing, else a rearrangement
    let ustar: Vec<f64> = if sol.is_nonincreasing() && sol.v.iter().all(|x| *x >= 0.0) {
        sol.v.clone()
    } else {
        let (vals, meas) = cv_cells(sol, params, |i| sol.v[i].abs());
        let prof = step_rearrangement(&vals, &meas)?;
        t.iter().map(|x| prof.eval(*x)).collect()
    };
    let fstar = params.source.rearrangement(n, kappa, params.radius)?;
    let mut z_int = vec![0.0; m];
    let mut acc = 0.0;
    let mut f_acc = 0.0;
    for i in 0..m - 1 {
        let (a, b) = (r[i], r[i + 1]);
        // λ ρ^{−p} U(ρ)^{p−1} with U^{p−1} linear on [a, b], times N κ ρ^{N−1}
        if lam > 0.0 {
            let wa = ustar[i].powf(p - 1.0);
            let wb = ustar[i + 1].powf(p - 1.0);
            let slope = (wb - wa) / (b - a);
            let c0 = wa - slope * a;
            let part = c0 * power_integral(1.0, n - 1.0 - p, a, b) + slope * power_integral(1.0, n - p, a, b);
            acc += lam * n * kappa * part;
        }
        f_acc += truncated_profile_integral(&fstar, t[i], t[i + 1], params.truncation);
        z_int[i + 1] = acc + f_acc;
    }
    Ok(Levels { t, z_int, ustar })
}

/// `∫_a^b T_n(g)` for a monotone profile `g`.
fn truncated_profile_integral(g: &MonotoneProfile, a: f64, b: f64, trunc: Option<f64>) -> f64 {
    let mut total = 0.0;
    for piece in g.pieces() {
        let lo = piece.start.max(a);
        let hi = piece.end.min(b);
        if hi <= lo {
            continue;
        }
        match (piece.terms.as_slice(), trunc) {
            ([], _) => {}
            (terms, None) => {
                total += terms.iter().map(|t| power_integral(t.coef, t.exp, lo, hi)).sum::<f64>();
            }
            ([term], Some(cap)) => {
                let (c, e) = (term.coef, term.exp);
                if e == 0.0 {
                    total += c.min(cap) * (hi - lo);
                } else {
                    // c t^e = cap at t*; nonincreasing, so capped below t*
                    let ts = (cap / c).powf(1.0 / e).clamp(lo, hi);
                    total += cap * (ts - lo) + power_integral(c, e, ts, hi);
                }
            }
            (_, Some(cap)) => {
                let f = |x: f64| piece.eval(x).min(cap);
                total += integrate(f, lo, hi, Tolerance::new(0.0, 1e-12)).value;
            }
        }
    }
    total
}

/// Values on the CVs of the solver mesh with their `t`-measure.
fn cv_cells<F: Fn(usize) -> f64>(sol: &RadialSolution, params: &ProblemParams, f: F) -> (Vec<f64>, Vec<f64>) {
    let (n, kappa) = (params.bx.n, params.bx.kappa_n);
    let r = &sol.r;
    let m = r.len();
    let mut vals = Vec::with_capacity(m);
    let mut meas = Vec::with_capacity(m);
    for i in 0..m {
        let lo = if i == 0 { r[0] } else { 0.5 * (r[i - 1] + r[i]) };
        let hi = if i + 1 == m { r[m - 1] } else { 0.5 * (r[i] + r[i + 1]) };
        vals.push(f(i));
        meas.push(kappa * (hi.powf(n) - lo.powf(n)));
    }
    (vals, meas)
}

/// Face slopes with the `t`-measure of each mesh interval. When the mesh
/// reaches the center, the first interval takes the slope of the second,
/// since the center value is a cell value.
fn slope_cells(sol: &RadialSolution, params: &ProblemParams, power: f64) -> (Vec<f64>, Vec<f64>) {
    let (n, kappa) = (params.bx.n, params.bx.kappa_n);
    let mut s = sol.face_slopes();
    if sol.r[0] == 0.0 && s.len() > 1 {
        s[0] = s[1];
    }
    let meas = sol.r.windows(2).map(|w| kappa * (w[1].powf(n) - w[0].powf(n))).collect();
    (s.iter().map(|x| x.abs().powf(power)).collect(), meas)
}

/// Compares the computed solution with the pointwise symmetrization bounds
///
/// `u*(s) ≤ e^{B/(p−1)} (Nκ^{1/N})^{−p′} ∫_s^{|Ω|} t^{−p′/N′} Z(t)^{1/(p−1)} dt`,
///
/// `[H(Du)*(s)]^p ≤ e^{B/(p−1)} [s^{−α−1}∫_0^s t^α Ψ + s^{−1}∫_s^{|Ω|} Ψ]`,
/// `Ψ(t) = (Nκ^{1/N})^{−p′} t^{−p′/N′} Z(t)^{p′}`,
///
/// where `Z(t) = ∫_0^t [λκ^{p/N}τ^{−p/N} u*(τ)^{p−1} + f_n*(τ)] dτ`.
/// `alpha` defaults to `p′/N′`; it must exceed `p′/N′ − 1`.
pub fn verify_talenti_bounds(sol: &RadialSolution, params: &ProblemParams, alpha: Option<f64>) -> Result<TalentiReport> {
    params.validate()?;
    let (n, p, kappa) = (params.bx.n, params.bx.p, params.bx.kappa_n);
    let pp = p / (p - 1.0);
    let nn = n / (n - 1.0);
    let alpha = alpha.unwrap_or(pp / nn);
    if !(alpha > pp / nn - 1.0) {
        return Err(Error::domain(format!("α must exceed p′/N′ − 1 = {}", pp / nn - 1.0)));
    }
    let b = b_infinity(&params.beta, &params.bx)?;
    let growth = (b / (p - 1.0)).exp();
    let c = (n * kappa.powf(1.0 / n)).powf(-pp);
    let lv = level_data(sol, params)?;
    let r = &sol.r;
    let m = r.len();

    // level bound, trapezoid in r from R inwards
    let integrand = |i: usize| {
        lv.t[i].powf(-pp / nn) * lv.z_int[i].max(0.0).powf(1.0 / (p - 1.0)) * n * kappa * r[i].powf(n - 1.0)
    };
    let mut level_rhs = vec![0.0; m];
    let mut acc = 0.0;
    for i in (0..m - 1).rev() {
        if r[i] == 0.0 {
            break;
        }
        acc += 0.5 * (r[i + 1] - r[i]) * (integrand(i) + integrand(i + 1));
        level_rhs[i] = growth * c * acc;
    }

    // gradient bound
    let psi: Vec<f64> = (0..m)
        .map(|i| {
            if lv.t[i] == 0.0 {
                0.0
            } else {
                c * lv.t[i].powf(-pp / nn) * lv.z_int[i].max(0.0).powf(pp)
            }
        })
        .collect();
    let h_inner = |i: usize| lv.t[i].powf(alpha) * psi[i] * n * kappa * r[i].powf(n - 1.0);
    let h_outer = |i: usize| psi[i] * n * kappa * r[i].powf(n - 1.0);
    let mut inner = vec![0.0; m];
    let first = r.iter().position(|x| *x > 0.0).unwrap_or(1);
    if first + 1 < m {
        let (h1, h2) = (h_inner(first), h_inner(first + 1));
        let start = if r[0] == 0.0 && h1 > 0.0 && h2 > 0.0 {
            // power-law extrapolation on [0, r_1]
            let k = (h2 / h1).ln() / (r[first + 1] / r[first]).ln();
            if k > -1.0 {
                h1 * r[first] / (k + 1.0)
            } else {
                f64::INFINITY
            }
        } else {
            0.0
        };
        inner[first] = start;
        for i in first..m - 1 {
            inner[i + 1] = inner[i] + 0.5 * (r[i + 1] - r[i]) * (h_inner(i) + h_inner(i + 1));
        }
    }
    let mut outer = vec![0.0; m];
    for i in (0..m - 1).rev() {
        outer[i] = outer[i + 1] + 0.5 * (r[i + 1] - r[i]) * (h_outer(i) + h_outer(i + 1));
    }
    let (gvals, gmeas) = slope_cells(sol, params, 1.0);
    let grad_star = step_rearrangement(&gvals, &gmeas)?;

    let r_min = INNER_FRACTION * params.radius;
    let mut level_margin = f64::INFINITY;
    let mut gradient_margin = f64::INFINITY;
    let mut normalized = f64::INFINITY;
    let mut checked = 0;
    for i in 0..m - 1 {
        if r[i] < r_min {
            continue;
        }
        checked += 1;
        let s = lv.t[i];
        level_margin = level_margin.min(relative_margin(level_rhs[i], lv.ustar[i]));
        let lhs = grad_star.eval(s).powf(p);
        let head = s.powf(-alpha - 1.0) * inner[i];
        let tail = outer[i] / s;
        gradient_margin = gradient_margin.min(relative_margin(growth * (head + tail), lhs));
        normalized = normalized.min(relative_margin(growth * ((alpha + 1.0) * head + tail), lhs));
    }
    if checked == 0 {
        return Err(Error::insufficient("no nodes beyond the inner cutoff"));
    }
    // an identically vanishing pair of sides gives margin 0
    if level_margin.is_infinite() {
        level_margin = 0.0;
    }
    if gradient_margin.is_infinite() {
        gradient_margin = 0.0;
    }
    if normalized.is_infinite() {
        normalized = 0.0;
    }
    Ok(TalentiReport {
        level_margin,
        gradient_margin,
        gradient_margin_normalized: normalized,
        alpha,
        b_infinity: b,
        nodes_checked: checked,
        r_min,
    })
}

fn relative_margin(rhs: f64, lhs: f64) -> f64 {
    if rhs > 0.0 {
        (rhs - lhs) / rhs
    } else if lhs > 0.0 {
        -1.0
    } else {
        f64::INFINITY
    }
}

/// Lorentz ratios of the solution against the datum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorentzReport {
    pub m: f64,
    pub sigma: f64,
    /// `‖f‖_{m,σ}`.
    pub f_norm: f64,
    /// `‖|u|^{p−1}‖_{Nm/(N−mp),σ}`.
    pub level_norm: f64,
    /// `‖H(Du)^{p−1}‖_{Nm/(N−m),σ}`.
    pub gradient_norm: f64,
    /// `level_norm / f_norm`; `None` when `f = 0`.
    pub rho1: Option<f64>,
    /// `gradient_norm / f_norm`; `None` when `f = 0`.
    pub rho2: Option<f64>,
    /// `σ ≥ max(1/(p−1), 1)`.
    pub level_hypotheses: bool,
    /// `1 < m < (p*)′` and `σ ≥ p′`.
    pub gradient_hypotheses: bool,
    /// `λ < λ(m)`.
    pub subcritical: bool,
}

/// Computes `ρ₁ = ‖|u|^{p−1}‖_{Nm/(N−mp),σ}/‖f‖_{m,σ}` and
/// `ρ₂ = ‖H(Du)^{p−1}‖_{Nm/(N−m),σ}/‖f‖_{m,σ}` with `(m, σ)` from the box.
///
/// `u*` is interpolated by power laws between nodes; the gradient uses the
/// rearrangement of the face slopes.
pub fn verify_lorentz_estimates(sol: &RadialSolution, params: &ProblemParams) -> Result<LorentzReport> {
    params.validate()?;
    let bx = &params.bx;
    let (n, p, m, sigma, kappa) = (bx.n, bx.p, bx.m, bx.sigma, bx.kappa_n);
    let f_star = params.source.rearrangement(n, kappa, params.radius)?;
    let f_norm = lorentz_quasinorm(&f_star, LorentzIndex::new(m, sigma)?);

    let t: Vec<f64> = sol.r.iter().map(|x| kappa * x.powf(n)).collect();
    let level_profile = if sol.is_nonincreasing() && sol.v.iter().all(|x| *x >= 0.0) && sol.r[0] == 0.0 {
        let w: Vec<f64> = sol.v.iter().map(|x| x.powf(p - 1.0)).collect();
        profile_from_nodes(&t, &w)?
    } else {
        let (vals, meas) = cv_cells(sol, params, |i| sol.v[i].abs().powf(p - 1.0));
        step_rearrangement(&vals, &meas)?
    };
    let level_idx = LorentzIndex::new(n * m / (n - m * p), sigma)?;
    let level_norm = lorentz_quasinorm(&level_profile, level_idx);

    let (gvals, gmeas) = slope_cells(sol, params, p - 1.0);
    let grad_profile = step_rearrangement(&gvals, &gmeas)?;
    let grad_idx = LorentzIndex::new(n * m / (n - m), sigma)?;
    let gradient_norm = lorentz_quasinorm(&grad_profile, grad_idx);

    let ratio = |x: f64| if f_norm > 0.0 { Some(x / f_norm) } else { None };
    let b = b_infinity(&params.beta, bx)?;
    let lam_m = crate::constants::critical_lambda(m, bx, b)?;
    Ok(LorentzReport {
        m,
        sigma,
        f_norm,
        level_norm,
        gradient_norm,
        rho1: ratio(level_norm),
        rho2: ratio(gradient_norm),
        level_hypotheses: sigma >= (1.0 / (p - 1.0)).max(1.0),
        gradient_hypotheses: m > 1.0 && m < bx.p_star_dual() && sigma >= p / (p - 1.0),
        subcritical: params.lambda < lam_m,
    })
}

/// Decay of `T(t) = ∫_{|u|>t} T_n(β(|u|) H(Du)^q)` in `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub t: Vec<f64>,
    pub integral: Vec<f64>,
    /// `−slope` of the least-squares fit of `ln T` against `ln t`.
    pub fitted_exponent: f64,
    pub r_squared: f64,
    /// `(p−1)[N(m−1) + m(p−q)]/(N−mp)`.
    pub predicted_exponent: f64,
}

/// Twelve log-spaced levels on `[0.09, 0.9]·max|v|`, the maximum taken
/// away from the center node.
pub fn default_tail_grid(sol: &RadialSolution) -> Vec<f64> {
    let skip = usize::from(sol.r[0] == 0.0);
    let vmax = sol.v.iter().skip(skip).fold(0.0f64, |m, x| m.max(x.abs()));
    let k = 12;
    (0..k)
        .map(|i| vmax * 0.09 * 10f64.powf(i as f64 / (k - 1) as f64))
        .collect()
}

/// Evaluates `T(t)` on the given levels and fits a power law.
pub fn tail_gradient_bound(sol: &RadialSolution, params: &ProblemParams, t_grid: &[f64]) -> Result<TailReport> {
    params.validate()?;
    let bx = &params.bx;
    let (n, p, q, m, kappa) = (bx.n, bx.p, bx.q, bx.m, bx.kappa_n);
    if t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("levels must be positive"));
    }
    let s = sol.face_slopes();
    let r = &sol.r;
    // 3-point Gauss-Legendre on each (partial) interval
    let gl = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];
    let piece = |lo: f64, hi: f64, j: usize| {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let dv = s[j].abs().powf(q);
        gl.iter()
            .map(|(x, w)| {
                let rr = mid + half * x;
                let v = sol.v[j] + s[j] * (rr - r[j]);
                w * truncate(params.beta.eval(v.abs()) * dv, params.truncation) * rr.powf(n - 1.0)
            })
            .sum::<f64>()
            * half
    };
    let mut integral = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut acc = 0.0;
        for j in 0..r.len() - 1 {
            let (va, vb) = (sol.v[j].abs(), sol.v[j + 1].abs());
            if va <= t && vb <= t {
                continue;
            }
            let (lo, hi) = if va > t && vb > t {
                (r[j], r[j + 1])
            } else {
                let rc = r[j] + (t - va) / (vb - va) * (r[j + 1] - r[j]);
                if va > t {
                    (r[j], rc)
                } else {
                    (rc, r[j + 1])
                }
            };
            acc += piece(lo, hi, j);
        }
        integral.push(n * kappa * acc);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = t_grid
        .iter()
        .zip(&integral)
        .filter(|(_, y)| **y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .unzip();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::insufficient("need two levels with positive tail integral"))?;
    Ok(TailReport {
        t: t_grid.to_vec(),
        integral,
        fitted_exponent: -fit.slope,
        r_squared: fit.r_squared,
        predicted_exponent: (p - 1.0) * (n * (m - 1.0) + m * (p - q)) / (n - m * p),
    })
}
