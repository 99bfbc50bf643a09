//! Vertex-centered finite volumes with damped Newton, ε-continuation for the
//! degenerate flux and Picard iteration on the gradient term.

use serde::{Deserialize, Serialize};

use super::{truncate, truncated_power_cv, ProblemParams, RadialSolution, SolveReport};
use crate::error::{Error, Result};
use crate::numerics::solve_tridiagonal;

/// Discretization and iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshControl {
    /// Number of intervals `M`.
    pub intervals: usize,
    /// Exponent `γ` of `r_i = a + (R−a)(i/M)^γ`; `None` picks `max(1, 2/(p−1))`.
    pub grading: Option<f64>,
    /// Inner radius `a`; zero flux is imposed there.
    pub inner_cutoff: f64,
    /// Newton stops when the max residual falls below `rtol` times the
    /// flux/source scale.
    pub rtol: f64,
    pub max_newton: usize,
    pub max_picard: usize,
    /// Relative max-norm change that ends the Picard loop.
    pub picard_tol: f64,
}

impl Default for MeshControl {
    fn default() -> Self {
        MeshControl {
            intervals: 1024,
            grading: None,
            inner_cutoff: 0.0,
            rtol: 1e-10,
            max_newton: 200,
            max_picard: 200,
            picard_tol: 1e-10,
        }
    }
}

impl MeshControl {
    pub fn with_intervals(intervals: usize) -> Self {
        MeshControl {
            intervals,
            ..MeshControl::default()
        }
    }

    pub fn grading_for(&self, p: f64) -> f64 {
        self.grading.unwrap_or_else(|| (2.0 / (p - 1.0)).max(1.0))
    }
}

struct Mesh {
    r: Vec<f64>,
    /// Faces `f_{i+1/2}`, `i = 0..M−1`.
    face: Vec<f64>,
    /// CV bounds `[left_i, right_i]` for the `M` unknowns.
    left: Vec<f64>,
    right: Vec<f64>,
}

impl Mesh {
    fn new(a: f64, radius: f64, m: usize, grading: f64) -> Mesh {
        let r: Vec<f64> = (0..=m)
            .map(|i| a + (radius - a) * (i as f64 / m as f64).powf(grading))
            .collect();
        let face: Vec<f64> = r.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let left: Vec<f64> = (0..m).map(|i| if i == 0 { a } else { face[i - 1] }).collect();
        let right: Vec<f64> = face.clone();
        Mesh { r, face, left, right }
    }

    fn len(&self) -> usize {
        self.left.len()
    }
}

/// The discrete operator with the gradient term frozen.
struct System<'a> {
    params: &'a ProblemParams,
    mesh: &'a Mesh,
    p: f64,
    n: f64,
    /// `∫ r^{N−1} T_n(f)` per CV.
    source: Vec<f64>,
    /// `r_f^{N−1}` per face.
    face_area: Vec<f64>,
    /// `r_f^{N−1}/h` per face.
    face_weight: Vec<f64>,
    /// Frozen gradient term per CV.
    grad_term: Vec<f64>,
}

struct Eval {
    residual: Vec<f64>,
    scale: f64,
}

impl<'a> System<'a> {
    fn new(params: &'a ProblemParams, mesh: &'a Mesh) -> Self {
        let n = params.bx.n;
        let m = mesh.len();
        let source = (0..m)
            .map(|i| params.source.cv_integral(mesh.left[i], mesh.right[i], n, params.truncation))
            .collect();
        let face_area: Vec<f64> = (0..m).map(|i| mesh.face[i].powf(n - 1.0)).collect();
        let face_weight = (0..m)
            .map(|i| face_area[i] / (mesh.r[i + 1] - mesh.r[i]))
            .collect();
        System {
            params,
            mesh,
            p: params.bx.p,
            n,
            source,
            face_area,
            face_weight,
            grad_term: vec![0.0; m],
        }
    }

    fn slopes(&self, v: &[f64]) -> Vec<f64> {
        let m = self.mesh.len();
        (0..m)
            .map(|i| {
                let next = if i + 1 < m { v[i + 1] } else { 0.0 };
                (next - v[i]) / (self.mesh.r[i + 1] - self.mesh.r[i])
            })
            .collect()
    }

    fn flux(&self, s: f64, eps: f64) -> f64 {
        if self.p == 2.0 {
            s
        } else {
            (s * s + eps * eps).powf(0.5 * (self.p - 2.0)) * s
        }
    }

    fn flux_prime(&self, s: f64, eps: f64) -> f64 {
        if self.p == 2.0 {
            1.0
        } else {
            let q = s * s + eps * eps;
            q.powf(0.5 * (self.p - 4.0)) * ((self.p - 1.0) * s * s + eps * eps)
        }
    }

    /// Hardy term over CV `i` and its derivative in `v_i`.
    fn hardy(&self, i: usize, vi: f64) -> (f64, f64) {
        let lam = self.params.lambda;
        if lam == 0.0 || vi == 0.0 {
            return (0.0, 0.0);
        }
        let c = lam * vi.abs().powf(self.p - 1.0);
        let (val, w) = truncated_power_cv(
            c,
            self.p,
            self.mesh.left[i],
            self.mesh.right[i],
            self.n,
            self.params.truncation,
        );
        let dval = lam * (self.p - 1.0) * vi.abs().powf(self.p - 2.0) * w;
        (vi.signum() * val, if dval.is_finite() { dval } else { 0.0 })
    }

    fn eval(&self, v: &[f64], eps: f64) -> Eval {
        let m = self.mesh.len();
        let s = self.slopes(v);
        let flux: Vec<f64> = (0..m).map(|i| self.face_area[i] * self.flux(s[i], eps)).collect();
        let mut residual = vec![0.0; m];
        let mut scale: f64 = 0.0;
        for i in 0..m {
            let left = if i == 0 { 0.0 } else { flux[i - 1] };
            let (h, _) = self.hardy(i, v[i]);
            residual[i] = left - flux[i] - h - self.grad_term[i] - self.source[i];
            scale = scale.max(left.abs() + flux[i].abs() + h.abs() + self.grad_term[i].abs() + self.source[i].abs());
        }
        Eval { residual, scale }
    }

    fn jacobian(&self, v: &[f64], eps: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = self.mesh.len();
        let s = self.slopes(v);
        let k: Vec<f64> = (0..m).map(|i| self.face_weight[i] * self.flux_prime(s[i], eps)).collect();
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for i in 0..m {
            let kl = if i == 0 { 0.0 } else { k[i - 1] };
            let (_, dh) = self.hardy(i, v[i]);
            diag[i] = kl + k[i] - dh;
            if i > 0 {
                lower[i] = -kl;
            }
            if i + 1 < m {
                upper[i] = -k[i];
            }
        }
        (lower, diag, upper)
    }

    /// Gradient term `T_n(β(|v_i|) · mean |s|^q) · vol_i` from the current iterate.
    fn freeze_gradient_term(&mut self, v: &[f64]) {
        let beta = &self.params.beta;
        if beta.is_zero() {
            return;
        }
        let q = self.params.bx.q;
        let s = self.slopes(v);
        for i in 0..self.mesh.len() {
            let sl = if i == 0 { 0.0 } else { s[i - 1].abs().powf(q) };
            let sr = s[i].abs().powf(q);
            let density = truncate(beta.eval(v[i].abs()) * 0.5 * (sl + sr), self.params.truncation);
            let vol = (self.mesh.right[i].powf(self.n) - self.mesh.left[i].powf(self.n)) / self.n;
            self.grad_term[i] = density * vol;
        }
    }

    /// Damped Newton at fixed `ε`; returns iterations used and whether the
    /// tolerance was met.
    fn newton(&self, v: &mut [f64], eps: f64, rtol: f64, max_iter: usize) -> (usize, bool, f64) {
        let mut ev = self.eval(v, eps);
        let mut rel = max_abs(&ev.residual) / ev.scale.max(f64::MIN_POSITIVE);
        for it in 0..max_iter {
            if max_abs(&ev.residual) == 0.0 {
                return (it, true, rel);
            }
            let (lower, diag, upper) = self.jacobian(v, eps);
            let rhs: Vec<f64> = ev.residual.iter().map(|r| -r).collect();
            let Some(delta) = solve_tridiagonal(&lower, &diag, &upper, &rhs) else {
                return (it, rel <= rtol, rel);
            };
            // the scaled residual is blind to the tiny fluxes near r = 0,
            // so also wait for the step to settle
            let vmax = max_abs(v).max(f64::MIN_POSITIVE);
            if rel <= rtol && max_abs(&delta) <= 1e-12 * vmax {
                return (it, true, rel);
            }
            let merit0 = l2(&ev.residual);
            let mut t = 1.0;
            let mut trial = v.to_vec();
            let mut accepted = None;
            for _ in 0..40 {
                for j in 0..v.len() {
                    trial[j] = v[j] + t * delta[j];
                }
                let e = self.eval(&trial, eps);
                if l2(&e.residual) < (1.0 - 1e-4 * t) * merit0 {
                    accepted = Some(e);
                    break;
                }
                t *= 0.5;
            }
            let Some(e) = accepted else {
                // no decrease: either converged to roundoff or stuck
                return (it, rel <= rtol || max_abs(&delta) <= 1e-12 * vmax, rel);
            };
            v.copy_from_slice(&trial);
            ev = e;
            rel = max_abs(&ev.residual) / ev.scale.max(f64::MIN_POSITIVE);
            let vmax = max_abs(v).max(f64::MIN_POSITIVE);
            if t == 1.0 && max_abs(&delta) <= 1e-14 * vmax {
                return (it + 1, true, rel);
            }
        }
        (max_iter, rel <= rtol, rel)
    }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Linear initial guess `−Δw = T_n(f)` (Hardy and gradient terms dropped).
fn linear_guess(sys: &System) -> Vec<f64> {
    let m = sys.mesh.len();
    let k = &sys.face_weight;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for i in 0..m {
        let kl = if i == 0 { 0.0 } else { k[i - 1] };
        diag[i] = kl + k[i];
        if i > 0 {
            lower[i] = -kl;
        }
        if i + 1 < m {
            upper[i] = -k[i];
        }
    }
    solve_tridiagonal(&lower, &diag, &upper, &sys.source).unwrap_or_else(|| vec![0.0; m])
}

fn reconstruct_derivative(r: &[f64], v: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut dv = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            let s = (v[1] - v[0]) / (r[1] - r[0]);
            dv = vec![0.0, s];
        }
        return dv;
    }
    for i in 1..n - 1 {
        let (h0, h1) = (r[i] - r[i - 1], r[i + 1] - r[i]);
        dv[i] = -h1 / (h0 * (h0 + h1)) * v[i - 1] + (h1 - h0) / (h0 * h1) * v[i] + h0 / (h1 * (h0 + h1)) * v[i + 1];
    }
    let (h0, h1) = (r[n - 2] - r[n - 3], r[n - 1] - r[n - 2]);
    dv[n - 1] = h1 / (h0 * (h0 + h1)) * v[n - 3] - (h0 + h1) / (h0 * h1) * v[n - 2] + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * v[n - 1];
    dv
}

/// Solves the radial problem on the Wulff ball of radius `params.radius`.
///
/// On failure the error carries the last iterate.
pub fn solve_radial_bvp(params: &ProblemParams, mesh: &MeshControl) -> Result<RadialSolution> {
    params.validate()?;
    if mesh.intervals < 2 {
        return Err(Error::invalid("need at least 2 intervals"));
    }
    if !(mesh.inner_cutoff >= 0.0 && mesh.inner_cutoff < params.radius) {
        return Err(Error::invalid("inner cutoff must lie in [0, R)"));
    }
    let p = params.bx.p;
    let grading = mesh.grading_for(p);
    if !(grading >= 1.0 && grading.is_finite()) {
        return Err(Error::invalid("grading exponent must be at least 1"));
    }
    let geo = Mesh::new(mesh.inner_cutoff, params.radius, mesh.intervals, grading);
    let mut sys = System::new(params, &geo);
    let mut warnings = Vec::new();
    let ball = params.ball_measure();
    if (ball - params.bx.omega_volume).abs() > 1e-9 * ball {
        warnings.push(format!(
            "omega_volume {} differs from κ_N R^N = {ball}",
            params.bx.omega_volume
        ));
    }

    let mut v = linear_guess(&sys);
    let g_ref = {
        let s = max_abs(&sys.slopes(&v));
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    };
    let eps_final = if p == 2.0 { 0.0 } else { 1e-9 * g_ref };
    let schedule: Vec<f64> = if p == 2.0 {
        vec![0.0]
    } else {
        vec![1e-2 * g_ref, 1e-4 * g_ref, 1e-6 * g_ref, eps_final]
    };

    let mut newton_total = 0;
    let mut picard = 0;
    let mut last_rel = f64::INFINITY;
    let mut ok = true;
    let stage_tol = (mesh.rtol * 100.0).max(1e-8);
    for (k, &eps) in schedule.iter().enumerate() {
        let tol = if k + 1 == schedule.len() { mesh.rtol } else { stage_tol };
        let (it, conv, rel) = sys.newton(&mut v, eps, tol, mesh.max_newton);
        newton_total += it;
        last_rel = rel;
        if !conv && k + 1 == schedule.len() {
            ok = false;
        }
    }
    let mut picard_ok = true;
    if ok && !params.beta.is_zero() {
        picard_ok = false;
        while picard < mesh.max_picard {
            picard += 1;
            let prev = v.clone();
            sys.freeze_gradient_term(&v);
            let (it, conv, rel) = sys.newton(&mut v, eps_final, mesh.rtol, mesh.max_newton);
            newton_total += it;
            last_rel = rel;
            if !conv {
                break;
            }
            let change = prev.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if change <= mesh.picard_tol * max_abs(&v).max(f64::MIN_POSITIVE) {
                picard_ok = true;
                break;
            }
        }
        if !picard_ok {
            warnings.push(format!("Picard iteration stopped after {picard} sweeps"));
        }
    }

    let mut r = geo.r.clone();
    let mut vv = v;
    vv.push(0.0);
    let dv = reconstruct_derivative(&r, &vv);
    let mut dv = dv;
    dv[0] = 0.0;
    r.shrink_to_fit();
    let converged = ok && picard_ok && last_rel.is_finite();
    let sol = RadialSolution {
        r,
        v: vv,
        dv,
        report: SolveReport {
            converged,
            newton_iterations: newton_total,
            picard_iterations: picard,
            residual: last_rel,
            epsilon: eps_final,
            intervals: mesh.intervals,
            grading,
            inner_cutoff: mesh.inner_cutoff,
            warnings,
        },
    };
    if converged {
        Ok(sol)
    } else {
        Err(Error::NonConvergence {
            message: format!("radial solve did not converge (relative residual {last_rel:.3e})"),
            last: Some(Box::new(sol)),
        })
    }
}
