//! Anisotropic gauges `H` on `R^N`, their polars `H°`, gradients and the
//! volume `κ_N` of the Wulff shape `{H° < 1}`.
//!
//! Three closed-form families are supported in any dimension (Euclidean,
//! `ℓ^r` and axis-weighted `ℓ^r`), plus a planar gauge given by a table of
//! values on unit directions. The polar of a closed-form gauge is again
//! closed-form (dual exponent, reciprocal weights); the tabulated gauge uses
//! a direction sweep followed by golden-section refinement.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::numerics::{golden_max, integrate, Tolerance};
use crate::serde_ext::extended;

/// Number of directions in the coarse sweep of the generic polar evaluator.
pub const POLAR_SWEEP: usize = 4096;

/// Step of the central-difference gradient, relative to `|ξ|`.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    Euclidean,
    /// `(Σ|ξ_k|^r)^{1/r}`, `1 ≤ r ≤ ∞`.
    Power { r: f64 },
    /// `(Σ (w_k|ξ_k|)^r)^{1/r}` with positive weights.
    ScaledAxes { weights: Vec<f64>, r: f64 },
    /// Planar gauge tabulated on unit directions, linearly interpolated in
    /// the angle.
    Sampled(SampledTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledTable {
    angles: Vec<f64>,
    values: Vec<f64>,
}

impl SampledTable {
    fn new(angles: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if angles.len() != values.len() {
            return Err(Error::invalid("sampled norm: angles and values differ in length"));
        }
        if angles.len() < 8 {
            return Err(Error::invalid("sampled norm: need at least 8 directions"));
        }
        let mut pairs = Vec::with_capacity(angles.len());
        for (&a, &v) in angles.iter().zip(&values) {
            if !a.is_finite() || !v.is_finite() {
                return Err(Error::invalid("sampled norm: non-finite entry"));
            }
            if v <= 0.0 {
                return Err(Error::invalid("sampled norm: values must be positive"));
            }
            pairs.push((a.rem_euclid(TAU), v));
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in pairs.windows(2) {
            if w[1].0 - w[0].0 <= 1e-12 {
                return Err(Error::invalid("sampled norm: duplicate direction"));
            }
        }
        let table = SampledTable {
            angles: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        };
        // H(-ξ) = H(ξ)
        for (&a, &v) in table.angles.iter().zip(&table.values) {
            let opposite = table.interpolate(a + PI);
            if (opposite - v).abs() > 1e-6 * v {
                return Err(Error::invalid(format!(
                    "sampled norm: table is not even (value {v} at angle {a}, {opposite} opposite)"
                )));
            }
        }
        Ok(table)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value on the unit direction at angle `theta`.
    pub fn interpolate(&self, theta: f64) -> f64 {
        let t = theta.rem_euclid(TAU);
        let n = self.angles.len();
        // first index with angle > t
        let hi = self.angles.partition_point(|&a| a <= t);
        let (i0, i1, a0, a1) = if hi == 0 {
            (n - 1, 0, self.angles[n - 1] - TAU, self.angles[0])
        } else if hi == n {
            (n - 1, 0, self.angles[n - 1], self.angles[0] + TAU)
        } else {
            (hi - 1, hi, self.angles[hi - 1], self.angles[hi])
        };
        let w = (t - a0) / (a1 - a0);
        self.values[i0] * (1.0 - w) + self.values[i1] * w
    }
}

/// A validated gauge together with its equivalence constants `c1 ≤ c2`
/// (`c1|ξ| ≤ H(ξ) ≤ c2|ξ|`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormRepr", into = "NormRepr")]
pub struct NormSpec {
    kind: NormKind,
    dim: usize,
    c1: f64,
    c2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum NormRepr {
    Euclidean {
        dim: usize,
    },
    Power {
        #[serde(with = "extended")]
        r: f64,
        dim: usize,
    },
    ScaledAxes {
        w: Vec<f64>,
        #[serde(with = "extended")]
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Sampled {
        angles: Vec<f64>,
        values: Vec<f64>,
    },
}

impl TryFrom<NormRepr> for NormSpec {
    type Error = Error;

    fn try_from(repr: NormRepr) -> Result<Self> {
        match repr {
            NormRepr::Euclidean { dim } => NormSpec::euclidean(dim),
            NormRepr::Power { r, dim } => NormSpec::power(r, dim),
            NormRepr::ScaledAxes { w, r, dim } => {
                if let Some(d) = dim {
                    if d != w.len() {
                        return Err(Error::invalid(format!(
                            "scaled_axes: dim {d} but {} weights",
                            w.len()
                        )));
                    }
                }
                NormSpec::scaled_axes(w, r)
            }
            NormRepr::Sampled { angles, values } => NormSpec::sampled(angles, values),
        }
    }
}

impl From<NormSpec> for NormRepr {
    fn from(spec: NormSpec) -> Self {
        match spec.kind {
            NormKind::Euclidean => NormRepr::Euclidean { dim: spec.dim },
            NormKind::Power { r } => NormRepr::Power { r, dim: spec.dim },
            NormKind::ScaledAxes { weights, r } => NormRepr::ScaledAxes {
                dim: Some(weights.len()),
                w: weights,
                r,
            },
            NormKind::Sampled(t) => NormRepr::Sampled {
                angles: t.angles,
                values: t.values,
            },
        }
    }
}

/// Largest supported dimension.
pub const MAX_DIM: usize = 64;

fn check_dim(dim: usize) -> Result<()> {
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(Error::invalid(format!("dimension must lie in [2, {MAX_DIM}], got {dim}")));
    }
    Ok(())
}

fn check_exponent(r: f64) -> Result<()> {
    if r.is_nan() || r < 1.0 {
        return Err(Error::invalid(format!("norm exponent must lie in [1, inf], got {r}")));
    }
    Ok(())
}

/// Hölder conjugate `r/(r-1)`, with `1 ↔ ∞`.
pub fn dual_exponent(r: f64) -> f64 {
    if r == 1.0 {
        f64::INFINITY
    } else if r.is_infinite() {
        1.0
    } else {
        r / (r - 1.0)
    }
}

fn lp(x: &[f64], r: f64) -> f64 {
    let m = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if m == 0.0 || r.is_infinite() {
        return m;
    }
    if r == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if r == 2.0 {
        let s: f64 = x.iter().map(|v| (v / m) * (v / m)).sum();
        return m * s.sqrt();
    }
    let s: f64 = x.iter().map(|v| (v.abs() / m).powf(r)).sum();
    m * s.powf(1.0 / r)
}

/// Gradient of `ℓ^r` at `x ≠ 0`.
fn lp_grad(x: &[f64], r: f64) -> Result<Vec<f64>> {
    let nonzero = x.iter().filter(|v| **v != 0.0).count();
    if r == 1.0 {
        if nonzero == x.len() || nonzero == 1 {
            // on a coordinate axis we return the limit taken along the axis
            return Ok(x.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect());
        }
        return Err(Error::domain(
            "l1 gauge is not differentiable where some but not all coordinates vanish",
        ));
    }
    if r.is_infinite() {
        let m = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let hits: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() == m).collect();
        if hits.len() != 1 {
            return Err(Error::domain("max gauge is not differentiable at a tie"));
        }
        let mut g = vec![0.0; x.len()];
        g[hits[0]] = x[hits[0]].signum();
        return Ok(g);
    }
    let h = lp(x, r);
    Ok(x.iter()
        .map(|v| {
            if *v == 0.0 {
                0.0
            } else {
                v.signum() * (v.abs() / h).powf(r - 1.0)
            }
        })
        .collect())
}

fn unit_dir(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

impl NormSpec {
    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(NormSpec {
            kind: NormKind::Euclidean,
            dim,
            c1: 1.0,
            c2: 1.0,
        })
    }

    pub fn power(r: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        check_exponent(r)?;
        // extremes of ||ξ||_r on the Euclidean sphere sit on axes and diagonals
        let diag = (dim as f64).powf(if r.is_infinite() { -0.5 } else { 1.0 / r - 0.5 });
        let (c1, c2) = if diag < 1.0 { (diag, 1.0) } else { (1.0, diag) };
        Ok(NormSpec {
            kind: NormKind::Power { r },
            dim,
            c1,
            c2,
        })
    }

    pub fn scaled_axes(weights: Vec<f64>, r: f64) -> Result<Self> {
        check_dim(weights.len())?;
        check_exponent(r)?;
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::invalid("scaled_axes: weights must be positive and finite"));
        }
        let dim = weights.len();
        let mut spec = NormSpec {
            kind: NormKind::ScaledAxes { weights, r },
            dim,
            c1: 0.0,
            c2: 0.0,
        };
        let (c1, c2) = match &spec.kind {
            NormKind::ScaledAxes { weights, r } if *r == 2.0 => (
                weights.iter().cloned().fold(f64::INFINITY, f64::min),
                weights.iter().cloned().fold(0.0, f64::max),
            ),
            _ => sphere_extremes(&spec),
        };
        spec.c1 = c1;
        spec.c2 = c2;
        Ok(spec)
    }

    pub fn sampled(angles: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let table = SampledTable::new(angles, values)?;
        let c1 = table.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let c2 = table.values.iter().cloned().fold(0.0, f64::max);
        Ok(NormSpec {
            kind: NormKind::Sampled(table),
            dim: 2,
            c1,
            c2,
        })
    }

    /// Tabulates a planar gauge on `n` equally spaced directions.
    pub fn sample_from(other: &NormSpec, n: usize) -> Result<Self> {
        if other.dim != 2 {
            return Err(Error::invalid("only planar gauges can be tabulated"));
        }
        let angles: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
        let values = angles
            .iter()
            .map(|&t| other.value(&unit_dir(t)))
            .collect();
        NormSpec::sampled(angles, values)
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(c1, c2)` with `c1|ξ| ≤ H(ξ) ≤ c2|ξ|`.
    pub fn bounds(&self) -> (f64, f64) {
        (self.c1, self.c2)
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self.kind, NormKind::Sampled(_))
    }

    fn check_vec(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector has {} components, gauge dimension is {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite vector component"));
        }
        Ok(())
    }

    /// `H(ξ)` without input validation.
    pub(crate) fn value(&self, xi: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Euclidean => lp(xi, 2.0),
            NormKind::Power { r } => lp(xi, *r),
            NormKind::ScaledAxes { weights, r } => {
                let y: Vec<f64> = xi.iter().zip(weights).map(|(x, w)| x * w).collect();
                lp(&y, *r)
            }
            NormKind::Sampled(t) => {
                let len = lp(xi, 2.0);
                if len == 0.0 {
                    0.0
                } else {
                    len * t.interpolate(xi[1].atan2(xi[0]))
                }
            }
        }
    }

    /// `H°(v)` without input validation.
    pub(crate) fn polar_value(&self, v: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Euclidean => lp(v, 2.0),
            NormKind::Power { r } => lp(v, dual_exponent(*r)),
            NormKind::ScaledAxes { weights, r } => {
                let y: Vec<f64> = v.iter().zip(weights).map(|(x, w)| x / w).collect();
                lp(&y, dual_exponent(*r))
            }
            NormKind::Sampled(_) => self.polar_sweep(v),
        }
    }

    /// Evaluates the gauge `H(ξ)`.
    pub fn eval_norm(&self, xi: &[f64]) -> Result<f64> {
        self.check_vec(xi)?;
        Ok(self.value(xi))
    }

    /// Evaluates the polar `H°(v) = sup_{ξ≠0} ξ·v / H(ξ)`.
    pub fn eval_polar(&self, v: &[f64]) -> Result<f64> {
        self.check_vec(v)?;
        Ok(self.polar_value(v))
    }

    /// Polar by direct maximization over the circle, for any planar gauge.
    /// Closed-form kinds use this only as a cross-check.
    pub fn eval_polar_numeric(&self, v: &[f64]) -> Result<f64> {
        self.check_vec(v)?;
        if self.dim != 2 {
            return Err(Error::invalid("numeric polar is implemented for planar gauges"));
        }
        Ok(self.polar_sweep(v))
    }

    fn polar_sweep(&self, v: &[f64]) -> f64 {
        if v[0] == 0.0 && v[1] == 0.0 {
            return 0.0;
        }
        let ratio = |t: f64| {
            let d = unit_dir(t);
            (d[0] * v[0] + d[1] * v[1]) / self.value(&d)
        };
        let step = TAU / POLAR_SWEEP as f64;
        let mut best_k = 0;
        let mut best = f64::NEG_INFINITY;
        for k in 0..POLAR_SWEEP {
            let val = ratio(k as f64 * step);
            if val > best {
                best = val;
                best_k = k;
            }
        }
        let center = best_k as f64 * step;
        let (_, refined) = golden_max(ratio, center - step, center + step, 1e-13);
        best.max(refined)
    }

    /// The gauge whose value is `H°`; `H°° = H` for every closed-form kind.
    pub fn polar(&self) -> Result<NormSpec> {
        match &self.kind {
            NormKind::Euclidean => NormSpec::euclidean(self.dim),
            NormKind::Power { r } => NormSpec::power(dual_exponent(*r), self.dim),
            NormKind::ScaledAxes { weights, r } => NormSpec::scaled_axes(
                weights.iter().map(|w| 1.0 / w).collect(),
                dual_exponent(*r),
            ),
            NormKind::Sampled(t) => {
                let values = t
                    .angles
                    .iter()
                    .map(|&a| self.polar_sweep(&unit_dir(a)))
                    .collect();
                NormSpec::sampled(t.angles.clone(), values)
            }
        }
    }

    /// `∇H(ξ)`. Analytic for closed forms, central differences with step
    /// `FD_STEP·|ξ|` for tabulated gauges.
    pub fn grad_norm(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_vec(xi)?;
        if xi.iter().all(|v| *v == 0.0) {
            return Err(Error::domain("gauge is not differentiable at the origin"));
        }
        match &self.kind {
            NormKind::Euclidean => {
                let n = lp(xi, 2.0);
                Ok(xi.iter().map(|v| v / n).collect())
            }
            NormKind::Power { r } => lp_grad(xi, *r),
            NormKind::ScaledAxes { weights, r } => {
                let y: Vec<f64> = xi.iter().zip(weights).map(|(x, w)| x * w).collect();
                let g = lp_grad(&y, *r)?;
                Ok(g.iter().zip(weights).map(|(gi, w)| gi * w).collect())
            }
            NormKind::Sampled(_) => Ok(fd_grad(|x| self.value(x), xi)),
        }
    }

    /// `∇H°(v)`.
    pub fn grad_polar(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_vec(v)?;
        if v.iter().all(|x| *x == 0.0) {
            return Err(Error::domain("polar is not differentiable at the origin"));
        }
        match &self.kind {
            NormKind::Sampled(_) => Ok(fd_grad(|x| self.polar_sweep(x), v)),
            _ => self.polar()?.grad_norm(v),
        }
    }

    /// `κ_N = |{H° < 1}|`.
    ///
    /// Closed-form gauges use the exact volume of the weighted `ℓ^{r'}` ball.
    /// Tabulated gauges use polar-coordinate quadrature
    /// `(1/2)∫_0^{2π} H°(θ)^{-2} dθ`.
    pub fn wulff_volume(&self) -> Result<VolumeEstimate> {
        if let Some(value) = self.wulff_volume_exact() {
            return Ok(VolumeEstimate {
                value,
                std_error: 0.0,
                method: VolumeMethod::ClosedForm,
            });
        }
        self.wulff_volume_quadrature()
    }

    /// `Π w_k · (2Γ(1+1/s))^N / Γ(1+N/s)` with `s` the dual exponent.
    pub fn wulff_volume_exact(&self) -> Option<f64> {
        let (scale, r) = match &self.kind {
            NormKind::Euclidean => (1.0, 2.0),
            NormKind::Power { r } => (1.0, *r),
            NormKind::ScaledAxes { weights, r } => (weights.iter().product(), *r),
            NormKind::Sampled(_) => return None,
        };
        let s = dual_exponent(r);
        let n = self.dim as f64;
        let ball = if s.is_infinite() {
            2f64.powf(n)
        } else {
            let ln = n * (2.0 * gamma(1.0 + 1.0 / s)).ln() - ln_gamma(1.0 + n / s);
            ln.exp()
        };
        Some(scale * ball)
    }

    /// `(1/N)∫_{S^{N-1}} H°(ω)^{-N} dσ` by adaptive quadrature, for `N ∈ {2, 3}`;
    /// a seeded Monte Carlo estimate for larger `N`.
    pub fn wulff_volume_quadrature(&self) -> Result<VolumeEstimate> {
        match self.dim {
            2 => Ok(self.wulff_area_quadrature()),
            3 => Ok(self.wulff_volume_quadrature_3d()),
            _ => self.wulff_volume_monte_carlo(0x5eed, 400_000),
        }
    }

    /// Convenience for the value of [`NormSpec::wulff_volume`].
    pub fn kappa(&self) -> Result<f64> {
        Ok(self.wulff_volume()?.value)
    }

    fn wulff_area_quadrature(&self) -> VolumeEstimate {
        let pieces = 16;
        let tol = Tolerance::new(1e-14, 1e-12).with_max_intervals(2000);
        let mut value = 0.0;
        let mut err = 0.0;
        for k in 0..pieces {
            let a = TAU * k as f64 / pieces as f64;
            let b = TAU * (k + 1) as f64 / pieces as f64;
            let q = integrate(
                |t| {
                    let h = self.polar_value(&unit_dir(t));
                    0.5 / (h * h)
                },
                a,
                b,
                tol,
            );
            value += q.value;
            err += q.abs_error;
        }
        VolumeEstimate {
            value,
            std_error: err,
            method: VolumeMethod::Quadrature,
        }
    }

    fn wulff_volume_quadrature_3d(&self) -> VolumeEstimate {
        let tol_inner = Tolerance::new(1e-13, 1e-11).with_max_intervals(400);
        let tol_outer = Tolerance::new(1e-12, 1e-10).with_max_intervals(400);
        let mut value = 0.0;
        let mut err = 0.0;
        let n_theta = 8;
        let n_phi = 4;
        for k in 0..n_theta {
            let a = TAU * k as f64 / n_theta as f64;
            let b = TAU * (k + 1) as f64 / n_theta as f64;
            let q = integrate(
                |theta| {
                    let (st, ct) = theta.sin_cos();
                    let mut inner = 0.0;
                    for j in 0..n_phi {
                        let pa = PI * j as f64 / n_phi as f64;
                        let pb = PI * (j + 1) as f64 / n_phi as f64;
                        inner += integrate(
                            |phi| {
                                let (sp, cp) = phi.sin_cos();
                                let h = self.polar_value(&[sp * ct, sp * st, cp]);
                                sp / (3.0 * h * h * h)
                            },
                            pa,
                            pb,
                            tol_inner,
                        )
                        .value;
                    }
                    inner
                },
                a,
                b,
                tol_outer,
            );
            value += q.value;
            err += q.abs_error;
        }
        VolumeEstimate {
            value,
            std_error: err,
            method: VolumeMethod::Quadrature,
        }
    }

    /// Hit-or-miss estimate of `κ_N` in the cube `[-c2, c2]^N ⊃ W`.
    pub fn wulff_volume_monte_carlo(&self, seed: u64, samples: usize) -> Result<VolumeEstimate> {
        if samples == 0 {
            return Err(Error::invalid("need at least one Monte Carlo sample"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = self.c2 * (1.0 + 1e-12);
        let mut x = vec![0.0; self.dim];
        let mut hits = 0usize;
        for _ in 0..samples {
            for xi in x.iter_mut() {
                *xi = rng.gen_range(-half..half);
            }
            if self.polar_value(&x) < 1.0 {
                hits += 1;
            }
        }
        let cube = (2.0 * half).powi(self.dim as i32);
        let frac = hits as f64 / samples as f64;
        Ok(VolumeEstimate {
            value: cube * frac,
            std_error: cube * (frac * (1.0 - frac) / samples as f64).sqrt(),
            method: VolumeMethod::MonteCarlo,
        })
    }

    /// Extent of the Wulff shape along each coordinate axis, `H(e_i)`.
    pub fn wulff_half_widths(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let mut e = vec![0.0; self.dim];
                e[i] = 1.0;
                self.value(&e)
            })
            .collect()
    }
}

fn fd_grad<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Vec<f64> {
    let h = FD_STEP * lp(x, 2.0);
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Min and max of `H` on the Euclidean unit sphere, by sweep + refinement.
fn sphere_extremes(spec: &NormSpec) -> (f64, f64) {
    if spec.dim == 2 {
        let f = |t: f64| spec.value(&unit_dir(t));
        let step = TAU / POLAR_SWEEP as f64;
        let mut lo = (0, f64::INFINITY);
        let mut hi = (0, f64::NEG_INFINITY);
        for k in 0..POLAR_SWEEP {
            let v = f(k as f64 * step);
            if v < lo.1 {
                lo = (k, v);
            }
            if v > hi.1 {
                hi = (k, v);
            }
        }
        let tl = lo.0 as f64 * step;
        let th = hi.0 as f64 * step;
        let (_, min_neg) = golden_max(|t| -f(t), tl - step, tl + step, 1e-13);
        let (_, max) = golden_max(f, th - step, th + step, 1e-13);
        return (lo.1.min(-min_neg), hi.1.max(max));
    }
    let n = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let samples = 20_000;
    let mut best_lo = (vec![0.0; n], f64::INFINITY);
    let mut best_hi = (vec![0.0; n], f64::NEG_INFINITY);
    let mut x = vec![0.0; n];
    // coordinate axes and the main diagonal are the usual extremizers
    let mut candidates: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    candidates.push(vec![1.0 / (n as f64).sqrt(); n]);
    for c in &candidates {
        let v = spec.value(c);
        if v < best_lo.1 {
            best_lo = (c.clone(), v);
        }
        if v > best_hi.1 {
            best_hi = (c.clone(), v);
        }
    }
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = rng.gen_range(-1.0..1.0);
        }
        let len = lp(&x, 2.0);
        if len < 1e-3 {
            continue;
        }
        x.iter_mut().for_each(|v| *v /= len);
        let v = spec.value(&x);
        if v < best_lo.1 {
            best_lo = (x.clone(), v);
        }
        if v > best_hi.1 {
            best_hi = (x.clone(), v);
        }
    }
    let lo = pattern_search(spec, best_lo.0, -1.0);
    let hi = pattern_search(spec, best_hi.0, 1.0);
    (lo, hi)
}

/// Coordinate pattern search on the unit sphere; `sign = 1` maximizes.
fn pattern_search(spec: &NormSpec, mut x: Vec<f64>, sign: f64) -> f64 {
    let n = x.len();
    let mut best = sign * spec.value(&x);
    let mut step = 0.05;
    let mut trial = x.clone();
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..n {
            for dir in [1.0, -1.0] {
                trial.copy_from_slice(&x);
                trial[i] += dir * step;
                let len = lp(&trial, 2.0);
                trial.iter_mut().for_each(|v| *v /= len);
                let v = sign * spec.value(&trial);
                if v > best {
                    best = v;
                    x.copy_from_slice(&trial);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    sign * best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

/// `κ_N` with an error indicator: the quadrature error estimate, or the
/// standard error of the Monte Carlo mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: VolumeMethod,
}

/// Largest deviations from the duality identities over a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityResiduals {
    /// `max |H(∇H°(ξ)) − 1|`
    pub norm_of_polar_grad: f64,
    /// `max |H°(∇H(ξ)) − 1|`
    pub polar_of_norm_grad: f64,
    /// `max |H°(ξ)∇H(∇H°(ξ)) − ξ|_∞`
    pub inversion: f64,
}

impl DualityResiduals {
    pub fn max(&self) -> f64 {
        self.norm_of_polar_grad
            .max(self.polar_of_norm_grad)
            .max(self.inversion)
    }
}

pub fn duality_residuals(spec: &NormSpec, sample: &[Vec<f64>]) -> Result<DualityResiduals> {
    let mut out = DualityResiduals {
        norm_of_polar_grad: 0.0,
        polar_of_norm_grad: 0.0,
        inversion: 0.0,
    };
    for xi in sample {
        let gp = spec.grad_polar(xi)?;
        let gn = spec.grad_norm(xi)?;
        out.norm_of_polar_grad = out.norm_of_polar_grad.max((spec.value(&gp) - 1.0).abs());
        out.polar_of_norm_grad = out
            .polar_of_norm_grad
            .max((spec.polar_value(&gn) - 1.0).abs());
        let hp = spec.polar_value(xi);
        let back = spec.grad_norm(&gp)?;
        let inv = back
            .iter()
            .zip(xi)
            .map(|(b, x)| (hp * b - x).abs())
            .fold(0.0, f64::max);
        out.inversion = out.inversion.max(inv);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1_table(n: usize) -> NormSpec {
        NormSpec::sample_from(&NormSpec::power(1.0, 2).unwrap(), n).unwrap()
    }

    #[test]
    fn examples_eval_norm() {
        let l2 = NormSpec::power(2.0, 2).unwrap();
        assert_eq!(l2.eval_norm(&[3.0, 4.0]).unwrap(), 5.0);
        let l1 = NormSpec::power(1.0, 2).unwrap();
        assert_eq!(l1.eval_norm(&[1.0, -1.0]).unwrap(), 2.0);
        let ell = NormSpec::scaled_axes(vec![1.0, 2.0], 2.0).unwrap();
        assert!((ell.eval_norm(&[1.0, 1.0]).unwrap() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn non_finite_input_rejected() {
        let l2 = NormSpec::euclidean(2).unwrap();
        assert!(matches!(
            l2.eval_norm(&[f64::NAN, 1.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(l2.eval_norm(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn examples_eval_polar() {
        let l1 = NormSpec::power(1.0, 2).unwrap();
        assert_eq!(l1.eval_polar(&[1.0, 1.0]).unwrap(), 1.0);
        let l2 = NormSpec::power(2.0, 2).unwrap();
        assert_eq!(l2.eval_polar(&[3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn sampled_l1_polar_against_brute_force() {
        let table = l1_table(720);
        let v = [0.6, 0.8];
        // brute-force sup over 1e5 directions of the tabulated gauge
        let brute = (0..100_000)
            .map(|k| {
                let d = unit_dir(TAU * k as f64 / 100_000.0);
                (d[0] * v[0] + d[1] * v[1]) / table.value(&d)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let got = table.eval_polar(&v).unwrap();
        assert!((got - 0.8).abs() < 1e-3);
        assert!(got >= brute - 1e-12);
        assert!((got - brute).abs() < 1e-6);
    }

    #[test]
    fn examples_grad_norm() {
        let l2 = NormSpec::power(2.0, 2).unwrap();
        let g = l2.grad_norm(&[3.0, 4.0]).unwrap();
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        assert_eq!(l2.grad_norm(&[0.0, 2.0]).unwrap(), vec![0.0, 1.0]);

        let l4 = NormSpec::power(4.0, 2).unwrap();
        let g = l4.grad_norm(&[1.0, 1.0]).unwrap();
        // finite-difference oracle on the closed-form value
        let fd = fd_grad(|x| l4.value(x), &[1.0, 1.0]);
        let expect = 2f64.powf(-0.75);
        for i in 0..2 {
            assert!((g[i] - expect).abs() < 1e-14);
            assert!((fd[i] - expect).abs() < 1e-8);
        }
        assert!(matches!(l2.grad_norm(&[0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn l1_gradient_axis_rule() {
        let l1 = NormSpec::power(1.0, 3).unwrap();
        assert_eq!(l1.grad_norm(&[0.0, -2.0, 0.0]).unwrap(), vec![0.0, -1.0, 0.0]);
        assert_eq!(l1.grad_norm(&[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -1.0, 1.0]);
        assert!(matches!(
            l1.grad_norm(&[1.0, 0.0, 3.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn wulff_volume_examples() {
        let k = NormSpec::power(2.0, 2).unwrap().kappa().unwrap();
        assert!((k - PI).abs() < 1e-10);
        let k = NormSpec::power(1.0, 2).unwrap().kappa().unwrap();
        assert!((k - 4.0).abs() < 1e-10);
        let k = NormSpec::scaled_axes(vec![1.0, 2.0], 2.0)
            .unwrap()
            .kappa()
            .unwrap();
        assert!((k - TAU).abs() < 1e-10);
    }

    #[test]
    fn wulff_volume_quadrature_paths() {
        let disk = NormSpec::euclidean(2).unwrap().wulff_volume_quadrature().unwrap();
        assert_eq!(disk.method, VolumeMethod::Quadrature);
        assert!((disk.value - PI).abs() < 1e-10);
        let square = NormSpec::power(1.0, 2).unwrap().wulff_volume_quadrature().unwrap();
        assert!((square.value - 4.0).abs() < 1e-10);
        let ball = NormSpec::euclidean(3).unwrap().wulff_volume_quadrature().unwrap();
        assert!((ball.value - 4.0 * PI / 3.0).abs() < 1e-8);
        let l3 = NormSpec::power(3.0, 3).unwrap();
        let q = l3.wulff_volume_quadrature().unwrap().value;
        let exact = l3.wulff_volume_exact().unwrap();
        assert!((q - exact).abs() < 1e-8 * exact);
        let ball4 = NormSpec::euclidean(4).unwrap().wulff_volume_quadrature().unwrap();
        assert_eq!(ball4.method, VolumeMethod::MonteCarlo);
        let exact = PI * PI / 2.0;
        assert!((ball4.value - exact).abs() < 5.0 * ball4.std_error);
    }

    #[test]
    fn wulff_volume_closed_forms() {
        // cube, cross-polytope, box and ellipsoid
        let k = NormSpec::power(1.0, 3).unwrap().kappa().unwrap();
        assert!((k - 8.0).abs() < 1e-12);
        let k = NormSpec::power(f64::INFINITY, 3).unwrap().kappa().unwrap();
        assert!((k - 8.0 / 6.0).abs() < 1e-12);
        let k = NormSpec::scaled_axes(vec![1.0, 2.0, 3.0], 1.0).unwrap().kappa().unwrap();
        assert!((k - 48.0).abs() < 1e-11);
        let k = NormSpec::scaled_axes(vec![1.0, 2.0, 3.0], 2.0).unwrap().kappa().unwrap();
        assert!((k - 8.0 * PI).abs() < 1e-11);
        let k = NormSpec::euclidean(5).unwrap().kappa().unwrap();
        assert!((k - 8.0 * PI * PI / 15.0).abs() < 1e-12);
    }

    #[test]
    fn duality_examples() {
        let l2 = NormSpec::power(2.0, 2).unwrap();
        let res = duality_residuals(&l2, &[vec![0.3, -1.7], vec![2.0, 0.0]]).unwrap();
        assert!(res.max() < 1e-10);

        let table = l1_table(720);
        let axes = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -2.0]];
        let res = duality_residuals(&table, &axes).unwrap();
        assert!(res.max() <= 1e-3, "{res:?}");
    }

    #[test]
    fn sampled_table_must_be_even() {
        let angles: Vec<f64> = (0..16).map(|k| TAU * k as f64 / 16.0).collect();
        let mut values = vec![1.0; 16];
        values[3] = 2.0;
        assert!(NormSpec::sampled(angles, values).is_err());
    }

    #[test]
    fn json_shapes() {
        let s: NormSpec = serde_json::from_str(r#"{"kind":"power","r":2.0,"dim":2}"#).unwrap();
        assert_eq!(s, NormSpec::power(2.0, 2).unwrap());
        let s: NormSpec =
            serde_json::from_str(r#"{"kind":"scaled_axes","w":[1,2],"r":2,"dim":2}"#).unwrap();
        assert_eq!(s.bounds(), (1.0, 2.0));
        let s: NormSpec = serde_json::from_str(r#"{"kind":"power","r":"inf","dim":3}"#).unwrap();
        assert_eq!(s.polar().unwrap(), NormSpec::power(1.0, 3).unwrap());
        let back = serde_json::to_string(&s).unwrap();
        assert!(back.contains("\"inf\""));
        assert!(serde_json::from_str::<NormSpec>(r#"{"kind":"power","r":0.5,"dim":2}"#).is_err());
        assert!(serde_json::from_str::<NormSpec>(
            r#"{"kind":"scaled_axes","w":[1,2],"r":2,"dim":3}"#
        )
        .is_err());
    }

    #[test]
    fn reported_bounds_are_attained_for_power_norms() {
        for r in [1.0, 1.5, 3.0, f64::INFINITY] {
            let s = NormSpec::power(r, 3).unwrap();
            let (c1, c2) = s.bounds();
            let diag = s.value(&[1.0 / 3f64.sqrt(); 3]);
            let axis = s.value(&[1.0, 0.0, 0.0]);
            assert!((c1 - diag.min(axis)).abs() < 1e-14);
            assert!((c2 - diag.max(axis)).abs() < 1e-14);
        }
    }
}
