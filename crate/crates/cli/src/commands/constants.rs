use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wulff_hardy::constants::{
    analyze_f, constants_report, critical_lambda, euclidean_ball_volume, invert_f, BetaSpec, ExponentBox,
};
use wulff_hardy::serde_ext::extended;
use wulff_hardy::NormSpec;

use super::{Outcome, RunContext};
use crate::check::Check;
use crate::config::{json_flag, usage, InputPaths};
use crate::output::OutDir;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n: f64,
    pub p: f64,
    /// Gradient exponent; defaults to `p`.
    pub q: Option<f64>,
    pub m: f64,
    #[serde(with = "extended")]
    pub sigma: f64,
    /// Defaults to `κ_N`, the unit Wulff ball.
    pub omega_volume: Option<f64>,
    /// Gauge whose Wulff volume sets `κ_N`; Euclidean when absent.
    pub norm: Option<NormSpec>,
    pub beta: BetaSpec,
    /// Solve `F(α) = λ` for this value.
    pub lambda: Option<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: 4.0,
            p: 2.0,
            q: None,
            m: 1.5,
            sigma: f64::INFINITY,
            omega_volume: None,
            norm: None,
            beta: BetaSpec::Zero,
            lambda: None,
        }
    }
}

impl InputPaths for Params {}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    /// Secondary Lorentz exponent; `inf` allowed.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Coefficient of the gradient term as JSON, e.g. '{"kind":"exponential","beta0":0.5,"rate":1}'.
    #[arg(long, value_name = "JSON")]
    pub beta: Option<String>,
}

impl Overrides {
    pub fn apply(&self, p: &mut Params) -> Result<()> {
        p.n = self.n.unwrap_or(p.n);
        p.p = self.p.unwrap_or(p.p);
        p.q = self.q.or(p.q);
        p.m = self.m.unwrap_or(p.m);
        p.sigma = self.sigma.unwrap_or(p.sigma);
        p.lambda = self.lambda.or(p.lambda);
        if let Some(b) = &self.beta {
            p.beta = json_flag("beta", b)?;
        }
        Ok(())
    }
}

pub fn exponent_box(p: &Params) -> Result<ExponentBox> {
    let kappa = match &p.norm {
        Some(norm) => {
            if norm.dim() as f64 != p.n {
                return Err(usage(format!("norm dimension {} differs from N = {}", norm.dim(), p.n)));
            }
            norm.kappa()?
        }
        None => euclidean_ball_volume(p.n),
    };
    let omega = p.omega_volume.unwrap_or(kappa);
    Ok(ExponentBox::new(p.n, p.p, p.q.unwrap_or(p.p), p.m, p.sigma, omega, kappa)?)
}

pub fn run(p: &Params, _ctx: &RunContext, out: &mut OutDir) -> Result<Outcome> {
    let bx = exponent_box(p)?;
    let report = constants_report(&bx, &p.beta, None)?;
    let cap = report.hardy_constant;
    let b = report.b_infinity;
    let mut checks = Vec::new();
    if b.is_finite() {
        let f_m = bx.f(bx.alpha_m());
        let err = (b.exp() * report.lambda_m - f_m).abs();
        checks.push(Check::new(
            "threshold equals F at alpha_m",
            err <= 1e-12 * cap.max(1.0),
            format!("|e^B λ(m) − F(α_m)| = {err:.2e}"),
        ));
        let at_dual = critical_lambda(bx.p_star_dual(), &bx, b)?;
        let err = (at_dual - cap * (-b).exp()).abs();
        checks.push(Check::new(
            "threshold at (p*)' equals Lambda e^-B",
            err <= 1e-12 * cap.max(1.0),
            format!("λ((p*)′) = {at_dual}, Λ_N e^{{−B}} = {}", cap * (-b).exp()),
        ));
    } else {
        checks.push(Check::warn("threshold equals F at alpha_m", "B(∞) diverges, so λ(m) = 0"));
    }
    let an = analyze_f(&bx, None)?;
    let err = (an.numeric_argmax - an.argmax).abs().max((an.numeric_max - an.max).abs());
    checks.push(Check::new(
        "F maximizer",
        err <= 1e-10 * an.argmax.max(1.0),
        format!("numeric ({}, {}) vs ((N−p)/p, Λ_N) = ({}, {})", an.numeric_argmax, an.numeric_max, an.argmax, cap),
    ));
    let mut roots = None;
    if let Some(lambda) = p.lambda {
        match invert_f(&bx, lambda) {
            Ok(r) => {
                let err = (bx.f(r.lower) - lambda).abs().max((bx.f(r.upper) - lambda).abs());
                checks.push(Check::new(
                    "roots of F = lambda",
                    err <= 1e-12 * cap.max(1.0),
                    format!("α = {} ({}), {} ({})", r.lower, r.lower_regime.label(), r.upper, r.upper_regime.label()),
                ));
                roots = Some(r);
            }
            Err(wulff_hardy::Error::NoRealRoots(msg)) => checks.push(Check::warn("roots of F = lambda", msg)),
            Err(e) => return Err(e.into()),
        }
    }
    let results = json!({
        "report": report,
        "roots": roots,
        "kappa_n": bx.kappa_n,
        "f_zero": an.zero,
    });
    out.write_json("constants.json", &results)?;
    Ok(Outcome { checks, results })
}
