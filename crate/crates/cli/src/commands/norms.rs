use anyhow::Result;
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wulff_hardy::norms::{duality_residuals, NormKind};
use wulff_hardy::NormSpec;

use super::{Outcome, RunContext};
use crate::check::Check;
use crate::config::{json_flag, InputPaths};
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub norm: NormSpec,
    pub samples: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            norm: NormSpec::euclidean(2).expect("valid dimension"),
            samples: 1000,
        }
    }
}

impl InputPaths for Params {}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Gauge as JSON, e.g. '{"kind":"power","r":3,"dim":2}'.
    #[arg(long, value_name = "JSON")]
    pub norm: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, p: &mut Params) -> Result<()> {
        if let Some(n) = &self.norm {
            p.norm = json_flag("norm", n)?;
        }
        p.samples = self.samples.unwrap_or(p.samples);
        Ok(())
    }
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Components uniform in `[-1, 1]`, none of them zero.
fn sample(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| loop {
            let v: f64 = rng.gen_range(-1.0..1.0);
            if v.abs() > 1e-6 {
                break v;
            }
        })
        .collect()
}

/// `ℓ^1` and `ℓ^∞` gauges are neither smooth nor strictly convex.
fn is_smooth(norm: &NormSpec) -> bool {
    match norm.kind() {
        NormKind::Power { r } | NormKind::ScaledAxes { r, .. } => *r > 1.0 && r.is_finite(),
        _ => true,
    }
}

pub fn run(p: &Params, ctx: &RunContext, out: &mut OutDir) -> Result<Outcome> {
    let norm = &p.norm;
    let dim = norm.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let xs: Vec<Vec<f64>> = (0..p.samples.max(1)).map(|_| sample(&mut rng, dim)).collect();
    let ys: Vec<Vec<f64>> = (0..xs.len()).map(|_| sample(&mut rng, dim)).collect();
    let (c1, c2) = norm.bounds();
    let closed = norm.is_closed_form();

    let (mut homog, mut convex, mut bounds, mut euler): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut rows = Vec::with_capacity(xs.len());
    for (x, y) in xs.iter().zip(&ys) {
        let h = norm.eval_norm(x)?;
        let t = -2.5;
        let scaled: Vec<f64> = x.iter().map(|v| t * v).collect();
        homog = homog.max((norm.eval_norm(&scaled)? - t.abs() * h).abs() / h);
        let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let hy = norm.eval_norm(y)?;
        convex = convex.max((norm.eval_norm(&sum)? - h - hy) / (h + hy));
        let len = euclid(x);
        bounds = bounds.max((c1 * len - h) / h).max((h - c2 * len) / h);
        let g = norm.grad_norm(x)?;
        let dot: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
        euler = euler.max((dot - h).abs() / h);
        let mut row: Vec<String> = x.iter().map(|v| num(*v)).collect();
        row.push(num(h));
        row.push(num(norm.eval_polar(x)?));
        rows.push(row);
    }

    let rel = 1e-12;
    let mut checks = vec![
        Check::new("homogeneity", homog <= rel, format!("max |H(tξ) − |t|H(ξ)|/H(ξ) = {homog:.2e}")),
        Check::new("triangle inequality", convex <= rel, format!("max (H(ξ+η) − H(ξ) − H(η))/(H(ξ)+H(η)) = {convex:.2e}")),
        Check::new(
            "equivalence bounds",
            bounds <= 1e-9,
            format!("c1 = {c1}, c2 = {c2}, worst relative excess {bounds:.2e}"),
        ),
    ];
    let euler_tol = if closed { 1e-12 } else { 1e-6 };
    checks.push(Check::new("Euler identity", euler <= euler_tol, format!("max |∇H(ξ)·ξ − H(ξ)|/H(ξ) = {euler:.2e}")));

    let bipolar = if closed {
        let pp = norm.polar()?.polar()?;
        let mut worst: f64 = 0.0;
        for x in &xs {
            let h = norm.eval_norm(x)?;
            worst = worst.max((pp.eval_norm(x)? - h).abs() / h);
        }
        checks.push(Check::new("bipolar", worst <= rel, format!("max |H°°(ξ) − H(ξ)|/H(ξ) = {worst:.2e}")));
        Some(worst)
    } else {
        None
    };

    let tol = if closed { 1e-6 } else { 1e-3 };
    let dual = duality_residuals(norm, &xs)?;
    let first = dual.norm_of_polar_grad.max(dual.polar_of_norm_grad);
    checks.push(Check::new(
        "duality of gradients",
        first <= tol,
        format!(
            "max |H(∇H°) − 1| = {:.2e}, max |H°(∇H) − 1| = {:.2e}",
            dual.norm_of_polar_grad, dual.polar_of_norm_grad
        ),
    ));
    let inv = format!("max |H°(ξ)∇H(∇H°(ξ)) − ξ| = {:.2e}", dual.inversion);
    if is_smooth(norm) {
        checks.push(Check::new("gradient inversion", dual.inversion <= tol, inv));
    } else {
        checks.push(Check::warn("gradient inversion", format!("{inv}; gauge is not strictly convex")));
    }

    let volume = norm.wulff_volume()?;
    let mut header: Vec<String> = (1..=dim).map(|k| format!("xi_{k}")).collect();
    header.push("norm".into());
    header.push("polar".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_table("norm_samples.csv", &header, &rows)?;

    let results = json!({
        "norm": norm,
        "samples": xs.len(),
        "bounds": [c1, c2],
        "wulff_volume": volume,
        "homogeneity": homog,
        "triangle": convex,
        "euler": euler,
        "bipolar": bipolar,
        "duality": dual,
    });
    Ok(Outcome { checks, results })
}
