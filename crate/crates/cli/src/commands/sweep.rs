use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wulff_hardy::constants::{b_infinity, critical_lambda};
use wulff_hardy::numerics::fit_line;
use wulff_hardy::radial::{solve_radial_bvp, MeshControl, ProblemParams, SourceSpec};

use super::{bench_problem, Outcome, RunContext};
use crate::check::Check;
use crate::config::{usage, InputPaths};
use crate::output::{num, opt_num, OutDir};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Problem whose `λ` is replaced by `fraction · λ(m)`.
    pub problem: ProblemParams,
    pub fractions: Vec<f64>,
    pub mesh: MeshControl,
}

impl Default for Params {
    fn default() -> Self {
        let mut problem = bench_problem().expect("benchmark box is valid");
        problem.source = SourceSpec::Power {
            c: 1.0,
            gamma: 8.0 / 3.0,
        };
        Params {
            problem,
            fractions: (0..10).map(|k| k as f64 / 10.0).collect(),
            mesh: MeshControl::with_intervals(1024),
        }
    }
}

impl InputPaths for Params {}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Comma-separated fractions of `λ(m)`.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
}

impl Overrides {
    pub fn apply(&self, p: &mut Params) -> Result<()> {
        if let Some(f) = &self.fractions {
            p.fractions.clone_from(f);
        }
        Ok(())
    }
}

struct Point {
    lambda: f64,
    converged: bool,
    rho1: Option<f64>,
    rho2: Option<f64>,
    margin: Option<f64>,
}

fn solve_at(prob: &ProblemParams, lambda: f64, mesh: &MeshControl) -> Result<Point> {
    let mut prob = prob.clone();
    prob.lambda = lambda;
    let sol = solve_radial_bvp(&prob, mesh)?;
    let v = super::solve::verify(&sol, &prob, None);
    Ok(Point {
        lambda,
        converged: sol.report.converged,
        rho1: v.rho1,
        rho2: v.rho2,
        margin: v.level_margin,
    })
}

pub fn run(p: &Params, ctx: &RunContext, out: &mut OutDir) -> Result<Outcome> {
    if p.fractions.len() < 2 {
        return Err(usage("estimate-sweep needs at least two fractions"));
    }
    if p.fractions.iter().any(|f| !(*f >= 0.0 && *f < 1.0)) {
        return Err(usage("fractions must lie in [0, 1)"));
    }
    let mut fractions = p.fractions.clone();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    let mut mesh = p.mesh;
    if let Some(n) = ctx.mesh {
        mesh.intervals = n;
    }
    let bx = &p.problem.bx;
    let lam_m = critical_lambda(bx.m, bx, b_infinity(&p.problem.beta, bx)?)?;
    let points = fractions
        .par_iter()
        .map(|f| solve_at(&p.problem, f * lam_m, &mesh))
        .collect::<Result<Vec<_>>>()?;

    let mid = fractions[fractions.len() / 2];
    let fine_mesh = MeshControl {
        intervals: 2 * mesh.intervals,
        ..mesh
    };
    let fine = solve_at(&p.problem, mid * lam_m, &fine_mesh)?;
    let coarse = &points[fractions.len() / 2];

    let tol = 1.0 / mesh.intervals as f64;
    let rho1: Vec<f64> = points.iter().map(|pt| pt.rho1.unwrap_or(f64::NAN)).collect();
    let mut checks = vec![
        Check::new(
            "all solves converged",
            points.iter().all(|pt| pt.converged),
            format!("{} values of λ up to {:.4}", points.len(), points.last().map_or(0.0, |pt| pt.lambda)),
        ),
        Check::new(
            "ratios finite",
            points.iter().all(|pt| pt.rho1.is_some_and(f64::is_finite) && pt.rho2.is_some_and(f64::is_finite)),
            format!("ρ₁ ∈ [{}, {}]", num(rho1[0]), num(rho1[rho1.len() - 1])),
        ),
        Check::new(
            "level ratio increases with lambda",
            rho1.windows(2).all(|w| w[1] > w[0]),
            format!("λ(m) = {lam_m:.6}"),
        ),
        Check::new(
            "level bound margins",
            points.iter().all(|pt| pt.margin.is_some_and(|m| m >= -tol)),
            format!(
                "min margin {:.3e}, tolerance {tol:.1e}",
                points.iter().filter_map(|pt| pt.margin).fold(f64::INFINITY, f64::min)
            ),
        ),
    ];
    let drift = match (coarse.rho1, fine.rho1) {
        (Some(a), Some(b)) => (b - a).abs() / b,
        _ => f64::NAN,
    };
    checks.push(Check::new(
        "mesh drift of level ratio",
        drift < 0.02,
        format!("{:.3}% at λ = {mid}·λ(m), M = {} vs {}", 100.0 * drift, mesh.intervals, fine_mesh.intervals),
    ));

    let extrapolated = {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|pt| pt.lambda > 0.0)
            .filter_map(|pt| pt.rho1.map(|r| (pt.lambda, 1.0 / r)))
            .unzip();
        fit_line(&xs, &ys).map(|f| -f.intercept / f.slope)
    };
    if let Some(root) = extrapolated {
        let rel = (root - lam_m).abs() / lam_m;
        checks.push(Check::soft(
            "extrapolated blow-up of level ratio",
            rel <= 0.05,
            format!("1/ρ₁ vanishes at λ ≈ {root:.4} vs λ(m) = {lam_m:.4} ({:.1}%)", 100.0 * rel),
        ));
    }

    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|pt| vec![num(pt.lambda), opt_num(pt.rho1), opt_num(pt.rho2), opt_num(pt.margin)])
        .collect();
    out.write_table("sweep.csv", &["lambda", "rho1", "rho2", "margin"], &rows)?;
    Ok(Outcome {
        checks,
        results: json!({
            "lambda_m": lam_m,
            "fractions": fractions,
            "rho1": rho1,
            "drift": drift,
            "extrapolated_root": extrapolated,
        }),
    })
}
