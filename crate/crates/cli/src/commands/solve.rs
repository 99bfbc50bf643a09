use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wulff_hardy::radial::{
    default_tail_grid, solve_radial_bvp, tail_gradient_bound, verify_lorentz_estimates, verify_talenti_bounds,
    MeshControl, ProblemParams, RadialSolution,
};

use super::{bench_problem, Outcome, RunContext};
use crate::check::Check;
use crate::config::{usage, InputPaths, Loaded};
use crate::output::{opt_num, OutDir};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Inline problem; the benchmark problem when neither this nor
    /// `problem_file` is given.
    pub problem: Option<ProblemParams>,
    pub problem_file: Option<PathBuf>,
    pub mesh: MeshControl,
    /// Weight exponent of the gradient comparison; `p′/N′` by default.
    pub alpha: Option<f64>,
}

impl InputPaths for Params {
    fn resolve(&mut self, loaded: &Loaded) {
        self.problem_file = self.problem_file.as_deref().map(|p| loaded.resolve(p));
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Problem JSON file (`box`, `lambda`, `beta`, `source`, ...).
    #[arg(long = "params", value_name = "FILE")]
    pub problem_file: Option<PathBuf>,
    /// Coefficient of the Hardy term, replacing the one in the problem.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub max_newton: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, p: &mut Params) -> Result<()> {
        if self.problem_file.is_some() {
            p.problem_file.clone_from(&self.problem_file);
            p.problem = None;
        }
        if let Some(l) = self.lambda {
            let mut prob = problem(p)?;
            prob.lambda = l;
            p.problem = Some(prob);
            p.problem_file = None;
        }
        p.mesh.max_newton = self.max_newton.unwrap_or(p.mesh.max_newton);
        Ok(())
    }
}

pub fn problem(p: &Params) -> Result<ProblemParams> {
    match (&p.problem, &p.problem_file) {
        (Some(_), Some(_)) => Err(usage("give either `problem` or `problem_file`, not both")),
        (Some(prob), None) => Ok(prob.clone()),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read input {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("problem {} does not match the schema: {e}", path.display())))
        }
        (None, None) => bench_problem(),
    }
}

pub fn mesh(p: &Params, ctx: &RunContext) -> MeshControl {
    let mut m = p.mesh;
    if let Some(n) = ctx.mesh {
        m.intervals = n;
    }
    m
}

/// Checks and diagnostics shared with the sweep.
pub struct Verified {
    pub checks: Vec<Check>,
    pub diagnostics: serde_json::Value,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub level_margin: Option<f64>,
}

pub fn verify(sol: &RadialSolution, prob: &ProblemParams, alpha: Option<f64>) -> Verified {
    let mut checks = Vec::new();
    let rep = &sol.report;
    checks.push(Check::new(
        "solver converged",
        rep.converged,
        format!(
            "scaled residual {:.2e} after {} Newton and {} Picard iterations",
            rep.residual, rep.newton_iterations, rep.picard_iterations
        ),
    ));
    for w in &rep.warnings {
        checks.push(Check::warn("solver warning", w.clone()));
    }
    let tol = 1.0 / rep.intervals as f64;

    let talenti = verify_talenti_bounds(sol, prob, alpha);
    let level_margin = talenti.as_ref().ok().map(|t| t.level_margin);
    match &talenti {
        Ok(t) => {
            checks.push(Check::new(
                "level bound",
                t.level_margin >= -tol,
                format!("min relative margin {:.3e}, tolerance {tol:.1e}", t.level_margin),
            ));
            checks.push(Check::new(
                "weighted gradient bound",
                t.gradient_margin_normalized >= -tol,
                format!("first term weighted by α + 1, min margin {:.3e}", t.gradient_margin_normalized),
            ));
            checks.push(Check::soft(
                "gradient bound as stated",
                t.gradient_margin >= -tol,
                format!("min margin {:.3e}", t.gradient_margin),
            ));
        }
        Err(e) => checks.push(Check::warn("level bound", format!("not evaluated: {e}"))),
    }

    let lorentz = verify_lorentz_estimates(sol, prob);
    let (rho1, rho2) = match &lorentz {
        Ok(l) => {
            let detail = format!("ρ₁ = {}, ρ₂ = {}", opt_num(l.rho1), opt_num(l.rho2));
            if !l.subcritical {
                checks.push(Check::warn("Lorentz ratios", format!("{detail}; λ ≥ λ(m), outside theorem hypotheses")));
            } else {
                let finite = |x: Option<f64>| x.is_none_or(f64::is_finite);
                let ok = (!l.level_hypotheses || finite(l.rho1)) && (!l.gradient_hypotheses || finite(l.rho2));
                checks.push(Check::new("Lorentz ratios", ok, detail));
            }
            (l.rho1, l.rho2)
        }
        Err(e) => {
            checks.push(Check::warn("Lorentz ratios", format!("not evaluated: {e}")));
            (None, None)
        }
    };

    let tail = if prob.beta.is_zero() {
        None
    } else {
        match tail_gradient_bound(sol, prob, &default_tail_grid(sol)) {
            Ok(t) => {
                let detail = format!(
                    "fitted exponent {:.3} (R² = {:.4}), predicted {:.3}",
                    t.fitted_exponent, t.r_squared, t.predicted_exponent
                );
                let ok = t.fitted_exponent >= t.predicted_exponent - 0.2;
                let subcritical = lorentz.as_ref().is_ok_and(|l| l.subcritical);
                checks.push(if subcritical {
                    Check::new("gradient tail decay", ok, detail)
                } else {
                    Check::soft("gradient tail decay", ok, detail)
                });
                Some(t)
            }
            Err(e) => {
                checks.push(Check::warn("gradient tail decay", format!("not evaluated: {e}")));
                None
            }
        }
    };

    let diagnostics = json!({
        "residual": rep.residual,
        "converged": rep.converged,
        "iterations": { "newton": rep.newton_iterations, "picard": rep.picard_iterations },
        "epsilon": rep.epsilon,
        "intervals": rep.intervals,
        "grading": rep.grading,
        "monotone": sol.is_nonincreasing(),
        "rho1": rho1,
        "rho2": rho2,
        "lorentz": lorentz.ok(),
        "talenti_margin": talenti.ok(),
        "tail_exponent": tail.as_ref().map(|t| t.fitted_exponent),
        "tail": tail,
        "warnings": rep.warnings,
    });
    Verified {
        checks,
        diagnostics,
        rho1,
        rho2,
        level_margin,
    }
}

pub fn run(p: &Params, ctx: &RunContext, out: &mut OutDir) -> Result<Outcome> {
    let prob = problem(p)?;
    let sol = solve_radial_bvp(&prob, &mesh(p, ctx))?;
    out.write_with("solution.csv", |w| Ok(sol.write_csv(w)?))?;
    let v = verify(&sol, &prob, p.alpha);
    out.write_json("diagnostics.json", &v.diagnostics)?;
    Ok(Outcome {
        checks: v.checks,
        results: json!({ "problem": prob, "diagnostics": v.diagnostics }),
    })
}
