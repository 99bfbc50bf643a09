use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wulff_hardy::constants::{euclidean_ball_volume, ExponentBox};
use wulff_hardy::radial::{default_ladder, sharpness_experiment};

use super::{Outcome, RunContext};
use crate::check::Check;
use crate::config::InputPaths;
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n: f64,
    pub p: f64,
    pub m: f64,
    /// Volume of the unit Wulff ball; Euclidean when absent.
    pub kappa_n: Option<f64>,
    /// Defaults to `λ(m)` with `B = 0`.
    pub lambda: Option<f64>,
    /// Decreasing cutoffs in `(0, 1)`.
    pub epsilons: Vec<f64>,
    pub subcritical_alpha: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: 4.0,
            p: 2.0,
            m: 1.5,
            kappa_n: None,
            lambda: None,
            epsilons: default_ladder(),
            subcritical_alpha: 0.5,
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
    pub m: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Exponent of the subcritical comparison, below `α_m`.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, p: &mut Params) -> Result<()> {
        p.n = self.n.unwrap_or(p.n);
        p.p = self.p.unwrap_or(p.p);
        p.m = self.m.unwrap_or(p.m);
        p.lambda = self.lambda.or(p.lambda);
        p.subcritical_alpha = self.alpha.unwrap_or(p.subcritical_alpha);
        Ok(())
    }
}

pub fn run(p: &Params, _ctx: &RunContext, out: &mut OutDir) -> Result<Outcome> {
    let kappa = p.kappa_n.unwrap_or_else(|| euclidean_ball_volume(p.n));
    let bx = ExponentBox::unit_ball(p.n, p.p, p.m, kappa)?;
    let rep = sharpness_experiment(&bx, p.lambda, &p.epsilons, p.subcritical_alpha)?;
    let slope_rel = (rep.critical_slope / rep.predicted_slope - 1.0).abs();
    let checks = vec![
        Check::new(
            "datum integrable",
            rep.datum.converged,
            format!(
                "‖g‖_m^m partial integrals settle, last increment {:.2e}",
                rep.datum.increments.last().copied().unwrap_or(f64::NAN)
            ),
        ),
        Check::new(
            "critical power not in L^q",
            !rep.critical.converged && rep.critical_r_squared >= 0.99 && slope_rel <= 0.05,
            format!(
                "logarithmic growth, slope {:.4} vs Nκ_N = {:.4}, R² = {:.6}",
                rep.critical_slope, rep.predicted_slope, rep.critical_r_squared
            ),
        ),
        Check::new(
            "subcritical power in L^q",
            rep.subcritical.converged,
            format!(
                "α = {} partial integrals settle at {}",
                rep.subcritical_alpha,
                rep.subcritical.values.last().copied().unwrap_or(f64::NAN)
            ),
        ),
    ];
    let rows: Vec<Vec<String>> = (0..rep.datum.epsilons.len())
        .map(|k| {
            vec![
                num(rep.datum.epsilons[k]),
                num(rep.datum.values[k]),
                num(rep.critical.values[k]),
                num(rep.subcritical.values[k]),
            ]
        })
        .collect();
    out.write_table("sharpness.csv", &["epsilon", "datum", "critical", "subcritical"], &rows)?;
    Ok(Outcome {
        checks,
        results: serde_json::to_value(&rep).map(|r| json!({ "box": bx, "report": r }))?,
    })
}
