pub mod constants;
pub mod geometry;
pub mod lorentz;
pub mod norms;
pub mod rearrange;
pub mod sharpness;
pub mod solve;
pub mod sweep;

use std::path::{Path, PathBuf};

use anyhow::Result;
use wulff_hardy::constants::{critical_lambda, euclidean_ball_volume, BetaSpec, ExponentBox};
use wulff_hardy::norms::NormKind;
use wulff_hardy::radial::{ProblemParams, SourceSpec};
use wulff_hardy::rearrangement::ScalarField;
use wulff_hardy::NormSpec;

use crate::check::Check;
use crate::config::{read_input, usage};

/// Settings shared by every command.
#[derive(Debug, Clone, Copy)]
pub struct RunContext {
    pub seed: u64,
    /// Overrides the mesh size of solver commands and the grid of
    /// geometry-check.
    pub mesh: Option<usize>,
}

/// Checks and result values of one command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
}

pub fn require_input<'a>(path: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| usage(format!("missing input: set `{name}`")))
}

/// A field from `.csv` text or the binary layout.
pub fn read_field(path: &Path) -> Result<ScalarField> {
    let bytes = read_input(path)?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    Ok(if is_csv {
        ScalarField::read_csv(bytes.as_slice())?
    } else {
        ScalarField::from_bytes(&bytes)?
    })
}

pub fn norm_label(norm: &NormSpec) -> String {
    match norm.kind() {
        NormKind::Euclidean => "euclidean".into(),
        NormKind::Power { r } => format!("l{r}"),
        NormKind::ScaledAxes { weights, r } => {
            let w: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
            format!("l{r}[{}]", w.join(" "))
        }
        NormKind::Sampled(t) => format!("sampled[{}]", t.angles().len()),
    }
}

/// `N = 4`, `p = q = 2`, `m = 3/2` on the Euclidean unit ball with
/// `λ = λ(m)/2`, `β = 0` and `f = 1`.
pub fn bench_problem() -> Result<ProblemParams> {
    let kappa = euclidean_ball_volume(4.0);
    let bx = ExponentBox::unit_ball(4.0, 2.0, 1.5, kappa)?;
    let lambda = 0.5 * critical_lambda(bx.m, &bx, 0.0)?;
    Ok(ProblemParams::new(bx, lambda, BetaSpec::Zero, SourceSpec::Power { c: 1.0, gamma: 0.0 }))
}
