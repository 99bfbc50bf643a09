use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wulff_hardy::rearrangement::{convex_symmetrize, decreasing_rearrangement, distribution_function, polya_szego};
use wulff_hardy::NormSpec;

use super::{read_field, require_input, Outcome, RunContext};
use crate::check::Check;
use crate::config::{json_flag, InputPaths, Loaded};
use crate::output::OutDir;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Field as CSV (`x0,..,value`) or in the binary `WHSF` layout.
    pub input: Option<PathBuf>,
    /// Gauge for the convex symmetrization; skipped when absent.
    pub norm: Option<NormSpec>,
    /// Exponents of the `L^p` comparison.
    pub exponents: Vec<f64>,
    /// Exponent of the Pólya–Szegő energies.
    pub energy_exponent: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            input: None,
            norm: None,
            exponents: vec![1.0, 2.0],
            energy_exponent: 2.0,
        }
    }
}

impl InputPaths for Params {
    fn resolve(&mut self, loaded: &Loaded) {
        self.input = self.input.as_deref().map(|p| loaded.resolve(p));
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Field file (.csv, otherwise binary).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Gauge as JSON, e.g. '{"kind":"power","r":1,"dim":2}'.
    #[arg(long, value_name = "JSON")]
    pub norm: Option<String>,
}

impl Overrides {
    pub fn apply(&self, p: &mut Params) -> Result<()> {
        if self.input.is_some() {
            p.input.clone_from(&self.input);
        }
        if let Some(n) = &self.norm {
            p.norm = Some(json_flag("norm", n)?);
        }
        Ok(())
    }
}

pub fn run(p: &Params, _ctx: &RunContext, out: &mut OutDir) -> Result<Outcome> {
    let field = read_field(require_input(&p.input, "input")?)?;
    let ustar = decreasing_rearrangement(&field);
    let omega = field.domain_measure();

    let mut levels: Vec<f64> = field.masked_values().map(f64::abs).collect();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let dist = levels
        .iter()
        .map(|&t| (distribution_function(&field, t) - ustar.distribution(t)).abs() / omega)
        .fold(0.0, f64::max);
    let mut checks = vec![Check::new(
        "equimeasurability",
        dist <= 1e-12,
        format!("max |μ_u(t) − μ_u*(t)|/|Ω| = {dist:.2e} over {} levels", levels.len()),
    )];
    let mut lp = Vec::new();
    for &e in &p.exponents {
        let a = field.lp_integral(e);
        let b = ustar.powf(e)?.integral();
        let err = (a - b).abs() / a.max(f64::MIN_POSITIVE);
        checks.push(Check::new(
            format!("L^{e} preserved"),
            err <= 1e-12,
            format!("∫|u|^p = {a}, ∫(u*)^p = {b}"),
        ));
        lp.push(json!({ "p": e, "field": a, "profile": b }));
    }
    out.write_with("profile.csv", |w| Ok(ustar.write_csv(w)?))?;

    let mut energies = None;
    if let Some(norm) = &p.norm {
        let sym = convex_symmetrize(&field, norm)?;
        out.write_with("symmetrized.csv", |w| Ok(sym.write_csv(w)?))?;
        let ps = polya_szego(&field, norm, p.energy_exponent)?;
        checks.push(Check::soft(
            "Polya-Szego",
            ps.symmetrized_energy <= ps.field_energy * (1.0 + 1e-9),
            format!(
                "∫H(Du)^p = {}, symmetrized energy {} (grid differences)",
                ps.field_energy, ps.symmetrized_energy
            ),
        ));
        energies = Some(json!({ "polya_szego": ps, "symmetrized_measure": sym.domain_measure() }));
    }

    let results = json!({
        "cells": field.masked_count(),
        "domain_measure": omega,
        "steps": ustar.pieces().len(),
        "sup": ustar.eval(0.0),
        "lp": lp,
        "distribution_error": dist,
        "symmetrization": energies,
    });
    Ok(Outcome { checks, results })
}
