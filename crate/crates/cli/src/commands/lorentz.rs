use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wulff_hardy::rearrangement::{
    decreasing_rearrangement, lorentz_norm_maximal, lorentz_quasinorm, maximal_profile, LorentzIndex,
    MonotoneProfile,
};
use wulff_hardy::serde_ext::extended;

use super::{read_field, Outcome, RunContext};
use crate::check::Check;
use crate::config::{usage, InputPaths, Loaded};
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Step profile CSV with header `s,value`.
    pub profile: Option<PathBuf>,
    /// Field whose rearrangement is used instead.
    pub field: Option<PathBuf>,
    pub m: f64,
    #[serde(with = "extended")]
    pub sigma: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            profile: None,
            field: None,
            m: 2.0,
            sigma: 2.0,
        }
    }
}

impl InputPaths for Params {
    fn resolve(&mut self, loaded: &Loaded) {
        self.profile = self.profile.as_deref().map(|p| loaded.resolve(p));
        self.field = self.field.as_deref().map(|p| loaded.resolve(p));
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    #[arg(long, conflicts_with = "field")]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<f64>,
    /// `inf` allowed.
    #[arg(long)]
    pub sigma: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, p: &mut Params) -> Result<()> {
        if self.profile.is_some() {
            p.profile.clone_from(&self.profile);
            p.field = None;
        }
        if self.field.is_some() {
            p.field.clone_from(&self.field);
            p.profile = None;
        }
        p.m = self.m.unwrap_or(p.m);
        p.sigma = self.sigma.unwrap_or(p.sigma);
        Ok(())
    }
}

fn load(p: &Params) -> Result<MonotoneProfile> {
    match (&p.profile, &p.field) {
        (Some(path), None) => {
            let file = File::open(path).map_err(|e| usage(format!("cannot read input {}: {e}", path.display())))?;
            Ok(MonotoneProfile::read_csv(BufReader::new(file))?)
        }
        (None, Some(path)) => Ok(decreasing_rearrangement(&read_field(path)?)),
        (Some(_), Some(_)) => Err(usage("give either a profile or a field, not both")),
        (None, None) => Err(usage("missing input: set `profile` or `field`")),
    }
}

/// Breakpoints of `u*`, the midpoints between them and a few points past
/// the support.
fn sample_points(u: &MonotoneProfile) -> Vec<f64> {
    let mut s = Vec::new();
    for piece in u.pieces() {
        if piece.start > 0.0 {
            s.push(piece.start);
        }
        if piece.end.is_finite() {
            s.push(0.5 * (piece.start + piece.end));
        }
    }
    let len = u.length();
    if len.is_finite() && len > 0.0 {
        s.extend([len, 2.0 * len, 4.0 * len]);
    }
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

pub fn run(p: &Params, _ctx: &RunContext, out: &mut OutDir) -> Result<Outcome> {
    let idx = LorentzIndex::new(p.m, p.sigma)?;
    let ustar = load(p)?;
    let umax = maximal_profile(&ustar)?;
    let q = lorentz_quasinorm(&ustar, idx);
    let n = lorentz_norm_maximal(&ustar, idx)?;
    let factor = p.m / (p.m - 1.0);
    let scale = q.max(f64::MIN_POSITIVE);
    let lower = (q - n) / scale;
    let upper = (n - factor * q) / scale;
    let checks = vec![
        Check::new(
            "quasinorm below norm",
            lower <= 1e-10,
            format!("‖u‖_(m,σ) = {q}, ‖u‖_((m,σ)) = {n}"),
        ),
        Check::new(
            "norm below m' times quasinorm",
            upper <= 1e-10,
            format!("m′‖u‖_(m,σ) = {}", factor * q),
        ),
        Check::new(
            "maximal function dominates",
            sample_points(&ustar).iter().all(|&s| umax.eval(s) >= ustar.eval(s) * (1.0 - 1e-12)),
            "u** ≥ u* at every sampled point",
        ),
    ];
    let rows: Vec<Vec<String>> = sample_points(&ustar)
        .into_iter()
        .map(|s| vec![num(s), num(ustar.eval(s)), num(umax.eval(s))])
        .collect();
    out.write_table("maximal.csv", &["s", "u_star", "u_star_star"], &rows)?;
    let results = json!({
        "index": idx,
        "quasinorm": num(q),
        "norm": num(n),
        "ratio": if q > 0.0 { Some(n / q) } else { None },
        "support": ustar.length(),
        "integral": ustar.integral(),
    });
    Ok(Outcome { checks, results })
}
