use std::fs::File;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wulff_hardy::geometry::{coarea_residual, isoperimetric_deficit, midpoint_levels, wulff_polygon, Polygon};
use wulff_hardy::rearrangement::ScalarField;
use wulff_hardy::NormSpec;

use super::{norm_label, Outcome, RunContext};
use crate::check::Check;
use crate::config::{json_flag, usage, InputPaths, Loaded};
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Planar gauges to test.
    pub norms: Vec<NormSpec>,
    /// Number of random convex polygons.
    pub polygons: usize,
    /// Extra polygon read from a CSV with header `x,y`.
    pub polygon: Option<PathBuf>,
    /// Vertex counts of the inscribed Wulff polygons.
    pub wulff_sides: Vec<usize>,
    /// Cells per axis of the coarea test field.
    pub grid: usize,
    pub levels: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            norms: vec![
                NormSpec::euclidean(2).expect("valid"),
                NormSpec::power(1.0, 2).expect("valid"),
                NormSpec::scaled_axes(vec![1.0, 2.5], 3.0).expect("valid"),
            ],
            polygons: 200,
            polygon: None,
            wulff_sides: vec![16, 64, 256, 1024],
            grid: 256,
            levels: 64,
        }
    }
}

impl InputPaths for Params {
    fn resolve(&mut self, loaded: &Loaded) {
        self.polygon = self.polygon.as_deref().map(|p| loaded.resolve(p));
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// One gauge as JSON, replacing the default list.
    #[arg(long, value_name = "JSON")]
    pub norm: Option<String>,
    #[arg(long)]
    pub polygons: Option<usize>,
    /// Polygon CSV (`x,y` per vertex) to include.
    #[arg(long)]
    pub polygon: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, p: &mut Params) -> Result<()> {
        if let Some(n) = &self.norm {
            p.norms = vec![json_flag("norm", n)?];
        }
        p.polygons = self.polygons.unwrap_or(p.polygons);
        if self.polygon.is_some() {
            p.polygon.clone_from(&self.polygon);
        }
        Ok(())
    }
}

/// Anisotropic bump supported strictly inside `[-1.2, 1.2]²`.
pub fn bump(n: usize) -> Result<ScalarField> {
    let h = 2.4 / n as f64;
    Ok(ScalarField::from_fn(vec![n, n], vec![h, h], vec![-1.2, -1.2], |x| {
        let r2 = x[0] * x[0] + 1.5 * x[1] * x[1];
        Some((1.0 - r2).max(0.0).powi(2) * (1.0 + 0.2 * x[0]))
    })?)
}

fn random_polygons(seed: u64, count: usize) -> Vec<Polygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let k = rng.gen_range(3..30);
        let pts: Vec<[f64; 2]> = (0..k).map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
        if let Ok(p) = Polygon::convex_hull(&pts) {
            out.push(p);
        }
    }
    out
}

struct NormRun {
    label: String,
    min_deficit: f64,
    extra_deficit: Option<f64>,
    wulff: Vec<f64>,
    coarse: f64,
    fine: wulff_hardy::geometry::CoareaReport,
}

fn run_norm(norm: &NormSpec, p: &Params, polys: &[Polygon], extra: Option<&Polygon>, grid: usize) -> Result<NormRun> {
    if norm.dim() != 2 {
        return Err(usage(format!("geometry-check needs planar gauges, got dimension {}", norm.dim())));
    }
    let mut min_deficit = f64::INFINITY;
    for poly in polys {
        min_deficit = min_deficit.min(isoperimetric_deficit(poly, norm)?);
    }
    let extra_deficit = extra.map(|poly| isoperimetric_deficit(poly, norm)).transpose()?;
    let wulff = p
        .wulff_sides
        .iter()
        .map(|&n| isoperimetric_deficit(&wulff_polygon(norm, n)?, norm))
        .collect::<wulff_hardy::Result<Vec<f64>>>()?;
    let coarse_field = bump(grid / 2)?;
    let coarse = coarea_residual(&coarse_field, norm, &midpoint_levels(&coarse_field, p.levels))?.residual;
    let fine_field = bump(grid)?;
    let fine = coarea_residual(&fine_field, norm, &midpoint_levels(&fine_field, p.levels))?;
    Ok(NormRun {
        label: norm_label(norm),
        min_deficit,
        extra_deficit,
        wulff,
        coarse,
        fine,
    })
}

pub fn run(p: &Params, ctx: &RunContext, out: &mut OutDir) -> Result<Outcome> {
    if p.norms.is_empty() {
        return Err(usage("geometry-check needs at least one norm"));
    }
    let grid = ctx.mesh.unwrap_or(p.grid);
    if grid < 8 {
        return Err(usage(format!("coarea grid {grid} is too small, need at least 8 cells per axis")));
    }
    let polys = random_polygons(ctx.seed, p.polygons);
    let extra = match &p.polygon {
        Some(path) => {
            let f = File::open(path).map_err(|e| usage(format!("cannot read input {}: {e}", path.display())))?;
            Some(Polygon::read_csv(f)?)
        }
        None => None,
    };
    let runs = p
        .norms
        .par_iter()
        .map(|n| run_norm(n, p, &polys, extra.as_ref(), grid))
        .collect::<Result<Vec<_>>>()?;

    let mut checks = Vec::new();
    let mut deficit_rows = Vec::new();
    let mut coarea_rows = Vec::new();
    for r in &runs {
        checks.push(Check::new(
            format!("isoperimetry [{}]", r.label),
            r.min_deficit >= -1e-6,
            format!("min deficit {:.3e} over {} polygons", r.min_deficit, polys.len()),
        ));
        if let Some(d) = r.extra_deficit {
            checks.push(Check::new(
                format!("isoperimetry of input polygon [{}]", r.label),
                d >= -1e-6,
                format!("deficit {d:.3e}"),
            ));
        }
        let monotone = r.wulff.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        let last = r.wulff.last().copied().unwrap_or(f64::NAN);
        checks.push(Check::new(
            format!("Wulff polygons approach equality [{}]", r.label),
            monotone && last < 1e-3,
            format!("deficits {:?}", r.wulff.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()),
        ));
        checks.push(Check::new(
            format!("coarea [{}]", r.label),
            r.fine.residual <= 0.05 && r.fine.residual <= r.coarse,
            format!("residual {:.2e} at {grid}², {:.2e} at {}²", r.fine.residual, r.coarse, grid / 2),
        ));
        for (n, d) in p.wulff_sides.iter().zip(&r.wulff) {
            deficit_rows.push(vec![r.label.clone(), n.to_string(), num(*d)]);
        }
        for (s, per, contrib) in &r.fine.levels {
            coarea_rows.push(vec![r.label.clone(), num(*s), num(*per), num(*contrib)]);
        }
    }
    out.write_table("deficits.csv", &["norm", "sides", "deficit"], &deficit_rows)?;
    out.write_table("coarea.csv", &["norm", "s", "perimeter", "contribution"], &coarea_rows)?;

    let results = json!(runs
        .iter()
        .map(|r| json!({
            "norm": r.label,
            "min_polygon_deficit": r.min_deficit,
            "input_polygon_deficit": r.extra_deficit,
            "wulff_deficits": r.wulff,
            "total_variation": r.fine.total_variation,
            "level_integral": r.fine.level_integral,
            "coarea_residual": r.fine.residual,
            "coarea_residual_coarse": r.coarse,
        }))
        .collect::<Vec<_>>());
    Ok(Outcome { checks, results })
}
