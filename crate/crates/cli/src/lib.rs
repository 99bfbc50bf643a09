//! Batch driver: parses flags and JSON configs, runs one experiment, writes
//! CSV/JSON artifacts and a summary of pass/fail checks.

pub mod check;
pub mod commands;
pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use check::{Check, Summary};
use commands::{Outcome, RunContext};
use config::{exit_code, params, usage, CommandName, InputPaths, Loaded};
use output::OutDir;

const COLUMNS: &str = "\
Output files (CSV numbers use the shortest round-trip form; inf, -inf, nan):
  constants       constants.json
  norms-check     norm_samples.csv: xi_1..xi_N, norm, polar
  rearrange       profile.csv: s, value (value holds on [s, next s), last row is (|Ω|, 0))
                  symmetrized.csv: x0..x{d-1}, value (with --norm)
  lorentz         maximal.csv: s, u_star, u_star_star
  geometry-check  deficits.csv: norm, sides, deficit
                  coarea.csv: norm, s, perimeter, contribution
  solve           solution.csv: r, v, dv; diagnostics.json
  sharpness       sharpness.csv: epsilon, datum, critical, subcritical
  estimate-sweep  sweep.csv: lambda, rho1, rho2, margin
Every run also writes <command>.summary.json and <command>.config.json;
a failed run writes <command>.error.json instead of the summary.

Exit status: 0 all checks pass or warn, 1 a check fails or the numerics
fail, 2 bad flags, configs, inputs or parameters outside their domain.
Set WULFF_HARDY_LOG (e.g. info, debug) for progress messages.";

#[derive(Parser, Debug)]
#[command(name = "wulff-hardy", version, about, after_help = COLUMNS)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON config `{"command", "params", "out", "seed", "jobs", "mesh"}`.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [default: results]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed of all random sampling [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core [default: 0]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Mesh intervals of the radial solver, or cells per axis for
    /// geometry-check.
    #[arg(long, global = true)]
    pub mesh: Option<usize>,
    /// Print the summary as JSON instead of a table.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Sub {
    /// Λ_N, B(∞), λ(m), α_m and the two branches of F(α) = λ.
    Constants(commands::constants::Overrides),
    /// Homogeneity, convexity, duality and Wulff volume of a gauge.
    NormsCheck(commands::norms::Overrides),
    /// Decreasing rearrangement and convex symmetrization of a grid field.
    Rearrange(commands::rearrange::Overrides),
    /// Lorentz quasinorm and norm of a profile or field.
    Lorentz(commands::lorentz::Overrides),
    /// Anisotropic isoperimetry and the coarea formula on polygons and grids.
    GeometryCheck(commands::geometry::Overrides),
    /// Solve the radial problem and verify the comparison estimates.
    Solve(commands::solve::Overrides),
    /// Integrability of the extremal datum and blow-up of the critical power.
    Sharpness(commands::sharpness::Overrides),
    /// Lorentz ratios along λ = fraction·λ(m).
    EstimateSweep(commands::sweep::Overrides),
    /// Run the command named in --config.
    Run,
    /// Collect the summaries in --out and check their artifacts exist.
    Report,
}

/// What `main` prints.
#[derive(Debug)]
pub struct Executed {
    pub summary: Summary,
    /// Where the summary was written; `None` for `report`.
    pub summary_path: Option<PathBuf>,
}

struct Settings {
    out: PathBuf,
    ctx: RunContext,
    jobs: usize,
}

fn settings(common: &Common, loaded: Option<&Loaded>) -> Settings {
    let cfg = loaded.map(|l| &l.config);
    let out = common
        .out
        .clone()
        .or_else(|| loaded.and_then(|l| l.config.out.as_deref().map(|p| l.resolve(p))))
        .unwrap_or_else(|| PathBuf::from("results"));
    Settings {
        out,
        ctx: RunContext {
            seed: common.seed.or(cfg.and_then(|c| c.seed)).unwrap_or(0),
            mesh: common.mesh.or(cfg.and_then(|c| c.mesh)),
        },
        jobs: common.jobs.or(cfg.and_then(|c| c.jobs)).unwrap_or(0),
    }
}

type Runner<P> = fn(&P, &RunContext, &mut OutDir) -> Result<Outcome>;

fn run_command<P>(
    name: CommandName,
    loaded: Option<&Loaded>,
    set: &Settings,
    apply: impl FnOnce(&mut P) -> Result<()>,
    runner: Runner<P>,
) -> Result<Executed>
where
    P: DeserializeOwned + Serialize + Default + InputPaths + Sync,
{
    let mut p: P = params(loaded)?;
    apply(&mut p)?;
    let mut out = OutDir::create(&set.out)?;
    out.write_json(
        &format!("{}.config.json", name.as_str()),
        &json!({
            "command": name,
            "params": p,
            "seed": set.ctx.seed,
            "mesh": set.ctx.mesh,
        }),
    )?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(set.jobs).build()?;
    log::info!("running {} into {}", name.as_str(), set.out.display());
    match pool.install(|| runner(&p, &set.ctx, &mut out)) {
        Ok(outcome) => {
            let summary = Summary {
                command: name.as_str().to_string(),
                checks: outcome.checks,
                artifacts: out.written().to_vec(),
                results: outcome.results,
            };
            let path = out.write_json(&format!("{}.summary.json", name.as_str()), &summary)?;
            Ok(Executed {
                summary,
                summary_path: Some(path),
            })
        }
        Err(err) => {
            write_error(&mut out, name, &err);
            Err(err)
        }
    }
}

fn write_error(out: &mut OutDir, name: CommandName, err: &anyhow::Error) {
    let last = err.chain().find_map(|c| match c.downcast_ref::<wulff_hardy::Error>() {
        Some(wulff_hardy::Error::NonConvergence { last: Some(sol), .. }) => Some(json!({
            "report": sol.report,
            "v_max": sol.v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        })),
        _ => None,
    });
    let body = json!({
        "command": name,
        "error": format!("{err:#}"),
        "exit_code": exit_code(err),
        "last_iterate": last,
    });
    if let Err(e) = out.write_json(&format!("{}.error.json", name.as_str()), &body) {
        log::error!("could not write the error report: {e:#}");
    }
}

fn dispatch(sub: &Sub, name: CommandName, loaded: Option<&Loaded>, set: &Settings) -> Result<Executed> {
    use commands::*;
    match (name, sub) {
        (CommandName::Constants, Sub::Constants(o)) => run_command(name, loaded, set, |p| o.apply(p), constants::run),
        (CommandName::Constants, _) => run_command(name, loaded, set, |_| Ok(()), constants::run),
        (CommandName::NormsCheck, Sub::NormsCheck(o)) => run_command(name, loaded, set, |p| o.apply(p), norms::run),
        (CommandName::NormsCheck, _) => run_command(name, loaded, set, |_| Ok(()), norms::run),
        (CommandName::Rearrange, Sub::Rearrange(o)) => run_command(name, loaded, set, |p| o.apply(p), rearrange::run),
        (CommandName::Rearrange, _) => run_command(name, loaded, set, |_| Ok(()), rearrange::run),
        (CommandName::Lorentz, Sub::Lorentz(o)) => run_command(name, loaded, set, |p| o.apply(p), lorentz::run),
        (CommandName::Lorentz, _) => run_command(name, loaded, set, |_| Ok(()), lorentz::run),
        (CommandName::GeometryCheck, Sub::GeometryCheck(o)) => {
            run_command(name, loaded, set, |p| o.apply(p), geometry::run)
        }
        (CommandName::GeometryCheck, _) => run_command(name, loaded, set, |_| Ok(()), geometry::run),
        (CommandName::Solve, Sub::Solve(o)) => run_command(name, loaded, set, |p| o.apply(p), solve::run),
        (CommandName::Solve, _) => run_command(name, loaded, set, |_| Ok(()), solve::run),
        (CommandName::Sharpness, Sub::Sharpness(o)) => run_command(name, loaded, set, |p| o.apply(p), sharpness::run),
        (CommandName::Sharpness, _) => run_command(name, loaded, set, |_| Ok(()), sharpness::run),
        (CommandName::EstimateSweep, Sub::EstimateSweep(o)) => {
            run_command(name, loaded, set, |p| o.apply(p), sweep::run)
        }
        (CommandName::EstimateSweep, _) => run_command(name, loaded, set, |_| Ok(()), sweep::run),
    }
}

fn sub_name(sub: &Sub) -> Option<CommandName> {
    Some(match sub {
        Sub::Constants(_) => CommandName::Constants,
        Sub::NormsCheck(_) => CommandName::NormsCheck,
        Sub::Rearrange(_) => CommandName::Rearrange,
        Sub::Lorentz(_) => CommandName::Lorentz,
        Sub::GeometryCheck(_) => CommandName::GeometryCheck,
        Sub::Solve(_) => CommandName::Solve,
        Sub::Sharpness(_) => CommandName::Sharpness,
        Sub::EstimateSweep(_) => CommandName::EstimateSweep,
        Sub::Run | Sub::Report => return None,
    })
}

pub fn execute(cli: &Cli) -> Result<Executed> {
    let loaded = cli.common.config.as_deref().map(Loaded::read).transpose()?;
    if let Sub::Report = cli.command {
        let set = settings(&cli.common, loaded.as_ref());
        return Ok(Executed {
            summary: report(&set.out)?,
            summary_path: None,
        });
    }
    let name = match (sub_name(&cli.command), &loaded) {
        (None, Some(l)) => l.config.command,
        (None, None) => return Err(usage("`run` needs --config")),
        (Some(n), Some(l)) if n != l.config.command => {
            return Err(usage(format!(
                "config is for `{}`, not `{}`",
                l.config.command.as_str(),
                n.as_str()
            )))
        }
        (Some(n), _) => n,
    };
    let set = settings(&cli.common, loaded.as_ref());
    dispatch(&cli.command, name, loaded.as_ref(), &set)
}

/// Every `*.summary.json` in `dir`, with one artifact check per summary.
pub fn report(dir: &Path) -> Result<Summary> {
    let entries = fs::read_dir(dir).map_err(|e| usage(format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_str().is_some_and(|s| s.ends_with(".summary.json")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(usage(format!("no summaries in {}", dir.display())));
    }
    let mut checks = Vec::new();
    let mut commands = Vec::new();
    for f in &files {
        let text = fs::read_to_string(f)?;
        let s: Summary = serde_json::from_str(&text)
            .map_err(|e| usage(format!("{} is not a summary: {e}", f.display())))?;
        let missing: Vec<&str> = s
            .artifacts
            .iter()
            .map(String::as_str)
            .filter(|a| !dir.join(a).is_file())
            .collect();
        checks.push(Check::new(
            format!("{}: artifacts present", s.command),
            missing.is_empty(),
            if missing.is_empty() {
                format!("{} files", s.artifacts.len())
            } else {
                format!("missing {}", missing.join(", "))
            },
        ));
        for c in &s.checks {
            checks.push(Check {
                key: format!("{}: {}", s.command, c.key),
                ..c.clone()
            });
        }
        commands.push(s.command);
    }
    Ok(Summary {
        command: "report".into(),
        checks,
        artifacts: Vec::new(),
        results: json!({ "commands": commands }),
    })
}
