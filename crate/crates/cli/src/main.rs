use std::fs;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::Parser;
use igamg::{
    build_topology, parse_geometry, run_sweep, scenario_l_shape, scenario_unit_square, write_geometry, CycleKind,
    GeometryDocument, MultigridConfig, OutputFormat, RunConfig, ScenarioKind, SmootherKind, SolveMode, TensorSpace,
};

/// Iteration-count sweeps for multigrid on multi-patch B-spline discretizations
/// of the Poisson problem. Rows of the emitted table are levels, columns degrees.
#[derive(Debug, Parser)]
#[command(name = "igamg", version)]
struct Args {
    /// unit_square, l_shape, projector_study or from_file
    #[arg(long, default_value = "unit_square")]
    scenario: String,
    /// Spline degrees: `5`, `2,4,6` or `2..8`
    #[arg(long, default_value = "2..8")]
    p: String,
    /// Refinement levels `a..b` (inclusive), or a single level
    #[arg(long, default_value = "4..8")]
    levels: String,
    /// V, W or two_grid
    #[arg(long, default_value = "W")]
    cycle: String,
    /// additive or boosted
    #[arg(long, default_value = "additive")]
    smoother: String,
    #[arg(long, default_value_t = 1)]
    nu_pre: usize,
    #[arg(long, default_value_t = 1)]
    nu_post: usize,
    /// Damping; defaults to 0.95 (additive) or 1 (boosted)
    #[arg(long)]
    tau: Option<f64>,
    /// c in σ = c h⁻²
    #[arg(long, default_value_t = 5.0)]
    sigma_scale: f64,
    /// Boosted-smoother scaling ϱ
    #[arg(long, default_value_t = 0.95)]
    rho: f64,
    /// Relative residual reduction
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// iterative or pcg
    #[arg(long, default_value = "iterative")]
    mode: String,
    /// Geometry file (implies --scenario from_file)
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Write the scenario geometry to this file and exit
    #[arg(long)]
    export_geometry: Option<PathBuf>,
    /// Output file; stdout if absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or markdown
    #[arg(long, default_value = "csv")]
    format: String,
}

fn parse_range(s: &str, what: &str) -> Result<RangeInclusive<usize>> {
    let parse = |t: &str| t.trim().parse::<usize>().with_context(|| format!("invalid {what} `{s}`"));
    match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            let r = parse(a)?..=parse(b)?;
            if r.is_empty() {
                bail!("empty {what} range `{s}`");
            }
            Ok(r)
        }
        None => {
            let v = parse(s)?;
            Ok(v..=v)
        }
    }
}

fn parse_degrees(s: &str) -> Result<Vec<usize>> {
    if s.contains("..") {
        return Ok(parse_range(s, "degree")?.collect());
    }
    s.split(',').map(|t| t.trim().parse::<usize>().with_context(|| format!("invalid degree list `{s}`"))).collect()
}

fn load_geometry(path: &PathBuf, degree: usize, level: usize) -> Result<Arc<Vec<igamg::GeometryMap>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc = parse_geometry(&text).with_context(|| format!("parsing {}", path.display()))?;
    let space = TensorSpace::with_degree(degree, 1 << level)?;
    let topology = build_topology(&doc.patches, &space, None)?;
    doc.check_boundary(&topology)?;
    Ok(Arc::new(doc.patches))
}

fn run(args: Args) -> Result<bool> {
    let degrees = parse_degrees(&args.p)?;
    let levels = parse_range(&args.levels, "level")?;
    let smoother: SmootherKind = args.smoother.parse()?;
    let cycle: CycleKind = args.cycle.parse()?;
    let mode: SolveMode = args.mode.parse()?;
    let format: OutputFormat = args.format.parse()?;
    let scenario_name = if args.geometry.is_some() { "from_file" } else { args.scenario.as_str() };
    let scenario = match scenario_name {
        "unit_square" => ScenarioKind::UnitSquare,
        "l_shape" => ScenarioKind::LShape,
        "projector_study" => ScenarioKind::ProjectorStudy,
        "from_file" => {
            let path = args.geometry.as_ref().context("--scenario from_file requires --geometry <file>")?;
            let pmin = *degrees.iter().min().context("no degrees given")?;
            ScenarioKind::FromFile(load_geometry(path, pmin, *levels.start())?)
        }
        other => bail!("unknown scenario `{other}`"),
    };

    if let Some(path) = &args.export_geometry {
        let patches = match &scenario {
            ScenarioKind::UnitSquare => scenario_unit_square().patches,
            ScenarioKind::LShape => scenario_l_shape().patches,
            ScenarioKind::FromFile(p) => p.clone(),
            ScenarioKind::ProjectorStudy => bail!("projector_study has no multi-patch geometry"),
        };
        let doc = GeometryDocument::new(patches.as_ref().clone());
        fs::write(path, write_geometry(&doc)).with_context(|| format!("writing {}", path.display()))?;
        return Ok(true);
    }

    let base = match smoother {
        SmootherKind::Additive => MultigridConfig::default(),
        SmootherKind::Boosted => MultigridConfig::boosted(),
    };
    let solver = MultigridConfig {
        cycle,
        nu_pre: args.nu_pre,
        nu_post: args.nu_post,
        tau: args.tau.unwrap_or(base.tau),
        sigma_scale: args.sigma_scale,
        rho: args.rho,
        eps: args.eps,
        ..base
    };
    let config = RunConfig { scenario, degrees, levels, solver, mode };
    let table = run_sweep(&config)?;
    let text = table.render(format);
    match &args.out {
        Some(path) => fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(!table.any_diverged())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("igamg: at least one cell diverged");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("igamg: {e:#}");
            ExitCode::FAILURE
        }
    }
}
