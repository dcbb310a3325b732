//! Parameter sweeps over `(ℓ, p)` grids with CSV and markdown output.

use std::fmt::{self, Write as _};
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::sync::Arc;

use crate::assembly::assemble_rhs;
use crate::functions::{sinsin_source, Function2d, SinSin};
use crate::geometry::GeometryMap;
use crate::multigrid::{solve, CycleKind, MultigridConfig, MultigridHierarchy, SmootherKind, SolveMode};
use crate::projectors::study_tensor_projection;
use crate::scenarios::{scenario_l_shape, scenario_unit_square};
use crate::tensor::TensorSpace;
use crate::{Error, Result};

/// Problem selected for a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    UnitSquare,
    LShape,
    /// Tensor projector `Π̂` on the unit square; no solver involved.
    ProjectorStudy,
    /// Patches loaded from a geometry file, solved with the same data `f`, `g`.
    FromFile(Arc<Vec<GeometryMap>>),
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::UnitSquare => "unit_square",
            ScenarioKind::LShape => "l_shape",
            ScenarioKind::ProjectorStudy => "projector_study",
            ScenarioKind::FromFile(_) => "from_file",
        }
    }

    fn patches(&self) -> Option<Arc<Vec<GeometryMap>>> {
        match self {
            ScenarioKind::UnitSquare => Some(scenario_unit_square().patches),
            ScenarioKind::LShape => Some(scenario_l_shape().patches),
            ScenarioKind::ProjectorStudy => None,
            ScenarioKind::FromFile(p) => Some(p.clone()),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Output format of a sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            _ => Err(Error::InvalidArgument(format!("unknown format '{s}'"))),
        }
    }
}

/// A full sweep description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub degrees: Vec<usize>,
    pub levels: RangeInclusive<usize>,
    pub solver: MultigridConfig,
    pub mode: SolveMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::UnitSquare,
            degrees: (2..=8).collect(),
            levels: 4..=8,
            solver: MultigridConfig::default(),
            mode: SolveMode::Iterative,
        }
    }
}

/// What happened in one `(ℓ, p)` cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Solved { iterations: usize, rate: f64, seconds: f64 },
    Diverged { iterations: usize, seconds: f64 },
    Projection { h1_error: f64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub level: usize,
    pub degree: usize,
    pub outcome: CellOutcome,
}

impl SweepCell {
    pub fn iterations(&self) -> Option<usize> {
        match self.outcome {
            CellOutcome::Solved { iterations, .. } => Some(iterations),
            _ => None,
        }
    }
}

/// Results of a sweep, one cell per `(ℓ, p)` in row-major `ℓ` order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub config: RunConfig,
    pub cells: Vec<SweepCell>,
}

/// Solves one cell. Divergence is reported as a cell outcome; other errors propagate.
pub fn run_cell(config: &RunConfig, p: usize, level: usize) -> Result<CellOutcome> {
    let Some(patches) = config.scenario.patches() else {
        let space = TensorSpace::with_degree(p, 1 << level)?;
        let r = study_tensor_projection(&space, &SinSin)?;
        return Ok(CellOutcome::Projection { h1_error: r.h1_error, bound: r.bound });
    };
    let start = std::time::Instant::now();
    let h = MultigridHierarchy::new(patches, p, level, config.solver)?;
    let sys = assemble_rhs(&h.finest().disc, &sinsin_source, &|x| SinSin.value(x))?;
    match solve(&h, &sys.rhs, config.mode) {
        Ok(r) => Ok(CellOutcome::Solved { iterations: r.iterations, rate: r.rate, seconds: r.seconds }),
        Err(Error::Divergence { iterations, .. }) => {
            Ok(CellOutcome::Diverged { iterations, seconds: start.elapsed().as_secs_f64() })
        }
        Err(e) => Err(e),
    }
}

/// Runs every cell of the grid.
pub fn run_sweep(config: &RunConfig) -> Result<SweepTable> {
    if config.degrees.is_empty() || config.levels.is_empty() {
        return Err(Error::InvalidArgument("empty degree or level range".into()));
    }
    let mut cells = Vec::new();
    for level in config.levels.clone() {
        for &degree in &config.degrees {
            cells.push(SweepCell { level, degree, outcome: run_cell(config, degree, level)? });
        }
    }
    Ok(SweepTable { config: config.clone(), cells })
}

impl SweepTable {
    pub fn cell(&self, level: usize, degree: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.level == level && c.degree == degree)
    }

    pub fn any_diverged(&self) -> bool {
        self.cells.iter().any(|c| matches!(c.outcome, CellOutcome::Diverged { .. }))
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Markdown => self.to_markdown(),
        }
    }

    /// One line per cell. Projector sweeps use their own column set.
    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let s = &c.solver;
        let mut out = String::new();
        if c.scenario == ScenarioKind::ProjectorStudy {
            out.push_str("scenario,p,level,h1_error,bound,ratio\n");
        } else {
            out.push_str("scenario,p,level,cycle,smoother,nu,tau,iterations,rate,seconds\n");
        }
        for cell in &self.cells {
            let head = format!("{},{},{}", c.scenario, cell.degree, cell.level);
            let solver = format!("{},{},{}+{},{}", s.cycle, s.smoother, s.nu_pre, s.nu_post, s.tau);
            let _ = match cell.outcome {
                CellOutcome::Solved { iterations, rate, seconds } => {
                    writeln!(out, "{head},{solver},{iterations},{rate:.6},{seconds:.6}")
                }
                CellOutcome::Diverged { seconds, .. } => writeln!(out, "{head},{solver},div,,{seconds:.6}"),
                CellOutcome::Projection { h1_error, bound } => {
                    writeln!(out, "{head},{h1_error:.6e},{bound:.6e},{:.6}", h1_error / bound)
                }
            };
        }
        out
    }

    /// Rows `ℓ`, columns `p`. Solver cells show iteration counts (`div` on
    /// divergence); projector cells show `|u − Π̂u|_{H¹} / (2h|u|_{H²})`.
    pub fn to_markdown(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = write!(out, "| ℓ \\ p |");
        for p in &c.degrees {
            let _ = write!(out, " {p} |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(c.degrees.len()));
        out.push('\n');
        for level in c.levels.clone() {
            let _ = write!(out, "| {level} |");
            for &p in &c.degrees {
                let text = match self.cell(level, p).map(|c| &c.outcome) {
                    Some(CellOutcome::Solved { iterations, .. }) => iterations.to_string(),
                    Some(CellOutcome::Diverged { .. }) => "div".into(),
                    Some(CellOutcome::Projection { h1_error, bound }) => format!("{:.3}", h1_error / bound),
                    None => String::new(),
                };
                let _ = write!(out, " {text} |");
            }
            out.push('\n');
        }
        out
    }
}

/// Shorthand for the additive or boosted defaults with a given cycle.
pub fn solver_defaults(smoother: SmootherKind, cycle: CycleKind) -> MultigridConfig {
    let base = match smoother {
        SmootherKind::Additive => MultigridConfig::default(),
        SmootherKind::Boosted => MultigridConfig::boosted(),
    };
    MultigridConfig { cycle, ..base }
}
