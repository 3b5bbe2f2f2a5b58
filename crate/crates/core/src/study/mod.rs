//! Refinement studies over the benchmark problems.

mod output;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::benchmarks::{inverse_effectivity, BenchmarkId, ConvergenceRow, ConvergenceTable, ErrorTracker};
use crate::dg_space::DgVector;
use crate::estimators::{initial_term, Accumulator, Constants, Estimator, EstimatorOptions, OperatorRoute, StepInterval, StepRecord};
use crate::exec;
use crate::ipdg::{default_penalty, DiffusionTensor, Theta};
use crate::mesh::build_structured_mesh;
use crate::solver::{simulate, MeshSchedule, SimulationConfig, SolverOptions, StepData, StepObserver, TimePartition};
use crate::{Error, Result};

pub use output::{emit_convergence_csv, emit_csv, emit_json, load_json, write_convergence_csv, write_csv, write_json, CSV_COLUMNS, CSV_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub benchmark: BenchmarkId,
    pub degree: usize,
    /// Defaults to 40, 80, 160 for p = 1, 2, 3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_pen: Option<f64>,
    #[serde(default = "default_theta")]
    pub theta: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
}

fn default_theta() -> i64 {
    -1
}

/// Meshes with `n` subdivisions per unit length and `τ = c·h^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsSection {
    pub subdivisions: Vec<usize>,
    /// `k`; 0 gives a fixed step `τ = c`.
    pub tau_power: u32,
    pub tau_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub steps_csv: PathBuf,
    pub report_json: PathBuf,
    pub convergence_csv: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            steps_csv: "steps.csv".into(),
            report_json: "report.json".into(),
            convergence_csv: "convergence.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub levels: LevelsSection,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub route: OperatorRoute,
    pub alternative_time: bool,
}

impl RunConfig {
    pub fn new(benchmark: BenchmarkId, degree: usize, subdivisions: Vec<usize>, tau_power: u32, tau_coefficient: f64) -> Self {
        RunConfig {
            problem: ProblemSection {
                benchmark,
                degree,
                c_pen: None,
                theta: -1,
                final_time: None,
            },
            levels: LevelsSection {
                subdivisions,
                tau_power,
                tau_coefficient,
            },
            constants: Constants::default(),
            estimator: EstimatorSection::default(),
            solver: SolverOptions::default(),
            output: OutputSection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(1..=3).contains(&self.problem.degree) {
            return bad("degree must be 1, 2 or 3");
        }
        if self.problem.c_pen.is_some_and(|c| !(c.is_finite() && c > 0.0)) {
            return bad("c_pen must be positive");
        }
        if Theta::from_value(self.problem.theta).is_none() {
            return bad("theta must be -1, 0 or 1");
        }
        if self.problem.final_time.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
            return bad("final_time must be positive");
        }
        if self.levels.subdivisions.is_empty() || self.levels.subdivisions.contains(&0) {
            return bad("levels need at least one positive subdivision count");
        }
        if self.levels.tau_power > 4 {
            return bad("tau_power must be between 0 and 4");
        }
        if !(self.levels.tau_coefficient.is_finite() && self.levels.tau_coefficient > 0.0) {
            return bad("tau_coefficient must be positive");
        }
        if !(self.solver.tolerance > 0.0 && self.solver.max_iterations > 0) {
            return bad("solver tolerance and iteration cap must be positive");
        }
        self.constants.validate()
    }

    pub fn c_pen(&self) -> f64 {
        self.problem.c_pen.unwrap_or_else(|| default_penalty(self.problem.degree))
    }

    pub fn theta(&self) -> Theta {
        Theta::from_value(self.problem.theta).unwrap_or_default()
    }

    pub fn final_time(&self) -> f64 {
        self.problem.final_time.unwrap_or_else(|| self.problem.benchmark.final_time())
    }

    pub fn estimator_options(&self) -> EstimatorOptions {
        EstimatorOptions {
            constants: self.constants,
            route: self.estimator.route,
            alternative_time: self.estimator.alternative_time,
        }
    }

    /// Keep only levels with index in `first..=last`.
    pub fn select_levels(&mut self, first: usize, last: usize) -> Result<()> {
        if first > last || last >= self.levels.subdivisions.len() {
            return Err(Error::Config(format!(
                "level range {first}..{last} outside 0..{}",
                self.levels.subdivisions.len().saturating_sub(1)
            )));
        }
        self.levels.subdivisions = self.levels.subdivisions[first..=last].to_vec();
        Ok(())
    }
}

/// Per-step records and summary of one refinement level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub subdivisions: usize,
    pub h: f64,
    pub tau: f64,
    pub dofs: usize,
    pub initial_term: f64,
    pub records: Vec<StepRecord>,
}

impl LevelReport {
    fn row(&self) -> ConvergenceRow {
        let last = self.records.last();
        let totals = last.map(|r| r.totals).unwrap_or_default();
        ConvergenceRow {
            level: self.level,
            subdivisions: self.subdivisions,
            h: self.h,
            tau: self.tau,
            steps: self.records.len(),
            dofs: self.dofs,
            error: last.and_then(|r| r.error),
            parest: totals.parest,
            ellest: totals.ellest,
            nonconf_acc: totals.nonconf_acc,
            total: totals.total,
            inverse_ei: last.and_then(|r| r.ei),
            eoc_error: None,
            eoc_parest: None,
            eoc_ellest: None,
            eoc_total: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: RunConfig,
    pub levels: Vec<LevelReport>,
    pub table: ConvergenceTable,
    /// Not written to data files, so reruns stay byte-identical.
    #[serde(skip)]
    pub wall_time: Option<Duration>,
}

struct LevelObserver {
    id: BenchmarkId,
    estimator: Estimator,
    tracker: ErrorTracker,
    acc: Accumulator,
    alternative_time: bool,
    records: Vec<StepRecord>,
    initial: f64,
}

impl StepObserver for LevelObserver {
    fn initial(&mut self, u0: &DgVector, t0: f64) -> Result<()> {
        let id = self.id;
        self.initial = initial_term(u0, move |x, t| id.value(x, t), t0, &self.estimator.options.constants);
        self.acc = Accumulator::new(self.initial, self.alternative_time);
        Ok(())
    }

    fn step(&mut self, d: &StepData<'_>) -> Result<()> {
        let indicators = self.estimator.step(d)?;
        let totals = self.acc.push(&indicators)?;
        let error = self.tracker.push(d.u_prev, d.u, &StepInterval::new(d.t_prev, d.t_n))?;
        self.records.push(StepRecord {
            indicators,
            totals,
            error: Some(error),
            ei: inverse_effectivity(error, totals.parest, totals.ellest).ok(),
        });
        Ok(())
    }
}

/// Run one refinement level with `n` subdivisions.
pub fn run_level(config: &RunConfig, level: usize, n: usize) -> Result<LevelReport> {
    let id = config.problem.benchmark;
    let mesh = Arc::new(build_structured_mesh(id.domain(), n));
    let h = mesh.max_diameter();
    let tau = config.levels.tau_coefficient * h.powi(config.levels.tau_power as i32);
    let partition = TimePartition::uniform(config.final_time(), tau)?;
    let tensor = DiffusionTensor::identity();
    let c_pen = config.c_pen();
    let forcing: crate::solver::ScalarField = Arc::new(move |x, t| id.forcing(x, t));
    let sim = SimulationConfig {
        partition: partition.clone(),
        degree: config.problem.degree,
        c_pen,
        theta: config.theta(),
        tensor: tensor.clone(),
        forcing: forcing.clone(),
        initial: Arc::new(move |x, t| id.value(x, t)),
        schedule: MeshSchedule::Fixed(mesh.clone()),
        solver: config.solver,
    };
    let options = config.estimator_options();
    let mut observer = LevelObserver {
        id,
        estimator: Estimator {
            options,
            tensor: tensor.clone(),
            forcing,
            c_pen,
        },
        tracker: ErrorTracker::new(id, tensor, c_pen),
        acc: Accumulator::new(0.0, options.alternative_time),
        alternative_time: options.alternative_time,
        records: Vec::with_capacity(partition.num_steps()),
        initial: 0.0,
    };
    let u_final = simulate(&sim, &mut observer)?;
    Ok(LevelReport {
        level,
        subdivisions: n,
        h,
        tau: partition.tau(1),
        dofs: u_final.len(),
        initial_term: observer.initial,
        records: observer.records,
    })
}

/// Run all levels (in parallel where enabled) and build the convergence table.
/// `on_level` sees each level as soon as it finishes.
pub fn run_study_with<F>(config: &RunConfig, on_level: F) -> Result<RunReport>
where
    F: Fn(&LevelReport) + Sync,
{
    config.validate()?;
    let start = Instant::now();
    let subdivisions = &config.levels.subdivisions;
    let results = exec::map_indexed(subdivisions.len(), |i| {
        let r = run_level(config, i, subdivisions[i]);
        if let Ok(level) = &r {
            on_level(level);
        }
        r
    });
    let levels = results.into_iter().collect::<Result<Vec<_>>>()?;
    let table = ConvergenceTable::new(levels.iter().map(LevelReport::row).collect())?;
    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        levels,
        table,
        wall_time: Some(start.elapsed()),
    })
}

pub fn run_study(config: &RunConfig) -> Result<RunReport> {
    run_study_with(config, |_| {})
}
