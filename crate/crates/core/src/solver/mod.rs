//! Backward Euler time stepping for the IPDG semi-discretisation.

mod linear;

use std::sync::Arc;

use crate::dg_space::{transfer, DgSpace, DgVector};
use crate::geometry::Point;
use crate::ipdg::{assemble_load, assemble_stiffness, DiffusionTensor, SparseOperator, Theta};
use crate::mesh::Mesh;
use crate::{Error, Result};

pub use linear::{bicgstab, pcg, solve, solve_spd, SolverOptions};

pub type ScalarField = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// Nodes `t_0 < t_1 < ... < t_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    nodes: Vec<f64>,
}

impl TimePartition {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::Config("time nodes must be strictly increasing".into()));
        }
        Ok(TimePartition { nodes })
    }

    /// Uniform partition of `[0, t_end]` into the fewest steps of length at most `tau`.
    pub fn uniform(t_end: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && t_end > 0.0) {
            return Err(Error::Config("step and final time must be positive".into()));
        }
        let steps = ((t_end / tau) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Self::new((0..=steps).map(|i| t_end * i as f64 / steps as f64).collect())
    }

    pub fn num_steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, n: usize) -> f64 {
        self.nodes[n]
    }

    /// `τ_n = t_n − t_{n−1}` for `n ≥ 1`.
    pub fn tau(&self, n: usize) -> f64 {
        self.nodes[n] - self.nodes[n - 1]
    }

    pub fn final_time(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
}

/// Mesh used at each time level.
#[derive(Debug, Clone)]
pub enum MeshSchedule {
    Fixed(Arc<Mesh>),
    /// One mesh per time level `0..=N`; consecutive meshes must share a hierarchy.
    PerStep(Vec<Arc<Mesh>>),
}

impl MeshSchedule {
    fn mesh(&self, n: usize) -> &Arc<Mesh> {
        match self {
            MeshSchedule::Fixed(m) => m,
            MeshSchedule::PerStep(ms) => &ms[n],
        }
    }
}

#[derive(Clone)]
pub struct SimulationConfig {
    pub partition: TimePartition,
    pub degree: usize,
    pub c_pen: f64,
    pub theta: Theta,
    pub tensor: DiffusionTensor,
    pub forcing: ScalarField,
    /// Initial datum, evaluated at `t_0`.
    pub initial: ScalarField,
    pub schedule: MeshSchedule,
    pub solver: SolverOptions,
}

/// Everything produced by one Euler step.
pub struct StepData<'a> {
    pub n: usize,
    pub t_prev: f64,
    pub t_n: f64,
    pub tau: f64,
    pub space: &'a Arc<DgSpace>,
    /// `U^{n−1}` on its own space.
    pub u_prev: &'a DgVector,
    /// `I^n U^{n−1}`.
    pub iu_prev: &'a DgVector,
    pub u: &'a DgVector,
    /// Stiffness on `T_n` with `a(t_n)`.
    pub stiffness: &'a SparseOperator,
    /// Stiffness on `T_n` with `a(t_{n−1})`.
    pub stiffness_prev_time: &'a SparseOperator,
    /// `Π f(t_n)` on the step-`n` space.
    pub projected_load: &'a DgVector,
}

pub trait StepObserver {
    fn initial(&mut self, _u0: &DgVector, _t0: f64) -> Result<()> {
        Ok(())
    }
    fn step(&mut self, data: &StepData<'_>) -> Result<()>;
}

impl<F: FnMut(&StepData<'_>) -> Result<()>> StepObserver for F {
    fn step(&mut self, data: &StepData<'_>) -> Result<()> {
        self(data)
    }
}

/// Solve `(I/τ + B)U = IU_prev/τ + load` with `load = Π f(t_n)`.
fn solve_step(
    system: &SparseOperator,
    load: &DgVector,
    iu_prev: &DgVector,
    tau: f64,
    opts: &SolverOptions,
) -> Result<DgVector> {
    let rhs = load.axpy(1.0 / tau, iu_prev)?;
    solve(system, &rhs, Some(iu_prev), opts)
}

/// One backward Euler step on `space`, given `I^n U^{n−1}` already in that space.
#[allow(clippy::too_many_arguments)]
pub fn euler_step<F>(
    space: &Arc<DgSpace>,
    iu_prev: &DgVector,
    tensor: &DiffusionTensor,
    f: F,
    t_n: f64,
    tau: f64,
    c_pen: f64,
    theta: Theta,
    opts: &SolverOptions,
) -> Result<DgVector>
where
    F: Fn(Point, f64) -> f64 + Sync,
{
    if iu_prev.len() != space.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: space.total_dim(),
            got: iu_prev.len(),
        });
    }
    let iu_prev = DgVector::from_coefficients(space, iu_prev.coefficients().to_vec())?;
    let b = assemble_stiffness(space, tensor, t_n, theta, c_pen);
    let system = b.scaled_plus_identity(1.0, 1.0 / tau);
    let load = assemble_load(space, f, t_n);
    solve_step(&system, &load, &iu_prev, tau, opts)
}

struct StiffnessCache {
    space: Arc<DgSpace>,
    time: f64,
    matrix: Arc<SparseOperator>,
}

/// Drive the time loop, handing each step to `observer`. Returns `U^N`.
pub fn simulate(config: &SimulationConfig, observer: &mut dyn StepObserver) -> Result<DgVector> {
    let p = config.degree;
    let time_constant = config.tensor.is_time_constant();
    let mut space = DgSpace::new(config.schedule.mesh(0).clone(), p)?;
    let t0 = config.partition.node(0);
    let initial = config.initial.clone();
    let mut u = DgVector::l2_project(&space, move |x, t| initial(x, t), t0);
    observer.initial(&u, t0)?;

    let mut cache: Vec<StiffnessCache> = Vec::new();
    let mut stiffness = |space: &Arc<DgSpace>, t: f64| -> Arc<SparseOperator> {
        if let Some(c) = cache
            .iter()
            .find(|c| Arc::ptr_eq(&c.space, space) && (time_constant || c.time == t))
        {
            return c.matrix.clone();
        }
        let matrix = Arc::new(assemble_stiffness(space, &config.tensor, t, config.theta, config.c_pen));
        cache.push(StiffnessCache {
            space: space.clone(),
            time: t,
            matrix: matrix.clone(),
        });
        if cache.len() > 3 {
            cache.remove(0);
        }
        matrix
    };
    let mut system_cache: Option<(Arc<SparseOperator>, f64, SparseOperator)> = None;

    for n in 1..=config.partition.num_steps() {
        let (t_prev, t_n, tau) = (config.partition.node(n - 1), config.partition.node(n), config.partition.tau(n));
        let mesh_n = config.schedule.mesh(n);
        let next_space = if Arc::ptr_eq(mesh_n, space.mesh()) || **mesh_n == **space.mesh() {
            space.clone()
        } else {
            DgSpace::new(mesh_n.clone(), p)?
        };
        let iu_prev = transfer(&u, &next_space)?;
        let b = stiffness(&next_space, t_n);
        let b_prev = stiffness(&next_space, t_prev);
        let reuse = matches!(&system_cache, Some((m, t, _)) if Arc::ptr_eq(m, &b) && *t == tau);
        if !reuse {
            system_cache = Some((b.clone(), tau, b.scaled_plus_identity(1.0, 1.0 / tau)));
        }
        let system = &system_cache.as_ref().unwrap().2;
        let forcing = config.forcing.clone();
        let load = assemble_load(&next_space, move |x, t| forcing(x, t), t_n);
        let u_next = solve_step(system, &load, &iu_prev, tau, &config.solver)?;
        observer.step(&StepData {
            n,
            t_prev,
            t_n,
            tau,
            space: &next_space,
            u_prev: &u,
            iu_prev: &iu_prev,
            u: &u_next,
            stiffness: &b,
            stiffness_prev_time: &b_prev,
            projected_load: &load,
        })?;
        u = u_next;
        space = next_space;
    }
    Ok(u)
}

/// One stored time level.
#[derive(Debug, Clone)]
pub struct HistoryStep {
    pub t: f64,
    pub u: DgVector,
    /// `I^n U^{n−1}`; for level 0 this is `U^0` itself.
    pub iu_prev: DgVector,
}

/// `U^0, ..., U^N` with the transferred predecessors.
#[derive(Debug, Clone, Default)]
pub struct SolutionHistory {
    levels: Vec<HistoryStep>,
}

impl SolutionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of completed steps (levels minus one).
    pub fn num_steps(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn level(&self, n: usize) -> Result<&HistoryStep> {
        self.levels.get(n).ok_or(Error::IncompleteHistory {
            requested: n,
            available: self.num_steps(),
        })
    }

    pub fn levels(&self) -> &[HistoryStep] {
        &self.levels
    }

    pub fn push(&mut self, step: HistoryStep) {
        self.levels.push(step);
    }
}

impl StepObserver for SolutionHistory {
    fn initial(&mut self, u0: &DgVector, t0: f64) -> Result<()> {
        self.levels.clear();
        self.levels.push(HistoryStep {
            t: t0,
            u: u0.clone(),
            iu_prev: u0.clone(),
        });
        Ok(())
    }

    fn step(&mut self, data: &StepData<'_>) -> Result<()> {
        self.levels.push(HistoryStep {
            t: data.t_n,
            u: data.u.clone(),
            iu_prev: data.iu_prev.clone(),
        });
        Ok(())
    }
}

/// Run the whole time loop and keep every level.
pub fn run_simulation(config: &SimulationConfig) -> Result<SolutionHistory> {
    let mut history = SolutionHistory::new();
    simulate(config, &mut history)?;
    Ok(history)
}
