//! A posteriori indicators for the Euler–IPDG scheme and their accumulation
//! into an energy-error bound.

mod elliptic;
mod indicators;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dg_space::DgVector;
use crate::exec;
use crate::geometry::Point;
use crate::ipdg::{scheme_operator_apply, CoefficientBounds, DiffusionTensor};
use crate::solver::{ScalarField, StepData};
use crate::{Error, Result};

pub use elliptic::{elliptic_estimator, elliptic_terms, EllipticSource, EllipticTerms};
pub use indicators::{
    alpha_flat, apply_operator, coarsening_indicator, data_indicator, mean_inverse_alpha, nonconforming_indicators,
    on_common_space, operator_indicators, tensor_variation, time_indicator, NonconformingIndicators, OperatorIndicators,
    StepInterval,
};

/// Multiplicative constants of the bound; all default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    pub c_global: f64,
    pub c_els: f64,
    pub c_dgc: f64,
    pub c_pf: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_global: 1.0,
            c_els: 1.0,
            c_dgc: 1.0,
            c_pf: 1.0,
            c1: 1.0,
            c2: 1.0,
        }
    }
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c_global, self.c_els, self.c_dgc, self.c_pf, self.c1, self.c2];
        if all.iter().all(|c| c.is_finite() && *c > 0.0) {
            Ok(())
        } else {
            Err(Error::Config("estimator constants must be positive".into()))
        }
    }
}

/// How `AⁿUⁿ` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorRoute {
    /// `Πfⁿ − (Uⁿ − IⁿUⁿ⁻¹)/τ`, read off the Euler scheme.
    #[default]
    Scheme,
    /// Stiffness matrix applied to `Uⁿ`.
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorOptions {
    pub constants: Constants,
    pub route: OperatorRoute,
    /// Use `(1/√3)‖A₊ⁿ⁻¹IⁿUⁿ⁻¹ − AⁿUⁿ‖` as the time indicator, which removes
    /// the mesh operator indicator from the sum.
    pub alternative_time: bool,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            constants: Constants::default(),
            route: OperatorRoute::Scheme,
            alternative_time: false,
        }
    }
}

/// All indicators of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepIndicators {
    pub n: usize,
    pub t_n: f64,
    pub tau_n: f64,
    pub theta: f64,
    pub data: f64,
    pub coarsen: f64,
    pub nonconf: f64,
    pub nonconf_ell: f64,
    pub eta: f64,
    pub eta_plus: f64,
    pub op_for: f64,
    pub op_back: f64,
    pub op_mesh: f64,
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_alt: Option<f64>,
}

/// Running accumulators after step `m`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Totals {
    pub parest: f64,
    pub ellest: f64,
    /// `(½ Σ β_ell² τ)^{1/2}`
    pub nonconf_acc: f64,
    /// `Σ_{n<m} κ_n τ_n`
    pub kappa_acc: f64,
    pub total: f64,
}

/// One row of the per-step output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub indicators: StepIndicators,
    pub totals: Totals,
    /// `‖u − U‖_{L2(0, t_n; energy)}` when the exact solution is known.
    #[serde(default)]
    pub error: Option<f64>,
    /// `error / (parest + ellest)`.
    #[serde(default)]
    pub ei: Option<f64>,
}

/// Folds step indicators into the parabolic, elliptic and total bounds.
#[derive(Debug, Clone)]
pub struct Accumulator {
    initial: f64,
    alternative_time: bool,
    steps: usize,
    par_sq: f64,
    ell_sq: f64,
    nonconf_ell_sq: f64,
    kappa_before: f64,
    kappa_last: f64,
}

impl Accumulator {
    pub fn new(initial: f64, alternative_time: bool) -> Self {
        Accumulator {
            initial,
            alternative_time,
            steps: 0,
            par_sq: 0.0,
            ell_sq: 0.0,
            nonconf_ell_sq: 0.0,
            kappa_before: 0.0,
            kappa_last: 0.0,
        }
    }

    pub fn push(&mut self, s: &StepIndicators) -> Result<Totals> {
        if s.n != self.steps + 1 {
            return Err(Error::IncompleteRecords {
                expected: self.steps + 1,
                got: s.n,
            });
        }
        self.steps += 1;
        let (theta, op_mesh) = match (self.alternative_time, s.theta_alt) {
            (true, Some(alt)) => (alt, 0.0),
            _ => (s.theta, s.op_mesh),
        };
        let par = theta + op_mesh + s.op_for + s.op_back + s.data + s.coarsen + s.nonconf;
        self.par_sq += par * par * s.tau_n;
        self.ell_sq += (s.eta * s.eta + s.eta_plus * s.eta_plus) * s.tau_n;
        self.nonconf_ell_sq += s.nonconf_ell * s.nonconf_ell * s.tau_n;
        self.kappa_before += self.kappa_last;
        self.kappa_last = s.kappa * s.tau_n;
        Ok(self.totals())
    }

    pub fn totals(&self) -> Totals {
        let parest = self.par_sq.sqrt();
        let ellest = self.ell_sq.sqrt();
        let nonconf_acc = (0.5 * self.nonconf_ell_sq).sqrt();
        Totals {
            parest,
            ellest,
            nonconf_acc,
            kappa_acc: self.kappa_before,
            total: self.initial + 3.0 * parest + 2f64.sqrt() * ellest + nonconf_acc + 1.5f64.sqrt() * self.kappa_before,
        }
    }
}

/// Accumulate records `1..=m`.
pub fn accumulate(records: &[StepIndicators], initial: f64) -> Result<Totals> {
    let mut acc = Accumulator::new(initial, false);
    for r in records {
        acc.push(r)?;
    }
    Ok(acc.totals())
}

/// `‖u₀ − U⁰‖ + C1 ‖√h ⟦U⁰⟧‖`.
pub fn initial_term<F>(u0: &DgVector, exact: F, t0: f64, constants: &Constants) -> f64
where
    F: Fn(Point, f64) -> f64 + Sync,
{
    let space = u0.space();
    let ld = space.local_dim();
    let tab = space.element_tab(2 * space.degree() + 4);
    let l2_sq = exec::sum_indexed(space.num_elements(), |e| {
        let c = u0.element_coefficients(e);
        tab.range(e)
            .map(|q| {
                let uh: f64 = c.iter().zip(&tab.values[q * ld..(q + 1) * ld]).map(|(a, b)| a * b).sum();
                tab.weights[q] * (exact(tab.points[q], t0) - uh).powi(2)
            })
            .sum::<f64>()
    });
    let faces = space.mesh().faces();
    let jump = crate::ipdg::jump_seminorm(u0, |f| faces[f].h_face);
    l2_sq.sqrt() + constants.c1 * jump
}

/// Computes all indicators for each step of a simulation.
#[derive(Clone)]
pub struct Estimator {
    pub options: EstimatorOptions,
    pub tensor: DiffusionTensor,
    pub forcing: ScalarField,
    pub c_pen: f64,
}

impl Estimator {
    pub fn step(&self, d: &StepData<'_>) -> Result<StepIndicators> {
        let k = &self.options.constants;
        let tensor = &self.tensor;
        let space = d.space;
        let interval = StepInterval::new(d.t_prev, d.t_n);
        let bounds_n = CoefficientBounds::compute(space, tensor, d.t_n);
        let bounds_prev = if tensor.is_time_constant() {
            let mut b = bounds_n.clone();
            b.time = d.t_prev;
            b
        } else {
            CoefficientBounds::compute(space, tensor, d.t_prev)
        };

        let theta = time_indicator(d.u, d.iu_prev, &bounds_n, tensor, self.c_pen, k)?;
        let forcing = self.forcing.clone();
        let data = data_indicator(space, move |x, t| forcing(x, t), &interval, tensor, k);
        let coarsen = coarsening_indicator(d.u_prev, d.iu_prev, &interval, tensor, k)?;
        let nc = nonconforming_indicators(d.u, d.u_prev, &interval, tensor, self.c_pen, k)?;

        let a_u = match self.options.route {
            OperatorRoute::Scheme => scheme_operator_apply(d.projected_load, d.u, d.iu_prev, d.tau)?,
            OperatorRoute::Matrix => apply_operator(d.stiffness, d.u)?,
        };
        let eta = elliptic_terms(d.u, tensor, &bounds_n, EllipticSource::Discrete(&a_u), self.c_pen).total(k);
        let a_plus = apply_operator(d.stiffness_prev_time, d.iu_prev)?;
        let eta_plus = elliptic_terms(d.iu_prev, tensor, &bounds_prev, EllipticSource::Discrete(&a_plus), self.c_pen).total(k);

        let a_n_iu = if std::ptr::eq(d.stiffness, d.stiffness_prev_time) || d.stiffness == d.stiffness_prev_time {
            None
        } else {
            Some(apply_operator(d.stiffness, d.iu_prev)?)
        };
        let ops = operator_indicators(space, &a_u, &a_plus, a_n_iu.as_ref(), &interval, tensor, k)?;
        let theta_alt = if self.options.alternative_time {
            Some(k.c_pf * a_plus.sub(&a_u)?.l2_norm() / 3f64.sqrt())
        } else {
            None
        };
        Ok(StepIndicators {
            n: d.n,
            t_n: d.t_n,
            tau_n: d.tau,
            theta,
            data,
            coarsen,
            nonconf: nc.parabolic,
            nonconf_ell: nc.elliptic,
            eta,
            eta_plus,
            op_for: ops.forward,
            op_back: ops.backward,
            op_mesh: ops.mesh,
            kappa: nc.kappa,
            theta_alt,
        })
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}
