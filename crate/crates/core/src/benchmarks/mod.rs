//! Manufactured benchmark solutions, true errors and convergence tables.

mod exact;

use serde::{Deserialize, Serialize};

use crate::dg_space::DgVector;
use crate::estimators::{on_common_space, StepInterval};
use crate::exec;
use crate::geometry::{dot, mat_vec};
use crate::ipdg::{weighted_jump_sq, CoefficientBounds, DiffusionTensor};
use crate::solver::SolutionHistory;
use crate::{Error, Result};

pub use exact::{exact_dt_u, exact_grad_u, exact_u, polar_angle, BenchmarkId, OMEGA, Z0};

/// `∫_{t_{n−1}}^{t_n} ⦀u(s) − U(s)⦀² ds` with `U` linear in time between
/// `U^{n−1}` and `U^n`, integrated with the 3-point Gauss rule.
pub fn step_error_sq(
    id: BenchmarkId,
    u_prev: &DgVector,
    u: &DgVector,
    interval: &StepInterval,
    tensor: &DiffusionTensor,
    c_pen: f64,
) -> Result<f64> {
    let (a, b) = on_common_space(u_prev, u)?;
    let space = a.space().clone();
    let ld = space.local_dim();
    let tab = space.element_tab(2 * space.degree() + id.extra_order());
    let faces = space.mesh().faces();
    let grads = |v: &DgVector| {
        exec::map_indexed(space.num_elements(), |e| {
            let c = v.element_coefficients(e);
            tab.range(e)
                .map(|q| {
                    let mut g = [0.0; 2];
                    for (ci, gi) in c.iter().zip(&tab.grads[q * ld..(q + 1) * ld]) {
                        g[0] += ci * gi[0];
                        g[1] += ci * gi[1];
                    }
                    g
                })
                .collect::<Vec<_>>()
        })
        .concat()
    };
    let (ga, gb) = (grads(&a), grads(&b));
    let constant_bounds = tensor.is_time_constant().then(|| CoefficientBounds::compute(&space, tensor, interval.t_n));
    let mut total = 0.0;
    for (s, ws) in interval.gauss() {
        let (l0, l1) = (interval.l_prev(s), interval.l_n(s));
        let volume = exec::sum_indexed(space.num_elements(), |e| {
            tab.range(e)
                .map(|q| {
                    let x = tab.points[q];
                    let gu = id.gradient(x, s);
                    let d = [gu[0] - l0 * ga[q][0] - l1 * gb[q][0], gu[1] - l0 * ga[q][1] - l1 * gb[q][1]];
                    tab.weights[q] * dot(mat_vec(&tensor.eval(x, s), d), d)
                })
                .sum::<f64>()
        });
        let bounds = match &constant_bounds {
            Some(b) => b.clone(),
            None => CoefficientBounds::compute(&space, tensor, s),
        };
        let combined = a.scaled(l0).axpy(l1, &b)?;
        let jumps = weighted_jump_sq(&combined, &space, |f| c_pen * bounds.face_sharp[f] / faces[f].h_face, 2 * space.degree() + 2);
        total += ws * (volume + jumps);
    }
    Ok(total)
}

/// Running `‖u − U‖_{L2(0, t_m; energy)}`.
#[derive(Debug, Clone)]
pub struct ErrorTracker {
    pub id: BenchmarkId,
    pub tensor: DiffusionTensor,
    pub c_pen: f64,
    sum_sq: f64,
}

impl ErrorTracker {
    pub fn new(id: BenchmarkId, tensor: DiffusionTensor, c_pen: f64) -> Self {
        ErrorTracker {
            id,
            tensor,
            c_pen,
            sum_sq: 0.0,
        }
    }

    /// Add one step and return the error up to its end.
    pub fn push(&mut self, u_prev: &DgVector, u: &DgVector, interval: &StepInterval) -> Result<f64> {
        self.sum_sq += step_error_sq(self.id, u_prev, u, interval, &self.tensor, self.c_pen)?;
        Ok(self.error())
    }

    pub fn error(&self) -> f64 {
        self.sum_sq.sqrt()
    }
}

/// True error up to step `m` of a stored simulation.
pub fn true_error(history: &SolutionHistory, id: BenchmarkId, m: usize, tensor: &DiffusionTensor, c_pen: f64) -> Result<f64> {
    if m > history.num_steps() {
        return Err(Error::IncompleteHistory {
            requested: m,
            available: history.num_steps(),
        });
    }
    let mut tracker = ErrorTracker::new(id, tensor.clone(), c_pen);
    for n in 1..=m {
        let (prev, cur) = (history.level(n - 1)?, history.level(n)?);
        tracker.push(&prev.u, &cur.u, &StepInterval::new(prev.t, cur.t))?;
    }
    Ok(tracker.error())
}

/// `EOC_i = log(v_{i+1}/v_i) / log(h_{i+1}/h_i)`.
pub fn eoc(values: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if values.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            got: values.len(),
        });
    }
    if values.iter().chain(h).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::NonPositiveInput);
    }
    Ok(values
        .windows(2)
        .zip(h.windows(2))
        .map(|(v, h)| (v[1] / v[0]).ln() / (h[1] / h[0]).ln())
        .collect())
}

/// `error / (parest + ellest)`.
pub fn inverse_effectivity(error: f64, parest: f64, ellest: f64) -> Result<f64> {
    let sum = parest + ellest;
    if sum > 0.0 {
        Ok(error / sum)
    } else {
        Err(Error::ZeroEstimator)
    }
}

/// One refinement level at the final time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub subdivisions: usize,
    pub h: f64,
    pub tau: f64,
    pub steps: usize,
    pub dofs: usize,
    pub error: Option<f64>,
    pub parest: f64,
    pub ellest: f64,
    pub nonconf_acc: f64,
    pub total: f64,
    pub inverse_ei: Option<f64>,
    pub eoc_error: Option<f64>,
    pub eoc_parest: Option<f64>,
    pub eoc_ellest: Option<f64>,
    pub eoc_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Fill the EOC columns from consecutive rows; `h` must strictly decrease.
    pub fn new(mut rows: Vec<ConvergenceRow>) -> Result<Self> {
        if rows.windows(2).any(|w| w[1].h.partial_cmp(&w[0].h) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::Config("refinement levels must have strictly decreasing h".into()));
        }
        let rate = |a: f64, b: f64, ha: f64, hb: f64| eoc(&[a, b], &[ha, hb]).ok().map(|v| v[0]);
        for i in 1..rows.len() {
            let (prev, cur) = (rows[i - 1].clone(), &mut rows[i]);
            cur.eoc_error = match (prev.error, cur.error) {
                (Some(a), Some(b)) => rate(a, b, prev.h, cur.h),
                _ => None,
            };
            cur.eoc_parest = rate(prev.parest, cur.parest, prev.h, cur.h);
            cur.eoc_ellest = rate(prev.ellest, cur.ellest, prev.h, cur.h);
            cur.eoc_total = rate(prev.total, cur.total, prev.h, cur.h);
        }
        Ok(ConvergenceTable { rows })
    }

    pub fn last(&self) -> Option<&ConvergenceRow> {
        self.rows.last()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_of_powers() {
        let h = [0.5, 0.25, 0.125];
        let one = eoc(&h, &h).unwrap();
        assert!(one.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let sq: Vec<f64> = h.iter().map(|x| x * x).collect();
        assert!(eoc(&sq, &h).unwrap().iter().all(|v| (v - 2.0).abs() < 1e-14));
        assert!(eoc(&[3.0, 3.0, 3.0], &h).unwrap().iter().all(|v| v.abs() < 1e-14));
        assert!(matches!(eoc(&[1.0, 0.0], &[1.0, 0.5]), Err(Error::NonPositiveInput)));
        assert!(matches!(eoc(&[1.0, 2.0], &[-1.0, 0.5]), Err(Error::NonPositiveInput)));
    }

    #[test]
    fn effectivity() {
        assert_eq!(inverse_effectivity(0.5, 0.25, 0.25).unwrap(), 1.0);
        assert!(matches!(inverse_effectivity(0.5, 0.0, 0.0), Err(Error::ZeroEstimator)));
    }

    fn row(h: f64, v: f64) -> ConvergenceRow {
        ConvergenceRow {
            level: 0,
            subdivisions: 0,
            h,
            tau: 0.1 * h,
            steps: 1,
            dofs: 1,
            error: Some(v),
            parest: v,
            ellest: v * v,
            nonconf_acc: 0.0,
            total: v,
            inverse_ei: None,
            eoc_error: None,
            eoc_parest: None,
            eoc_ellest: None,
            eoc_total: None,
        }
    }

    #[test]
    fn table_rates() {
        let t = ConvergenceTable::new(vec![row(0.5, 0.5), row(0.25, 0.25)]).unwrap();
        assert_eq!(t.rows[0].eoc_error, None);
        assert!((t.rows[1].eoc_error.unwrap() - 1.0).abs() < 1e-14);
        assert!((t.rows[1].eoc_ellest.unwrap() - 2.0).abs() < 1e-14);
        let single = ConvergenceTable::new(vec![row(0.5, 0.5)]).unwrap();
        assert!(single.rows[0].eoc_error.is_none());
        assert!(ConvergenceTable::new(vec![row(0.25, 0.5), row(0.5, 0.25)]).is_err());
    }
}
