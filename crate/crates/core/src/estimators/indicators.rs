use std::sync::Arc;

use crate::dg_space::{inject, DgSpace, DgVector};
use crate::geometry::{inverse, mat_mul, mat_sub, spd_sqrt, spectral_norm, sym_eigenvalues, Point};
use crate::ipdg::weighted_jump_sq;
use crate::ipdg::{dg_energy_norm_with, CoefficientBounds, DiffusionTensor, SparseOperator};
use crate::mesh::common_refinement;
use crate::quadrature::step_time_rule;
use crate::Result;

use super::Constants;

/// A time step `[t_{n−1}, t_n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInterval {
    pub t_prev: f64,
    pub t_n: f64,
}

impl StepInterval {
    pub fn new(t_prev: f64, t_n: f64) -> Self {
        StepInterval { t_prev, t_n }
    }

    pub fn tau(&self) -> f64 {
        self.t_n - self.t_prev
    }

    /// 3-point Gauss nodes and weights on the interval; weights sum to `τ`.
    pub fn gauss(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let tau = self.tau();
        step_time_rule().iter().map(move |(r, w)| (self.t_prev + r * tau, w * tau))
    }

    /// `l_n(s) = (s − t_{n−1}) / τ`.
    pub fn l_n(&self, s: f64) -> f64 {
        (s - self.t_prev) / self.tau()
    }

    /// `l_{n−1}(s) = (t_n − s) / τ`.
    pub fn l_prev(&self, s: f64) -> f64 {
        (self.t_n - s) / self.tau()
    }
}

/// Global lower eigenvalue bound `α♭(s)` over the quadrature points of `space`.
pub fn alpha_flat(space: &DgSpace, tensor: &DiffusionTensor, s: f64) -> f64 {
    if tensor.is_space_constant() {
        sym_eigenvalues(&tensor.eval([0.0, 0.0], s)).0
    } else {
        CoefficientBounds::compute(space, tensor, s).alpha_flat
    }
}

/// `((1/τ) ∫ w(s)² / α♭(s) ds)^{1/2}` for a time weight `w`.
fn weighted_inverse_alpha(space: &DgSpace, tensor: &DiffusionTensor, interval: &StepInterval, w: impl Fn(f64) -> f64) -> f64 {
    let constant = tensor.is_time_constant().then(|| alpha_flat(space, tensor, interval.t_n));
    let integral: f64 = interval
        .gauss()
        .map(|(s, ws)| {
            let alpha = constant.unwrap_or_else(|| alpha_flat(space, tensor, s));
            ws * w(s).powi(2) / alpha
        })
        .sum();
    (integral / interval.tau()).sqrt()
}

/// `((1/τ) ∫ 1/α♭)^{1/2}`.
pub fn mean_inverse_alpha(space: &DgSpace, tensor: &DiffusionTensor, interval: &StepInterval) -> f64 {
    weighted_inverse_alpha(space, tensor, interval, |_| 1.0)
}

/// `θ_n = (C_els C_dgc / √3) ⦀I^nU^{n−1} − U^n⦀` with the norm at `t_n`.
pub fn time_indicator(u: &DgVector, iu_prev: &DgVector, bounds_n: &CoefficientBounds, tensor: &DiffusionTensor, c_pen: f64, constants: &Constants) -> Result<f64> {
    let d = iu_prev.sub(u)?;
    let norm = dg_energy_norm_with(&d, tensor, bounds_n.time, c_pen, bounds_n);
    Ok(constants.c_els * constants.c_dgc / 3f64.sqrt() * norm)
}

/// `(∫ C_PF² ‖f(t_n) − f(s)‖² / (τ α♭(s)) ds)^{1/2}`.
pub fn data_indicator<F>(space: &Arc<DgSpace>, f: F, interval: &StepInterval, tensor: &DiffusionTensor, constants: &Constants) -> f64
where
    F: Fn(Point, f64) -> f64 + Sync,
{
    let tab = space.element_tab(2 * space.degree() + 4);
    let t_n = interval.t_n;
    let f_n: Vec<f64> = tab.points.iter().map(|&x| f(x, t_n)).collect();
    let constant = tensor.is_time_constant().then(|| alpha_flat(space, tensor, t_n));
    let integral: f64 = interval
        .gauss()
        .map(|(s, ws)| {
            let diff_sq: f64 = tab
                .points
                .iter()
                .zip(&tab.weights)
                .zip(&f_n)
                .map(|((&x, &w), &fnv)| w * (fnv - f(x, s)).powi(2))
                .sum();
            let alpha = constant.unwrap_or_else(|| alpha_flat(space, tensor, s));
            ws * diff_sq / (interval.tau() * alpha)
        })
        .sum();
    constants.c_pf * integral.sqrt()
}

/// Both functions represented on one space refining both meshes. The
/// original space is reused when the two already coincide.
pub fn on_common_space(a: &DgVector, b: &DgVector) -> Result<(DgVector, DgVector)> {
    let (sa, sb) = (a.space(), b.space());
    if Arc::ptr_eq(sa, sb) || **sa == **sb {
        return Ok((a.clone(), DgVector::from_coefficients(sa, b.coefficients().to_vec())?));
    }
    let carrier = Arc::new(common_refinement(sa.mesh(), sb.mesh())?);
    let space = DgSpace::new(carrier, sa.degree().max(sb.degree()))?;
    Ok((inject(a, &space)?, inject(b, &space)?))
}

/// `γ_n = C_PF ‖I^nU^{n−1} − U^{n−1}‖ / τ · ((1/τ)∫1/α♭)^{1/2}`, measured on the common refinement.
pub fn coarsening_indicator(
    u_prev: &DgVector,
    iu_prev: &DgVector,
    interval: &StepInterval,
    tensor: &DiffusionTensor,
    constants: &Constants,
) -> Result<f64> {
    let (sa, sb) = (u_prev.space(), iu_prev.space());
    if Arc::ptr_eq(sa, sb) || **sa == **sb {
        let d = iu_prev.coefficients().iter().zip(u_prev.coefficients()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        if d == 0.0 {
            return Ok(0.0);
        }
        return Ok(constants.c_pf * d.sqrt() / interval.tau() * mean_inverse_alpha(sb, tensor, interval));
    }
    let (a, b) = on_common_space(iu_prev, u_prev)?;
    let d = a.sub(&b)?.l2_norm();
    Ok(constants.c_pf * d / interval.tau() * mean_inverse_alpha(iu_prev.space(), tensor, interval))
}

/// Nonconforming-part indicators `(β_n, β_ell_n, κ_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NonconformingIndicators {
    pub parabolic: f64,
    pub elliptic: f64,
    pub kappa: f64,
}

/// Jump-based bounds on the nonconforming parts, all evaluated on the
/// skeleton of the common refinement of the two step meshes.
pub fn nonconforming_indicators(
    u: &DgVector,
    u_prev: &DgVector,
    interval: &StepInterval,
    tensor: &DiffusionTensor,
    c_pen: f64,
    constants: &Constants,
) -> Result<NonconformingIndicators> {
    let (un, up) = on_common_space(u, u_prev)?;
    let space = un.space().clone();
    let order = 2 * space.degree() + 2;
    let faces = space.mesh().faces();
    let diff = un.sub(&up)?;
    let h_jump = weighted_jump_sq(&diff, &space, |f| faces[f].h_face, order).sqrt();
    let bounds = CoefficientBounds::compute(&space, tensor, interval.t_n);
    let sigma = |f: usize| c_pen * bounds.face_sharp[f] / faces[f].h_face;
    let sigma_sq = weighted_jump_sq(&un, &space, sigma, order) + weighted_jump_sq(&up, &space, sigma, order);
    let tau = interval.tau();
    Ok(NonconformingIndicators {
        parabolic: constants.c_pf * constants.c1 * h_jump / tau * mean_inverse_alpha(&space, tensor, interval),
        elliptic: constants.c2 * sigma_sq.sqrt(),
        kappa: constants.c1 * h_jump / tau,
    })
}

/// `Λ(s) = max_x |√a(s)⁻¹ (a(s) − a(t_ref)) √a(t_ref)⁻¹|₂` over the quadrature points of `space`.
pub fn tensor_variation(space: &DgSpace, tensor: &DiffusionTensor, s: f64, t_ref: f64) -> f64 {
    if tensor.is_time_constant() || s == t_ref {
        return 0.0;
    }
    let measure = |x: Point| {
        let a_s = tensor.eval(x, s);
        let a_r = tensor.eval(x, t_ref);
        let m = mat_mul(&mat_mul(&inverse(&spd_sqrt(&a_s)), &mat_sub(&a_s, &a_r)), &inverse(&spd_sqrt(&a_r)));
        spectral_norm(&m)
    };
    if tensor.is_space_constant() {
        return measure([0.0, 0.0]);
    }
    let tab = space.element_tab(2 * space.degree() + 2);
    tab.points.iter().map(|&x| measure(x)).fold(0.0, f64::max)
}

/// Operator approximation indicators `(λ_for, λ_back, λ_mesh)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OperatorIndicators {
    pub forward: f64,
    pub backward: f64,
    pub mesh: f64,
}

impl OperatorIndicators {
    pub fn sum(&self) -> f64 {
        self.forward + self.backward + self.mesh
    }
}

/// `a_u = A^nU^n`, `a_plus = A^{n−1}_+ I^nU^{n−1}` and `a_n_iu = A^n I^nU^{n−1}`.
pub fn operator_indicators(
    space: &Arc<DgSpace>,
    a_u: &DgVector,
    a_plus: &DgVector,
    a_n_iu: Option<&DgVector>,
    interval: &StepInterval,
    tensor: &DiffusionTensor,
    constants: &Constants,
) -> Result<OperatorIndicators> {
    let mut out = OperatorIndicators::default();
    if !tensor.is_time_constant() {
        let integral = |weight: &dyn Fn(f64) -> f64, t_ref: f64| {
            let v: f64 = interval
                .gauss()
                .map(|(s, ws)| ws * (weight(s) * tensor_variation(space, tensor, s, t_ref)).powi(2))
                .sum();
            (v / interval.tau()).sqrt()
        };
        let alpha_n = alpha_flat(space, tensor, interval.t_n);
        let alpha_prev = alpha_flat(space, tensor, interval.t_prev);
        out.forward = constants.c_pf * a_u.l2_norm() / alpha_n * integral(&|s| interval.l_n(s), interval.t_n);
        out.backward = constants.c_pf * a_plus.l2_norm() / alpha_prev * integral(&|s| interval.l_prev(s), interval.t_prev);
    }
    if let Some(a_n_iu) = a_n_iu {
        let d = a_plus.sub(a_n_iu)?.l2_norm();
        if d != 0.0 {
            out.mesh = constants.c_pf * d * weighted_inverse_alpha(space, tensor, interval, |s| interval.l_prev(s));
        }
    }
    Ok(out)
}

/// `A Z` through a stiffness matrix on the space of `z`.
pub fn apply_operator(stiffness: &SparseOperator, z: &DgVector) -> Result<DgVector> {
    crate::ipdg::discrete_operator_apply(z.space(), stiffness, z)
}
