use super::tensor::{penalty_sigma, CoefficientBounds, DiffusionTensor};
use crate::dg_space::{DgSpace, DgVector};
use crate::exec;
use crate::geometry::{dot, mat_vec};

/// IPDG energy norm `(‖√a ∇_T v‖² + ‖√σ ⟦v⟧‖²_Γ)^{1/2}` at time `t`.
pub fn dg_energy_norm(v: &DgVector, tensor: &DiffusionTensor, t: f64, c_pen: f64) -> f64 {
    let bounds = CoefficientBounds::compute(v.space(), tensor, t);
    dg_energy_norm_with(v, tensor, t, c_pen, &bounds)
}

pub fn dg_energy_norm_with(v: &DgVector, tensor: &DiffusionTensor, t: f64, c_pen: f64, bounds: &CoefficientBounds) -> f64 {
    let space = v.space();
    let ld = space.local_dim();
    let order = 2 * space.degree() + 2;
    let tab = space.element_tab(order);
    let volume = exec::sum_indexed(space.num_elements(), |e| {
        let c = v.element_coefficients(e);
        tab.range(e)
            .map(|q| {
                let mut g = [0.0; 2];
                for (ci, gi) in c.iter().zip(&tab.grads[q * ld..(q + 1) * ld]) {
                    g[0] += ci * gi[0];
                    g[1] += ci * gi[1];
                }
                tab.weights[q] * dot(mat_vec(&tensor.eval(tab.points[q], t), g), g)
            })
            .sum::<f64>()
    });
    let jumps = weighted_jump_sq(v, space, |f| penalty_sigma(space, bounds, f, c_pen), order);
    (volume + jumps).sqrt()
}

/// `Σ_f ∫_f weight(f) |⟦v⟧|²`.
pub(crate) fn weighted_jump_sq<W>(v: &DgVector, space: &DgSpace, weight: W, order: usize) -> f64
where
    W: Fn(usize) -> f64 + Sync,
{
    let ld = space.local_dim();
    let ftab = space.face_tab(order);
    let faces = space.mesh().faces();
    exec::sum_indexed(faces.len(), |f| {
        let face = &faces[f];
        let cp = v.element_coefficients(face.adjacent[0]);
        let cm = (!face.boundary).then(|| v.element_coefficients(face.adjacent[1]));
        let integral: f64 = ftab
            .range(f)
            .map(|q| {
                let plus: f64 = cp.iter().zip(&ftab.values[q * 2 * ld..(q * 2 + 1) * ld]).map(|(c, b)| c * b).sum();
                let minus: f64 = cm.map_or(0.0, |cm| {
                    cm.iter().zip(&ftab.values[(q * 2 + 1) * ld..(q * 2 + 2) * ld]).map(|(c, b)| c * b).sum()
                });
                let d = plus - minus;
                ftab.weights[q] * d * d
            })
            .sum();
        weight(f) * integral
    })
}

/// `‖√w ⟦v⟧‖_Γ` for an arbitrary nonnegative face weight.
pub fn jump_seminorm<W>(v: &DgVector, weight: W) -> f64
where
    W: Fn(usize) -> f64 + Sync,
{
    let space = v.space();
    weighted_jump_sq(v, space, weight, 2 * space.degree() + 2).sqrt()
}
