use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sparse::SparseOperator;
use super::tensor::{penalty_sigma, CoefficientBounds, DiffusionTensor};
use crate::dg_space::{DgSpace, DgVector};
use crate::exec;
use crate::geometry::{dot, mat_vec, Point};
use crate::{Error, Result};

/// Symmetrisation parameter of the interior penalty family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Theta {
    /// θ = −1, SIPG.
    #[default]
    Symmetric,
    /// θ = 0, IIPG.
    Incomplete,
    /// θ = 1, NIPG.
    NonSymmetric,
}

impl Theta {
    pub fn value(self) -> f64 {
        match self {
            Theta::Symmetric => -1.0,
            Theta::Incomplete => 0.0,
            Theta::NonSymmetric => 1.0,
        }
    }

    pub fn from_value(v: i64) -> Option<Theta> {
        match v {
            -1 => Some(Theta::Symmetric),
            0 => Some(Theta::Incomplete),
            1 => Some(Theta::NonSymmetric),
            _ => None,
        }
    }
}

/// Penalty constant used for degree `p`: 40, 80, 160 for p = 1, 2, 3.
pub fn default_penalty(p: usize) -> f64 {
    match p {
        1 => 40.0,
        2 => 80.0,
        _ => 160.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    pub theta: Theta,
    pub c_pen: f64,
}

/// Matrix of the IPDG bilinear form `B(t; z, v)`: row index is the test
/// function, column index the trial function.
pub fn assemble_stiffness(space: &Arc<DgSpace>, tensor: &DiffusionTensor, t: f64, theta: Theta, c_pen: f64) -> SparseOperator {
    let bounds = CoefficientBounds::compute(space, tensor, t);
    assemble_stiffness_with(space, tensor, t, theta, c_pen, &bounds)
}

pub fn assemble_stiffness_with(
    space: &Arc<DgSpace>,
    tensor: &DiffusionTensor,
    t: f64,
    theta: Theta,
    c_pen: f64,
    bounds: &CoefficientBounds,
) -> SparseOperator {
    let mesh = space.mesh();
    let ld = space.local_dim();
    let order = 2 * space.degree() + 2;
    let etab = space.element_tab(order);
    let ftab = space.face_tab(order);
    let th = theta.value();
    let faces = mesh.faces();

    let row_blocks = exec::map_indexed(space.num_elements(), |e| {
        // Column blocks keyed by neighbour element; the diagonal block first.
        let mut blocks: Vec<(usize, Vec<f64>)> = vec![(e, vec![0.0; ld * ld])];
        {
            let diag = &mut blocks[0].1;
            for q in etab.range(e) {
                let a = tensor.eval(etab.points[q], t);
                let w = etab.weights[q];
                let g = &etab.grads[q * ld..(q + 1) * ld];
                for j in 0..ld {
                    let agj = mat_vec(&a, g[j]);
                    for i in 0..ld {
                        diag[i * ld + j] += w * dot(agj, g[i]);
                    }
                }
            }
        }
        for &f in &mesh.element_faces(e) {
            let face = &faces[f];
            let side_v = if face.adjacent[0] == e { 0 } else { 1 };
            let sigma = penalty_sigma(space, bounds, f, c_pen);
            let n = face.normal;
            let sides: &[usize] = if face.boundary { &[0] } else { &[0, 1] };
            let weight = if face.boundary { 1.0 } else { 0.5 };
            let sign = |s: usize| if s == 0 { 1.0 } else { -1.0 };
            for &side_z in sides {
                let z_elem = face.adjacent[side_z];
                let mut local = vec![0.0; ld * ld];
                for q in ftab.range(f) {
                    let x = ftab.points[q];
                    let a = tensor.eval(x, t);
                    let w = ftab.weights[q];
                    let base_v = (q * 2 + side_v) * ld;
                    let base_z = (q * 2 + side_z) * ld;
                    let (sv, sz) = (sign(side_v), sign(side_z));
                    for j in 0..ld {
                        let zj = ftab.values[base_z + j];
                        let flux_z = dot(mat_vec(&a, ftab.grads[base_z + j]), n);
                        for i in 0..ld {
                            let vi = ftab.values[base_v + i];
                            let flux_v = dot(mat_vec(&a, ftab.grads[base_v + i]), n);
                            local[i * ld + j] += w
                                * (th * weight * flux_v * sz * zj - weight * flux_z * sv * vi + sigma * sz * sv * zj * vi);
                        }
                    }
                }
                match blocks.iter_mut().find(|(c, _)| *c == z_elem) {
                    Some((_, b)) => b.iter_mut().zip(&local).for_each(|(b, l)| *b += l),
                    None => blocks.push((z_elem, local)),
                }
            }
        }
        blocks.sort_by_key(|(c, _)| *c);
        (0..ld)
            .map(|i| {
                blocks
                    .iter()
                    .flat_map(|(c, b)| (0..ld).map(move |j| (c * ld + j, b[i * ld + j])))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    });
    let rows: Vec<Vec<(usize, f64)>> = row_blocks.into_iter().flatten().collect();
    SparseOperator::from_rows(rows, theta == Theta::Symmetric)
}

/// Mass matrix; the identity under the orthonormal basis.
pub fn assemble_mass(space: &DgSpace) -> SparseOperator {
    SparseOperator::identity(space.total_dim())
}

/// Load vector `⟨f(·, t), φ_i⟩`; identical to the L2 projection coefficients.
pub fn assemble_load<F>(space: &Arc<DgSpace>, f: F, t: f64) -> DgVector
where
    F: Fn(Point, f64) -> f64 + Sync,
{
    DgVector::l2_project(space, f, t)
}

/// `A Z = M⁻¹ B Z`, with `M = I`.
pub fn discrete_operator_apply(space: &Arc<DgSpace>, stiffness: &SparseOperator, z: &DgVector) -> Result<DgVector> {
    if stiffness.dim() != space.total_dim() || z.len() != space.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: space.total_dim(),
            got: if stiffness.dim() != space.total_dim() { stiffness.dim() } else { z.len() },
        });
    }
    DgVector::from_coefficients(space, stiffness.apply_unchecked(z.coefficients()))
}

/// `AⁿUⁿ` recovered from the Euler scheme: `Πfⁿ − (Uⁿ − IⁿUⁿ⁻¹)/τ`.
pub fn scheme_operator_apply(projected_load: &DgVector, u: &DgVector, transferred_prev: &DgVector, tau: f64) -> Result<DgVector> {
    let increment = u.sub(transferred_prev)?;
    projected_load.axpy(-1.0 / tau, &increment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, DomainTag};

    fn space(n: usize, p: usize) -> Arc<DgSpace> {
        DgSpace::new(Arc::new(build_structured_mesh(DomainTag::UnitSquare, n)), p).unwrap()
    }

    #[test]
    fn sipg_is_symmetric_and_others_are_not() {
        let s = space(2, 2);
        let tensor = DiffusionTensor::from_fn(|x, _| [[1.0 + x[0], 0.2], [0.2, 2.0 + x[1] * x[1]]], true);
        let b = assemble_stiffness(&s, &tensor, 0.0, Theta::Symmetric, 80.0);
        assert!(b.is_symmetric());
        assert!(b.asymmetry() < 1e-12);
        let n = assemble_stiffness(&s, &tensor, 0.0, Theta::NonSymmetric, 80.0);
        assert!(!n.is_symmetric());
        assert!(n.asymmetry() > 1e-3);
        // The volume and penalty parts coincide: B_θ + B_θᵀ is the same up to the flux terms.
        let i = assemble_stiffness(&s, &tensor, 0.0, Theta::Incomplete, 80.0);
        for r in 0..s.total_dim() {
            for c in 0..s.total_dim() {
                let mid = i.get(r, c);
                let avg = 0.5 * (b.get(r, c) + n.get(r, c));
                assert!((mid - avg).abs() < 1e-10 * (1.0 + mid.abs()));
            }
        }
    }

    #[test]
    fn mass_is_identity() {
        let s = space(2, 1);
        let m = assemble_mass(&s);
        assert_eq!(m, SparseOperator::identity(s.total_dim()));
    }

    #[test]
    fn load_of_basis_function_is_unit_vector() {
        let s = space(2, 2);
        let k = 17;
        let e = k / s.local_dim();
        let i = k % s.local_dim();
        let f = |x: Point, _t: f64| {
            if s.mesh().locate(x) == Some(e) {
                let mut vals = vec![0.0; s.local_dim()];
                s.basis_values(e, x, &mut vals);
                vals[i]
            } else {
                0.0
            }
        };
        let load = assemble_load(&s, f, 0.0);
        for (j, v) in load.coefficients().iter().enumerate() {
            let expected = if j == k { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12, "{j}: {v}");
        }
        assert!(assemble_load(&s, |_, _| 0.0, 0.0).coefficients().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_maps_to_zero() {
        let s = space(2, 1);
        let b = assemble_stiffness(&s, &DiffusionTensor::identity(), 0.0, Theta::Symmetric, 40.0);
        let z = discrete_operator_apply(&s, &b, &DgVector::zeros(&s)).unwrap();
        assert!(z.coefficients().iter().all(|&v| v == 0.0));
        let other = space(1, 1);
        assert!(discrete_operator_apply(&other, &b, &DgVector::zeros(&other)).is_err());
    }

    #[test]
    fn defaults_by_degree() {
        assert_eq!(default_penalty(1), 40.0);
        assert_eq!(default_penalty(2), 80.0);
        assert_eq!(default_penalty(3), 160.0);
        assert_eq!(Theta::from_value(-1), Some(Theta::Symmetric));
        assert_eq!(Theta::from_value(2), None);
    }

    #[test]
    fn conforming_energy_matches_gradient_integral() {
        let s = space(2, 3);
        let hat = |x: Point, _t: f64| x[0] * (1.0 - x[0]) * (1.0 - (2.0 * x[1] - 1.0).abs());
        let v = DgVector::l2_project(&s, hat, 0.0);
        let exact = 1.0 / 9.0 + 4.0 / 30.0;
        for theta in [Theta::Symmetric, Theta::Incomplete, Theta::NonSymmetric] {
            let b = assemble_stiffness(&s, &DiffusionTensor::identity(), 0.0, theta, 160.0);
            let bv = b.apply(v.coefficients()).unwrap();
            let e: f64 = bv.iter().zip(v.coefficients()).map(|(a, b)| a * b).sum();
            assert!((e - exact).abs() < 1e-10, "{theta:?}: {e}");
        }
    }

    #[test]
    fn sipg_is_coercive_and_scales_like_inverse_h_squared() {
        let mut top = Vec::new();
        for n in [2, 4] {
            let s = space(n, 1);
            let b = assemble_stiffness(&s, &DiffusionTensor::identity(), 0.0, Theta::Symmetric, 40.0);
            let dim = s.total_dim();
            let m = nalgebra::DMatrix::from_row_slice(dim, dim, &b.to_dense().concat());
            let eig = m.symmetric_eigenvalues();
            assert!(eig.min() > 0.0);
            top.push(eig.max());
        }
        let ratio = top[1] / top[0];
        assert!((3.0..5.0).contains(&ratio), "{ratio}");
    }
}
