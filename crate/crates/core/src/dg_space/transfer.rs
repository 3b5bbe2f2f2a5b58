//! Data transfer between DG spaces of one refinement hierarchy.

use std::sync::Arc;

use super::{DgSpace, DgVector};
use crate::exec;
use crate::mesh::{common_refinement, Mesh};
use crate::quadrature::triangle_rule;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransferKind {
    /// Orthogonal L2 projection onto the target space.
    #[default]
    L2Projection,
    /// Restriction of the source function to a refined target mesh.
    Injection,
}

fn same_space(a: &Arc<DgSpace>, b: &Arc<DgSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Integrate `from` against the basis of `to_space` over the triangles of
/// `carrier`, a mesh refining both.
fn project_over(from: &DgVector, to_space: &Arc<DgSpace>, carrier: &Mesh) -> Result<DgVector> {
    let from_space = from.space();
    let from_mesh = from_space.mesh();
    let to_mesh = to_space.mesh();
    let n = carrier.num_triangles();
    let mut from_parent = Vec::with_capacity(n);
    let mut to_parent = Vec::with_capacity(n);
    for t in 0..n {
        from_parent.push(carrier.ancestor_in(from_mesh, t).ok_or(Error::IncompatibleHierarchy)?);
        to_parent.push(carrier.ancestor_in(to_mesh, t).ok_or(Error::IncompatibleHierarchy)?);
    }
    // Carrier triangles are depth-first ordered, so the children of each target
    // element form one contiguous run.
    let mut starts = vec![usize::MAX; to_space.num_elements() + 1];
    for (t, &e) in to_parent.iter().enumerate().rev() {
        starts[e] = t;
    }
    starts[to_space.num_elements()] = n;
    for e in (0..to_space.num_elements()).rev() {
        if starts[e] == usize::MAX {
            starts[e] = starts[e + 1];
        }
    }

    let rule = triangle_rule(from_space.degree() + to_space.degree())?;
    let ld_to = to_space.local_dim();
    let blocks = exec::map_indexed(to_space.num_elements(), |e| {
        let mut local = vec![0.0; ld_to];
        let mut vals = vec![0.0; ld_to];
        for t in starts[e]..starts[e + 1] {
            debug_assert_eq!(to_parent[t], e);
            let [a, b, c] = carrier.corners(t);
            let jac = 2.0 * carrier.area(t);
            for (r, w) in rule.iter() {
                let x = [
                    a[0] + r[0] * (b[0] - a[0]) + r[1] * (c[0] - a[0]),
                    a[1] + r[0] * (b[1] - a[1]) + r[1] * (c[1] - a[1]),
                ];
                let u = from.evaluate_on(from_parent[t], x);
                to_space.basis_values(e, x, &mut vals);
                for (l, v) in local.iter_mut().zip(&vals) {
                    *l += w * jac * u * v;
                }
            }
        }
        local
    });
    DgVector::from_coefficients(to_space, blocks.concat())
}

/// L2 projection of `from` onto `to_space`, integrated exactly over the
/// coarsest common refinement of the two meshes. Lossless whenever the target
/// mesh refines the source mesh.
pub fn transfer(from: &DgVector, to_space: &Arc<DgSpace>) -> Result<DgVector> {
    if same_space(from.space(), to_space) {
        return DgVector::from_coefficients(to_space, from.coefficients().to_vec());
    }
    let carrier = common_refinement(from.space().mesh(), to_space.mesh())?;
    project_over(from, to_space, &carrier)
}

/// Injection of `from` into a space on a refinement of its mesh. For nested
/// meshes this coincides with [`transfer`].
pub fn inject(from: &DgVector, to_space: &Arc<DgSpace>) -> Result<DgVector> {
    if same_space(from.space(), to_space) {
        return DgVector::from_coefficients(to_space, from.coefficients().to_vec());
    }
    if !to_space.mesh().refines(from.space().mesh()) || to_space.degree() < from.space().degree() {
        return Err(Error::IncompatibleHierarchy);
    }
    project_over(from, to_space, to_space.mesh())
}
