use crate::dg_space::{DgSpace, DgVector};
use crate::exec;
use crate::geometry::{dot, mat_vec, Point};
use crate::ipdg::weighted_jump_sq;
use crate::ipdg::{penalty_sigma, CoefficientBounds, DiffusionTensor};

use super::Constants;

/// Right-hand side of the elliptic problem whose discrete solution is estimated.
#[derive(Clone, Copy)]
pub enum EllipticSource<'a> {
    /// A discrete function in the same space as the estimated solution.
    Discrete(&'a DgVector),
    Field(&'a (dyn Fn(Point) -> f64 + Sync)),
}

/// The three components of the residual estimator, before constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticTerms {
    /// `‖(h/√a♭)(g + ∇·(a∇Z))‖`
    pub residual: f64,
    /// `‖√(h/a♭) ⟦a∇Z⟧‖` over interior faces.
    pub flux: f64,
    /// `‖√σ ⟦Z⟧‖` over all faces.
    pub penalty: f64,
    pub k_a: f64,
}

impl EllipticTerms {
    pub fn total(&self, constants: &Constants) -> f64 {
        constants.c_global * self.k_a * (self.residual + self.flux + self.penalty)
    }
}

/// Residual-based energy estimator `E(Z, a(t), g, T)` for the IPDG solution of `−∇·(a∇z) = g`.
pub fn elliptic_estimator(
    z: &DgVector,
    tensor: &DiffusionTensor,
    t: f64,
    g: EllipticSource<'_>,
    c_pen: f64,
    constants: &Constants,
) -> f64 {
    let bounds = CoefficientBounds::compute(z.space(), tensor, t);
    elliptic_terms(z, tensor, &bounds, g, c_pen).total(constants)
}

pub fn elliptic_terms(
    z: &DgVector,
    tensor: &DiffusionTensor,
    bounds: &CoefficientBounds,
    g: EllipticSource<'_>,
    c_pen: f64,
) -> EllipticTerms {
    let space = z.space();
    EllipticTerms {
        residual: residual_term(z, space, tensor, bounds, g).sqrt(),
        flux: flux_term(z, space, tensor, bounds).sqrt(),
        penalty: weighted_jump_sq(z, space, |f| penalty_sigma(space, bounds, f, c_pen), 2 * space.degree() + 2).sqrt(),
        k_a: bounds.k_a,
    }
}

fn residual_term(
    z: &DgVector,
    space: &DgSpace,
    tensor: &DiffusionTensor,
    bounds: &CoefficientBounds,
    g: EllipticSource<'_>,
) -> f64 {
    let ld = space.local_dim();
    let tab = space.element_tab(2 * space.degree() + 4);
    let t = bounds.time;
    let mesh = space.mesh();
    exec::sum_indexed(space.num_elements(), |e| {
        let c = z.element_coefficients(e);
        let gc = match g {
            EllipticSource::Discrete(v) => Some(v.element_coefficients(e)),
            EllipticSource::Field(_) => None,
        };
        let mut sum = 0.0;
        for q in tab.range(e) {
            let x = tab.points[q];
            let base = q * ld;
            let mut grad = [0.0; 2];
            let mut hess = [0.0; 3];
            for (i, ci) in c.iter().enumerate() {
                let gr = tab.grads[base + i];
                let h = tab.hessians[base + i];
                grad[0] += ci * gr[0];
                grad[1] += ci * gr[1];
                hess[0] += ci * h[0];
                hess[1] += ci * h[1];
                hess[2] += ci * h[2];
            }
            let a = tensor.eval(x, t);
            let div_a = tensor.divergence(x, t);
            let div = a[0][0] * hess[0] + (a[0][1] + a[1][0]) * hess[1] + a[1][1] * hess[2] + dot(div_a, grad);
            let gv = match (g, gc) {
                (EllipticSource::Discrete(_), Some(gc)) => gc.iter().zip(&tab.values[base..base + ld]).map(|(a, b)| a * b).sum(),
                (EllipticSource::Field(f), _) => f(x),
                _ => unreachable!(),
            };
            let r = gv + div;
            sum += tab.weights[q] * r * r;
        }
        let h = mesh.diameter(e);
        h * h / bounds.element_flat[e] * sum
    })
}

fn flux_term(z: &DgVector, space: &DgSpace, tensor: &DiffusionTensor, bounds: &CoefficientBounds) -> f64 {
    let ld = space.local_dim();
    let ftab = space.face_tab(2 * space.degree() + 2);
    let faces = space.mesh().faces();
    let t = bounds.time;
    exec::sum_indexed(faces.len(), |f| {
        let face = &faces[f];
        if face.boundary {
            return 0.0;
        }
        let cp = z.element_coefficients(face.adjacent[0]);
        let cm = z.element_coefficients(face.adjacent[1]);
        let mut sum = 0.0;
        for q in ftab.range(f) {
            let mut gp = [0.0; 2];
            let mut gm = [0.0; 2];
            for i in 0..ld {
                let a = ftab.grads[(q * 2) * ld + i];
                let b = ftab.grads[(q * 2 + 1) * ld + i];
                gp[0] += cp[i] * a[0];
                gp[1] += cp[i] * a[1];
                gm[0] += cm[i] * b[0];
                gm[1] += cm[i] * b[1];
            }
            let a = tensor.eval(ftab.points[q], t);
            let j = dot(mat_vec(&a, [gp[0] - gm[0], gp[1] - gm[1]]), face.normal);
            sum += ftab.weights[q] * j * j;
        }
        face.h_face / bounds.face_flat[f] * sum
    })
}
