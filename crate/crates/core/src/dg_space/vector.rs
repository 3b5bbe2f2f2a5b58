use std::sync::Arc;

use super::DgSpace;
use crate::exec;
use crate::geometry::Point;
use crate::mesh::FaceRecord;
use crate::{Error, Result};

/// Coefficients of a discrete function in a [`DgSpace`].
#[derive(Debug, Clone)]
pub struct DgVector {
    space: Arc<DgSpace>,
    coeffs: Vec<f64>,
}

impl DgVector {
    pub fn zeros(space: &Arc<DgSpace>) -> Self {
        DgVector {
            space: space.clone(),
            coeffs: vec![0.0; space.total_dim()],
        }
    }

    pub fn from_coefficients(space: &Arc<DgSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                got: coeffs.len(),
            });
        }
        Ok(DgVector {
            space: space.clone(),
            coeffs,
        })
    }

    /// Orthogonal L2 projection of `f(·, t)`, integrated with a rule of order `2p + 4`.
    pub fn l2_project<F>(space: &Arc<DgSpace>, f: F, t: f64) -> Self
    where
        F: Fn(Point, f64) -> f64 + Sync,
    {
        Self::l2_project_with_order(space, f, t, 2 * space.degree() + 4)
    }

    pub fn l2_project_with_order<F>(space: &Arc<DgSpace>, f: F, t: f64, order: usize) -> Self
    where
        F: Fn(Point, f64) -> f64 + Sync,
    {
        let tab = space.element_tab(order);
        let ld = space.local_dim();
        let blocks = exec::map_indexed(space.num_elements(), |e| {
            let mut local = vec![0.0; ld];
            for q in tab.range(e) {
                let wf = tab.weights[q] * f(tab.points[q], t);
                for (i, l) in local.iter_mut().enumerate() {
                    *l += wf * tab.values[q * ld + i];
                }
            }
            local
        });
        DgVector {
            space: space.clone(),
            coeffs: blocks.concat(),
        }
    }

    pub fn space(&self) -> &Arc<DgSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn element_coefficients(&self, e: usize) -> &[f64] {
        &self.coeffs[self.space.element_dofs(e)]
    }

    fn check_same_space(&self, other: &DgVector) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            })
        }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &DgVector) -> Result<DgVector> {
        self.check_same_space(other)?;
        Ok(DgVector {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + alpha * b).collect(),
        })
    }

    pub fn sub(&self, other: &DgVector) -> Result<DgVector> {
        self.axpy(-1.0, other)
    }

    pub fn scaled(&self, c: f64) -> DgVector {
        DgVector {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|a| c * a).collect(),
        }
    }

    /// L2 norm; the coefficient Euclidean norm under the orthonormal basis.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn evaluate_on(&self, e: usize, x: Point) -> f64 {
        let mut vals = vec![0.0; self.space.local_dim()];
        self.space.basis_values(e, x, &mut vals);
        vals.iter().zip(self.element_coefficients(e)).map(|(v, c)| v * c).sum()
    }

    pub fn gradient_on(&self, e: usize, x: Point) -> Point {
        let be = self.space.basis_eval(e, x);
        let c = self.element_coefficients(e);
        let mut g = [0.0; 2];
        for (gi, ci) in be.grads.iter().zip(c) {
            g[0] += ci * gi[0];
            g[1] += ci * gi[1];
        }
        g
    }

    /// Value at `x`; on element boundaries the lowest-index element owns the point.
    pub fn evaluate(&self, x: Point) -> Result<f64> {
        let e = self.owner(x)?;
        Ok(self.evaluate_on(e, x))
    }

    /// Broken gradient at `x`, with the same ownership rule as [`DgVector::evaluate`].
    pub fn evaluate_gradient(&self, x: Point) -> Result<Point> {
        let e = self.owner(x)?;
        Ok(self.gradient_on(e, x))
    }

    fn owner(&self, x: Point) -> Result<usize> {
        if !self.space.mesh().domain().contains(x, 1e-14) {
            return Err(Error::PointOutsideDomain(x[0], x[1]));
        }
        self.space.mesh().locate(x).ok_or(Error::PointOutsideDomain(x[0], x[1]))
    }
}

/// One-sided traces of a discrete function on a face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceTrace {
    pub value_plus: f64,
    pub value_minus: Option<f64>,
    pub grad_plus: Point,
    pub grad_minus: Option<Point>,
}

pub fn face_traces(v: &DgVector, face: &FaceRecord, x: Point) -> FaceTrace {
    let plus = face.adjacent[0];
    let minus = (!face.boundary).then_some(face.adjacent[1]);
    FaceTrace {
        value_plus: v.evaluate_on(plus, x),
        value_minus: minus.map(|e| v.evaluate_on(e, x)),
        grad_plus: v.gradient_on(plus, x),
        grad_minus: minus.map(|e| v.gradient_on(e, x)),
    }
}

/// Jump `q⁺n⁺ + q⁻n⁻` (one-sided `q⁺n⁺` on the boundary) and mean of `v` at
/// the face point `x`.
pub fn jump_and_mean(v: &DgVector, face: &FaceRecord, x: Point) -> (Point, f64) {
    let tr = face_traces(v, face, x);
    let n = face.normal;
    match tr.value_minus {
        Some(vm) => {
            let d = tr.value_plus - vm;
            ([d * n[0], d * n[1]], 0.5 * (tr.value_plus + vm))
        }
        None => ([tr.value_plus * n[0], tr.value_plus * n[1]], tr.value_plus),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, DomainTag};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(n: usize, p: usize) -> Arc<DgSpace> {
        DgSpace::new(Arc::new(build_structured_mesh(DomainTag::UnitSquare, n)), p).unwrap()
    }

    fn random_vector(s: &Arc<DgSpace>, seed: u64) -> DgVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..s.total_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        DgVector::from_coefficients(s, c).unwrap()
    }

    #[test]
    fn projection_is_idempotent() {
        let s = space(2, 2);
        let v = random_vector(&s, 1);
        let w = DgVector::l2_project(&s, |x, _| v.evaluate(x).unwrap_or(0.0), 0.0);
        // Use the element-local evaluation to avoid face ownership ambiguity.
        let w2 = {
            let tab = s.element_tab(6);
            let ld = s.local_dim();
            let mut c = vec![0.0; s.total_dim()];
            for e in 0..s.num_elements() {
                for q in tab.range(e) {
                    let val = v.evaluate_on(e, tab.points[q]);
                    for i in 0..ld {
                        c[e * ld + i] += tab.weights[q] * val * tab.values[q * ld + i];
                    }
                }
            }
            DgVector::from_coefficients(&s, c).unwrap()
        };
        for (a, b) in w2.coefficients().iter().zip(v.coefficients()) {
            assert!((a - b).abs() < 1e-10);
        }
        // Interior quadrature points never sit on faces, so the global route agrees too.
        for (a, b) in w.coefficients().iter().zip(v.coefficients()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn constants_are_exact() {
        let s = space(3, 1);
        let one = DgVector::l2_project(&s, |_, _| 1.0, 0.0);
        let tab = s.element_tab(2);
        let integral: f64 = (0..s.num_elements())
            .flat_map(|e| tab.range(e).map(move |q| (e, q)))
            .map(|(e, q)| tab.weights[q] * one.evaluate_on(e, tab.points[q]))
            .sum();
        assert!((integral - 1.0).abs() < 1e-13);
        assert!((one.evaluate([0.37, 0.61]).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn affine_gradient() {
        let s = space(2, 1);
        let v = DgVector::l2_project(&s, |x, _| x[0] + x[1], 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let g = v.evaluate_gradient(x).unwrap();
            assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
            assert!((v.evaluate(x).unwrap() - x[0] - x[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_vector_and_outside_points() {
        let s = space(1, 2);
        let z = DgVector::zeros(&s);
        assert_eq!(z.evaluate([0.3, 0.3]).unwrap(), 0.0);
        assert!(matches!(z.evaluate([1.5, 0.3]), Err(Error::PointOutsideDomain(..))));
    }

    #[test]
    fn continuous_function_has_no_interior_jump() {
        let s = space(2, 2);
        let v = DgVector::l2_project(&s, |x, _| x[0] * x[1] + 0.5 * x[0], 0.0);
        for f in s.mesh().faces().iter().filter(|f| !f.boundary) {
            let [a, b] = f.endpoints.map(|i| s.mesh().vertices()[i]);
            let x = crate::geometry::midpoint(a, b);
            let (jump, _) = jump_and_mean(&v, f, x);
            assert!(jump[0].abs() < 1e-12 && jump[1].abs() < 1e-12);
        }
    }

    #[test]
    fn indicator_jump_has_unit_length() {
        let s = space(2, 1);
        let target = 5;
        let v = DgVector::l2_project(&s, |_, _| 0.0, 0.0);
        let mut c = v.into_coefficients();
        // The first basis function is the normalised constant 1/sqrt(|T|).
        let area = s.mesh().area(target);
        c[s.dof_offset(target)] = area.sqrt();
        let v = DgVector::from_coefficients(&s, c).unwrap();
        for &f in &s.mesh().element_faces(target) {
            let face = &s.mesh().faces()[f];
            let [a, b] = face.endpoints.map(|i| s.mesh().vertices()[i]);
            let (jump, _) = jump_and_mean(&v, face, crate::geometry::midpoint(a, b));
            assert!((crate::geometry::norm(jump) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_contracts_l2_norm() {
        let s = space(2, 1);
        let f = |x: Point, _t: f64| (5.0 * x[0]).sin() * (3.0 * x[1]).exp();
        let pf = DgVector::l2_project(&s, f, 0.0);
        let tab = s.element_tab(12);
        let norm_f: f64 = (0..tab.points.len()).map(|q| tab.weights[q] * f(tab.points[q], 0.0).powi(2)).sum::<f64>().sqrt();
        assert!(pf.l2_norm() <= norm_f);
    }
}
