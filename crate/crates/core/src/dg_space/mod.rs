//! Discontinuous piecewise-polynomial spaces with an elementwise
//! L2-orthonormal modal basis.
//!
//! On each element the basis is obtained by Gram–Schmidt orthonormalisation of
//! the monomials in scaled local coordinates `(x - c) / h`, using a quadrature
//! rule exact for their products. The global mass matrix is therefore the
//! identity, and the L2 projection reduces to inner products with the basis.

mod transfer;
mod vector;

use std::ops::Range;
use std::sync::{Arc, OnceLock};

pub use transfer::{inject, transfer, TransferKind};
pub use vector::{face_traces, jump_and_mean, DgVector, FaceTrace};

use crate::exec;
use crate::geometry::{sub, Point};
use crate::mesh::Mesh;
use crate::quadrature::{edge_rule, triangle_rule, MAX_DEGREE};
use crate::{Error, Result};

pub const MAX_POLY_DEGREE: usize = 3;

/// Monomial exponents ordered by total degree.
fn exponents(p: usize) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for total in 0..=p as i32 {
        for b in 0..=total {
            out.push((total - b, b));
        }
    }
    out
}

#[derive(Debug, Clone)]
struct ElementFrame {
    center: Point,
    scale: f64,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coeffs: Vec<f64>,
}

/// Basis values, gradients and Hessians `(xx, xy, yy)` at one point.
#[derive(Debug, Clone, Default)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub grads: Vec<Point>,
    pub hessians: Vec<[f64; 3]>,
}

/// Element quadrature points with physical weights and tabulated basis data.
/// Entry `(e, q)` lives at index `e * n_q + q`; basis data at `(e * n_q + q) * local_dim + i`.
#[derive(Debug)]
pub struct ElementTab {
    pub n_q: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
    pub grads: Vec<Point>,
    pub hessians: Vec<[f64; 3]>,
}

impl ElementTab {
    #[inline]
    pub fn range(&self, e: usize) -> Range<usize> {
        e * self.n_q..(e + 1) * self.n_q
    }
}

/// Face quadrature with basis traces from both sides.
/// Trace data for face `f`, point `q`, side `s` lives at `((f * n_q + q) * 2 + s) * local_dim + i`;
/// the second side of a boundary face is zero.
#[derive(Debug)]
pub struct FaceTab {
    pub n_q: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
    pub grads: Vec<Point>,
}

impl FaceTab {
    #[inline]
    pub fn range(&self, f: usize) -> Range<usize> {
        f * self.n_q..(f + 1) * self.n_q
    }
}

#[derive(Debug)]
pub struct DgSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    local_dim: usize,
    exponents: Vec<(i32, i32)>,
    frames: Vec<ElementFrame>,
    element_tabs: [OnceLock<ElementTab>; MAX_DEGREE + 1],
    face_tabs: [OnceLock<FaceTab>; MAX_DEGREE + 1],
}

impl PartialEq for DgSpace {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && (Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh)
    }
}

impl DgSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Arc<Self>> {
        if !(1..=MAX_POLY_DEGREE).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        let exps = exponents(degree);
        let local_dim = exps.len();
        let rule = triangle_rule(2 * degree)?;
        let frames = exec::map_indexed(mesh.num_triangles(), |e| {
            let [a, b, c] = mesh.corners(e);
            let center = mesh.centroid(e);
            let scale = mesh.diameter(e);
            let jac = 2.0 * mesh.area(e);
            let pts: Vec<(Point, f64)> = rule
                .iter()
                .map(|(r, w)| {
                    let x = [
                        a[0] + r[0] * (b[0] - a[0]) + r[1] * (c[0] - a[0]),
                        a[1] + r[0] * (b[1] - a[1]) + r[1] * (c[1] - a[1]),
                    ];
                    (x, w * jac)
                })
                .collect();
            // Monomial values at the quadrature points, one row per monomial.
            let mono: Vec<Vec<f64>> = exps
                .iter()
                .map(|&(i, j)| {
                    pts.iter()
                        .map(|(x, _)| {
                            let d = sub(*x, center);
                            (d[0] / scale).powi(i) * (d[1] / scale).powi(j)
                        })
                        .collect()
                })
                .collect();
            let inner = |u: &[f64], v: &[f64]| -> f64 { pts.iter().zip(u.iter().zip(v)).map(|((_, w), (a, b))| w * a * b).sum() };
            let mut basis_vals: Vec<Vec<f64>> = Vec::with_capacity(local_dim);
            let mut coeffs = vec![0.0; local_dim * local_dim];
            for k in 0..local_dim {
                let mut vals = mono[k].clone();
                let mut row = vec![0.0; local_dim];
                row[k] = 1.0;
                // Two passes of modified Gram–Schmidt.
                for _ in 0..2 {
                    for (prev, prev_vals) in basis_vals.iter().enumerate() {
                        let proj = inner(&vals, prev_vals);
                        for (v, pv) in vals.iter_mut().zip(prev_vals) {
                            *v -= proj * pv;
                        }
                        for m in 0..local_dim {
                            row[m] -= proj * coeffs[prev * local_dim + m];
                        }
                    }
                }
                let nrm = inner(&vals, &vals).sqrt();
                for v in vals.iter_mut() {
                    *v /= nrm;
                }
                for (m, r) in row.iter().enumerate() {
                    coeffs[k * local_dim + m] = r / nrm;
                }
                basis_vals.push(vals);
            }
            ElementFrame { center, scale, coeffs }
        });
        Ok(Arc::new(DgSpace {
            mesh,
            degree,
            local_dim,
            exponents: exps,
            frames,
            element_tabs: [const { OnceLock::new() }; MAX_DEGREE + 1],
            face_tabs: [const { OnceLock::new() }; MAX_DEGREE + 1],
        }))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_triangles()
    }

    pub fn total_dim(&self) -> usize {
        self.local_dim * self.num_elements()
    }

    pub fn dof_offset(&self, e: usize) -> usize {
        e * self.local_dim
    }

    pub fn element_dofs(&self, e: usize) -> Range<usize> {
        self.dof_offset(e)..self.dof_offset(e) + self.local_dim
    }

    /// Monomial coefficients of basis function `i` on element `e`, in the scaled
    /// local coordinates returned by [`DgSpace::local_frame`].
    pub fn basis_coefficients(&self, e: usize, i: usize) -> &[f64] {
        let ld = self.local_dim;
        &self.frames[e].coeffs[i * ld..(i + 1) * ld]
    }

    pub fn monomial_exponents(&self) -> &[(i32, i32)] {
        &self.exponents
    }

    /// Centre and length scale of the local coordinates on element `e`.
    pub fn local_frame(&self, e: usize) -> (Point, f64) {
        (self.frames[e].center, self.frames[e].scale)
    }

    /// Basis values on element `e` at the physical point `x` (no containment check).
    pub fn basis_values(&self, e: usize, x: Point, out: &mut [f64]) {
        let frame = &self.frames[e];
        let d = sub(x, frame.center);
        let (u, v) = (d[0] / frame.scale, d[1] / frame.scale);
        let ld = self.local_dim;
        let mono: Vec<f64> = self.exponents.iter().map(|&(i, j)| u.powi(i) * v.powi(j)).collect();
        for (k, o) in out.iter_mut().enumerate().take(ld) {
            *o = frame.coeffs[k * ld..(k + 1) * ld].iter().zip(&mono).map(|(c, m)| c * m).sum();
        }
    }

    /// Values, gradients and Hessians of the basis on element `e` at `x`.
    pub fn basis_eval(&self, e: usize, x: Point) -> BasisEval {
        let frame = &self.frames[e];
        let s = frame.scale;
        let d = sub(x, frame.center);
        let (u, v) = (d[0] / s, d[1] / s);
        let pw = |base: f64, k: i32| if k < 0 { 0.0 } else { base.powi(k) };
        let ld = self.local_dim;
        let mut m = vec![0.0; ld];
        let mut mx = vec![0.0; ld];
        let mut my = vec![0.0; ld];
        let mut mxx = vec![0.0; ld];
        let mut mxy = vec![0.0; ld];
        let mut myy = vec![0.0; ld];
        for (k, &(i, j)) in self.exponents.iter().enumerate() {
            let (fi, fj) = (i as f64, j as f64);
            m[k] = pw(u, i) * pw(v, j);
            mx[k] = fi * pw(u, i - 1) * pw(v, j) / s;
            my[k] = fj * pw(u, i) * pw(v, j - 1) / s;
            mxx[k] = fi * (fi - 1.0) * pw(u, i - 2) * pw(v, j) / (s * s);
            mxy[k] = fi * fj * pw(u, i - 1) * pw(v, j - 1) / (s * s);
            myy[k] = fj * (fj - 1.0) * pw(u, i) * pw(v, j - 2) / (s * s);
        }
        let mut out = BasisEval {
            values: vec![0.0; ld],
            grads: vec![[0.0; 2]; ld],
            hessians: vec![[0.0; 3]; ld],
        };
        for b in 0..ld {
            let c = &frame.coeffs[b * ld..(b + 1) * ld];
            let comb = |arr: &[f64]| c.iter().zip(arr).map(|(c, a)| c * a).sum::<f64>();
            out.values[b] = comb(&m);
            out.grads[b] = [comb(&mx), comb(&my)];
            out.hessians[b] = [comb(&mxx), comb(&mxy), comb(&myy)];
        }
        out
    }

    /// Element quadrature exact to `order`, tabulated once and cached.
    pub fn element_tab(&self, order: usize) -> &ElementTab {
        let order = order.min(MAX_DEGREE);
        self.element_tabs[order].get_or_init(|| self.build_element_tab(order))
    }

    fn build_element_tab(&self, order: usize) -> ElementTab {
        let rule = triangle_rule(order).expect("order clamped to supported range");
        let n_q = rule.len();
        let per_element = exec::map_indexed(self.num_elements(), |e| {
            let [a, b, c] = self.mesh.corners(e);
            let jac = 2.0 * self.mesh.area(e);
            rule.iter()
                .map(|(r, w)| {
                    let x = [
                        a[0] + r[0] * (b[0] - a[0]) + r[1] * (c[0] - a[0]),
                        a[1] + r[0] * (b[1] - a[1]) + r[1] * (c[1] - a[1]),
                    ];
                    (x, w * jac, self.basis_eval(e, x))
                })
                .collect::<Vec<_>>()
        });
        let ld = self.local_dim;
        let total = self.num_elements() * n_q;
        let mut tab = ElementTab {
            n_q,
            points: Vec::with_capacity(total),
            weights: Vec::with_capacity(total),
            values: Vec::with_capacity(total * ld),
            grads: Vec::with_capacity(total * ld),
            hessians: Vec::with_capacity(total * ld),
        };
        for (x, w, be) in per_element.into_iter().flatten() {
            tab.points.push(x);
            tab.weights.push(w);
            tab.values.extend_from_slice(&be.values);
            tab.grads.extend_from_slice(&be.grads);
            tab.hessians.extend_from_slice(&be.hessians);
        }
        tab
    }

    /// Face quadrature exact to `order`, tabulated once and cached.
    pub fn face_tab(&self, order: usize) -> &FaceTab {
        let order = order.min(MAX_DEGREE);
        self.face_tabs[order].get_or_init(|| self.build_face_tab(order))
    }

    fn build_face_tab(&self, order: usize) -> FaceTab {
        let rule = edge_rule(order).expect("order clamped to supported range");
        let n_q = rule.len();
        let ld = self.local_dim;
        let faces = self.mesh.faces();
        let per_face = exec::map_indexed(faces.len(), |f| {
            let face = &faces[f];
            let [a, b] = face.endpoints.map(|v| self.mesh.vertices()[v]);
            rule.iter()
                .map(|(s, w)| {
                    let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                    let plus = self.basis_eval(face.adjacent[0], x);
                    let minus = if face.boundary {
                        None
                    } else {
                        Some(self.basis_eval(face.adjacent[1], x))
                    };
                    (x, w * face.length, plus, minus)
                })
                .collect::<Vec<_>>()
        });
        let total = faces.len() * n_q;
        let mut tab = FaceTab {
            n_q,
            points: Vec::with_capacity(total),
            weights: Vec::with_capacity(total),
            values: Vec::with_capacity(2 * total * ld),
            grads: Vec::with_capacity(2 * total * ld),
        };
        for (x, w, plus, minus) in per_face.into_iter().flatten() {
            tab.points.push(x);
            tab.weights.push(w);
            tab.values.extend_from_slice(&plus.values);
            tab.grads.extend_from_slice(&plus.grads);
            match minus {
                Some(m) => {
                    tab.values.extend_from_slice(&m.values);
                    tab.grads.extend_from_slice(&m.grads);
                }
                None => {
                    tab.values.extend(std::iter::repeat_n(0.0, ld));
                    tab.grads.extend(std::iter::repeat_n([0.0; 2], ld));
                }
            }
        }
        tab
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, DomainTag};

    fn space(n: usize, p: usize) -> Arc<DgSpace> {
        DgSpace::new(Arc::new(build_structured_mesh(DomainTag::UnitSquare, n)), p).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(space(1, 1).total_dim(), 12);
        assert_eq!(space(2, 2).total_dim(), 96);
        assert_eq!(space(1, 3).local_dim(), 10);
    }

    #[test]
    fn unsupported_degree() {
        let mesh = Arc::new(build_structured_mesh(DomainTag::UnitSquare, 1));
        assert!(matches!(DgSpace::new(mesh.clone(), 0), Err(Error::UnsupportedDegree(0))));
        assert!(matches!(DgSpace::new(mesh, 4), Err(Error::UnsupportedDegree(4))));
    }

    #[test]
    fn gram_matrix_is_identity() {
        for p in 1..=3 {
            let mesh = Arc::new(build_structured_mesh(DomainTag::LShape, 2).refine_red(&[0, 13]));
            let s = DgSpace::new(mesh, p).unwrap();
            // Independent check with a higher-order rule than the one used to build the basis.
            let tab = s.element_tab(2 * p + 3);
            let ld = s.local_dim();
            for e in 0..s.num_elements() {
                for i in 0..ld {
                    for j in 0..ld {
                        let g: f64 = tab
                            .range(e)
                            .map(|q| tab.weights[q] * tab.values[q * ld + i] * tab.values[q * ld + j])
                            .sum();
                        let expected = if i == j { 1.0 } else { 0.0 };
                        assert!((g - expected).abs() < 1e-12, "p={p} e={e} ({i},{j}): {g}");
                    }
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let s = space(2, 3);
        let x = [0.31, 0.12];
        let e = s.mesh().locate(x).unwrap();
        let be = s.basis_eval(e, x);
        let h = 1e-6;
        let at = |y: Point| s.basis_eval(e, y);
        let (px, mx) = (at([x[0] + h, x[1]]), at([x[0] - h, x[1]]));
        let (py, my) = (at([x[0], x[1] + h]), at([x[0], x[1] - h]));
        for i in 0..s.local_dim() {
            let gx = (px.values[i] - mx.values[i]) / (2.0 * h);
            let gy = (py.values[i] - my.values[i]) / (2.0 * h);
            assert!((gx - be.grads[i][0]).abs() < 1e-5 * (1.0 + gx.abs()));
            assert!((gy - be.grads[i][1]).abs() < 1e-5 * (1.0 + gy.abs()));
            let hxx = (px.grads[i][0] - mx.grads[i][0]) / (2.0 * h);
            let hxy = (py.grads[i][0] - my.grads[i][0]) / (2.0 * h);
            let hyy = (py.grads[i][1] - my.grads[i][1]) / (2.0 * h);
            assert!((hxx - be.hessians[i][0]).abs() < 1e-4 * (1.0 + hxx.abs()));
            assert!((hxy - be.hessians[i][1]).abs() < 1e-4 * (1.0 + hxy.abs()));
            assert!((hyy - be.hessians[i][2]).abs() < 1e-4 * (1.0 + hyy.abs()));
        }
    }
}
