use std::fmt;
use std::sync::Arc;

use crate::dg_space::DgSpace;
use crate::exec;
use crate::geometry::{scale, sym_eigenvalues, Mat2, Point, IDENTITY};

type TensorFn = dyn Fn(Point, f64) -> Mat2 + Send + Sync;
type DivergenceFn = dyn Fn(Point, f64) -> Point + Send + Sync;

/// Symmetric positive definite diffusion coefficient `a(x, t)`.
#[derive(Clone)]
pub struct DiffusionTensor {
    eval: Arc<TensorFn>,
    divergence: Option<Arc<DivergenceFn>>,
    time_constant: bool,
    space_constant: bool,
}

impl fmt::Debug for DiffusionTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionTensor")
            .field("time_constant", &self.time_constant)
            .field("space_constant", &self.space_constant)
            .finish_non_exhaustive()
    }
}

impl DiffusionTensor {
    pub fn identity() -> Self {
        Self::constant(IDENTITY)
    }

    pub fn scalar(c: f64) -> Self {
        Self::constant(scale(&IDENTITY, c))
    }

    pub fn constant(m: Mat2) -> Self {
        DiffusionTensor {
            eval: Arc::new(move |_, _| m),
            divergence: None,
            time_constant: true,
            space_constant: true,
        }
    }

    /// General coefficient. `time_constant` must only be set when `f` does not
    /// depend on `t`; it switches off the time-variation indicators.
    pub fn from_fn<F>(f: F, time_constant: bool) -> Self
    where
        F: Fn(Point, f64) -> Mat2 + Send + Sync + 'static,
    {
        DiffusionTensor {
            eval: Arc::new(f),
            divergence: None,
            time_constant,
            space_constant: false,
        }
    }

    /// Spatially constant, time-dependent coefficient.
    pub fn from_time_fn<F>(f: F) -> Self
    where
        F: Fn(f64) -> Mat2 + Send + Sync + 'static,
    {
        DiffusionTensor {
            eval: Arc::new(move |_, t| f(t)),
            divergence: None,
            time_constant: false,
            space_constant: true,
        }
    }

    /// Attach the exact column divergence `b_j = Σ_i ∂_i a_ij`.
    pub fn with_divergence<F>(mut self, f: F) -> Self
    where
        F: Fn(Point, f64) -> Point + Send + Sync + 'static,
    {
        self.divergence = Some(Arc::new(f));
        self
    }

    #[inline]
    pub fn eval(&self, x: Point, t: f64) -> Mat2 {
        (self.eval)(x, t)
    }

    pub fn is_time_constant(&self) -> bool {
        self.time_constant
    }

    pub fn is_space_constant(&self) -> bool {
        self.space_constant
    }

    /// Column divergence of `a`, so that `∇·(a∇z) = b·∇z + a : ∇²z`.
    /// Falls back to central differences when no exact divergence is attached.
    pub fn divergence(&self, x: Point, t: f64) -> Point {
        if self.space_constant {
            return [0.0, 0.0];
        }
        if let Some(d) = &self.divergence {
            return d(x, t);
        }
        let h = 1e-6;
        let dx = {
            let (p, m) = (self.eval([x[0] + h, x[1]], t), self.eval([x[0] - h, x[1]], t));
            [(p[0][0] - m[0][0]) / (2.0 * h), (p[0][1] - m[0][1]) / (2.0 * h)]
        };
        let dy = {
            let (p, m) = (self.eval([x[0], x[1] + h], t), self.eval([x[0], x[1] - h], t));
            [(p[1][0] - m[1][0]) / (2.0 * h), (p[1][1] - m[1][1]) / (2.0 * h)]
        };
        [dx[0] + dy[0], dx[1] + dy[1]]
    }
}

/// Elementwise and face values of `a♯`, `a♭` at one time, plus the global
/// extrema and `K_a = max √(a♯/a♭)`.
#[derive(Debug, Clone)]
pub struct CoefficientBounds {
    pub time: f64,
    pub element_sharp: Vec<f64>,
    pub element_flat: Vec<f64>,
    pub face_sharp: Vec<f64>,
    pub face_flat: Vec<f64>,
    pub alpha_sharp: f64,
    pub alpha_flat: f64,
    pub k_a: f64,
}

impl CoefficientBounds {
    /// Sample the eigenvalues of `a(·, t)` at the vertices and the order-`2p+2`
    /// quadrature points of every element.
    pub fn compute(space: &DgSpace, tensor: &DiffusionTensor, t: f64) -> Self {
        let mesh = space.mesh();
        let per_element: Vec<(f64, f64)> = if tensor.is_space_constant() {
            let (lo, hi) = sym_eigenvalues(&tensor.eval([0.0, 0.0], t));
            vec![(hi, lo); space.num_elements()]
        } else {
            let tab = space.element_tab(2 * space.degree() + 2);
            exec::map_indexed(space.num_elements(), |e| {
                let mut sharp: f64 = 0.0;
                let mut flat = f64::INFINITY;
                let corners = mesh.corners(e);
                for x in tab.range(e).map(|q| tab.points[q]).chain(corners) {
                    let (lo, hi) = sym_eigenvalues(&tensor.eval(x, t));
                    sharp = sharp.max(hi);
                    flat = flat.min(lo);
                }
                (sharp, flat)
            })
        };
        let (element_sharp, element_flat): (Vec<f64>, Vec<f64>) = per_element.into_iter().unzip();
        let mut face_sharp = Vec::with_capacity(mesh.faces().len());
        let mut face_flat = Vec::with_capacity(mesh.faces().len());
        for f in mesh.faces() {
            let adj = f.adjacent_triangles();
            let k = adj.len() as f64;
            face_sharp.push(adj.iter().map(|&e| element_sharp[e]).sum::<f64>() / k);
            face_flat.push(k / adj.iter().map(|&e| 1.0 / element_flat[e]).sum::<f64>());
        }
        let alpha_sharp = element_sharp.iter().copied().fold(0.0, f64::max);
        let alpha_flat = element_flat.iter().copied().fold(f64::INFINITY, f64::min);
        let k_a = element_sharp
            .iter()
            .zip(&element_flat)
            .chain(face_sharp.iter().zip(&face_flat))
            .map(|(s, f)| (s / f).sqrt())
            .fold(0.0, f64::max);
        CoefficientBounds {
            time: t,
            element_sharp,
            element_flat,
            face_sharp,
            face_flat,
            alpha_sharp,
            alpha_flat,
            k_a,
        }
    }

    /// Global lower bound `α♭(t)` without building per-element data.
    pub fn alpha_flat_at(space: &DgSpace, tensor: &DiffusionTensor, t: f64) -> f64 {
        Self::compute(space, tensor, t).alpha_flat
    }
}

/// Penalty `σ = C_pen · {a♯} / h` on face `f`.
#[inline]
pub fn penalty_sigma(space: &DgSpace, bounds: &CoefficientBounds, f: usize, c_pen: f64) -> f64 {
    c_pen * bounds.face_sharp[f] / space.mesh().faces()[f].h_face
}
