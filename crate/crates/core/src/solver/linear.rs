use serde::{Deserialize, Serialize};

use crate::dg_space::DgVector;
use crate::ipdg::SparseOperator;
use crate::{Error, Result};

/// Stopping rule for the Krylov solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Target relative residual `‖Ax − b‖ / ‖b‖`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-12,
            max_iterations: 20_000,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(op: &SparseOperator, x: &[f64], b: &[f64]) -> Vec<f64> {
    op.apply_unchecked(x).iter().zip(b).map(|(ax, b)| b - ax).collect()
}

/// Block-Jacobi preconditioner over element blocks.
struct BlockJacobi {
    block: usize,
    inverse: Vec<f64>,
}

impl BlockJacobi {
    fn new(op: &SparseOperator, block: usize) -> Self {
        let block = if block > 0 && op.dim().is_multiple_of(block) { block } else { 1 };
        BlockJacobi {
            block,
            inverse: op.block_diagonal_inverse(block),
        }
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let b = self.block;
        let mut z = vec![0.0; r.len()];
        for (k, (zb, rb)) in z.chunks_mut(b).zip(r.chunks(b)).enumerate() {
            let inv = &self.inverse[k * b * b..(k + 1) * b * b];
            for i in 0..b {
                zb[i] = dot(&inv[i * b..(i + 1) * b], rb);
            }
        }
        z
    }
}

fn check_dims(op: &SparseOperator, rhs: &[f64], guess: Option<&[f64]>) -> Result<()> {
    if rhs.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: rhs.len(),
        });
    }
    if let Some(g) = guess {
        if g.len() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                got: g.len(),
            });
        }
    }
    Ok(())
}

/// Preconditioned conjugate gradients with element-block Jacobi
/// preconditioning. `block` is the number of unknowns per element.
pub fn pcg(op: &SparseOperator, rhs: &[f64], guess: Option<&[f64]>, block: usize, opts: &SolverOptions) -> Result<Vec<f64>> {
    if !op.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    check_dims(op, rhs, guess)?;
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok(vec![0.0; op.dim()]);
    }
    let pre = BlockJacobi::new(op, block);
    let mut x = guess.map_or_else(|| vec![0.0; op.dim()], <[f64]>::to_vec);
    let mut r = residual(op, &x, rhs);
    let mut z = pre.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = norm(&r) / b_norm;
    for _ in 0..opts.max_iterations {
        if rel <= opts.tolerance {
            // Guard against drift of the recursive residual.
            let true_rel = norm(&residual(op, &x, rhs)) / b_norm;
            if true_rel <= opts.tolerance.max(1e-14) * 10.0 {
                return Ok(x);
            }
            r = residual(op, &x, rhs);
            z = pre.apply(&r);
            p = z.clone();
            rz = dot(&r, &z);
            rel = true_rel;
            continue;
        }
        let ap = op.apply_unchecked(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = pre.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
        rel = norm(&r) / b_norm;
    }
    let rel = norm(&residual(op, &x, rhs)) / b_norm;
    if rel <= opts.tolerance * 10.0 {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual: rel,
    })
}

/// Right-preconditioned BiCGSTAB for nonsymmetric operators.
pub fn bicgstab(op: &SparseOperator, rhs: &[f64], guess: Option<&[f64]>, block: usize, opts: &SolverOptions) -> Result<Vec<f64>> {
    check_dims(op, rhs, guess)?;
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok(vec![0.0; op.dim()]);
    }
    let pre = BlockJacobi::new(op, block);
    let n = op.dim();
    let mut x = guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = residual(op, &x, rhs);
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for _ in 0..opts.max_iterations {
        if norm(&r) / b_norm <= opts.tolerance {
            break;
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            // Breakdown: restart from the current iterate.
            r = residual(op, &x, rhs);
            r_hat = r.clone();
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = pre.apply(&p);
        v = op.apply_unchecked(&p_hat);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        let s_hat = pre.apply(&s);
        let t = op.apply_unchecked(&s_hat);
        let tt = dot(&t, &t);
        omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if omega == 0.0 {
            break;
        }
    }
    let rel = norm(&residual(op, &x, rhs)) / b_norm;
    if rel <= opts.tolerance * 10.0 {
        Ok(x)
    } else {
        Err(Error::NoConvergence {
            iterations: opts.max_iterations,
            residual: rel,
        })
    }
}

/// Solve a symmetric positive definite system posed on the space of `rhs`.
pub fn solve_spd(op: &SparseOperator, rhs: &DgVector, opts: &SolverOptions) -> Result<DgVector> {
    let x = pcg(op, rhs.coefficients(), None, rhs.space().local_dim(), opts)?;
    DgVector::from_coefficients(rhs.space(), x)
}

/// Dispatch on the symmetry flag: PCG for symmetric operators, BiCGSTAB otherwise.
pub fn solve(op: &SparseOperator, rhs: &DgVector, guess: Option<&DgVector>, opts: &SolverOptions) -> Result<DgVector> {
    let block = rhs.space().local_dim();
    let guess = guess.map(DgVector::coefficients);
    let x = if op.is_symmetric() {
        pcg(op, rhs.coefficients(), guess, block, opts)?
    } else {
        bicgstab(op, rhs.coefficients(), guess, block, opts)?
    };
    DgVector::from_coefficients(rhs.space(), x)
}
