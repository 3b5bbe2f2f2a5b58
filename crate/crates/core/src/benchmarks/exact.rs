use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::mesh::DomainTag;
use crate::{Error, Result};

/// Singular exponent of the L-shape benchmark.
pub const Z0: f64 = 0.544483736782464;
/// Interior angle at the reentrant corner.
pub const OMEGA: f64 = 1.5 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkId {
    /// `sin(πt) sin²(πx) sin²(πy)` on the unit square.
    U1,
    /// Corner singularity `sin(πt)(x²−1)²(y²−1)² r^z g(φ)` on the L-shape.
    U2,
    /// `sin(20πt) sin²(πx) sin²(πy)` on the unit square.
    U3,
}

impl BenchmarkId {
    pub fn domain(self) -> DomainTag {
        match self {
            BenchmarkId::U2 => DomainTag::LShape,
            _ => DomainTag::UnitSquare,
        }
    }

    pub fn final_time(self) -> f64 {
        1.0
    }

    /// Extra quadrature order used when integrating against this solution.
    pub fn extra_order(self) -> usize {
        match self {
            BenchmarkId::U2 => 6,
            _ => 4,
        }
    }

    fn time_factor(self, t: f64) -> (f64, f64) {
        let k = match self {
            BenchmarkId::U3 => 20.0 * PI,
            _ => PI,
        };
        ((k * t).sin(), k * (k * t).cos())
    }

    /// Spatial factor with its gradient and Laplacian.
    fn spatial(self, x: Point) -> (f64, Point, f64) {
        match self {
            BenchmarkId::U1 | BenchmarkId::U3 => smooth_bump(x),
            BenchmarkId::U2 => corner_function(x),
        }
    }

    pub fn value(self, x: Point, t: f64) -> f64 {
        self.time_factor(t).0 * self.spatial(x).0
    }

    pub fn gradient(self, x: Point, t: f64) -> Point {
        let s = self.time_factor(t).0;
        let g = self.spatial(x).1;
        [s * g[0], s * g[1]]
    }

    pub fn time_derivative(self, x: Point, t: f64) -> f64 {
        self.time_factor(t).1 * self.spatial(x).0
    }

    pub fn laplacian(self, x: Point, t: f64) -> f64 {
        self.time_factor(t).0 * self.spatial(x).2
    }

    /// `f = ∂_t u − Δu`.
    pub fn forcing(self, x: Point, t: f64) -> f64 {
        let (s, ds) = self.time_factor(t);
        let (v, _, lap) = self.spatial(x);
        ds * v - s * lap
    }
}

/// Checked evaluation of the exact solution.
pub fn exact_u(id: BenchmarkId, x: Point, t: f64) -> Result<f64> {
    if !id.domain().contains(x, 1e-12) {
        return Err(Error::PointOutsideDomain(x[0], x[1]));
    }
    Ok(id.value(x, t))
}

pub fn exact_grad_u(id: BenchmarkId, x: Point, t: f64) -> Result<Point> {
    if !id.domain().contains(x, 1e-12) {
        return Err(Error::PointOutsideDomain(x[0], x[1]));
    }
    Ok(id.gradient(x, t))
}

pub fn exact_dt_u(id: BenchmarkId, x: Point, t: f64) -> Result<f64> {
    if !id.domain().contains(x, 1e-12) {
        return Err(Error::PointOutsideDomain(x[0], x[1]));
    }
    Ok(id.time_derivative(x, t))
}

fn smooth_bump(x: Point) -> (f64, Point, f64) {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let (sx2, sy2) = (sx * sx, sy * sy);
    let value = sx2 * sy2;
    let grad = [2.0 * PI * sx * cx * sy2, 2.0 * PI * sy * cy * sx2];
    let c2x = (2.0 * PI * x[0]).cos();
    let c2y = (2.0 * PI * x[1]).cos();
    let lap = 2.0 * PI * PI * (c2x * sy2 + sx2 * c2y);
    (value, grad, lap)
}

/// Angular profile `g` and its first two derivatives.
fn angular(phi: f64) -> (f64, f64, f64) {
    let z = Z0;
    let (zm, zp) = (z - 1.0, z + 1.0);
    let b = |p: f64| (zm * p).sin() / zm - (zp * p).sin() / zp;
    let a = b(OMEGA);
    let c = (zm * OMEGA).cos() - (zp * OMEGA).cos();
    let (sm, cm) = (zm * phi).sin_cos();
    let (sp, cp) = (zp * phi).sin_cos();
    let g = a * (cm - cp) - b(phi) * c;
    let dg = a * (-zm * sm + zp * sp) - c * (cm - cp);
    let ddg = a * (-zm * zm * cm + zp * zp * cp) - c * (-zm * sm + zp * sp);
    (g, dg, ddg)
}

/// Polar angle in `[0, 2π)`, so the L-shape is covered by `[0, 3π/2]`.
pub fn polar_angle(x: Point) -> f64 {
    let phi = x[1].atan2(x[0]);
    if phi < 0.0 {
        phi + 2.0 * PI
    } else {
        phi
    }
}

/// `(x²−1)²(y²−1)² r^z g(φ)` with gradient and Laplacian by the product rule.
fn corner_function(x: Point) -> (f64, Point, f64) {
    let (qx, qy) = (x[0] * x[0] - 1.0, x[1] * x[1] - 1.0);
    let p = qx * qx * qy * qy;
    let grad_p = [4.0 * x[0] * qx * qy * qy, 4.0 * x[1] * qy * qx * qx];
    let lap_p = (12.0 * x[0] * x[0] - 4.0) * qy * qy + (12.0 * x[1] * x[1] - 4.0) * qx * qx;

    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if r == 0.0 {
        return (0.0, [0.0, 0.0], 0.0);
    }
    let phi = polar_angle(x);
    let (g, dg, ddg) = angular(phi);
    let z = Z0;
    let s = r.powf(z) * g;
    let (sin, cos) = phi.sin_cos();
    let rz1 = r.powf(z - 1.0);
    let grad_s = [rz1 * (z * g * cos - dg * sin), rz1 * (z * g * sin + dg * cos)];
    let lap_s = r.powf(z - 2.0) * (z * z * g + ddg);

    let value = p * s;
    let grad = [grad_p[0] * s + p * grad_s[0], grad_p[1] * s + p * grad_s[1]];
    let lap = lap_p * s + 2.0 * (grad_p[0] * grad_s[0] + grad_p[1] * grad_s[1]) + p * lap_s;
    (value, grad, lap)
}
