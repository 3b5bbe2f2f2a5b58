//! Gauss quadrature on the reference triangle, edges and time intervals.
//!
//! Line rules are Gauss–Legendre on `[0, 1]`. Triangle rules are conical
//! (collapsed) products of Gauss–Legendre rules on the reference triangle
//! `{(x, y) : x, y ≥ 0, x + y ≤ 1}`; all weights are strictly positive.
//! Rules are built once per degree and cached for the lifetime of the process.

use std::sync::OnceLock;

use crate::geometry::Point;
use crate::{Error, Result};

pub const MAX_DEGREE: usize = 20;

#[derive(Debug, Clone)]
pub struct QuadRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl<P: Copy> QuadRule<P> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (P, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

pub type TriangleRule = QuadRule<Point>;
pub type LineRule = QuadRule<f64>;

/// Gauss–Legendre nodes and weights on `[-1, 1]` with `n` points.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn_1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn_1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn build_line_rule(degree: usize) -> LineRule {
    let n = (degree + 2) / 2;
    let (x, w) = gauss_legendre(n.max(1));
    LineRule {
        points: x.iter().map(|&x| 0.5 * (x + 1.0)).collect(),
        weights: w.iter().map(|&w| 0.5 * w).collect(),
        exactness_degree: 2 * n.max(1) - 1,
    }
}

fn build_triangle_rule(degree: usize) -> TriangleRule {
    // x = u, y = v (1 - u): the Jacobian (1 - u) raises the degree in u by one.
    let outer = build_line_rule(degree + 1);
    let inner = build_line_rule(degree);
    let mut points = Vec::with_capacity(outer.len() * inner.len());
    let mut weights = Vec::with_capacity(outer.len() * inner.len());
    for (u, wu) in outer.iter() {
        for (v, wv) in inner.iter() {
            points.push([u, v * (1.0 - u)]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    TriangleRule {
        points,
        weights,
        exactness_degree: outer.exactness_degree.min(inner.exactness_degree + 1).max(degree),
    }
}

static LINE_RULES: [OnceLock<LineRule>; MAX_DEGREE + 1] = [const { OnceLock::new() }; MAX_DEGREE + 1];
static TRIANGLE_RULES: [OnceLock<TriangleRule>; MAX_DEGREE + 1] =
    [const { OnceLock::new() }; MAX_DEGREE + 1];

/// Rule on the reference triangle exact for polynomials of total degree `degree`.
pub fn triangle_rule(degree: usize) -> Result<&'static TriangleRule> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    Ok(TRIANGLE_RULES[degree].get_or_init(|| build_triangle_rule(degree)))
}

/// Gauss–Legendre rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<&'static LineRule> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    Ok(LINE_RULES[degree].get_or_init(|| build_line_rule(degree)))
}

/// Rule on the unit time interval; identical to [`edge_rule`].
pub fn time_rule(degree: usize) -> Result<&'static LineRule> {
    edge_rule(degree)
}

/// The 3-point Gauss–Legendre rule used for all per-step time integrals.
pub fn step_time_rule() -> &'static LineRule {
    edge_rule(5).expect("degree 5 is supported")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn constant_over_triangle_is_half() {
        let rule = triangle_rule(1).unwrap();
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn triangle_rules_are_exact_on_monomials() {
        for degree in 0..=MAX_DEGREE {
            let rule = triangle_rule(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let q: f64 = rule.iter().map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
                    let exact = monomial_integral(a, b);
                    assert!(
                        (q - exact).abs() <= 1e-13 * exact.max(1e-3),
                        "degree {degree}: x^{a} y^{b}: {q} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn two_point_gauss_integrates_cubic() {
        let rule = edge_rule(3).unwrap();
        assert_eq!(rule.len(), 2);
        let q: f64 = rule.iter().map(|(s, w)| w * s.powi(3)).sum();
        assert!((q - 0.25).abs() < 1e-15);
    }

    #[test]
    fn line_rules_are_exact_on_monomials() {
        for degree in 0..=MAX_DEGREE {
            let rule = edge_rule(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for k in 0..=degree as i32 {
                let q: f64 = rule.iter().map(|(s, w)| w * s.powi(k)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "degree {degree} k {k}");
            }
        }
    }

    #[test]
    fn step_rule_has_three_points() {
        assert_eq!(step_time_rule().len(), 3);
    }

    #[test]
    fn too_high_degree_is_rejected() {
        assert!(matches!(triangle_rule(21), Err(Error::UnsupportedDegree(21))));
        assert!(edge_rule(21).is_err());
    }
}
