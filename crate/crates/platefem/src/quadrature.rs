//! Gaussian quadrature on triangles and edges.
//!
//! Triangle rules are conical products: a Gauss–Jacobi rule with weight
//! `(1 - x)` in the first direction (absorbing the Duffy-map Jacobian of the
//! collapsed square) times a Gauss–Legendre rule in the second. Both
//! one-dimensional families come from the Golub–Welsch eigenvalue method, so
//! any degree in the supported range is available without stored tables. An
//! `n`-point-per-direction product integrates total degree `2n - 1` exactly.
//!
//! Weights are kept *relative*: they sum to 1, and integrals over a physical
//! triangle (or edge) are `measure * Σ w_q f(x_q)`.

use crate::geo::Point2;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Largest supported exactness degree for triangle rules.
pub const MAX_TRIANGLE_DEGREE: u32 = 12;
/// Largest supported exactness degree for edge rules.
pub const MAX_EDGE_DEGREE: u32 = 11;
/// Degree used by all volume assembly unless a caller asks otherwise
/// (covers products of second derivatives of quintics, degree 6, with room
/// for loads and curved data).
pub const DEFAULT_VOLUME_DEGREE: u32 = 10;
/// Degree used by all side/boundary assembly (products of quintic traces).
pub const DEFAULT_EDGE_DEGREE: u32 = 11;

/// Quadrature on the (reference) triangle in barycentric coordinates.
#[derive(Clone, Debug)]
pub struct QuadRule {
    /// Barycentric triples `[l0, l1, l2]`, one per point.
    pub points: Vec<[f64; 3]>,
    /// Relative weights, summing to 1.
    pub weights: Vec<f64>,
    /// The degree the rule was requested (and is guaranteed) to integrate.
    pub exact_degree: u32,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Physical quadrature points on the triangle with corners `tri`.
    pub fn map_to(&self, tri: &[Point2; 3]) -> Vec<Point2> {
        self.points
            .iter()
            .map(|l| tri[0] * l[0] + tri[1] * l[1] + tri[2] * l[2])
            .collect()
    }
}

/// Gauss–Legendre quadrature on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct EdgeQuadRule {
    pub points: Vec<f64>,
    /// Relative weights, summing to 1.
    pub weights: Vec<f64>,
    pub exact_degree: u32,
}

impl EdgeQuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Physical quadrature points on the segment from `a` to `b`.
    pub fn map_to(&self, a: Point2, b: Point2) -> Vec<Point2> {
        self.points.iter().map(|&q| a + (b - a) * q).collect()
    }
}

/// Nodes and weights of the Gauss rule for the Jacobi matrix with diagonal
/// `diag`, off-diagonal `offdiag`, and zeroth moment `mu0`, sorted by node.
fn golub_welsch(diag: &[f64], offdiag: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    debug_assert_eq!(offdiag.len(), n.saturating_sub(1));
    let mut jac = DMatrix::zeros(n, n);
    for (k, &a) in diag.iter().enumerate() {
        jac[(k, k)] = a;
    }
    for (k, &b) in offdiag.iter().enumerate() {
        jac[(k, k + 1)] = b;
        jac[(k + 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss–Legendre on `[0, 1]` with unit weight; weights sum to 1.
fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let diag = vec![0.0; n];
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let (t, w) = golub_welsch(&diag, &offdiag, 2.0);
    let mut x: Vec<f64> = t.iter().map(|&t| 0.5 * (t + 1.0)).collect();
    let mut w: Vec<f64> = w.iter().map(|&w| 0.5 * w).collect();
    // Enforce the symmetry the continuous rule has; the eigensolver only
    // delivers it to roundoff.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let lo = 0.5 * (x[i] + (1.0 - x[j]));
        x[i] = lo;
        x[j] = 1.0 - lo;
        let wm = 0.5 * (w[i] + w[j]);
        w[i] = wm;
        w[j] = wm;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.5;
    }
    (x, w)
}

/// Gauss–Jacobi with weight `(1 - x)` on `[0, 1]`:
/// `∫₀¹ g(x)(1 - x) dx = Σ w_i g(x_i)` (weights sum to 1/2).
fn gauss_jacobi_10_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Three-term recurrence for Jacobi(alpha=1, beta=0) on [-1, 1]:
    // a_k = -1 / ((2k+1)(2k+3)), b_k = sqrt(k(k+1)) / (2k+1), mu0 = 2.
    let diag: Vec<f64> = (0..n)
        .map(|k| {
            let k = k as f64;
            -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0))
        })
        .collect();
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            (k * (k + 1.0)).sqrt() / (2.0 * k + 1.0)
        })
        .collect();
    let (t, w) = golub_welsch(&diag, &offdiag, 2.0);
    // Map to [0, 1]: x = (1+t)/2 turns weight (1-t) dt into 4 (1-x) dx.
    let x: Vec<f64> = t.iter().map(|&t| 0.5 * (t + 1.0)).collect();
    let w: Vec<f64> = w.iter().map(|&w| 0.25 * w).collect();
    (x, w)
}

/// A positive-weight rule on the triangle, exact for all polynomials of total
/// degree `exact_degree`.
pub fn triangle_quadrature(exact_degree: u32) -> Result<QuadRule> {
    if exact_degree < 1 || exact_degree > MAX_TRIANGLE_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "triangle quadrature degree {exact_degree} outside 1..={MAX_TRIANGLE_DEGREE}"
        )));
    }
    let n = (exact_degree as usize + 2) / 2; // ceil((d+1)/2), exact to 2n-1 >= d
    let (xi, wi) = gauss_jacobi_10_01(n);
    let (eta, wj) = gauss_legendre_01(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = xi[i];
            let y = eta[j] * (1.0 - xi[i]);
            points.push([1.0 - x - y, x, y]);
            // wi already carries the (1-x) Jacobian; factor 2 converts the
            // reference-triangle integral (area 1/2) to relative weights.
            weights.push(2.0 * wi[i] * wj[j]);
        }
    }
    Ok(QuadRule {
        points,
        weights,
        exact_degree,
    })
}

/// Gauss–Legendre rule on `[0, 1]`, exact for polynomials of degree
/// `exact_degree`.
pub fn edge_quadrature(exact_degree: u32) -> Result<EdgeQuadRule> {
    if exact_degree < 1 || exact_degree > MAX_EDGE_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "edge quadrature degree {exact_degree} outside 1..={MAX_EDGE_DEGREE}"
        )));
    }
    let n = (exact_degree as usize + 2) / 2;
    let (points, weights) = gauss_legendre_01(n);
    Ok(EdgeQuadRule {
        points,
        weights,
        exact_degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed form ∫ over the reference triangle of x^a y^b = a! b! / (a+b+2)!.
    fn beta_integral(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>().max(1.0);
        fact(a) * fact(b) / fact(a + b + 2)
    }

    fn integrate_monomial(rule: &QuadRule, a: u32, b: u32) -> f64 {
        // Reference triangle (0,0), (1,0), (0,1): x = l1, y = l2, area 1/2.
        0.5 * rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32))
            .sum::<f64>()
    }

    #[test]
    fn triangle_rules_hit_the_factorial_oracle() {
        for degree in 1..=MAX_TRIANGLE_DEGREE {
            let rule = triangle_quadrature(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-14);
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    let exact = beta_integral(a, b);
                    let got = integrate_monomial(&rule, a, b);
                    assert!(
                        (got - exact).abs() <= 1e-13 * exact,
                        "degree {degree}, x^{a} y^{b}: got {got}, want {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn default_triangle_rule_basics() {
        let rule = triangle_quadrature(DEFAULT_VOLUME_DEGREE).unwrap();
        assert_eq!(rule.exact_degree, 10);
        // Constant: the reference area. Centroid identity. High even powers.
        assert!((integrate_monomial(&rule, 0, 0) - 0.5).abs() < 1e-15);
        assert!((integrate_monomial(&rule, 1, 0) - 1.0 / 6.0).abs() < 1e-16);
        let exact = beta_integral(4, 4);
        assert!((integrate_monomial(&rule, 4, 4) - exact).abs() <= 1e-14 * exact);
    }

    #[test]
    fn edge_rules_integrate_monomials() {
        for degree in 1..=MAX_EDGE_DEGREE {
            let rule = edge_quadrature(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for k in 0..=degree {
                let exact = 1.0 / f64::from(k + 1);
                let got: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x.powi(k as i32))
                    .sum();
                assert!(
                    (got - exact).abs() <= 1e-14 * exact,
                    "degree {degree}, x^{k}: got {got}, want {exact}"
                );
            }
        }
    }

    #[test]
    fn edge_rule_examples() {
        let two = edge_quadrature(3).unwrap();
        assert_eq!(two.len(), 2);
        let cubic: f64 = two
            .points
            .iter()
            .zip(&two.weights)
            .map(|(x, w)| w * x * x * x)
            .sum();
        assert!((cubic - 0.25).abs() < 1e-15);

        let six = edge_quadrature(DEFAULT_EDGE_DEGREE).unwrap();
        assert_eq!(six.len(), 6);
        let p10: f64 = six
            .points
            .iter()
            .zip(&six.weights)
            .map(|(x, w)| w * x.powi(10))
            .sum();
        assert!((p10 - 1.0 / 11.0).abs() <= 1e-14 / 11.0);
    }

    #[test]
    fn edge_points_symmetric_about_half() {
        for degree in 1..=MAX_EDGE_DEGREE {
            let rule = edge_quadrature(degree).unwrap();
            let n = rule.len();
            for i in 0..n {
                let j = n - 1 - i;
                assert!((rule.points[i] + rule.points[j] - 1.0).abs() <= 1e-15);
                assert_eq!(rule.weights[i], rule.weights[j]);
            }
        }
    }

    #[test]
    fn out_of_range_degrees_are_rejected() {
        assert!(triangle_quadrature(0).is_err());
        assert!(triangle_quadrature(13).is_err());
        assert!(edge_quadrature(0).is_err());
        assert!(edge_quadrature(12).is_err());
    }

    #[test]
    fn physical_mapping_scales_by_measure() {
        // ∫ x over the triangle (0,0), (2,0), (0,2) = 8/6; area 2.
        let rule = triangle_quadrature(3).unwrap();
        let tri = [
            Point2::ORIGIN,
            Point2::new(2.0, 0.0),
            Point2::new(0.0, 2.0),
        ];
        let pts = rule.map_to(&tri);
        let got: f64 = 2.0
            * pts
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| w * p.x)
                .sum::<f64>();
        assert!((got - 8.0 / 6.0).abs() < 1e-14);
    }
}
