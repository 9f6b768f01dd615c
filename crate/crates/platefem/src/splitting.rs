//! The P1 operator-splitting baseline: substitute `w = -lap u` and solve two
//! Poisson problems in sequence,
//!
//! ```text
//! (grad w_h, grad v) = (f, v)      for all v in S1_0,
//! (grad u_h, grad v) = (w_h, v)    for all v in S1_0.
//! ```
//!
//! On a *smooth* domain this splitting requires `lap u = 0` on the boundary,
//! which is not what simple support asks for, and the scheme converges to the
//! wrong plate (`u_inf`, midpoint 3/64 instead of 5/64 for unit load). The
//! module exists to reproduce that failure cleanly: it is a correct P1
//! Galerkin solver for the split system, solid enough that the observed limit
//! cannot be blamed on the linear algebra.

use crate::geo::Point2;
use crate::mesh::{P1Field, Triangulation};
use crate::quadrature::triangle_quadrature;
use crate::sparse::{
    factor, reduce, LinearConstraintSet, SolverReport, SymSparseMatrix, TripletList,
};
use crate::Result;

/// Quadrature degree for the right-hand sides `(f, v)` and `(w_h, v)`.
const MASS_QUAD_DEGREE: u32 = 4;

/// Continuous piecewise-affine functions with zero boundary values; one dof
/// per vertex before reduction.
pub struct P1Space<'m> {
    pub mesh: &'m Triangulation,
}

impl<'m> P1Space<'m> {
    pub fn new(mesh: &'m Triangulation) -> Self {
        P1Space { mesh }
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_vertices()
    }

    /// Gradients of the three barycentric coordinates on triangle `t`.
    fn barycentric_gradients(&self, t: usize) -> ([Point2; 3], f64) {
        let [a, b, c] = self.mesh.triangle_points(t);
        let area = self.mesh.triangle_area(t);
        let inv = 1.0 / (2.0 * area);
        (
            [
                (c - b).perp().scale(inv),
                (a - c).perp().scale(inv),
                (b - a).perp().scale(inv),
            ],
            area,
        )
    }

    /// The P1 stiffness matrix `(grad phi_i, grad phi_j)`, unconstrained.
    pub fn stiffness(&self) -> Result<SymSparseMatrix> {
        let mut triplets = TripletList::new(self.n_dofs());
        for t in 0..self.mesh.n_triangles() {
            let (grads, area) = self.barycentric_gradients(t);
            let tri = self.mesh.triangles[t];
            for i in 0..3 {
                for j in i..3 {
                    let k = area * grads[i].dot(grads[j]);
                    triplets.push(tri[i], tri[j], k);
                    if i != j {
                        triplets.push(tri[j], tri[i], k);
                    }
                }
            }
        }
        SymSparseMatrix::assemble(&triplets)
    }

    /// Load vector `(f, phi_i)` by degree-4 quadrature.
    pub fn load(&self, f: &dyn Fn(Point2) -> f64) -> Result<Vec<f64>> {
        let rule = triangle_quadrature(MASS_QUAD_DEGREE)?;
        let mut b = vec![0.0; self.n_dofs()];
        for t in 0..self.mesh.n_triangles() {
            let tri = self.mesh.triangles[t];
            let area = self.mesh.triangle_area(t);
            let points = rule.map_to(&self.mesh.triangle_points(t));
            for (q, &x) in points.iter().enumerate() {
                let fw = area * rule.weights[q] * f(x);
                for i in 0..3 {
                    b[tri[i]] += fw * rule.points[q][i];
                }
            }
        }
        Ok(b)
    }

    /// Load vector `(w, phi_i)` for a P1 field `w`, evaluated elementwise
    /// (no point location involved).
    pub fn load_from_p1(&self, w: &P1Field) -> Result<Vec<f64>> {
        let rule = triangle_quadrature(MASS_QUAD_DEGREE)?;
        let mut b = vec![0.0; self.n_dofs()];
        for t in 0..self.mesh.n_triangles() {
            let tri = self.mesh.triangles[t];
            let area = self.mesh.triangle_area(t);
            for (q, bary) in rule.points.iter().enumerate() {
                let wq: f64 = (0..3).map(|i| bary[i] * w.vertex_values[tri[i]]).sum();
                let fw = area * rule.weights[q] * wq;
                for i in 0..3 {
                    b[tri[i]] += fw * bary[i];
                }
            }
        }
        Ok(b)
    }

    /// Zero value at every boundary vertex.
    pub fn boundary_constraints(&self) -> Result<LinearConstraintSet> {
        let fixed = (0..self.n_dofs()).filter(|&v| self.mesh.boundary_vertex[v]);
        LinearConstraintSet::fix_dofs(self.n_dofs(), fixed)
    }
}

/// Result of the two-stage split solve.
pub struct SplitSolution {
    /// First solve: the discrete `w = -lap u`.
    pub w: P1Field,
    /// Second solve: the displacement.
    pub u: P1Field,
    pub report_w: SolverReport,
    pub report_u: SolverReport,
}

/// Solve the split system for load `f`. Both stages share one stiffness
/// factorization.
pub fn solve_splitting(mesh: &Triangulation, f: &dyn Fn(Point2) -> f64) -> Result<SplitSolution> {
    let space = P1Space::new(mesh);
    let stiffness = space.stiffness()?;
    let constraints = space.boundary_constraints()?;
    let b_f = space.load(f)?;
    let (reduced_a, reduced_b, expansion) = reduce(&stiffness, &b_f, &constraints)?;
    let factorization = factor(&reduced_a)?;

    let (xw, report_w) = factorization.solve(&reduced_b)?;
    let w = P1Field::new(expansion.expand(&xw));

    let b_w = space.load_from_p1(&w)?;
    let (xu, report_u) = factorization.solve(&expansion.restrict(&b_w))?;
    let u = P1Field::new(expansion.expand(&xu));

    Ok(SplitSolution {
        w,
        u,
        report_w,
        report_u,
    })
}
