//! Bivariate polynomial calculus: graded monomial bases, coefficient-level
//! differentiation and multiplication, and evaluation of whole shape-function
//! sets (values, gradients, Hessians) through a scaled local frame.
//!
//! Every element family in the crate stores its shape functions as coefficient
//! columns over a [`MonomialBasis`] in the local coordinate `xi = (x - c) / h`
//! of the element (centroid `c`, diameter `h`). Working in the scaled frame
//! keeps the generalized Vandermonde matrices well conditioned; the chain rule
//! is applied once, in [`PolyBasis::eval`].

use crate::geo::Point2;
use nalgebra::DMatrix;

/// Monomials `xi^i * eta^j` with `i + j <= degree`, in graded order
/// (total degree ascending; within a degree, the power of `eta` ascending).
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    degree: u32,
    exps: Vec<(u32, u32)>,
}

/// Number of bivariate monomials of total degree at most `degree`.
pub fn monomial_dim(degree: u32) -> usize {
    ((degree + 1) * (degree + 2) / 2) as usize
}

impl MonomialBasis {
    pub fn new(degree: u32) -> Self {
        let mut exps = Vec::with_capacity(monomial_dim(degree));
        for d in 0..=degree {
            for j in 0..=d {
                exps.push((d - j, j));
            }
        }
        MonomialBasis { degree, exps }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exps
    }

    /// Position of `xi^i * eta^j` in graded order.
    pub fn index(&self, i: u32, j: u32) -> usize {
        debug_assert!(i + j <= self.degree);
        let d = i + j;
        (d * (d + 1) / 2 + j) as usize
    }

    fn power_table(&self, t: f64) -> Vec<f64> {
        let mut pows = vec![1.0; self.degree as usize + 1];
        for k in 1..pows.len() {
            pows[k] = pows[k - 1] * t;
        }
        pows
    }

    /// Values of all members at `p`, written into `out` (length `dim`).
    pub fn values(&self, p: Point2, out: &mut [f64]) {
        let (xs, ys) = (self.power_table(p.x), self.power_table(p.y));
        for (k, &(i, j)) in self.exps.iter().enumerate() {
            out[k] = xs[i as usize] * ys[j as usize];
        }
    }

    /// Gradients `[d/dxi, d/deta]` of all members at `p`.
    pub fn gradients(&self, p: Point2, out: &mut [[f64; 2]]) {
        let (xs, ys) = (self.power_table(p.x), self.power_table(p.y));
        for (k, &(i, j)) in self.exps.iter().enumerate() {
            let (i, j) = (i as usize, j as usize);
            let dx = if i > 0 { i as f64 * xs[i - 1] * ys[j] } else { 0.0 };
            let dy = if j > 0 { j as f64 * xs[i] * ys[j - 1] } else { 0.0 };
            out[k] = [dx, dy];
        }
    }

    /// Second derivatives `[dxx, dxy, dyy]` of all members at `p`.
    pub fn hessians(&self, p: Point2, out: &mut [[f64; 3]]) {
        let (xs, ys) = (self.power_table(p.x), self.power_table(p.y));
        for (k, &(i, j)) in self.exps.iter().enumerate() {
            let (i, j) = (i as usize, j as usize);
            let dxx = if i > 1 {
                (i * (i - 1)) as f64 * xs[i - 2] * ys[j]
            } else {
                0.0
            };
            let dxy = if i > 0 && j > 0 {
                (i * j) as f64 * xs[i - 1] * ys[j - 1]
            } else {
                0.0
            };
            let dyy = if j > 1 {
                (j * (j - 1)) as f64 * xs[i] * ys[j - 2]
            } else {
                0.0
            };
            out[k] = [dxx, dxy, dyy];
        }
    }
}

/// A single bivariate polynomial as a coefficient vector in graded order.
#[derive(Clone, Debug)]
pub struct Polynomial {
    basis: MonomialBasis,
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(degree: u32, coeffs: Vec<f64>) -> Self {
        let basis = MonomialBasis::new(degree);
        assert_eq!(coeffs.len(), basis.dim());
        Polynomial { basis, coeffs }
    }

    /// The affine polynomial `c0 + cx*xi + cy*eta`.
    pub fn affine(c0: f64, cx: f64, cy: f64) -> Self {
        Polynomial::new(1, vec![c0, cx, cy])
    }

    pub fn degree(&self) -> u32 {
        self.basis.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, p: Point2) -> f64 {
        let mut vals = vec![0.0; self.basis.dim()];
        self.basis.values(p, &mut vals);
        self.coeffs.iter().zip(&vals).map(|(c, v)| c * v).sum()
    }
}

/// Product of two polynomials, with degrees added.
pub fn poly_mul(a: &Polynomial, b: &Polynomial) -> Polynomial {
    let degree = a.degree() + b.degree();
    let basis = MonomialBasis::new(degree);
    let mut coeffs = vec![0.0; basis.dim()];
    for (ka, &(ia, ja)) in a.basis.exps.iter().enumerate() {
        if a.coeffs[ka] == 0.0 {
            continue;
        }
        for (kb, &(ib, jb)) in b.basis.exps.iter().enumerate() {
            coeffs[basis.index(ia + ib, ja + jb)] += a.coeffs[ka] * b.coeffs[kb];
        }
    }
    Polynomial { basis, coeffs }
}

/// Coefficients of `d(poly)/d(axis)` over the *same* basis (the derivative has
/// lower degree, so the trailing block is zero). `axis` is 0 for `xi`, 1 for
/// `eta`.
pub fn diff_coeffs(basis: &MonomialBasis, coeffs: &[f64], axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; basis.dim()];
    for (k, &(i, j)) in basis.exps.iter().enumerate() {
        let c = coeffs[k];
        if c == 0.0 {
            continue;
        }
        match axis {
            0 if i > 0 => out[basis.index(i - 1, j)] += i as f64 * c,
            1 if j > 0 => out[basis.index(i, j - 1)] += j as f64 * c,
            _ => {}
        }
    }
    out
}

/// Evaluated shape set: one entry per member. Hessians are `[dxx, dxy, dyy]`
/// (symmetric by representation), all in physical coordinates.
#[derive(Clone, Debug)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
    pub hessians: Vec<[f64; 3]>,
}

/// A set of polynomials (shape functions) sharing one monomial basis and one
/// local frame `xi = (x - center) / scale`.
#[derive(Clone, Debug)]
pub struct PolyBasis {
    monomials: MonomialBasis,
    /// `dim x n_members`; column `b` holds the coefficients of member `b`.
    coeffs: DMatrix<f64>,
    center: Point2,
    scale: f64,
}

impl PolyBasis {
    pub fn new(degree: u32, coeffs: DMatrix<f64>, center: Point2, scale: f64) -> Self {
        let monomials = MonomialBasis::new(degree);
        assert_eq!(coeffs.nrows(), monomials.dim());
        assert!(scale > 0.0);
        PolyBasis {
            monomials,
            coeffs,
            center,
            scale,
        }
    }

    pub fn n_members(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn degree(&self) -> u32 {
        self.monomials.degree
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn to_local(&self, x: Point2) -> Point2 {
        (x - self.center).scale(1.0 / self.scale)
    }

    /// Values, gradients, and Hessians of every member at the physical point
    /// `x`, with the local-frame chain rule applied.
    pub fn eval(&self, x: Point2) -> BasisEval {
        let xi = self.to_local(x);
        let dim = self.monomials.dim();
        let n = self.n_members();
        let mut mvals = vec![0.0; dim];
        let mut mgrads = vec![[0.0; 2]; dim];
        let mut mhess = vec![[0.0; 3]; dim];
        self.monomials.values(xi, &mut mvals);
        self.monomials.gradients(xi, &mut mgrads);
        self.monomials.hessians(xi, &mut mhess);

        let inv_h = 1.0 / self.scale;
        let inv_h2 = inv_h * inv_h;
        let mut out = BasisEval {
            values: vec![0.0; n],
            gradients: vec![[0.0; 2]; n],
            hessians: vec![[0.0; 3]; n],
        };
        for b in 0..n {
            let col = self.coeffs.column(b);
            let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
            let (mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0);
            for k in 0..dim {
                let c = col[k];
                if c == 0.0 {
                    continue;
                }
                v += c * mvals[k];
                gx += c * mgrads[k][0];
                gy += c * mgrads[k][1];
                hxx += c * mhess[k][0];
                hxy += c * mhess[k][1];
                hyy += c * mhess[k][2];
            }
            out.values[b] = v;
            out.gradients[b] = [gx * inv_h, gy * inv_h];
            out.hessians[b] = [hxx * inv_h2, hxy * inv_h2, hyy * inv_h2];
        }
        out
    }

    /// The set whose member `b` is the *local-frame* Laplacian of member `b`.
    ///
    /// The result shares this basis' frame, so evaluating it yields local
    /// derivatives wearing one chain-rule factor too few: physical
    /// `lap(member)` is `eval().values[b] / scale^2`, and the physical
    /// gradient of the Laplacian is `eval().gradients[b] / scale^2`.
    pub fn local_laplacian(&self) -> PolyBasis {
        let dim = self.monomials.dim();
        let mut lap = DMatrix::zeros(dim, self.n_members());
        for b in 0..self.n_members() {
            for (k, &(i, j)) in self.monomials.exps.iter().enumerate() {
                let c = self.coeffs[(k, b)];
                if c == 0.0 {
                    continue;
                }
                if i >= 2 {
                    lap[(self.monomials.index(i - 2, j), b)] += (i * (i - 1)) as f64 * c;
                }
                if j >= 2 {
                    lap[(self.monomials.index(i, j - 2), b)] += (j * (j - 1)) as f64 * c;
                }
            }
        }
        PolyBasis {
            monomials: MonomialBasis::new(self.monomials.degree),
            coeffs: lap,
            center: self.center,
            scale: self.scale,
        }
    }
}
