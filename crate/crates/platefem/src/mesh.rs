//! Triangulations of polygonal approximations to the unit disk.
//!
//! Level 0 is a fan of four triangles joining the origin to the corners of
//! the inscribed square. Each level splits every triangle of the *reference*
//! (square) mesh into four congruent children through the edge midpoints;
//! the correction map [`correction_map`] then pushes the refined square onto
//! the disk, sending every reference vertex `z` to `sqrt(2) |z|_inf z / |z|_2`.
//! Boundary vertices land on the unit circle, so the meshes are the inscribed
//! polygons whose geometry drives everything else in the crate.
//!
//! Sides carry a fixed unit normal: outward on the boundary, and pointing
//! from the lower-indexed into the higher-indexed adjacent triangle in the
//! interior. Methods that need a global normal convention (Argyris side dofs,
//! DG jumps) all lean on this orientation.

use crate::geo::{signed_area_x2, Point2};
use crate::{Error, Result};
use std::collections::HashMap;

/// Default cap on refinement depth (level 8 has 262144 triangles).
pub const DEFAULT_MAX_LEVEL: u32 = 8;

/// An edge of the triangulation together with its adjacency and orientation.
#[derive(Clone, Debug)]
pub struct Side {
    /// Endpoint vertex indices, ascending.
    pub vertices: [usize; 2],
    /// The lower-indexed adjacent triangle.
    pub triangle_lo: usize,
    /// The higher-indexed adjacent triangle; `None` on the boundary.
    pub triangle_hi: Option<usize>,
    /// Fixed unit normal: outward for boundary sides, otherwise pointing
    /// from `triangle_lo` into `triangle_hi`.
    pub normal: Point2,
    pub length: f64,
}

impl Side {
    pub fn is_boundary(&self) -> bool {
        self.triangle_hi.is_none()
    }

    pub fn midpoint(&self, mesh: &Triangulation) -> Point2 {
        mesh.vertices[self.vertices[0]].midpoint(mesh.vertices[self.vertices[1]])
    }
}

/// Shape statistics of a mesh.
#[derive(Clone, Copy, Debug)]
pub struct MeshStats {
    /// Largest triangle diameter.
    pub h_max: f64,
    /// Smallest triangle diameter.
    pub h_min: f64,
    /// Smallest interior angle over all triangles, in degrees.
    pub min_angle_deg: f64,
    /// Largest ratio of diameter to inradius.
    pub shape_regularity: f64,
    /// Total area of the polygon.
    pub area: f64,
}

/// A triangulation of the level-`level` polygonal disk approximation.
#[derive(Clone, Debug)]
pub struct Triangulation {
    pub level: u32,
    /// Corrected (on-disk) vertex coordinates. Vertex 0 is the origin.
    pub vertices: Vec<Point2>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    pub sides: Vec<Side>,
    /// True for vertices on the polygon boundary.
    pub boundary_vertex: Vec<bool>,
    /// Per triangle, the side opposite each local vertex.
    tri_sides: Vec<[usize; 3]>,
}

/// The square-to-disk correction `z -> sqrt(2) |z|_inf z / |z|_2`
/// (and `0 -> 0`). It fixes the diagonals, maps the boundary of the inscribed
/// square onto the unit circle, and keeps the map a bijection with positive
/// Jacobian, so corrected triangulations stay valid.
pub fn correction_map(z: Point2) -> Point2 {
    let ninf = z.norm_inf();
    if ninf == 0.0 {
        return z;
    }
    z.scale(std::f64::consts::SQRT_2 * ninf / z.norm())
}

/// Midpoints used by red refinement, keyed by the sorted endpoint pair.
fn edge_midpoints(
    vertices: &mut Vec<Point2>,
    triangles: &[[usize; 3]],
) -> HashMap<(usize, usize), usize> {
    let mut mids = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            mids.entry(key).or_insert_with(|| {
                vertices.push(vertices[key.0].midpoint(vertices[key.1]));
                vertices.len() - 1
            });
        }
    }
    mids
}

/// One red-refinement sweep in reference coordinates.
fn refine(vertices: &mut Vec<Point2>, triangles: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mids = edge_midpoints(vertices, triangles);
    let mid = |a: usize, b: usize| mids[&(a.min(b), a.max(b))];
    let mut out = Vec::with_capacity(4 * triangles.len());
    for &[a, b, c] in triangles {
        let (mab, mbc, mca) = (mid(a, b), mid(b, c), mid(c, a));
        out.push([a, mab, mca]);
        out.push([b, mbc, mab]);
        out.push([c, mca, mbc]);
        out.push([mab, mbc, mca]);
    }
    out
}

/// Build the level-`level` disk triangulation, refusing levels above
/// [`DEFAULT_MAX_LEVEL`].
pub fn build_disk_mesh(level: u32) -> Result<Triangulation> {
    build_disk_mesh_capped(level, DEFAULT_MAX_LEVEL)
}

/// As [`build_disk_mesh`] with an explicit capacity guard.
pub fn build_disk_mesh_capped(level: u32, max_level: u32) -> Result<Triangulation> {
    if level > max_level {
        return Err(Error::LevelTooDeep {
            requested: level,
            max: max_level,
        });
    }
    let s = 0.5_f64.sqrt();
    let mut vertices = vec![
        Point2::ORIGIN,
        Point2::new(s, s),
        Point2::new(-s, s),
        Point2::new(-s, -s),
        Point2::new(s, -s),
    ];
    let mut triangles = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]];
    for _ in 0..level {
        triangles = refine(&mut vertices, &triangles);
    }
    let vertices: Vec<Point2> = vertices.into_iter().map(correction_map).collect();
    assemble_triangulation(level, vertices, triangles)
}

/// The uncorrected reference mesh: the inscribed square refined `level`
/// times. Useful as a distortion-free control for convergence diagnostics.
#[doc(hidden)]
pub fn build_square_mesh(level: u32) -> Result<Triangulation> {
    if level > DEFAULT_MAX_LEVEL {
        return Err(Error::LevelTooDeep {
            requested: level,
            max: DEFAULT_MAX_LEVEL,
        });
    }
    let s = 0.5_f64.sqrt();
    let mut vertices = vec![
        Point2::ORIGIN,
        Point2::new(s, s),
        Point2::new(-s, s),
        Point2::new(-s, -s),
        Point2::new(s, -s),
    ];
    let mut triangles = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]];
    for _ in 0..level {
        triangles = refine(&mut vertices, &triangles);
    }
    assemble_triangulation(level, vertices, triangles)
}

/// A one-element mesh on the corner triangle (0,0), (1,0), (0,1), for
/// side-convention oracles in unit tests.
#[cfg(test)]
pub(crate) fn single_triangle_mesh() -> Triangulation {
    let vertices = vec![Point2::ORIGIN, Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
    assemble_triangulation(0, vertices, vec![[0, 1, 2]]).expect("valid one-element mesh")
}

/// Wire up sides, normals, and boundary flags for positively oriented cells.
fn assemble_triangulation(
    level: u32,
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
) -> Result<Triangulation> {
    for (t, &[a, b, c]) in triangles.iter().enumerate() {
        if signed_area_x2(vertices[a], vertices[b], vertices[c]) <= 0.0 {
            return Err(Error::BadElement {
                triangle: t,
                detail: "non-positive area".into(),
            });
        }
    }

    // Sides in first-encounter order over the ascending triangle scan; the
    // first triangle that touches a side is therefore its lower-indexed one.
    let mut side_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut sides: Vec<Side> = Vec::new();
    let mut tri_sides = vec![[usize::MAX; 3]; triangles.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for j in 0..3 {
            let (a, b) = (tri[(j + 1) % 3], tri[(j + 2) % 3]);
            let key = (a.min(b), a.max(b));
            let idx = match side_of.get(&key) {
                Some(&idx) => {
                    debug_assert!(sides[idx].triangle_hi.is_none());
                    sides[idx].triangle_hi = Some(t);
                    idx
                }
                None => {
                    let tangent = vertices[key.1] - vertices[key.0];
                    let length = tangent.norm();
                    sides.push(Side {
                        vertices: [key.0, key.1],
                        triangle_lo: t,
                        triangle_hi: None,
                        normal: tangent.perp().scale(1.0 / length),
                        length,
                    });
                    side_of.insert(key, sides.len() - 1);
                    sides.len() - 1
                }
            };
            tri_sides[t][j] = idx;
        }
    }

    let centroid = |t: usize| -> Point2 {
        let [a, b, c] = triangles[t];
        (vertices[a] + vertices[b] + vertices[c]).scale(1.0 / 3.0)
    };
    let mut boundary_vertex = vec![false; vertices.len()];
    for side in sides.iter_mut() {
        let target = match side.triangle_hi {
            Some(hi) => centroid(hi) - centroid(side.triangle_lo),
            None => {
                boundary_vertex[side.vertices[0]] = true;
                boundary_vertex[side.vertices[1]] = true;
                let mid = vertices[side.vertices[0]].midpoint(vertices[side.vertices[1]]);
                mid - centroid(side.triangle_lo)
            }
        };
        if side.normal.dot(target) < 0.0 {
            side.normal = -side.normal;
        }
    }

    Ok(Triangulation {
        level,
        vertices,
        triangles,
        sides,
        boundary_vertex,
        tri_sides,
    })
}

impl Triangulation {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_sides(&self) -> usize {
        self.sides.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * signed_area_x2(a, b, c)
    }

    pub fn triangle_diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        a.dist(b).max(b.dist(c)).max(c.dist(a))
    }

    pub fn centroid(&self, t: usize) -> Point2 {
        let [a, b, c] = self.triangle_points(t);
        (a + b + c).scale(1.0 / 3.0)
    }

    /// Side indices of triangle `t`; entry `j` is the side opposite local
    /// vertex `j` (joining local vertices `j+1` and `j+2`).
    pub fn triangle_sides(&self, t: usize) -> [usize; 3] {
        self.tri_sides[t]
    }

    /// Total polygon area.
    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Largest triangle diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| self.triangle_diameter(t))
            .fold(0.0, f64::max)
    }

    pub fn stats(&self) -> MeshStats {
        let mut h_max: f64 = 0.0;
        let mut h_min = f64::INFINITY;
        let mut min_angle = f64::INFINITY;
        let mut regularity: f64 = 0.0;
        for t in 0..self.n_triangles() {
            let [a, b, c] = self.triangle_points(t);
            let (la, lb, lc) = (b.dist(c), c.dist(a), a.dist(b));
            let diam = la.max(lb).max(lc);
            h_max = h_max.max(diam);
            h_min = h_min.min(diam);
            let area = self.triangle_area(t);
            let inradius = area / (0.5 * (la + lb + lc));
            regularity = regularity.max(diam / inradius);
            for (u, v, w) in [(a, b, c), (b, c, a), (c, a, b)] {
                let (e1, e2) = (v - u, w - u);
                let angle = e1.cross(e2).atan2(e1.dot(e2));
                min_angle = min_angle.min(angle.abs());
            }
        }
        MeshStats {
            h_max,
            h_min,
            min_angle_deg: min_angle.to_degrees(),
            shape_regularity: regularity,
            area: self.area(),
        }
    }

    /// Barycentric coordinates of `x` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, x: Point2) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let inv = 1.0 / signed_area_x2(a, b, c);
        [
            signed_area_x2(x, b, c) * inv,
            signed_area_x2(a, x, c) * inv,
            signed_area_x2(a, b, x) * inv,
        ]
    }

    /// Find a triangle containing `x` (barycentric coordinates ≥ -1e-12).
    /// Ties on shared edges and vertices resolve to the lowest triangle
    /// index, so repeated queries are deterministic.
    pub fn locate_point(&self, x: Point2) -> Result<(usize, [f64; 3])> {
        for t in 0..self.n_triangles() {
            let l = self.barycentric(t, x);
            if l.iter().all(|&li| li >= -1e-12) {
                return Ok((t, l));
            }
        }
        Err(Error::PointOutside { x: x.x, y: x.y })
    }
}

/// A piecewise-affine (P1) field given by one value per vertex.
#[derive(Clone, Debug)]
pub struct P1Field {
    pub vertex_values: Vec<f64>,
}

impl P1Field {
    pub fn new(vertex_values: Vec<f64>) -> Self {
        P1Field { vertex_values }
    }

    /// Nodal interpolation of `f`.
    pub fn interpolate(mesh: &Triangulation, f: &dyn Fn(Point2) -> f64) -> Self {
        P1Field {
            vertex_values: mesh.vertices.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn eval_in(&self, mesh: &Triangulation, t: usize, bary: [f64; 3]) -> f64 {
        let [a, b, c] = mesh.triangles[t];
        bary[0] * self.vertex_values[a]
            + bary[1] * self.vertex_values[b]
            + bary[2] * self.vertex_values[c]
    }

    pub fn eval(&self, mesh: &Triangulation, x: Point2) -> Result<f64> {
        let (t, bary) = mesh.locate_point(x)?;
        Ok(self.eval_in(mesh, t, bary))
    }
}
