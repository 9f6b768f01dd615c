//! Plain-text exporters: mesh dumps, VTU files for P1 vertex fields,
//! MatrixMarket dumps of symmetric sparse matrices, and an atomic file
//! writer (write to a sibling temp file, then rename) so that readers never
//! observe a partially written result.
//!
//! All floating-point values are written with 17 significant digits
//! (`{:.16e}`), enough to round-trip an `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::mesh::Triangulation;
use crate::sparse::SymSparseMatrix;
use crate::{Error, Result};

/// Format an `f64` with enough digits to round-trip exactly.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize a triangulation as plain text.
///
/// Layout, one record per line, whitespace separated:
///
/// * header: `nv nt ns`,
/// * `nv` vertex lines `x y boundary_flag` (flag 0/1),
/// * `nt` triangle lines `i j k` (vertex indices, counterclockwise),
/// * `ns` side lines `i j t1 t2 nx ny` where `t1`/`t2` are the adjacent
///   triangles (`t2 = -1` on boundary sides) and `(nx, ny)` is the unit
///   normal, oriented from `t1` toward `t2` (outward on the boundary).
pub fn mesh_to_text(mesh: &Triangulation) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.n_sides()
    );
    for (v, p) in mesh.vertices.iter().enumerate() {
        let flag = u8::from(mesh.boundary_vertex[v]);
        let _ = writeln!(out, "{} {} {}", fmt_f64(p.x), fmt_f64(p.y), flag);
    }
    for tri in &mesh.triangles {
        let _ = writeln!(out, "{} {} {}", tri[0], tri[1], tri[2]);
    }
    for side in &mesh.sides {
        let t2 = side.triangle_hi.map_or(-1, |t| t as i64);
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            side.vertices[0],
            side.vertices[1],
            side.triangle_lo,
            t2,
            fmt_f64(side.normal.x),
            fmt_f64(side.normal.y)
        );
    }
    out
}

/// Serialize a triangulation and named piecewise-linear vertex fields as an
/// ASCII VTU (VTK XML unstructured grid) document with `Float64` point data.
///
/// Errors with [`Error::InvalidArgument`] if any field length differs from
/// the vertex count.
pub fn p1_fields_to_vtu(mesh: &Triangulation, fields: &[(&str, &[f64])]) -> Result<String> {
    for (name, values) in fields {
        if values.len() != mesh.n_vertices() {
            return Err(Error::InvalidArgument(format!(
                "field '{name}' has {} values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\"?>");
    let _ = writeln!(
        out,
        "<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">"
    );
    let _ = writeln!(out, "  <UnstructuredGrid>");
    let _ = writeln!(
        out,
        "    <Piece NumberOfPoints=\"{}\" NumberOfCells=\"{}\">",
        mesh.n_vertices(),
        mesh.n_triangles()
    );

    let _ = writeln!(out, "      <Points>");
    let _ = writeln!(
        out,
        "        <DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">"
    );
    for p in &mesh.vertices {
        let _ = writeln!(out, "          {} {} 0", fmt_f64(p.x), fmt_f64(p.y));
    }
    let _ = writeln!(out, "        </DataArray>");
    let _ = writeln!(out, "      </Points>");

    let _ = writeln!(out, "      <Cells>");
    let _ = writeln!(
        out,
        "        <DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">"
    );
    for tri in &mesh.triangles {
        let _ = writeln!(out, "          {} {} {}", tri[0], tri[1], tri[2]);
    }
    let _ = writeln!(out, "        </DataArray>");
    let _ = writeln!(
        out,
        "        <DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">"
    );
    for t in 0..mesh.n_triangles() {
        let _ = writeln!(out, "          {}", 3 * (t + 1));
    }
    let _ = writeln!(out, "        </DataArray>");
    let _ = writeln!(
        out,
        "        <DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">"
    );
    for _ in 0..mesh.n_triangles() {
        let _ = writeln!(out, "          5");
    }
    let _ = writeln!(out, "        </DataArray>");
    let _ = writeln!(out, "      </Cells>");

    let _ = writeln!(out, "      <PointData>");
    for (name, values) in fields {
        let _ = writeln!(
            out,
            "        <DataArray type=\"Float64\" Name=\"{name}\" format=\"ascii\">"
        );
        for v in *values {
            let _ = writeln!(out, "          {}", fmt_f64(*v));
        }
        let _ = writeln!(out, "        </DataArray>");
    }
    let _ = writeln!(out, "      </PointData>");

    let _ = writeln!(out, "    </Piece>");
    let _ = writeln!(out, "  </UnstructuredGrid>");
    let _ = writeln!(out, "</VTKFile>");
    Ok(out)
}

/// Serialize a symmetric sparse matrix in MatrixMarket coordinate format
/// (`real symmetric`, 1-based indices, lower triangle only).
pub fn matrix_to_matrix_market(a: &SymSparseMatrix) -> String {
    let mut entries = Vec::new();
    for i in 0..a.dim() {
        for (j, value) in a.row(i) {
            if j <= i {
                entries.push((i, j, value));
            }
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "%%MatrixMarket matrix coordinate real symmetric");
    let _ = writeln!(out, "{} {} {}", a.dim(), a.dim(), entries.len());
    for (i, j, value) in entries {
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, fmt_f64(value));
    }
    out
}

/// Write `contents` to `path` atomically: the bytes go to a sibling
/// temporary file first and are renamed into place, so a concurrent reader
/// sees either the old file or the complete new one, never a prefix.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("path '{}' has no file name", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
