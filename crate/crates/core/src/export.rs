//! Plain-text outputs: convergence CSV, slice CSV, legacy VTK, and element
//! matrix dumps. All floats are written with 17 significant digits so the
//! files round-trip exactly and are byte-stable across reruns.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;
use crate::study::ConvergenceTable;

pub const CSV_HEADER: &str = "level,h,dofs,l2_error,h1_error,order_l2,order_h1,iters,seconds";

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Orders are left empty where undefined.
pub fn convergence_csv(table: &ConvergenceTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.level,
            float(r.h),
            r.dofs,
            float(r.l2_error),
            float(r.h1_error),
            optional(r.order_l2),
            optional(r.order_h1),
            r.iters,
            float(r.seconds)
        );
    }
    out
}

pub fn write_convergence_csv(table: &ConvergenceTable, path: &Path) -> Result<()> {
    write_file(path, &convergence_csv(table))
}

/// Header names the coordinates that remain after slicing along the first.
pub fn slice_csv(rows: &[Vec<f64>], dim: usize) -> String {
    let names = ["x", "y", "t"];
    let axes: Vec<&str> = if dim == 3 { names[1..].to_vec() } else { vec!["t"; dim - 1] };
    let mut out = axes.join(",");
    if !out.is_empty() {
        out.push(',');
    }
    out.push_str("u\n");
    for row in rows {
        let fields: Vec<String> = row.iter().map(|&v| float(v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_slice_csv(rows: &[Vec<f64>], dim: usize, path: &Path) -> Result<()> {
    write_file(path, &slice_csv(rows, dim))
}

/// Legacy ASCII VTK 3.0 unstructured grid with the point scalar `u`.
pub fn vtk_string(mesh: &SimplicialMesh, u: &[f64]) -> Result<String> {
    let nv = mesh.num_vertices();
    if u.len() != nv {
        return Err(Error::InvalidInput(format!("{} values for {nv} vertices", u.len())));
    }
    let cell_type = match mesh.dim() {
        1 => 3,
        2 => 5,
        3 => 10,
        d => return Err(Error::Unsupported(format!("VTK output of a {d}D mesh"))),
    };
    let k = mesh.dim() + 1;
    let ne = mesh.num_simplices();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\nspace-time solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {nv} double");
    for p in mesh.vertices() {
        let mut xyz = [0.0; 3];
        xyz[..p.len()].copy_from_slice(p);
        let _ = writeln!(out, "{} {} {}", float(xyz[0]), float(xyz[1]), float(xyz[2]));
    }
    let _ = writeln!(out, "CELLS {ne} {}", ne * (k + 1));
    for s in mesh.simplices() {
        let ids: Vec<String> = s.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{k} {}", ids.join(" "));
    }
    let _ = writeln!(out, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(out, "{cell_type}");
    }
    let _ = writeln!(out, "POINT_DATA {nv}\nSCALARS u double 1\nLOOKUP_TABLE default");
    for &v in u {
        out.push_str(&float(v));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_vtk(mesh: &SimplicialMesh, u: &[f64], path: &Path) -> Result<()> {
    write_file(path, &vtk_string(mesh, u)?)
}

/// One labelled matrix: a `name rows cols` line followed by the rows.
pub fn matrix_block(name: &str, m: &DMatrix<f64>) -> String {
    let mut out = format!("{name} {} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| float(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parse blocks written by [`matrix_block`].
pub fn parse_matrix_blocks(text: &str) -> Result<Vec<(String, DMatrix<f64>)>> {
    let bad = |msg: &str| Error::InvalidInput(format!("matrix dump: {msg}"));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut blocks = Vec::new();
    while let Some(head) = lines.next() {
        let parts: Vec<&str> = head.split_whitespace().collect();
        let [name, rows, cols] = parts[..] else {
            return Err(bad(&format!("bad header '{head}'")));
        };
        let rows: usize = rows.parse().map_err(|_| bad("bad row count"))?;
        let cols: usize = cols.parse().map_err(|_| bad("bad column count"))?;
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = lines.next().ok_or_else(|| bad("truncated block"))?;
            for v in line.split_whitespace() {
                values.push(v.parse::<f64>().map_err(|_| bad(&format!("bad value '{v}'")))?);
            }
        }
        if values.len() != rows * cols {
            return Err(bad(&format!("block '{name}' has {} values, expected {}", values.len(), rows * cols)));
        }
        blocks.push((name.to_string(), DMatrix::from_row_slice(rows, cols, &values)));
    }
    Ok(blocks)
}

/// `P`, row-scaled `Z` and `A_T` of one element of the general-order scheme.
pub fn element_dump(
    element: usize,
    recovery: &crate::eafe_high::FluxRecovery,
    local: &DMatrix<f64>,
) -> String {
    let mut out = String::new();
    out.push_str(&matrix_block(&format!("P[{element}]"), &recovery.p));
    out.push_str(&matrix_block(&format!("Z[{element}]"), &recovery.z_scaled));
    out.push_str(&matrix_block(&format!("A[{element}]"), local));
    out
}
