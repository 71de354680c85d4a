//! Sampled meshes of tiles and shells, written as OBJ or legacy VTK text.

use std::fmt::Write as _;

use crate::geom2d::RegionIndex;
use crate::trim::{P3, TrimmedTrivariate};
use crate::Spline;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<P3>,
    pub quads: Vec<[usize; 4]>,
    pub hexes: Vec<[usize; 8]>,
    /// Source tile or surface of each quad.
    pub quad_part: Vec<usize>,
    /// Source tile of each hexahedron.
    pub hex_part: Vec<usize>,
}

fn lin(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Samples every tile on a `res^3` parameter grid and maps the samples
/// through `t`. Each tile contributes hexahedra and its six boundary faces
/// as quads. With `explode > 0` every tile is shifted away from the common
/// center by `explode` times its own center offset.
pub fn tessellate_tiles(t: &Spline, tiles: &[Spline], res: usize, explode: f64) -> Mesh {
    let res = res.max(2);
    let mut mesh = Mesh::default();
    let mut blocks: Vec<Vec<P3>> = Vec::with_capacity(tiles.len());
    for tile in tiles {
        let lo = tile.domain_lo();
        let hi = tile.domain_hi();
        let mut pts = Vec::with_capacity(res * res * res);
        for i in 0..res {
            for j in 0..res {
                for k in 0..res {
                    let p = [lin(lo[0], hi[0], i, res), lin(lo[1], hi[1], j, res), lin(lo[2], hi[2], k, res)];
                    let x = t.eval_clamped(&tile.eval_clamped(&p));
                    pts.push([x[0], x[1], x[2]]);
                }
            }
        }
        blocks.push(pts);
    }
    let center = |pts: &[P3]| -> P3 {
        let n = pts.len().max(1) as f64;
        std::array::from_fn(|a| pts.iter().map(|p| p[a]).sum::<f64>() / n)
    };
    let all: Vec<P3> = blocks.iter().flatten().copied().collect();
    let c0 = center(&all);
    let idx = |i: usize, j: usize, k: usize| (i * res + j) * res + k;
    for (ti, pts) in blocks.iter().enumerate() {
        let c = center(pts);
        let off: P3 = std::array::from_fn(|a| explode * (c[a] - c0[a]));
        let base = mesh.vertices.len();
        mesh.vertices.extend(pts.iter().map(|p| [p[0] + off[0], p[1] + off[1], p[2] + off[2]]));
        let v = |i, j, k| base + idx(i, j, k);
        for i in 0..res - 1 {
            for j in 0..res - 1 {
                for k in 0..res - 1 {
                    mesh.hexes.push([
                        v(i, j, k),
                        v(i + 1, j, k),
                        v(i + 1, j + 1, k),
                        v(i, j + 1, k),
                        v(i, j, k + 1),
                        v(i + 1, j, k + 1),
                        v(i + 1, j + 1, k + 1),
                        v(i, j + 1, k + 1),
                    ]);
                    mesh.hex_part.push(ti);
                }
            }
        }
        let m = res - 1;
        for a in 0..res - 1 {
            for b in 0..res - 1 {
                for side in [0, m] {
                    mesh.quads.push([v(side, a, b), v(side, a + 1, b), v(side, a + 1, b + 1), v(side, a, b + 1)]);
                    mesh.quads.push([v(a, side, b), v(a + 1, side, b), v(a + 1, side, b + 1), v(a, side, b + 1)]);
                    mesh.quads.push([v(a, b, side), v(a + 1, b, side), v(a + 1, b + 1, side), v(a, b + 1, side)]);
                    mesh.quad_part.extend([ti; 3]);
                }
            }
        }
    }
    mesh
}

/// Samples every trimming surface of `tt` on a `res^2` grid, keeping the
/// quads whose center lies in the trimmed region, mapped through `tt.t`.
pub fn tessellate_shell(tt: &TrimmedTrivariate, res: usize) -> Mesh {
    let res = res.max(2);
    let mut mesh = Mesh::default();
    for (si, s) in tt.shell.surfaces.iter().enumerate() {
        let (ul, uh) = s.base.domain(0);
        let (vl, vh) = s.base.domain(1);
        let tol = 1e-9 * (uh - ul).hypot(vh - vl);
        let region = RegionIndex::new(&s.region(tol));
        let base = mesh.vertices.len();
        for i in 0..res {
            for j in 0..res {
                let y = s.base.eval_clamped(&[lin(ul, uh, i, res), lin(vl, vh, j, res)]);
                let x = tt.t.eval_clamped(&y);
                mesh.vertices.push([x[0], x[1], x[2]]);
            }
        }
        let v = |i: usize, j: usize| base + i * res + j;
        for i in 0..res - 1 {
            for j in 0..res - 1 {
                let c = [
                    0.5 * (lin(ul, uh, i, res) + lin(ul, uh, i + 1, res)),
                    0.5 * (lin(vl, vh, j, res) + lin(vl, vh, j + 1, res)),
                ];
                if s.loops.is_empty() || region.contains(c) {
                    mesh.quads.push([v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
                    mesh.quad_part.push(si);
                }
            }
        }
    }
    mesh
}

pub fn to_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for p in &mesh.vertices {
        let _ = writeln!(out, "v {:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    let mut part = usize::MAX;
    for (q, g) in mesh.quads.iter().zip(&mesh.quad_part) {
        if *g != part {
            part = *g;
            let _ = writeln!(out, "g part{part}");
        }
        let _ = writeln!(out, "f {} {} {} {}", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1);
    }
    out
}

/// Legacy ASCII VTK unstructured grid with hexahedra and quads, and the
/// source part of every cell as cell data.
pub fn to_vtk(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "trivar tessellation");
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {} double", mesh.vertices.len());
    for p in &mesh.vertices {
        let _ = writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    let cells = mesh.hexes.len() + mesh.quads.len();
    let _ = writeln!(out, "CELLS {cells} {}", 9 * mesh.hexes.len() + 5 * mesh.quads.len());
    for h in &mesh.hexes {
        let _ = writeln!(out, "8 {}", h.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "));
    }
    for q in &mesh.quads {
        let _ = writeln!(out, "4 {} {} {} {}", q[0], q[1], q[2], q[3]);
    }
    let _ = writeln!(out, "CELL_TYPES {cells}");
    for _ in &mesh.hexes {
        let _ = writeln!(out, "12");
    }
    for _ in &mesh.quads {
        let _ = writeln!(out, "9");
    }
    let _ = writeln!(out, "CELL_DATA {cells}");
    let _ = writeln!(out, "SCALARS part int 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for p in mesh.hex_part.iter().chain(&mesh.quad_part) {
        let _ = writeln!(out, "{p}");
    }
    out
}
