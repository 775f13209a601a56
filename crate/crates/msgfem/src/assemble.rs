//! Assembly of stiffness, load and boundary-mass objects for bilinear
//! quadrilaterals, plus energy-norm evaluation.
//!
//! The coefficient is element-constant, so the element stiffness is exact
//! (closed form); loads use 2x2 Gauss per cell and 2-point Gauss per
//! boundary edge.

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::mesh::{CellRect, Edge, GridMesh};
use crate::sparse::{check_len, DofVector, SparseSymMatrix, TripletBuilder};

const GAUSS_2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Exact stiffness of one a x b cell with constant coefficient, local node
/// ordering counterclockwise from the lower-left corner.
pub fn element_stiffness(hx: f64, hy: f64, coeff: f64) -> [[f64; 4]; 4] {
    let rx = hy / hx / 6.0;
    let ry = hx / hy / 6.0;
    // d/dx and d/dy Gram matrices of the bilinear shape functions
    let kx = [
        [2.0, -2.0, -1.0, 1.0],
        [-2.0, 2.0, 1.0, -1.0],
        [-1.0, 1.0, 2.0, -2.0],
        [1.0, -1.0, -2.0, 2.0],
    ];
    let ky = [
        [2.0, 1.0, -1.0, -2.0],
        [1.0, 2.0, -2.0, -1.0],
        [-1.0, -2.0, 2.0, 1.0],
        [-2.0, -1.0, 1.0, 2.0],
    ];
    let mut k = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            k[i][j] = coeff * (rx * kx[i][j] + ry * ky[i][j]);
        }
    }
    k
}

fn shape_values(xi: f64, eta: f64) -> [f64; 4] {
    [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ]
}

/// Global stiffness matrix for the A-weighted Dirichlet form.
///
/// Rejects coefficients with non-positive element values; the result is
/// symmetric positive semidefinite with the constant vector in its nullspace
/// (before any Dirichlet elimination).
pub fn assemble_stiffness(mesh: &GridMesh, coeff: &CoefficientField) -> Result<SparseSymMatrix> {
    coeff.check_compatible(mesh)?;
    let full = CellRect { x0: 0, x1: mesh.n_cells_x(), y0: 0, y1: mesh.n_cells_y() };
    assemble_stiffness_on(mesh, coeff, &full, |_mesh, ix, iy| mesh.node_id(ix, iy), mesh.n_nodes())
}

/// Stiffness restricted to the cells of `rect`, over rect-local node
/// numbering (row-major within the rect). This realizes the local bilinear
/// form a_omega(.,.) as an integral over the rect only.
pub fn assemble_stiffness_rect(
    mesh: &GridMesh,
    coeff: &CoefficientField,
    rect: &CellRect,
) -> Result<SparseSymMatrix> {
    coeff.check_compatible(mesh)?;
    assemble_stiffness_on(mesh, coeff, rect, |_mesh, ix, iy| rect.local_node(ix, iy), rect.n_nodes())
}

fn assemble_stiffness_on(
    mesh: &GridMesh,
    coeff: &CoefficientField,
    rect: &CellRect,
    node_index: impl Fn(&GridMesh, usize, usize) -> usize,
    n: usize,
) -> Result<SparseSymMatrix> {
    let mut builder = TripletBuilder::with_capacity(n, rect.n_cells() * 16);
    for (cx, cy) in rect.cells() {
        let e = mesh.element_id(cx, cy);
        let a_e = coeff.value(e);
        if a_e <= 0.0 {
            return Err(Error::NonPositiveCoefficient { element: e, value: a_e });
        }
        let k = element_stiffness(mesh.hx(), mesh.hy(), a_e);
        let local = [
            node_index(mesh, cx, cy),
            node_index(mesh, cx + 1, cy),
            node_index(mesh, cx + 1, cy + 1),
            node_index(mesh, cx, cy + 1),
        ];
        for i in 0..4 {
            for j in 0..4 {
                builder.push(local[i], local[j], k[i][j]);
            }
        }
    }
    Ok(builder.finalize())
}

/// Load vector F_k = int f phi_k + int_{Neumann boundary} g phi_k.
pub fn assemble_load(
    mesh: &GridMesh,
    f: &dyn Fn(f64, f64) -> f64,
    g: &dyn Fn(f64, f64) -> f64,
) -> DofVector {
    let full = CellRect { x0: 0, x1: mesh.n_cells_x(), y0: 0, y1: mesh.n_cells_y() };
    let mut out = vec![0.0; mesh.n_nodes()];
    add_volume_load(mesh, &full, f, &mut out, |ix, iy| mesh.node_id(ix, iy));
    for edge in mesh.neumann_edges() {
        add_edge_load(mesh, edge, g, &mut out, |node| node);
    }
    out
}

/// Load restricted to a rect: f over the rect cells and g over the part of
/// the Neumann boundary covered by the rect, in rect-local numbering.
pub fn assemble_load_rect(
    mesh: &GridMesh,
    rect: &CellRect,
    f: &dyn Fn(f64, f64) -> f64,
    g: &dyn Fn(f64, f64) -> f64,
) -> DofVector {
    let mut out = vec![0.0; rect.n_nodes()];
    add_volume_load(mesh, rect, f, &mut out, |ix, iy| rect.local_node(ix, iy));
    for edge in mesh.neumann_edges() {
        let (ax, ay) = mesh.node_coords_of(edge.a);
        let (bx, by) = mesh.node_coords_of(edge.b);
        let inside = ax >= rect.x0
            && ax <= rect.x1
            && bx >= rect.x0
            && bx <= rect.x1
            && ay >= rect.y0
            && ay <= rect.y1
            && by >= rect.y0
            && by <= rect.y1
            // horizontal Neumann edges must bound a rect cell row
            && (ay != by || (ay == rect.y0 || ay == rect.y1))
            && ax.min(bx) < rect.x1;
        if inside {
            add_edge_load(mesh, edge, g, &mut out, |node| {
                let (ix, iy) = mesh.node_coords_of(node);
                rect.local_node(ix, iy)
            });
        }
    }
    out
}

fn add_volume_load(
    mesh: &GridMesh,
    rect: &CellRect,
    f: &dyn Fn(f64, f64) -> f64,
    out: &mut [f64],
    node_index: impl Fn(usize, usize) -> usize,
) {
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let jac = hx * hy / 4.0;
    for (cx, cy) in rect.cells() {
        let x0 = cx as f64 * hx;
        let y0 = cy as f64 * hy;
        let local = [
            node_index(cx, cy),
            node_index(cx + 1, cy),
            node_index(cx + 1, cy + 1),
            node_index(cx, cy + 1),
        ];
        for &xi in &GAUSS_2 {
            for &eta in &GAUSS_2 {
                let x = x0 + (xi + 1.0) * 0.5 * hx;
                let y = y0 + (eta + 1.0) * 0.5 * hy;
                let fv = f(x, y) * jac;
                let phi = shape_values(xi, eta);
                for i in 0..4 {
                    out[local[i]] += fv * phi[i];
                }
            }
        }
    }
}

fn add_edge_load(
    mesh: &GridMesh,
    edge: Edge,
    g: &dyn Fn(f64, f64) -> f64,
    out: &mut [f64],
    node_index: impl Fn(usize) -> usize,
) {
    let (xa, ya) = mesh.node_xy(edge.a);
    let (xb, yb) = mesh.node_xy(edge.b);
    let len = ((xb - xa).powi(2) + (yb - ya).powi(2)).sqrt();
    let (ia, ib) = (node_index(edge.a), node_index(edge.b));
    for &t in &GAUSS_2 {
        let wa = 0.5 * (1.0 - t);
        let wb = 0.5 * (1.0 + t);
        let x = wa * xa + wb * xb;
        let y = wa * ya + wb * yb;
        let gv = g(x, y) * len * 0.5;
        out[ia] += gv * wa;
        out[ib] += gv * wb;
    }
}

/// Boundary mass matrix int_edges phi_i phi_j over the given mesh edges,
/// assembled with the exact 1D linear mass block per edge.
pub fn assemble_boundary_mass(mesh: &GridMesh, edges: &[Edge]) -> Result<SparseSymMatrix> {
    assemble_boundary_mass_mapped(mesh, edges, |node| node, mesh.n_nodes())
}

/// Same as [`assemble_boundary_mass`] but with a node renumbering, used for
/// patch-local systems.
pub fn assemble_boundary_mass_mapped(
    mesh: &GridMesh,
    edges: &[Edge],
    node_index: impl Fn(usize) -> usize,
    n: usize,
) -> Result<SparseSymMatrix> {
    let mut builder = TripletBuilder::with_capacity(n, edges.len() * 4);
    for &edge in edges {
        let len = mesh.edge_length(edge)?;
        let (ia, ib) = (node_index(edge.a), node_index(edge.b));
        let m = len / 6.0;
        builder.push(ia, ia, 2.0 * m);
        builder.push(ib, ib, 2.0 * m);
        builder.push(ia, ib, m);
        builder.push(ib, ia, m);
    }
    Ok(builder.finalize())
}

/// sqrt(u' K u), clamping tiny negative round-off to zero.
pub fn energy_norm(k: &SparseSymMatrix, u: &[f64]) -> Result<f64> {
    check_len(u, k.n())?;
    let q = k.bilinear(u, u);
    if q >= 0.0 {
        return Ok(q.sqrt());
    }
    let unorm2: f64 = u.iter().map(|x| x * x).sum();
    let scale = k.max_abs() * unorm2;
    if q >= -1e-12 * scale {
        Ok(0.0)
    } else {
        Err(Error::IndefiniteForm { value: q })
    }
}

/// Energy seminorm of the difference between a FE field and an exact
/// solution with known gradient, by 3x3 Gauss per cell. Used as an
/// independent convergence oracle.
pub fn energy_error_vs_exact(
    mesh: &GridMesh,
    coeff: &CoefficientField,
    u: &[f64],
    grad_exact: &dyn Fn(f64, f64) -> (f64, f64),
) -> f64 {
    let g3 = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
    let w3 = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let jac = hx * hy / 4.0;
    let mut acc = 0.0;
    for e in 0..mesh.n_elements() {
        let nodes = mesh.element_nodes(e);
        let vals = [u[nodes[0]], u[nodes[1]], u[nodes[2]], u[nodes[3]]];
        let (cx, cy) = mesh.element_coords_of(e);
        let x0 = cx as f64 * hx;
        let y0 = cy as f64 * hy;
        let a_e = coeff.value(e);
        for (p, &xi) in g3.iter().enumerate() {
            for (q, &eta) in g3.iter().enumerate() {
                let x = x0 + (xi + 1.0) * 0.5 * hx;
                let y = y0 + (eta + 1.0) * 0.5 * hy;
                // FE gradient of the bilinear interpolant at (xi, eta)
                let dphi_dxi = [
                    -0.25 * (1.0 - eta),
                    0.25 * (1.0 - eta),
                    0.25 * (1.0 + eta),
                    -0.25 * (1.0 + eta),
                ];
                let dphi_deta = [
                    -0.25 * (1.0 - xi),
                    -0.25 * (1.0 + xi),
                    0.25 * (1.0 + xi),
                    0.25 * (1.0 - xi),
                ];
                let mut gx = 0.0;
                let mut gy = 0.0;
                for i in 0..4 {
                    gx += vals[i] * dphi_dxi[i] * 2.0 / hx;
                    gy += vals[i] * dphi_deta[i] * 2.0 / hy;
                }
                let (ex, ey) = grad_exact(x, y);
                let (dx, dy) = (gx - ex, gy - ey);
                acc += w3[p] * w3[q] * a_e * (dx * dx + dy * dy) * jac;
            }
        }
    }
    acc.sqrt()
}

/// Writes a nodal field as "x,y,value" CSV rows.
pub fn write_nodal_csv(
    mesh: &GridMesh,
    field: &[f64],
    path: &std::path::Path,
) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,y,value")?;
    for (k, &v) in field.iter().enumerate() {
        let (x, y) = mesh.node_xy(k);
        writeln!(out, "{x},{y},{v}")?;
    }
    Ok(())
}
