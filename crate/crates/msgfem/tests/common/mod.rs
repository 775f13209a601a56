//! Shared helpers for the integration and acceptance suites.
#![allow(dead_code)] // each test target uses a subset

use msgfem::coefficients::{paper_coefficient, paper_problem_data, Example};
use msgfem::gfem::GfemWorkspace;
use msgfem::GridMesh;

/// Least-squares line fit returning (slope, intercept, r_squared).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let ybar = sy / n;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, intercept, r2)
}

/// Workspace for one benchmark example with its default problem data.
pub fn paper_workspace(
    example: Example,
    mesh_n: usize,
    seed: u64,
    m: usize,
    overlap: usize,
    ell: usize,
    s_max: usize,
) -> GfemWorkspace {
    let mesh = GridMesh::new(mesh_n, mesh_n).unwrap();
    let coeff = paper_coefficient(&mesh, example, seed).unwrap();
    let data = paper_problem_data(example);
    GfemWorkspace::build(mesh, coeff, data, m, overlap, ell, s_max).unwrap()
}

/// Deterministic uniform samples in [-0.5, 0.5).
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }
}
