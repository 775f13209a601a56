//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one PASS line (failures panic with the measured values).
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use std::time::Instant;

use common::{fit_line, paper_workspace, XorShift};
use msgfem::coefficients::{paper_coefficient, Example};
use msgfem::decomposition::Decomposition;
use msgfem::local_spaces::{steklov_basis, PatchOperators};
use msgfem::mesh::BoundaryLayout;
use msgfem::{CoefficientField, GridMesh, ProblemData};

const EXAMPLES: [Example; 2] = [Example::RandomField, Example::HighContrast];

/// A1: with maximal oversampling (every patch clipped to the whole domain)
/// the glued particular functions reconstruct the fine solution through the
/// PU identity; with full local spaces (all eligible boundary dofs, full
/// spectral dimension) the Galerkin solve is exact on the reconstructed
/// space. Both must reach 1e-8 relative energy error on a 16x16 mesh.
#[test]
fn a1_full_space_oracle() {
    let start = Instant::now();
    // maximal patches: omega* = Omega, no Steklov dofs remain
    let ws = paper_workspace(Example::HighContrast, 16, 0, 2, 2, 16, 1);
    for solver in &ws.solvers {
        assert_eq!(solver.harm.n_boundary, 0, "maximal patches must cover the domain");
    }
    let (_, err_maximal) = ws.solve(1, 0).unwrap();
    assert!(
        err_maximal <= 1e-8,
        "[A1] FAIL maximal-patch error {err_maximal:.3e} > 1e-8"
    );

    // proper subdomains with the full harmonic and spectral spaces
    let ws = paper_workspace(Example::HighContrast, 16, 0, 2, 2, 4, 999);
    let n_full = ws.solvers.iter().map(|s| s.harm.n_boundary).max().unwrap();
    assert!(n_full > 0);
    let (_, err_full) = ws.solve(999, 999).unwrap();
    assert!(
        err_full <= 1e-8,
        "[A1] FAIL full-space error {err_full:.3e} > 1e-8"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "[A1] FAIL runtime {elapsed:?} >= 5 s");
    println!(
        "[A1] PASS full-space oracle: maximal-patch error {err_maximal:.3e}, full-space error {err_full:.3e} (<= 1e-8), {elapsed:?}"
    );
}

/// A2: the PU reconstruction identity holds to 1e-14 max-norm for 100
/// random vectors on every tested decomposition.
#[test]
fn a2_pu_reconstruction() {
    let start = Instant::now();
    let mesh = GridMesh::new(40, 40).unwrap();
    let mut rng = XorShift(0xA2A2_A2A2);
    let mut worst = 0.0f64;
    for &m in &[2usize, 4] {
        for &overlap in &[1usize, 2, 3] {
            let decomp = Decomposition::new(&mesh, m, overlap, 0).unwrap();
            for _ in 0..100 {
                let v: Vec<f64> = (0..mesh.n_nodes()).map(|_| rng.next_f64()).collect();
                let r = decomp.reconstruct(&v).unwrap();
                let diff = v
                    .iter()
                    .zip(&r)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(diff);
            }
        }
    }
    assert!(worst <= 1e-14, "[A2] FAIL reconstruction defect {worst:.3e} > 1e-14");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "[A2] FAIL runtime {elapsed:?} >= 5 s");
    println!("[A2] PASS PU reconstruction defect {worst:.3e} <= 1e-14 ({elapsed:?})");
}

/// A3: every Steklov basis column is discrete A-harmonic to 1e-9 relative
/// interior residual on both coefficient examples (mesh 100, m=4, ell=8,
/// s=40). The relative scale is floored at the componentwise round-off
/// level so zero-energy constant modes are measurable.
#[test]
fn a3_a_harmonicity() {
    let start = Instant::now();
    let mesh = GridMesh::new(100, 100).unwrap();
    let decomp = Decomposition::new(&mesh, 4, 2, 8).unwrap();
    let mut worst = 0.0f64;
    for example in EXAMPLES {
        let coeff = paper_coefficient(&mesh, example, 1).unwrap();
        for i in 0..decomp.n_subdomains() {
            let ops = PatchOperators::build(&mesh, &coeff, &decomp, i).unwrap();
            let harm = steklov_basis(&ops, 40).unwrap();
            for col in &harm.columns {
                worst = worst.max(ops.harmonicity_residual(col));
            }
        }
    }
    assert!(worst <= 1e-9, "[A3] FAIL max interior residual {worst:.3e} > 1e-9");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "[A3] FAIL runtime {elapsed:?} >= 2 min");
    println!("[A3] PASS A-harmonicity: max interior residual {worst:.3e} <= 1e-9 ({elapsed:?})");
}

/// A4: spectral structure of the local eigenproblems: interior and
/// pure-Neumann subdomains have lambda_1 <= 1e-8 with a constant first
/// eigenvector, Dirichlet-touching subdomains have lambda_1 > 0, and the
/// eigenvalues are nondecreasing.
#[test]
fn a4_spectral_structure() {
    let mut interior_seen = 0usize;
    let mut dirichlet_seen = 0usize;
    for example in EXAMPLES {
        let ws = paper_workspace(example, 50, 3, 4, 2, 4, 40);
        let locals = ws.local_spaces(40, 10).unwrap();
        for space in &locals {
            for w in space.eigenvalues.windows(2) {
                assert!(
                    w[0] <= w[1] + 1e-12 * w[1].abs().max(1.0),
                    "[A4] FAIL eigenvalues not nondecreasing: {:?}",
                    space.eigenvalues
                );
            }
            if space.touches_dirichlet {
                dirichlet_seen += 1;
                assert!(
                    space.eigenvalues[0] > 0.0,
                    "[A4] FAIL Dirichlet-touching subdomain {} has lambda_1 = {:.3e}",
                    space.subdomain,
                    space.eigenvalues[0]
                );
            } else {
                interior_seen += 1;
                assert!(
                    space.eigenvalues[0] <= 1e-8,
                    "[A4] FAIL interior subdomain {} has lambda_1 = {:.3e} > 1e-8",
                    space.subdomain,
                    space.eigenvalues[0]
                );
                let c = &space.basis[0];
                let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let mean: f64 = c.iter().sum::<f64>() / c.len() as f64;
                let dev = c.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
                assert!(
                    dev <= 1e-6 * scale,
                    "[A4] FAIL first eigenvector not constant: deviation {dev:.3e} vs scale {scale:.3e}"
                );
            }
        }
    }
    assert!(interior_seen > 0 && dirichlet_seen > 0);
    println!(
        "[A4] PASS spectral structure on {interior_seen} interior/Neumann and {dirichlet_seen} Dirichlet-touching subdomains"
    );
}

/// A5: error decay in n_loc (mesh 100, m=4, ell in {0,4,8}, n_loc = 2..16,
/// both examples, fixed s = 64 so the trial spaces are nested):
/// (a) nonincreasing error up to 1e-10 slack,
/// (b) steeper log2(error) slope at ell = 8 than at ell = 0,
/// (c) error(n_loc=10, ell=8) <= 0.2 error(n_loc=10, ell=0).
#[test]
fn a5_nloc_decay_trend() {
    let start = Instant::now();
    let nloc_values: Vec<usize> = (2..=16).collect();
    for example in EXAMPLES {
        let mut slopes = std::collections::BTreeMap::new();
        let mut err10 = std::collections::BTreeMap::new();
        for &ell in &[0usize, 4, 8] {
            let ws = paper_workspace(example, 100, 1, 4, 2, ell, 64);
            let mut errors = Vec::new();
            for &n_loc in &nloc_values {
                let (_, error) = ws.solve(64, n_loc).unwrap();
                errors.push(error);
            }
            for (k, pair) in errors.windows(2).enumerate() {
                assert!(
                    pair[1] <= pair[0] + 1e-10,
                    "[A5] FAIL {example} ell={ell}: error rose {:.6e} -> {:.6e} at n_loc {}",
                    pair[0],
                    pair[1],
                    nloc_values[k + 1]
                );
            }
            let xs: Vec<f64> = nloc_values.iter().map(|&n| n as f64).collect();
            let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
            let (slope, _, _) = fit_line(&xs, &ys);
            slopes.insert(ell, slope);
            err10.insert(ell, errors[nloc_values.iter().position(|&n| n == 10).unwrap()]);
        }
        assert!(
            slopes[&8] < slopes[&0],
            "[A5] FAIL {example}: slope(ell=8) = {:.3} not steeper than slope(ell=0) = {:.3}",
            slopes[&8],
            slopes[&0]
        );
        assert!(
            err10[&8] <= 0.2 * err10[&0],
            "[A5] FAIL {example}: error(10, ell=8) = {:.3e} > 0.2 * {:.3e}",
            err10[&8],
            err10[&0]
        );
        println!(
            "[A5] {example}: slopes ell0 {:.3} ell4 {:.3} ell8 {:.3}; error(10) ratio {:.3}",
            slopes[&0],
            slopes[&4],
            slopes[&8],
            err10[&8] / err10[&0]
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "[A5] FAIL runtime {elapsed:?} >= 10 min");
    println!("[A5] PASS n_loc decay trend on both examples ({elapsed:?})");
}

/// A6: log2(error) vs rho = H/H* fits an affine model with R^2 >= 0.9 at
/// n_loc in {6, 12}, and the n_loc = 12 slope magnitude exceeds the
/// n_loc = 6 one.
#[test]
fn a6_oversampling_trend() {
    let ell_values = [2usize, 4, 6, 8, 10, 12];
    for example in EXAMPLES {
        let mut by_nloc: std::collections::BTreeMap<usize, Vec<(f64, f64)>> =
            std::collections::BTreeMap::new();
        for &ell in &ell_values {
            let ws = paper_workspace(example, 100, 1, 4, 2, ell, 64);
            for &n_loc in &[6usize, 12] {
                let (_, error) = ws.solve(64, n_loc).unwrap();
                by_nloc.entry(n_loc).or_default().push((ws.decomp.rho(), error));
            }
        }
        let mut slope_mag = std::collections::BTreeMap::new();
        for (&n_loc, pts) in &by_nloc {
            let xs: Vec<f64> = pts.iter().map(|&(rho, _)| rho).collect();
            let ys: Vec<f64> = pts.iter().map(|&(_, e)| e.log2()).collect();
            let (slope, _, r2) = fit_line(&xs, &ys);
            assert!(
                r2 >= 0.9,
                "[A6] FAIL {example} n_loc={n_loc}: affine fit R^2 = {r2:.4} < 0.9"
            );
            slope_mag.insert(n_loc, slope.abs());
            println!("[A6] {example} n_loc={n_loc}: slope {slope:+.2}, R^2 {r2:.4}");
        }
        assert!(
            slope_mag[&12] > slope_mag[&6],
            "[A6] FAIL {example}: |slope(12)| = {:.2} <= |slope(6)| = {:.2}",
            slope_mag[&12],
            slope_mag[&6]
        );
    }
    println!("[A6] PASS oversampling trend (affine in rho, steeper for larger n_loc)");
}

/// A7: Steklov plateau at m=4, ell=8, n_loc=10: error(s) never rises more
/// than the 15% plateau tolerance above its running minimum, the plateau
/// variation |error(40) - error(80)| stays within 0.15 error(80), and
/// s = 80 remains well below dim W_h.
#[test]
fn a7_steklov_plateau() {
    let s_values = [10usize, 20, 40, 80];
    for example in EXAMPLES {
        let ws = paper_workspace(example, 100, 1, 4, 2, 8, 80);
        let dim_min = ws.solvers.iter().map(|s| s.harm.n_boundary).min().unwrap();
        let dim_max = ws.solvers.iter().map(|s| s.harm.n_boundary).max().unwrap();
        assert!(
            2 * 80 <= dim_max,
            "[A7] FAIL s=80 not well below the interior dim W_h = {dim_max}"
        );
        let mut errors = Vec::new();
        for &s in &s_values {
            let (_, error) = ws.solve(s, 10).unwrap();
            errors.push(error);
        }
        let mut running_min = f64::INFINITY;
        for (&s, &e) in s_values.iter().zip(&errors) {
            assert!(
                e <= 1.15 * running_min + 1e-10,
                "[A7] FAIL {example}: error(s={s}) = {e:.3e} rises above the plateau tolerance (min so far {running_min:.3e})"
            );
            running_min = running_min.min(e);
        }
        let e40 = errors[2];
        let e80 = errors[3];
        assert!(
            (e40 - e80).abs() <= 0.15 * e80,
            "[A7] FAIL {example}: |error(40) - error(80)| = {:.3e} > 0.15 * {e80:.3e}",
            (e40 - e80).abs()
        );
        println!(
            "[A7] {example}: errors at s=10,20,40,80 = {:.3e}, {:.3e}, {:.3e}, {:.3e} (dim W_h in [{dim_min}, {dim_max}])",
            errors[0], errors[1], errors[2], errors[3]
        );
    }
    println!("[A7] PASS Steklov plateau with s << dim W_h");
}

/// A8: the fine solver reproduces constants exactly and converges at the
/// expected O(h) energy rate on a manufactured solution.
#[test]
fn a8_fine_solver_verification() {
    // constant solution with the benchmark boundary split
    let mesh = GridMesh::new(24, 24).unwrap();
    let coeff = CoefficientField::constant(&mesh, 1.0);
    let k = msgfem::assemble::assemble_stiffness(&mesh, &coeff).unwrap();
    let data = ProblemData::new(|_, _| 0.0, |_, _| 0.0, |_, _| 1.0);
    let load = msgfem::assemble::assemble_load(&mesh, data.f.as_ref(), data.g.as_ref());
    let u = msgfem::gfem::reference_solve(&mesh, &k, &load, &data).unwrap();
    let worst = u.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-10, "[A8] FAIL constant solution error {worst:.3e} > 1e-10");

    // manufactured Dirichlet problem: u = sin(pi x) sin(pi y)
    use std::f64::consts::PI;
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let mesh = GridMesh::with_layout(n, n, BoundaryLayout::DirichletAll).unwrap();
        let coeff = CoefficientField::constant(&mesh, 1.0);
        let k = msgfem::assemble::assemble_stiffness(&mesh, &coeff).unwrap();
        let data = ProblemData::new(
            |x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin(),
            |_, _| 0.0,
            |_, _| 0.0,
        );
        let load = msgfem::assemble::assemble_load(&mesh, data.f.as_ref(), data.g.as_ref());
        let u = msgfem::gfem::reference_solve(&mesh, &k, &load, &data).unwrap();
        let err = msgfem::assemble::energy_error_vs_exact(&mesh, &coeff, &u, &|x, y| {
            (
                PI * (PI * x).cos() * (PI * y).sin(),
                PI * (PI * x).sin() * (PI * y).cos(),
            )
        });
        hs.push((1.0 / n as f64).ln());
        errs.push(err.ln());
    }
    let (rate, _, _) = fit_line(&hs, &errs);
    assert!(
        (0.9..=1.1).contains(&rate),
        "[A8] FAIL manufactured convergence rate {rate:.3} outside [0.9, 1.1]"
    );
    println!("[A8] PASS fine solver: constant exact to {worst:.3e}, energy rate {rate:.3}");
}

/// A9: the oversampling bound shape h(s).
#[test]
fn a9_h_of_s_utility() {
    let mid = msgfem::gfem::h_of_s(0.5).unwrap();
    assert!(
        (mid - (1.0 - std::f64::consts::LN_2)).abs() <= 1e-12,
        "[A9] FAIL h(0.5) = {mid}"
    );
    let mut last = f64::INFINITY;
    for i in 1..1000 {
        let s = i as f64 / 1000.0;
        let h = msgfem::gfem::h_of_s(s).unwrap();
        assert!(h < last, "[A9] FAIL h not monotone decreasing at s = {s}");
        assert!(
            h >= (0.75 - s).max((1.0 - s) / 2.0) - 1e-12,
            "[A9] FAIL lower bound violated at s = {s}: h = {h}"
        );
        last = h;
    }
    println!("[A9] PASS h(s): h(0.5) = 1 - ln 2, monotone, lower bound holds on the grid");
}
