//! Global driver: glues local particular functions and spectral bases with
//! the partition-of-unity operators, solves the coarse Galerkin problem,
//! provides the fine reference solve, the energy-error metric and the
//! oversampling bound shape h(s).

use rayon::prelude::*;

use crate::assemble::{assemble_load, assemble_stiffness, energy_norm};
use crate::coefficients::{CoefficientField, ProblemData};
use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::linalg::{pivoted_psd_solve, SpdSolver};
use crate::local_spaces::{LocalSpace, SubdomainSolver};
use crate::mesh::GridMesh;
use crate::sparse::{SparseSymMatrix, SparseVec};

/// Coarse basis columns with a-norm below this are degenerate PU images
/// and get dropped.
const COLUMN_NORM_TOL: f64 = 1e-13;
/// Relative pivot drop tolerance of the coarse solve.
const PIVOT_DROP_TOL: f64 = 1e-12;

/// Glued global particular function and coarse trial basis.
pub struct GlobalSpace {
    pub u_p: Vec<f64>,
    pub columns: Vec<SparseVec>,
    /// (subdomain, local eigenfunction rank) per retained column.
    pub provenance: Vec<(usize, usize)>,
    pub dropped_columns: usize,
}

/// Output of the coarse Galerkin solve.
pub struct GfemSolution {
    pub u_p: Vec<f64>,
    pub u_s: Vec<f64>,
    pub u_g: Vec<f64>,
    pub coarse_dim: usize,
    pub dropped_columns: usize,
    pub dropped_pivots: usize,
}

/// Builds u_p = sum_i R_i^T Xi_i(psi_i|omega_i) and the glued coarse basis
/// { R_i^T Xi_i(phi_ij|omega_i) }, dropping columns with negligible energy.
pub fn assemble_global(
    mesh: &GridMesh,
    k: &SparseSymMatrix,
    decomp: &Decomposition,
    locals: &[LocalSpace],
) -> Result<GlobalSpace> {
    if locals.len() != decomp.n_subdomains() {
        return Err(Error::DimensionMismatch {
            expected: decomp.n_subdomains(),
            got: locals.len(),
        });
    }
    let n = mesh.n_nodes();
    let mut u_p = vec![0.0; n];
    let mut columns = Vec::new();
    let mut provenance = Vec::new();
    let mut dropped_columns = 0usize;
    for (i, local) in locals.iter().enumerate() {
        let star = &decomp.oversampled[i];
        let core = &decomp.subdomains[i];
        let restrict_to_core = |patch: &[f64]| -> Vec<f64> {
            core.nodes
                .iter()
                .enumerate()
                .map(|(l, _)| {
                    let (ix, iy) = core.rect.local_node_coords(l);
                    patch[star.rect.local_node(ix, iy)]
                })
                .collect()
        };
        let p_core = restrict_to_core(&local.particular);
        decomp.glue(i, &p_core)?.add_into_dense(&mut u_p, 1.0);
        for (j, column) in local.basis.iter().enumerate() {
            let c_core = restrict_to_core(column);
            let glued = decomp.glue(i, &c_core)?;
            let quad = glued.apply_sym(k).dot_sparse(&glued).max(0.0);
            if quad.sqrt() <= COLUMN_NORM_TOL {
                dropped_columns += 1;
                continue;
            }
            columns.push(glued);
            provenance.push((i, j));
        }
    }
    if dropped_columns > 0 {
        eprintln!("dropped {dropped_columns} coarse basis columns with negligible energy");
    }
    Ok(GlobalSpace { u_p, columns, provenance, dropped_columns })
}

/// Coarse Galerkin solve a(u_s, v) = F(v) - a(u_p, v) over the glued basis,
/// with pivot dropping for nearly dependent directions. An empty basis is
/// accepted and yields u_s = 0 (it occurs when every oversampling domain is
/// the whole domain and the particular parts already solve the problem).
pub fn coarse_solve(
    k: &SparseSymMatrix,
    load: &[f64],
    space: &GlobalSpace,
) -> Result<GfemSolution> {
    let n = k.n();
    crate::sparse::check_len(load, n)?;
    let u_p = space.u_p.clone();
    let mut residual = k.matvec(&u_p);
    for (r, &f) in residual.iter_mut().zip(load) {
        *r = f - *r;
    }
    let nc = space.columns.len();
    let mut u_s = vec![0.0; n];
    let mut dropped_pivots = 0usize;
    if nc > 0 {
        let k_cols: Vec<SparseVec> =
            space.columns.par_iter().map(|c| c.apply_sym(k)).collect();
        let mut gram = nalgebra::DMatrix::zeros(nc, nc);
        for q in 0..nc {
            for p in 0..=q {
                // supports of distant subdomains do not intersect
                let (cp, kq) = (&space.columns[p], &k_cols[q]);
                let v = if cp.max_index() < kq.min_index() || kq.max_index() < cp.min_index() {
                    0.0
                } else {
                    cp.dot_sparse(kq)
                };
                gram[(p, q)] = v;
                gram[(q, p)] = v;
            }
        }
        let rhs: Vec<f64> = space.columns.iter().map(|c| c.dot_dense(&residual)).collect();
        let (coeffs, dropped) = pivoted_psd_solve(&gram, &rhs, PIVOT_DROP_TOL)?;
        dropped_pivots = dropped;
        for (c, &w) in space.columns.iter().zip(&coeffs) {
            if w != 0.0 {
                c.add_into_dense(&mut u_s, w);
            }
        }
    }
    let u_g: Vec<f64> = u_p.iter().zip(&u_s).map(|(a, b)| a + b).collect();
    Ok(GfemSolution {
        u_p,
        u_s,
        u_g,
        coarse_dim: nc,
        dropped_columns: space.dropped_columns,
        dropped_pivots,
    })
}

/// Fine-scale reference solution: Dirichlet lift of q plus the reduced
/// solve on the free dofs.
pub fn reference_solve(
    mesh: &GridMesh,
    k: &SparseSymMatrix,
    load: &[f64],
    data: &ProblemData,
) -> Result<Vec<f64>> {
    let n = mesh.n_nodes();
    crate::sparse::check_len(load, n)?;
    let mut lift = vec![0.0; n];
    let mut free = Vec::with_capacity(n);
    for node in 0..n {
        if mesh.is_dirichlet_node(node) {
            let (x, y) = mesh.node_xy(node);
            lift[node] = (data.q)(x, y);
        } else {
            free.push(node);
        }
    }
    let k_lift = k.matvec(&lift);
    let rhs: Vec<f64> = free.iter().map(|&g| load[g] - k_lift[g]).collect();
    let k_ff = k.extract(&free);
    let solver = SpdSolver::new(k_ff)?;
    let x = solver.solve(&rhs)?;
    let mut u = lift;
    for (&g, &v) in free.iter().zip(&x) {
        u[g] = v;
    }
    Ok(u)
}

/// ||u_h - u_G||_a / ||u_h||_a.
pub fn relative_energy_error(k: &SparseSymMatrix, u_h: &[f64], u_g: &[f64]) -> Result<f64> {
    crate::sparse::check_len(u_g, u_h.len())?;
    let denom = energy_norm(k, u_h)?;
    if denom == 0.0 {
        return Err(Error::ZeroNormReference);
    }
    let diff: Vec<f64> = u_h.iter().zip(u_g).map(|(a, b)| a - b).collect();
    Ok(energy_norm(k, &diff)? / denom)
}

/// Oversampling ratio of a decomposition with the matching value of the
/// bound shape h, the quantities steering the theoretical decay rate.
#[derive(Debug, Clone, Copy)]
pub struct TheoryBounds {
    pub rho: f64,
    pub h_of_rho: f64,
}

impl TheoryBounds {
    pub fn for_decomposition(decomp: &Decomposition) -> Result<Self> {
        let rho = decomp.rho();
        Ok(TheoryBounds { rho, h_of_rho: h_of_s(rho)? })
    }
}

/// The oversampling bound shape h(s) = 1 + s log(s) / (1 - s) on [0, 1],
/// extended by continuity with h(0) = 1 and h(1) = 0.
pub fn h_of_s(s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument { name: "s", value: s });
    }
    if s == 0.0 {
        Ok(1.0)
    } else if s == 1.0 {
        Ok(0.0)
    } else {
        Ok(1.0 + s * s.ln() / (1.0 - s))
    }
}

/// Assembled problem plus per-subdomain solvers; the reusable part of a
/// sweep at fixed decomposition parameters.
pub struct GfemWorkspace {
    pub mesh: GridMesh,
    pub coeff: CoefficientField,
    pub data: ProblemData,
    pub k: SparseSymMatrix,
    pub load: Vec<f64>,
    pub decomp: Decomposition,
    pub solvers: Vec<SubdomainSolver>,
    pub u_h: Vec<f64>,
    pub u_h_norm: f64,
}

impl GfemWorkspace {
    /// Assembles the problem, the reference solution and all per-subdomain
    /// local solvers (in parallel) with `s_max` harmonic basis functions.
    pub fn build(
        mesh: GridMesh,
        coeff: CoefficientField,
        data: ProblemData,
        m: usize,
        overlap_layers: usize,
        oversample_layers: usize,
        s_max: usize,
    ) -> Result<Self> {
        let k = assemble_stiffness(&mesh, &coeff)?;
        let load = assemble_load(&mesh, data.f.as_ref(), data.g.as_ref());
        let decomp = Decomposition::new(&mesh, m, overlap_layers, oversample_layers)?;
        let u_h = reference_solve(&mesh, &k, &load, &data)?;
        let u_h_norm = energy_norm(&k, &u_h)?;
        let solvers: Result<Vec<SubdomainSolver>> = (0..decomp.n_subdomains())
            .into_par_iter()
            .map(|i| SubdomainSolver::build(&mesh, &coeff, &data, &decomp, i, s_max))
            .collect();
        let solvers = solvers?;
        let clamped = solvers.iter().filter(|s| s.harm.clamped).count();
        if clamped > 0 {
            eprintln!(
                "warning: requested s = {s_max} exceeds dim W_h on {clamped} of {} subdomains; clamped",
                solvers.len()
            );
        }
        Ok(GfemWorkspace {
            mesh,
            coeff,
            data,
            k,
            load,
            decomp,
            solvers,
            u_h,
            u_h_norm,
        })
    }

    pub fn local_spaces(&self, s: usize, n_loc: usize) -> Result<Vec<LocalSpace>> {
        self.solvers.iter().map(|sv| sv.local_space(s, n_loc)).collect()
    }

    /// Runs the coarse solve with `s` harmonic and `n_loc` spectral basis
    /// functions per subdomain and returns the solution with its relative
    /// energy error against the fine reference.
    pub fn solve(&self, s: usize, n_loc: usize) -> Result<(GfemSolution, f64)> {
        let locals = self.local_spaces(s, n_loc)?;
        let space = assemble_global(&self.mesh, &self.k, &self.decomp, &locals)?;
        let solution = coarse_solve(&self.k, &self.load, &space)?;
        let error = relative_energy_error(&self.k, &self.u_h, &solution.u_g)?;
        Ok((solution, error))
    }
}
