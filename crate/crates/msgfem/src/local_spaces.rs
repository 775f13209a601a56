//! Per-subdomain constructions on the oversampling domains: particular
//! functions carrying source and boundary data, discrete A-harmonic bases
//! generated from the Steklov (Dirichlet-to-Neumann) eigenproblem on the
//! artificial boundary, and the optimal local spectral basis from the
//! PU-weighted eigenproblem.

use nalgebra::DMatrix;

use crate::assemble::{
    assemble_boundary_mass_mapped, assemble_load_rect, assemble_stiffness_rect,
};
use crate::coefficients::{CoefficientField, ProblemData};
use crate::decomposition::{Decomposition, NodeClass, Subdomain};
use crate::error::{Error, Result};
use crate::linalg::{sym_gevp, SchurSystem};
use crate::mesh::GridMesh;
use crate::sparse::SparseSymMatrix;

/// Patch-local operators of one oversampling domain: local stiffness, dof
/// classification, interior factorization and the Steklov pencil.
pub struct PatchOperators {
    pub subdomain: usize,
    /// Local stiffness over the patch nodes (row-major patch order).
    pub k_patch: SparseSymMatrix,
    /// Local indices of the interior test dofs (V_h,0).
    pub free: Vec<usize>,
    /// Local indices of the artificial-boundary (Steklov) dofs.
    pub gamma: Vec<usize>,
    /// Local indices of Dirichlet-eliminated dofs.
    pub dirichlet: Vec<usize>,
    /// Schur complement of the patch stiffness onto gamma.
    pub schur: SchurSystem,
    /// Boundary mass on the artificial boundary, restricted to gamma.
    pub boundary_mass: DMatrix<f64>,
    pub touches_dirichlet: bool,
    pub n_nodes: usize,
}

impl PatchOperators {
    pub fn build(
        mesh: &GridMesh,
        coeff: &CoefficientField,
        decomp: &Decomposition,
        i: usize,
    ) -> Result<Self> {
        let star = &decomp.oversampled[i];
        let k_patch = assemble_stiffness_rect(mesh, coeff, &star.rect)?;
        let free = star.locals_of(NodeClass::Free);
        let gamma = star.locals_of(NodeClass::Gamma);
        let dirichlet = star.locals_of(NodeClass::Dirichlet);
        let schur = SchurSystem::build(&k_patch, &free, &gamma)?;
        let edges = star.artificial_edges(mesh);
        let mass = assemble_boundary_mass_mapped(
            mesh,
            &edges,
            |node| {
                let (ix, iy) = mesh.node_coords_of(node);
                star.rect.local_node(ix, iy)
            },
            star.n_nodes(),
        )?;
        let boundary_mass = mass.extract_block_dense(&gamma, &gamma);
        Ok(PatchOperators {
            subdomain: i,
            k_patch,
            free,
            gamma,
            dirichlet,
            schur,
            boundary_mass,
            touches_dirichlet: star.touches_dirichlet,
            n_nodes: star.n_nodes(),
        })
    }

    /// Largest relative interior residual of a patch-local vector against
    /// all interior hat functions; zero for discrete A-harmonic vectors.
    ///
    /// The scale |a(u, phi_k)| is compared against is ||u||_a ||phi_k||_a,
    /// floored by the componentwise round-off level sum_j |K_kj| |u_j| so
    /// that zero-energy modes (the constant on interior patches) remain
    /// measurable.
    pub fn harmonicity_residual(&self, u: &[f64]) -> f64 {
        let r = self.k_patch.matvec(u);
        let energy = self.k_patch.bilinear(u, u).max(0.0).sqrt();
        let mut worst = 0.0f64;
        for &k in &self.free {
            let phi_norm = self.k_patch.get(k, k).sqrt();
            let (cols, vals) = self.k_patch.row(k);
            let row_scale: f64 =
                cols.iter().zip(vals).map(|(&j, &v)| v.abs() * u[j].abs()).sum();
            let denom = (energy * phi_norm).max(row_scale);
            if denom > 0.0 {
                worst = worst.max(r[k].abs() / denom);
            }
        }
        worst
    }
}

/// Discrete A-harmonic basis of an oversampling domain: harmonic extensions
/// of the lowest Steklov eigenvectors.
pub struct HarmonicBasis {
    pub subdomain: usize,
    /// Patch-local columns (length = patch node count each).
    pub columns: Vec<Vec<f64>>,
    /// Steklov eigenvalues, nondecreasing, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// dim W_h = number of eligible boundary dofs.
    pub n_boundary: usize,
    /// True when the request was clamped to n_boundary.
    pub clamped: bool,
}

impl HarmonicBasis {
    pub fn count(&self) -> usize {
        self.columns.len()
    }
}

/// Local spectral space of one subdomain: the particular function and the
/// n_loc lowest PU-weighted eigenfunctions, all patch-local.
pub struct LocalSpace {
    pub subdomain: usize,
    /// Particular function on the oversampling patch (zero unless set).
    pub particular: Vec<f64>,
    /// Spectral basis columns, patch-local.
    pub basis: Vec<Vec<f64>>,
    /// All finite eigenvalues of the local eigenproblem, nondecreasing;
    /// holds at least n_loc + 1 entries when that many exist.
    pub eigenvalues: Vec<f64>,
    pub touches_dirichlet: bool,
    /// dim W_h of the patch.
    pub n_boundary: usize,
    pub s_used: usize,
}

impl LocalSpace {
    /// Estimate of the local n-width: lambda_{n+1}^{-1/2}, infinite when
    /// the eigenvalue is numerically zero.
    pub fn nwidth_estimate(&self, n: usize) -> Result<f64> {
        nwidth_from_eigenvalues(&self.eigenvalues, n)
    }
}

pub fn nwidth_from_eigenvalues(eigenvalues: &[f64], n: usize) -> Result<f64> {
    if n >= eigenvalues.len() {
        return Err(Error::OutOfRange { requested: n, available: eigenvalues.len() });
    }
    let lambda = eigenvalues[n];
    if lambda <= 1e-14 {
        Ok(f64::INFINITY)
    } else {
        Ok(lambda.powf(-0.5))
    }
}

/// Round-off clamp for eigenvalues of PSD pencils: small negatives are
/// zeroed, anything clearly negative is an error.
fn clamp_psd_eigenvalues(values: &mut [f64]) -> Result<()> {
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    for v in values.iter_mut() {
        if *v < -1e-10 * scale {
            return Err(Error::NegativeEigenvalue { value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

/// Local particular function psi_r + psi_d on the oversampling patch:
/// psi_r carries the local load with homogeneous data on the artificial
/// boundary, psi_d lifts the Dirichlet data q with natural conditions
/// elsewhere (zero when the patch does not meet the Dirichlet boundary).
pub fn particular_function(
    ops: &PatchOperators,
    mesh: &GridMesh,
    decomp: &Decomposition,
    data: &ProblemData,
) -> Result<Vec<f64>> {
    let star = &decomp.oversampled[ops.subdomain];
    let load = assemble_load_rect(mesh, &star.rect, data.f.as_ref(), data.g.as_ref());
    let mut psi = vec![0.0; ops.n_nodes];
    if let Some(chol) = &ops.schur.interior_chol {
        let load_free: Vec<f64> = ops.free.iter().map(|&l| load[l]).collect();
        let x = chol.solve(&load_free);
        for (&l, &v) in ops.free.iter().zip(&x) {
            psi[l] = v;
        }
    }
    if ops.touches_dirichlet && !ops.dirichlet.is_empty() {
        // harmonic lift of q: unknowns on free+gamma, data on the Dirichlet set
        let mut unknowns: Vec<usize> = ops.free.iter().chain(&ops.gamma).copied().collect();
        unknowns.sort_unstable();
        let q_vals: Vec<f64> = ops
            .dirichlet
            .iter()
            .map(|&l| {
                let (x, y) = mesh.node_xy(star.nodes[l]);
                (data.q)(x, y)
            })
            .collect();
        let lift = SchurSystem::build(&ops.k_patch, &unknowns, &ops.dirichlet)?;
        let interior = lift.extend(&q_vals);
        for (&l, &v) in unknowns.iter().zip(&interior) {
            psi[l] += v;
        }
        for (&l, &v) in ops.dirichlet.iter().zip(&q_vals) {
            psi[l] += v;
        }
    }
    Ok(psi)
}

/// Solves the Steklov eigenproblem on the artificial boundary (as a Schur
/// pencil) and A-harmonically extends the `s` lowest eigenvectors into the
/// patch. `s` is clamped to the number of eligible boundary dofs.
pub fn steklov_basis(ops: &PatchOperators, s: usize) -> Result<HarmonicBasis> {
    if s == 0 {
        return Err(Error::InvalidArgument { name: "s", value: 0.0 });
    }
    let n_boundary = ops.gamma.len();
    if n_boundary == 0 {
        return Ok(HarmonicBasis {
            subdomain: ops.subdomain,
            columns: Vec::new(),
            eigenvalues: Vec::new(),
            n_boundary: 0,
            clamped: true,
        });
    }
    let out = sym_gevp(&ops.schur.schur, &ops.boundary_mass)?;
    let clamped = s > out.pairs.len();
    let take = s.min(out.pairs.len());
    let mut eigenvalues: Vec<f64> = out.pairs[..take].iter().map(|p| p.value).collect();
    clamp_psd_eigenvalues(&mut eigenvalues)?;
    let mut columns = Vec::with_capacity(take);
    for pair in &out.pairs[..take] {
        let interior = ops.schur.extend(&pair.vector);
        let mut col = vec![0.0; ops.n_nodes];
        for (&l, &v) in ops.gamma.iter().zip(&pair.vector) {
            col[l] = v;
        }
        for (&l, &v) in ops.free.iter().zip(&interior) {
            col[l] = v;
        }
        columns.push(col);
    }
    Ok(HarmonicBasis {
        subdomain: ops.subdomain,
        columns,
        eigenvalues,
        n_boundary,
        clamped,
    })
}

/// Reduced matrices of the PU-weighted eigenproblem over a harmonic basis:
/// A[p][q] = a_star(u_p, u_q), B[p][q] = a_core(Xi u_p, Xi u_q).
pub struct ReducedPencil {
    pub a_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
}

pub fn reduced_pencil(
    ops: &PatchOperators,
    mesh: &GridMesh,
    coeff: &CoefficientField,
    decomp: &Decomposition,
    harm: &HarmonicBasis,
) -> Result<ReducedPencil> {
    let s = harm.count();
    let star = &decomp.oversampled[ops.subdomain];
    let core = &decomp.subdomains[ops.subdomain];

    let mut a_hat = DMatrix::zeros(s, s);
    let kus: Vec<Vec<f64>> = harm.columns.iter().map(|u| ops.k_patch.matvec(u)).collect();
    for p in 0..s {
        for q in p..s {
            let v = crate::linalg::dot(&harm.columns[p], &kus[q]);
            a_hat[(p, q)] = v;
            a_hat[(q, p)] = v;
        }
    }

    let k_core = assemble_stiffness_rect(mesh, coeff, &core.rect)?;
    let weighted: Vec<Vec<f64>> = harm
        .columns
        .iter()
        .map(|u| pu_weighted_core_vector(u, star, core, decomp))
        .collect();
    let kws: Vec<Vec<f64>> = weighted.iter().map(|w| k_core.matvec(w)).collect();
    let mut b_hat = DMatrix::zeros(s, s);
    for p in 0..s {
        for q in p..s {
            let v = crate::linalg::dot(&weighted[p], &kws[q]);
            b_hat[(p, q)] = v;
            b_hat[(q, p)] = v;
        }
    }
    Ok(ReducedPencil { a_hat, b_hat })
}

/// Xi_i(u|omega_i) as a core-local vector from a patch-local one.
pub fn pu_weighted_core_vector(
    u_patch: &[f64],
    star: &Subdomain,
    core: &Subdomain,
    decomp: &Decomposition,
) -> Vec<f64> {
    let mut w = vec![0.0; core.n_nodes()];
    for (l, &g) in core.nodes.iter().enumerate() {
        if core.internal[l] {
            let (ix, iy) = core.rect.local_node_coords(l);
            let star_l = star.rect.local_node(ix, iy);
            w[l] = u_patch[star_l] / decomp.multiplicity[g] as f64;
        }
    }
    w
}

/// Builds the local spectral space: solves the reduced PU-weighted
/// eigenproblem over the harmonic basis and maps the n_loc lowest
/// eigenvectors back to patch-local basis columns. All finite eigenvalues
/// are retained so that lambda_{n_loc+1} is available for n-width
/// estimates.
pub fn local_spectral_basis(
    ops: &PatchOperators,
    mesh: &GridMesh,
    coeff: &CoefficientField,
    decomp: &Decomposition,
    harm: &HarmonicBasis,
    n_loc: usize,
) -> Result<LocalSpace> {
    if n_loc + 1 > harm.count() {
        eprintln!(
            "warning: n_loc = {n_loc} leaves no spare eigenvalue in a harmonic basis of size {} (subdomain {})",
            harm.count(),
            ops.subdomain
        );
    }
    let pencil = reduced_pencil(ops, mesh, coeff, decomp, harm)?;
    spectral_from_pencil(ops.subdomain, ops.touches_dirichlet, harm, &pencil, harm.count(), n_loc, ops.n_nodes)
}

/// GEVP of the leading `s_use` block of a reduced pencil; shared by the
/// direct build and the s-sweep reuse path.
pub fn spectral_from_pencil(
    subdomain: usize,
    touches_dirichlet: bool,
    harm: &HarmonicBasis,
    pencil: &ReducedPencil,
    s_use: usize,
    n_loc: usize,
    n_nodes: usize,
) -> Result<LocalSpace> {
    let s_use = s_use.min(harm.count());
    if s_use == 0 {
        return Ok(LocalSpace {
            subdomain,
            particular: vec![0.0; n_nodes],
            basis: Vec::new(),
            eigenvalues: Vec::new(),
            touches_dirichlet,
            n_boundary: harm.n_boundary,
            s_used: 0,
        });
    }
    let a_sub = pencil.a_hat.view((0, 0), (s_use, s_use)).into_owned();
    let b_sub = pencil.b_hat.view((0, 0), (s_use, s_use)).into_owned();
    // the PU form decays exponentially across the oversampling ring, so the
    // pencil is solved in its reciprocal (energy-whitened) form
    let out = crate::linalg::sym_gevp_reciprocal(&a_sub, &b_sub)?;
    let mut eigenvalues: Vec<f64> = out.pairs.iter().map(|p| p.value).collect();
    clamp_psd_eigenvalues(&mut eigenvalues)?;
    let n_take = n_loc.min(out.pairs.len());
    let mut basis = Vec::with_capacity(n_take);
    for pair in &out.pairs[..n_take] {
        let mut col = vec![0.0; n_nodes];
        for (p, &weight) in pair.vector.iter().enumerate() {
            if weight != 0.0 {
                for (dst, &src) in col.iter_mut().zip(&harm.columns[p]) {
                    *dst += weight * src;
                }
            }
        }
        basis.push(col);
    }
    Ok(LocalSpace {
        subdomain,
        particular: vec![0.0; n_nodes],
        basis,
        eigenvalues,
        touches_dirichlet,
        n_boundary: harm.n_boundary,
        s_used: s_use,
    })
}

/// Everything the global driver needs per subdomain, with the heavy patch
/// operators already dropped: the harmonic basis, the reduced pencil and
/// the particular function. Build once per (decomposition, s_max), then
/// slice local spaces for any (s, n_loc).
pub struct SubdomainSolver {
    pub subdomain: usize,
    pub harm: HarmonicBasis,
    pub pencil: ReducedPencil,
    pub particular: Vec<f64>,
    pub touches_dirichlet: bool,
    pub n_nodes: usize,
}

impl SubdomainSolver {
    pub fn build(
        mesh: &GridMesh,
        coeff: &CoefficientField,
        data: &ProblemData,
        decomp: &Decomposition,
        i: usize,
        s_max: usize,
    ) -> Result<Self> {
        let ops = PatchOperators::build(mesh, coeff, decomp, i)?;
        let particular = particular_function(&ops, mesh, decomp, data)?;
        let harm = steklov_basis(&ops, s_max.max(1))?;
        let pencil = reduced_pencil(&ops, mesh, coeff, decomp, &harm)?;
        Ok(SubdomainSolver {
            subdomain: i,
            harm,
            pencil,
            particular,
            touches_dirichlet: ops.touches_dirichlet,
            n_nodes: ops.n_nodes,
        })
    }

    /// Local space for `n_loc` basis functions using the `s` lowest
    /// harmonic basis functions (clamped to what is available).
    pub fn local_space(&self, s: usize, n_loc: usize) -> Result<LocalSpace> {
        let mut space = spectral_from_pencil(
            self.subdomain,
            self.touches_dirichlet,
            &self.harm,
            &self.pencil,
            s,
            n_loc,
            self.n_nodes,
        )?;
        space.particular = self.particular.clone();
        Ok(space)
    }
}
