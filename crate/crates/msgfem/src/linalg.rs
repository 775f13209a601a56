//! Numerical kernels: SPD solves (banded Cholesky with a preconditioned-CG
//! fallback for very large systems), Schur complements onto boundary dof
//! sets, dense symmetric-definite generalized eigensolves and a pivoted
//! semidefinite factorization for the coarse system.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sparse::{check_len, SparseSymMatrix};

/// Relative residual every solve must satisfy.
pub const SOLVE_TOL: f64 = 1e-10;
/// Target relative residual of the iterative fallback.
const PCG_TOL: f64 = 1e-12;
/// Banded storage cap (in f64 entries) before falling back to CG.
const BANDED_ENTRY_LIMIT: usize = 48_000_000;

/// Cholesky factorization of an SPD matrix in banded storage.
///
/// Entry (d, j) of the band holds L[j+d, j]; patch stiffness matrices in
/// row-major node order have half bandwidth ~ the patch width, which keeps
/// this direct and cheap.
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &SparseSymMatrix) -> Result<Self> {
        let n = a.n();
        let bw = a.bandwidth();
        let mut band = vec![0.0; (bw + 1) * n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if i >= j {
                    band[(i - j) * n + j] = v;
                }
            }
        }
        for j in 0..n {
            let start = j.saturating_sub(bw);
            let mut d = band[j];
            for k in start..j {
                let l_jk = band[(j - k) * n + k];
                d -= l_jk * l_jk;
            }
            if d <= 0.0 {
                return Err(Error::IndefinitePivot { index: j, pivot: d });
            }
            let ljj = d.sqrt();
            band[j] = ljj;
            let last = (j + bw).min(n - 1);
            for i in (j + 1)..=last {
                let mut s = band[(i - j) * n + j];
                for k in i.saturating_sub(bw)..j {
                    s -= band[(i - k) * n + k] * band[(j - k) * n + k];
                }
                band[(i - j) * n + j] = s / ljj;
            }
        }
        Ok(BandedCholesky { n, bw, band })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.band[(i - k) * n + k] * x[k];
            }
            x[i] = s / self.band[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            let last = (i + bw).min(n - 1);
            for k in (i + 1)..=last {
                s -= self.band[(k - i) * n + i] * x[k];
            }
            x[i] = s / self.band[i];
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(
    a: &SparseSymMatrix,
    b: &[f64],
    tol: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, usize)> {
    check_len(b, a.n())?;
    let n = a.n();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iterations {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::IndefinitePivot { index: it, pivot: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / bnorm;
        if rel <= tol {
            return Ok((x, it + 1));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolveDidNotConverge {
        iterations: max_iterations,
        residual: norm2(&r) / bnorm,
    })
}

/// Reusable SPD solver: direct banded Cholesky when the band fits in a
/// sensible amount of memory, preconditioned CG otherwise. Either route
/// satisfies ||Ax - b|| <= 1e-10 ||b||.
pub enum SpdSolver {
    Banded { matrix: SparseSymMatrix, chol: BandedCholesky },
    Iterative { matrix: SparseSymMatrix },
}

impl SpdSolver {
    pub fn new(a: SparseSymMatrix) -> Result<Self> {
        let bw = a.bandwidth();
        if a.n().saturating_mul(bw + 1) <= BANDED_ENTRY_LIMIT {
            let chol = BandedCholesky::factor(&a)?;
            Ok(SpdSolver::Banded { matrix: a, chol })
        } else {
            Ok(SpdSolver::Iterative { matrix: a })
        }
    }

    pub fn matrix(&self) -> &SparseSymMatrix {
        match self {
            SpdSolver::Banded { matrix, .. } | SpdSolver::Iterative { matrix } => matrix,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let a = self.matrix();
        check_len(b, a.n())?;
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; a.n()]);
        }
        let mut x = match self {
            SpdSolver::Banded { chol, .. } => chol.solve(b),
            SpdSolver::Iterative { matrix } => {
                pcg(matrix, b, PCG_TOL, 10 * matrix.n().max(100))?.0
            }
        };
        // one refinement step if the direct residual is not tight enough
        for _ in 0..2 {
            let mut r = a.matvec(&x);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri = bi - *ri;
            }
            let rel = norm2(&r) / bnorm;
            if rel <= PCG_TOL {
                break;
            }
            let dx = match self {
                SpdSolver::Banded { chol, .. } => chol.solve(&r),
                SpdSolver::Iterative { matrix } => {
                    pcg(matrix, &r, 1e-6, 10 * matrix.n().max(100))?.0
                }
            };
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        let mut r = a.matvec(&x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let rel = norm2(&r) / bnorm;
        if rel > SOLVE_TOL {
            return Err(Error::SolveDidNotConverge { iterations: 0, residual: rel });
        }
        Ok(x)
    }
}

/// One-shot SPD solve honoring the residual contract.
pub fn spd_solve(a: &SparseSymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    SpdSolver::new(a.clone())?.solve(b)
}

/// Schur complement of a local stiffness onto a boundary dof set, with the
/// interior factorization and extension operator kept for reuse.
pub struct SchurSystem {
    /// S = K_BB - K_BI K_II^-1 K_IB (dense, symmetric PSD).
    pub schur: DMatrix<f64>,
    /// K_II^-1 K_IB, for harmonic extension of boundary data.
    pub extension: DMatrix<f64>,
    pub interior_chol: Option<BandedCholesky>,
}

impl SchurSystem {
    /// `interior` and `boundary` are disjoint local index sets into `k`.
    pub fn build(k: &SparseSymMatrix, interior: &[usize], boundary: &[usize]) -> Result<Self> {
        let nb = boundary.len();
        let k_bb = k.extract_block_dense(boundary, boundary);
        if interior.is_empty() {
            return Ok(SchurSystem {
                schur: k_bb,
                extension: DMatrix::zeros(0, nb),
                interior_chol: None,
            });
        }
        let k_ii = k.extract(interior);
        let chol = BandedCholesky::factor(&k_ii)?;
        let k_ib = k.extract_block_dense(interior, boundary);
        let mut extension = k_ib.clone();
        for mut col in extension.column_iter_mut() {
            let mut v: Vec<f64> = col.iter().copied().collect();
            chol.solve_in_place(&mut v);
            for (dst, src) in col.iter_mut().zip(&v) {
                *dst = *src;
            }
        }
        let mut schur = k_bb;
        schur.gemm(-1.0, &k_ib.transpose(), &extension, 1.0);
        // symmetrize round-off
        for i in 0..nb {
            for j in (i + 1)..nb {
                let avg = 0.5 * (schur[(i, j)] + schur[(j, i)]);
                schur[(i, j)] = avg;
                schur[(j, i)] = avg;
            }
        }
        Ok(SchurSystem { schur, extension, interior_chol: Some(chol) })
    }

    /// Discrete harmonic extension: interior values completing boundary
    /// data `g` so the result is a-orthogonal to all interior hats.
    pub fn extend(&self, g: &[f64]) -> Vec<f64> {
        let gvec = DVector::from_column_slice(g);
        let interior = -(&self.extension * gvec);
        interior.iter().copied().collect()
    }
}

/// Applies the Schur complement to boundary data in one call.
pub fn schur_apply(
    k: &SparseSymMatrix,
    interior: &[usize],
    boundary: &[usize],
    g: &[f64],
) -> Result<Vec<f64>> {
    check_len(g, boundary.len())?;
    let sys = SchurSystem::build(k, interior, boundary)?;
    let gv = DVector::from_column_slice(g);
    Ok((&sys.schur * gv).iter().copied().collect())
}

/// An eigenpair of a symmetric-definite pencil.
#[derive(Debug, Clone)]
pub struct EigPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// B-inner-product norm of the vector (1 after normalization).
    pub b_norm: f64,
}

/// Result of a generalized symmetric eigensolve: finite pairs ascending,
/// plus the number of B-nullspace directions reported as infinite.
#[derive(Debug, Clone)]
pub struct SymGevp {
    pub pairs: Vec<EigPair>,
    pub n_infinite: usize,
}

const GEVP_SYM_TOL: f64 = 1e-12;

fn require_symmetric(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    let scale = m.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if scale == 0.0 {
        return Ok(());
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > GEVP_SYM_TOL * scale {
        let _ = what;
        return Err(Error::AsymmetricInput { asymmetry: worst / scale, tolerance: GEVP_SYM_TOL });
    }
    Ok(())
}

fn sorted_symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Solves A x = lambda B x for symmetric A and symmetric PSD B, smallest
/// eigenvalues first. The numerical nullspace of B (eigenvalues below
/// 1e-12 trace(B)/n) is projected out; those directions correspond to
/// infinite eigenvalues and are only counted. Returned vectors are
/// B-orthonormal.
pub fn sym_gevp(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SymGevp> {
    let n = a.nrows();
    if b.nrows() != n || a.ncols() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.nrows() });
    }
    if n == 0 {
        return Ok(SymGevp { pairs: Vec::new(), n_infinite: 0 });
    }
    require_symmetric(a, "A")?;
    require_symmetric(b, "B")?;
    let trace_b: f64 = (0..n).map(|i| b[(i, i)]).sum();
    if !(trace_b > 0.0) {
        return Err(Error::DegenerateMass);
    }
    let (b_vals, b_vecs) = sorted_symmetric_eigen(b.clone());
    let tol = 1e-12 * trace_b / n as f64;
    let kept: Vec<usize> = (0..n).filter(|&i| b_vals[i] > tol).collect();
    if kept.is_empty() {
        return Err(Error::DegenerateMass);
    }
    let r = kept.len();
    // whitening transform W = V_r D_r^(-1/2)
    let mut w = DMatrix::zeros(n, r);
    for (c, &i) in kept.iter().enumerate() {
        let scale = 1.0 / b_vals[i].sqrt();
        for row in 0..n {
            w[(row, c)] = b_vecs[(row, i)] * scale;
        }
    }
    let mut m = w.transpose() * a * &w;
    for i in 0..r {
        for j in (i + 1)..r {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let (values, vectors) = sorted_symmetric_eigen(m);
    let x = w * vectors;
    let pairs = (0..r)
        .map(|c| {
            let vector: Vec<f64> = x.column(c).iter().copied().collect();
            let bx = b * x.column(c);
            let b_norm = x.column(c).dot(&bx).max(0.0).sqrt();
            EigPair { value: values[c], vector, b_norm }
        })
        .collect();
    Ok(SymGevp { pairs, n_infinite: n - r })
}

/// Solves A x = lambda B x (A symmetric PSD, B symmetric PSD) through the
/// reciprocal pencil B y = mu A y with mu = 1/lambda, whitening by A.
///
/// This is the numerically robust route when B has an exponentially
/// decaying spectrum: the wanted smallest-lambda pairs are the largest and
/// best-resolved eigenvalues of the reciprocal problem, while B-whitening
/// would amplify its noise directions. The numerical nullspace of A is
/// returned first as exact lambda = 0 pairs; directions with vanishing
/// B-energy count as infinite eigenvalues, as in [`sym_gevp`]. Vectors are
/// B-orthonormal.
pub fn sym_gevp_reciprocal(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SymGevp> {
    let n = a.nrows();
    if b.nrows() != n || a.ncols() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.nrows() });
    }
    if n == 0 {
        return Ok(SymGevp { pairs: Vec::new(), n_infinite: 0 });
    }
    require_symmetric(a, "A")?;
    require_symmetric(b, "B")?;
    let trace_b: f64 = (0..n).map(|i| b[(i, i)]).sum();
    if !(trace_b > 0.0) {
        return Err(Error::DegenerateMass);
    }
    let (a_vals, a_vecs) = sorted_symmetric_eigen(a.clone());
    let a_max = a_vals.last().copied().unwrap_or(0.0).max(0.0);
    let tol_a = 1e-12 * a_max.max(f64::MIN_POSITIVE);
    let b_null_tol = 1e-12 * trace_b / n as f64;

    let mut pairs: Vec<EigPair> = Vec::new();
    let mut n_infinite = 0usize;

    // zero-energy block: exact lambda = 0, B-orthonormalized
    let null_idx: Vec<usize> = (0..n).filter(|&i| a_vals[i] <= tol_a).collect();
    if !null_idx.is_empty() {
        let mut z = DMatrix::zeros(n, null_idx.len());
        for (c, &i) in null_idx.iter().enumerate() {
            z.set_column(c, &a_vecs.column(i));
        }
        let g0 = z.transpose() * b * &z;
        let (g_vals, g_vecs) = sorted_symmetric_eigen(g0);
        for (c, &gv) in g_vals.iter().enumerate() {
            if gv <= b_null_tol {
                // degenerate in both forms
                n_infinite += 1;
                continue;
            }
            let dir = &z * g_vecs.column(c) / gv.sqrt();
            pairs.push(EigPair {
                value: 0.0,
                vector: dir.iter().copied().collect(),
                b_norm: 1.0,
            });
        }
    }

    // A-positive block: reciprocal eigenproblem, largest mu first
    let pos_idx: Vec<usize> = (0..n).filter(|&i| a_vals[i] > tol_a).collect();
    if !pos_idx.is_empty() {
        let r = pos_idx.len();
        let mut w = DMatrix::zeros(n, r);
        for (c, &i) in pos_idx.iter().enumerate() {
            let scale = 1.0 / a_vals[i].sqrt();
            for row in 0..n {
                w[(row, c)] = a_vecs[(row, i)] * scale;
            }
        }
        let mut nmat = w.transpose() * b * &w;
        for i in 0..r {
            for j in (i + 1)..r {
                let avg = 0.5 * (nmat[(i, j)] + nmat[(j, i)]);
                nmat[(i, j)] = avg;
                nmat[(j, i)] = avg;
            }
        }
        let (mu_vals, mu_vecs) = sorted_symmetric_eigen(nmat);
        let mu_max = mu_vals.last().copied().unwrap_or(0.0);
        let mu_floor = 1e-14 * mu_max.max(f64::MIN_POSITIVE);
        // descending mu = ascending lambda
        for c in (0..r).rev() {
            let mu = mu_vals[c];
            if mu <= mu_floor {
                n_infinite += 1;
                continue;
            }
            let x = (&w * mu_vecs.column(c)) / mu.sqrt();
            pairs.push(EigPair {
                value: 1.0 / mu,
                vector: x.iter().copied().collect(),
                b_norm: 1.0,
            });
        }
    }
    pairs.sort_by(|p, q| p.value.total_cmp(&q.value));
    Ok(SymGevp { pairs, n_infinite })
}

/// Solves the (possibly rank-deficient) SPD system G x = rhs by dense
/// Cholesky with diagonal pivoting, dropping pivots below
/// `drop_tol_rel * max initial diagonal`. Returns the solution (zero in the
/// dropped directions) and the number of dropped pivots.
pub fn pivoted_psd_solve(
    g: &DMatrix<f64>,
    rhs: &[f64],
    drop_tol_rel: f64,
) -> Result<(Vec<f64>, usize)> {
    let n = g.nrows();
    check_len(rhs, n)?;
    if n == 0 {
        return Ok((Vec::new(), 0));
    }
    require_symmetric(g, "G")?;
    let mut a = g.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let max_diag = (0..n).fold(0.0f64, |acc, i| acc.max(a[(i, i)]));
    if !(max_diag > 0.0) {
        return Err(Error::DegenerateMass);
    }
    let tol = drop_tol_rel * max_diag;
    let mut rank = n;
    for k in 0..n {
        // pick the largest remaining diagonal
        let mut p = k;
        for j in (k + 1)..n {
            if a[(j, j)] > a[(p, p)] {
                p = j;
            }
        }
        if a[(p, p)] <= tol {
            rank = k;
            break;
        }
        if p != k {
            a.swap_rows(k, p);
            a.swap_columns(k, p);
            perm.swap(k, p);
        }
        let pivot = a[(k, k)].sqrt();
        a[(k, k)] = pivot;
        for i in (k + 1)..n {
            a[(i, k)] /= pivot;
        }
        // full symmetric trailing update so later row/column swaps stay
        // consistent (only the strict lower triangle holds L)
        for j in (k + 1)..n {
            let ljk = a[(j, k)];
            if ljk != 0.0 {
                for i in (k + 1)..n {
                    let v = a[(i, k)];
                    a[(i, j)] -= v * ljk;
                }
            }
        }
    }
    // forward/backward solve on the rank x rank leading block
    let mut y = vec![0.0; rank];
    for i in 0..rank {
        let mut s = rhs[perm[i]];
        for k in 0..i {
            s -= a[(i, k)] * y[k];
        }
        y[i] = s / a[(i, i)];
    }
    for i in (0..rank).rev() {
        let mut s = y[i];
        for k in (i + 1)..rank {
            s -= a[(k, i)] * y[k];
        }
        y[i] = s / a[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in 0..rank {
        x[perm[i]] = y[i];
    }
    Ok((x, n - rank))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
