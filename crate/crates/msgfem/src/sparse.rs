//! Row-compressed symmetric sparse matrices and the dense dof vectors they
//! act on. Both triangles are stored so matrix-vector products stay simple.

use crate::error::{Error, Result};

/// Dense vector indexed by global (or patch-local) degrees of freedom.
pub type DofVector = Vec<f64>;

/// Symmetric sparse matrix in CSR form.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates (i, j, v) triplets and finalizes them into CSR, summing
/// duplicates and dropping entries that cancel to exact zero.
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        TripletBuilder { n, entries: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i as u32, j as u32, v));
    }

    pub fn finalize(mut self) -> SparseSymMatrix {
        self.entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut iter = self.entries.iter().peekable();
        while let Some(&(i, j, v)) = iter.next() {
            let mut sum = v;
            while let Some(&&(i2, j2, v2)) = iter.peek() {
                if i2 == i && j2 == j {
                    sum += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if sum != 0.0 {
                row_ptr[i as usize + 1] += 1;
                col_idx.push(j as usize);
                values.push(sum);
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSymMatrix { n: self.n, row_ptr, col_idx, values }
    }
}

impl SparseSymMatrix {
    pub fn zeros(n: usize) -> Self {
        SparseSymMatrix { n, row_ptr: vec![0; n + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        SparseSymMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute deviation from symmetry, max |a_ij - a_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// u' A v.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.n);
        debug_assert_eq!(v.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            if u[i] == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            let mut row_acc = 0.0;
            for (&j, &val) in cols.iter().zip(vals) {
                row_acc += val * v[j];
            }
            acc += u[i] * row_acc;
        }
        acc
    }

    /// Extracts the principal submatrix on `subset` (sorted global indices),
    /// renumbered 0..subset.len() in the given order.
    pub fn extract(&self, subset: &[usize]) -> SparseSymMatrix {
        let mut local_of = vec![usize::MAX; self.n];
        for (loc, &g) in subset.iter().enumerate() {
            local_of[g] = loc;
        }
        let mut builder = TripletBuilder::with_capacity(subset.len(), subset.len() * 9);
        for (loc_i, &g_i) in subset.iter().enumerate() {
            let (cols, vals) = self.row(g_i);
            for (&g_j, &v) in cols.iter().zip(vals) {
                let loc_j = local_of[g_j];
                if loc_j != usize::MAX {
                    builder.push(loc_i, loc_j, v);
                }
            }
        }
        builder.finalize()
    }

    /// Rectangular block rows x cols (both sorted global index sets), as a
    /// dense column-major matrix.
    pub fn extract_block_dense(&self, rows: &[usize], cols: &[usize]) -> nalgebra::DMatrix<f64> {
        let mut local_of = vec![usize::MAX; self.n];
        for (loc, &g) in cols.iter().enumerate() {
            local_of[g] = loc;
        }
        let mut block = nalgebra::DMatrix::zeros(rows.len(), cols.len());
        for (loc_i, &g_i) in rows.iter().enumerate() {
            let (row_cols, vals) = self.row(g_i);
            for (&g_j, &v) in row_cols.iter().zip(vals) {
                let loc_j = local_of[g_j];
                if loc_j != usize::MAX {
                    block[(loc_i, loc_j)] = v;
                }
            }
        }
        block
    }

    /// Half bandwidth max |i - j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for i in 0..self.n {
            let (cols, _) = self.row(i);
            for &j in cols {
                bw = bw.max(i.abs_diff(j));
            }
        }
        bw
    }
}

/// Sparse vector with sorted support, used for glued coarse basis columns.
#[derive(Debug, Clone)]
pub struct SparseVec {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseVec {
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_unstable_by_key(|&(i, _)| i);
        pairs.retain(|&(_, v)| v != 0.0);
        SparseVec {
            idx: pairs.iter().map(|&(i, _)| i).collect(),
            val: pairs.iter().map(|&(_, v)| v).collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.idx.iter().zip(&self.val).map(|(&i, &v)| v * dense[i]).sum()
    }

    pub fn dot_sparse(&self, other: &SparseVec) -> f64 {
        let mut acc = 0.0;
        let (mut p, mut q) = (0usize, 0usize);
        while p < self.idx.len() && q < other.idx.len() {
            match self.idx[p].cmp(&other.idx[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.val[p] * other.val[q];
                    p += 1;
                    q += 1;
                }
            }
        }
        acc
    }

    pub fn add_into_dense(&self, dense: &mut [f64], scale: f64) {
        for (&i, &v) in self.idx.iter().zip(&self.val) {
            dense[i] += scale * v;
        }
    }

    /// A * self as a sparse vector (support grows by the matrix stencil).
    pub fn apply_sym(&self, a: &SparseSymMatrix) -> SparseVec {
        let mut pairs: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        // symmetry: A x = sum over support columns of x_j * (row j)
        for (&j, &xj) in self.idx.iter().zip(&self.val) {
            let (cols, vals) = a.row(j);
            for (&i, &v) in cols.iter().zip(vals) {
                *pairs.entry(i).or_insert(0.0) += v * xj;
            }
        }
        SparseVec {
            idx: pairs.keys().copied().collect(),
            val: pairs.values().copied().collect(),
        }
    }

    pub fn min_index(&self) -> Option<usize> {
        self.idx.first().copied()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.idx.last().copied()
    }
}

/// Checks that `v` has the expected length, as a uniform error path.
pub fn check_len(v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        Err(Error::DimensionMismatch { expected, got: v.len() })
    } else {
        Ok(())
    }
}
