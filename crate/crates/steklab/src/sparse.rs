//! Minimal sparse kernel used by the assembly and eigensolver layers:
//! CSR matrices built from triplets, reverse Cuthill-McKee ordering, and a
//! profile (skyline) LDLᵀ factorization.
//!
//! The factorization accepts symmetric *quasidefinite* matrices (saddle
//! systems whose diagonal blocks are definite with opposite signs), which
//! is exactly what the mixed edge-element solves below produce; for those,
//! LDLᵀ without pivoting exists under any symmetric permutation.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("zero or near-zero pivot at position {0} (|d| = {1:.3e})")]
    ZeroPivot(usize, f64),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

/// Triplet accumulator; duplicate entries are summed on conversion.
#[derive(Debug, Clone)]
pub struct Triplets {
    pub n_rows: usize,
    pub n_cols: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl Triplets {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Triplets { n_rows, n_cols, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        if v != 0.0 {
            self.entries.push((i as u32, j as u32, v));
        }
    }

    /// Push `v` at (i, j) and (j, i); pushes once on the diagonal.
    pub fn push_sym(&mut self, i: usize, j: usize, v: f64) {
        self.push(i, j, v);
        if i != j {
            self.push(j, i, v);
        }
    }

    pub fn to_csr(&self) -> Csr {
        let mut order: Vec<u32> = (0..self.entries.len() as u32).collect();
        order.sort_by_key(|&k| {
            let (i, j, _) = self.entries[k as usize];
            ((i as u64) << 32) | j as u64
        });
        let mut indptr = vec![0usize; self.n_rows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        let (mut last_i, mut last_j) = (u32::MAX, u32::MAX);
        for &k in &order {
            let (i, j, v) = self.entries[k as usize];
            if i == last_i && j == last_j {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i as usize + 1] += 1;
                last_i = i;
                last_j = j;
            }
        }
        for r in 0..self.n_rows {
            indptr[r + 1] += indptr[r];
        }
        Csr { n_rows: self.n_rows, n_cols: self.n_cols, indptr, indices, data }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub data: Vec<f64>,
}

impl Csr {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Csr { n_rows, n_cols, indptr: vec![0; n_rows + 1], indices: vec![], data: vec![] }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c as usize];
            }
            y[i] = acc;
        }
    }

    /// y += s * Aᵀ x  (used for rectangular trace blocks)
    pub fn matvec_t_add(&self, x: &[f64], s: f64, y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_rows);
        debug_assert_eq!(y.len(), self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let xi = s * x[i];
            for (c, v) in cols.iter().zip(vals) {
                y[*c as usize] += v * xi;
            }
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut t = Triplets::new(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                t.push(*c as usize, i, *v);
            }
        }
        t.to_csr()
    }

    /// Largest |a_ij - a_ji| over all entries, as a symmetry diagnostic.
    pub fn symmetry_defect(&self) -> f64 {
        let t = self.transpose();
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = t.row(i);
            // both rows are sorted by column; walk them together
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let jc = ca.get(p).copied().unwrap_or(u32::MAX);
                let jt = cb.get(q).copied().unwrap_or(u32::MAX);
                if jc == jt {
                    worst = worst.max((va[p] - vb[q]).abs());
                    p += 1;
                    q += 1;
                } else if jc < jt {
                    worst = worst.max(va[p].abs());
                    p += 1;
                } else {
                    worst = worst.max(vb[q].abs());
                    q += 1;
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                m[(i, *c as usize)] = *v;
            }
        }
        m
    }

    /// Submatrix on the given (sorted, deduplicated) row and column index
    /// sets, reindexed consecutively.
    pub fn submatrix(&self, rows: &[u32], cols: &[u32]) -> Csr {
        let mut col_map = vec![u32::MAX; self.n_cols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old as usize] = new as u32;
        }
        let mut t = Triplets::new(rows.len(), cols.len());
        for (new_i, &old_i) in rows.iter().enumerate() {
            let (cs, vs) = self.row(old_i as usize);
            for (c, v) in cs.iter().zip(vs) {
                let nc = col_map[*c as usize];
                if nc != u32::MAX {
                    t.push(new_i, nc as usize, *v);
                }
            }
        }
        t.to_csr()
    }

    /// self + s·other (patterns merged; shapes must agree).
    pub fn add_scaled(&self, other: &Csr, s: f64) -> Csr {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut t = Triplets::new(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cs, vs) = self.row(i);
            for (c, v) in cs.iter().zip(vs) {
                t.push(i, *c as usize, *v);
            }
            let (cs, vs) = other.row(i);
            for (c, v) in cs.iter().zip(vs) {
                t.push(i, *c as usize, s * v);
            }
        }
        t.to_csr()
    }

    /// self + s·diag(d).
    pub fn add_diag(&self, d: &[f64], s: f64) -> Csr {
        assert_eq!(self.n_rows, d.len());
        let mut t = Triplets::new(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cs, vs) = self.row(i);
            for (c, v) in cs.iter().zip(vs) {
                t.push(i, *c as usize, *v);
            }
            if d[i] != 0.0 {
                t.push(i, i, s * d[i]);
            }
        }
        t.to_csr()
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows.min(self.n_cols)];
        for (i, di) in d.iter_mut().enumerate() {
            let (cs, vs) = self.row(i);
            for (c, v) in cs.iter().zip(vs) {
                if *c as usize == i {
                    *di = *v;
                }
            }
        }
        d
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    /// Adjacency of the symmetrized nonzero pattern, diagonal dropped.
    fn pattern_adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n_rows];
        for i in 0..self.n_rows {
            let (cols, _) = self.row(i);
            for c in cols {
                let j = *c as usize;
                if j != i {
                    adj[i].push(j as u32);
                    adj[j].push(i as u32);
                }
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }
}

/// Reverse Cuthill-McKee ordering of the symmetrized pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_order(a: &Csr) -> Vec<usize> {
    let n = a.n_rows;
    let adj = a.pattern_adjacency();
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);

    // Process components in index order for determinism.
    for start in 0..n {
        if visited[start] {
            continue;
        }
        // pseudo-peripheral start: BFS twice from the component's lowest index
        let root = {
            let mut root = start as u32;
            for _ in 0..2 {
                let mut seen = vec![false; n];
                let mut queue = std::collections::VecDeque::from([root]);
                seen[root as usize] = true;
                let mut last = root;
                while let Some(u) = queue.pop_front() {
                    last = u;
                    for &v in &adj[u as usize] {
                        if !seen[v as usize] && !visited[v as usize] {
                            seen[v as usize] = true;
                            queue.push_back(v);
                        }
                    }
                }
                root = last;
            }
            root
        };
        let comp_begin = order.len();
        visited[root as usize] = true;
        order.push(root as usize);
        let mut head = comp_begin;
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut nbrs: Vec<u32> = adj[u]
                .iter()
                .copied()
                .filter(|&v| !visited[v as usize])
                .collect();
            nbrs.sort_by_key(|&v| (adj[v as usize].len(), v));
            for v in nbrs {
                if !visited[v as usize] {
                    visited[v as usize] = true;
                    order.push(v as usize);
                }
            }
        }
        order[comp_begin..].reverse();
    }
    order
}

/// Profile (skyline) LDLᵀ factorization of a symmetric matrix, stored by
/// rows of the lower triangle. No pivoting: intended for positive definite
/// and quasidefinite systems.
pub struct SkylineLdl {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    /// first column in the profile of each (permuted) row
    first: Vec<usize>,
    /// row-major packed profile entries, row i spans first[i]..=i
    rowptr: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl SkylineLdl {
    /// Factor `a` with the given symmetric permutation (`perm[new] = old`).
    pub fn factor(a: &Csr, perm: Vec<usize>) -> Result<Self, SparseError> {
        if a.n_rows != a.n_cols {
            return Err(SparseError::NotSquare { rows: a.n_rows, cols: a.n_cols });
        }
        let n = a.n_rows;
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // profile: first[i] = min over nonzeros (i,j) with j<i (permuted)
        let mut first: Vec<usize> = (0..n).collect();
        for i_old in 0..n {
            let (cols, _) = a.row(i_old);
            let i = iperm[i_old];
            for c in cols {
                let j = iperm[*c as usize];
                if j < i {
                    first[i] = first[i].min(j);
                } else if i < j {
                    first[j] = first[j].min(i);
                }
            }
        }
        let mut rowptr = vec![0usize; n + 1];
        for i in 0..n {
            rowptr[i + 1] = rowptr[i] + (i - first[i]);
        }
        let mut vals = vec![0.0f64; rowptr[n]];
        let mut diag = vec![0.0f64; n];

        // scatter entries
        let mut scale = 0.0f64;
        for i_old in 0..n {
            let (cols, data) = a.row(i_old);
            let i = iperm[i_old];
            for (c, v) in cols.iter().zip(data) {
                let j = iperm[*c as usize];
                scale = scale.max(v.abs());
                if j == i {
                    diag[i] = *v;
                } else if j < i {
                    vals[rowptr[i] + (j - first[i])] = *v;
                }
                // upper entries arrive via their mirrored row
            }
        }
        let tiny = 1e-14 * scale.max(1e-300);

        // in-place factorization: row i, columns first[i]..i
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                // l_ij = (a_ij - sum_k l_ik d_k l_jk) / d_j,  k in max(fi,fj)..j
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut sum = 0.0;
                let ri = rowptr[i] + (k0 - fi);
                let rj = rowptr[j] + (k0 - fj);
                for k in 0..(j - k0) {
                    sum += vals[ri + k] * diag[k0 + k] * vals[rj + k];
                }
                let idx = rowptr[i] + (j - fi);
                vals[idx] = (vals[idx] - sum) / diag[j];
            }
            let mut sum = 0.0;
            let ri = rowptr[i];
            for k in fi..i {
                let l = vals[ri + (k - fi)];
                sum += l * l * diag[k];
            }
            diag[i] -= sum;
            if diag[i].abs() <= tiny {
                return Err(SparseError::ZeroPivot(i, diag[i].abs()));
            }
        }

        Ok(SkylineLdl { n, perm, first, rowptr, vals, diag })
    }

    /// Factor with RCM ordering computed from the pattern.
    pub fn factor_rcm(a: &Csr) -> Result<Self, SparseError> {
        let perm = rcm_order(a);
        Self::factor(a, perm)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = b[self.perm[i]];
        }
        // forward: L y' = y
        for i in 0..n {
            let fi = self.first[i];
            let ri = self.rowptr[i];
            let mut acc = y[i];
            for k in fi..i {
                acc -= self.vals[ri + (k - fi)] * y[k];
            }
            y[i] = acc;
        }
        // diagonal
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let fi = self.first[i];
            let ri = self.rowptr[i];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.vals[ri + (k - fi)] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }

    /// Number of negative pivots (inertia check for quasidefinite systems).
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|d| **d < 0.0).count()
    }
}
