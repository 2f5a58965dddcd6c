//! Sparse and dense symmetric factorizations used throughout the crate.

use crate::error::{Error, Result};
use std::collections::VecDeque;

/// Dot product with four independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let ra = ca.remainder();
    let rb = cb.remainder();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Symmetric sparse matrix given by its diagonal and one copy of each off-diagonal entry.
#[derive(Clone, Debug)]
pub struct SymSparse {
    n: usize,
    diag: Vec<f64>,
    off: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn new(n: usize) -> Self {
        SymSparse { n, diag: vec![0.0; n], off: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        self.diag[i] += v;
    }

    /// Adds `v` at positions `(i, j)` and `(j, i)`.
    pub fn add_off(&mut self, i: usize, j: usize, v: f64) {
        assert!(i != j, "off-diagonal entry on the diagonal");
        self.off.push((i, j, v));
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[(usize, usize, f64)] {
        &self.off
    }

    /// Sparse matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for &(i, j, v) in &self.off {
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
        y
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, _) in &self.off {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// Vertex ordering applied before an envelope factorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ordering {
    Natural,
    ReverseCuthillMcKee,
}

/// Reverse Cuthill-McKee ordering; returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let deg: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    loop {
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| deg[i]);
        let Some(start) = start else { break };
        let start = pseudo_peripheral(adj, start, &visited);
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| deg[w]);
            for w in nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(adj: &[Vec<usize>], start: usize, blocked: &[bool]) -> usize {
    let mut root = start;
    let mut depth = 0usize;
    for _ in 0..8 {
        let levels = bfs_levels(adj, root, blocked);
        let max_level = levels.iter().filter_map(|l| *l).max().unwrap_or(0);
        if max_level <= depth && depth > 0 {
            break;
        }
        depth = max_level;
        let far = (0..adj.len())
            .filter(|&i| levels[i] == Some(max_level))
            .min_by_key(|&i| adj[i].len())
            .unwrap_or(root);
        if far == root {
            break;
        }
        root = far;
    }
    root
}

fn bfs_levels(adj: &[Vec<usize>], root: usize, blocked: &[bool]) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let l = level[v].unwrap();
        for &w in &adj[v] {
            if !blocked[w] && level[w].is_none() {
                level[w] = Some(l + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

/// Envelope (skyline) Cholesky factor `P A Pᵀ = L Lᵀ` of a sparse symmetric positive-definite matrix.
#[derive(Clone, Debug)]
pub struct SkylineCholesky {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &SymSparse, ordering: Ordering) -> Result<Self> {
        let n = a.dim();
        let perm: Vec<usize> = match ordering {
            Ordering::Natural => (0..n).collect(),
            Ordering::ReverseCuthillMcKee => reverse_cuthill_mckee(&a.adjacency()),
        };
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for &(i, j, _) in a.off() {
            let (p, q) = (iperm[i], iperm[j]);
            let (r, c) = if p > q { (p, q) } else { (q, p) };
            first[r] = first[r].min(c);
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for (old, &d) in a.diag().iter().enumerate() {
            let i = iperm[old];
            data[start[i] + i - first[i]] += d;
        }
        for &(i, j, v) in a.off() {
            let (p, q) = (iperm[i], iperm[j]);
            let (r, c) = if p > q { (p, q) } else { (q, p) };
            data[start[r] + c - first[r]] += v;
        }
        for i in 0..n {
            let fi = first[i];
            let (head, tail) = data.split_at_mut(start[i]);
            let row_i = &mut tail[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_j = &head[start[j]..start[j + 1]];
                let s = dot(&row_i[k0 - fi..j - fi], &row_j[k0 - fj..j - fj]);
                row_i[j - fi] = (row_i[j - fi] - s) / row_j[j - fj];
            }
            let s = dot(&row_i[..i - fi], &row_i[..i - fi]);
            let d = row_i[i - fi] - s;
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Factorization(format!(
                    "matrix is not positive definite (pivot {d:e} at row {i})"
                )));
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(SkylineCholesky { n, perm, iperm, first, start, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.start[i]..self.start[i + 1]]
    }

    fn forward(&self, y: &mut [f64]) {
        for i in 0..self.n {
            let fi = self.first[i];
            let row = self.row(i);
            let s = dot(&row[..i - fi], &y[fi..i]);
            y[i] = (y[i] - s) / row[i - fi];
        }
    }

    fn backward(&self, y: &mut [f64]) {
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            axpy(-xi, &row[..i - fi], &mut y[fi..i]);
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        self.forward(&mut y);
        self.backward(&mut y);
        let mut x = vec![0.0; self.n];
        for (new, v) in y.into_iter().enumerate() {
            x[self.perm[new]] = v;
        }
        x
    }

    /// Returns `x = Pᵀ L⁻ᵀ z`, which has covariance `A⁻¹` when `z` is standard normal.
    pub fn inverse_sqrt_apply(&self, z: &[f64]) -> Vec<f64> {
        let mut y = z.to_vec();
        self.backward(&mut y);
        let mut x = vec![0.0; self.n];
        for (new, v) in y.into_iter().enumerate() {
            x[self.perm[new]] = v;
        }
        x
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.n)
            .map(|i| 2.0 * self.row(i)[i - self.first[i]].ln())
            .sum()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse_permutation(&self) -> &[usize] {
        &self.iperm
    }
}

/// Low-rank square-root factor `A ≈ L Lᵀ` of a symmetric positive semi-definite matrix.
#[derive(Clone, Debug)]
pub struct PivotedCholesky {
    n: usize,
    rank: usize,
    /// Column-major `n × rank`.
    l: Vec<f64>,
    pivots: Vec<usize>,
}

impl PivotedCholesky {
    /// Diagonally pivoted Cholesky of a column-major symmetric `n × n` matrix.
    ///
    /// Elimination stops once the largest remaining pivot falls below `floor` times the
    /// largest diagonal entry.
    pub fn factor(a: &[f64], n: usize, floor: f64) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::InvalidSize(format!("expected {} entries, got {}", n * n, a.len())));
        }
        let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Factorization("non-finite diagonal".into()));
        }
        let scale = d.iter().cloned().fold(0.0, f64::max);
        let mut used = vec![false; n];
        let mut l: Vec<f64> = Vec::new();
        let mut pivots = Vec::new();
        let mut col = vec![0.0; n];
        for k in 0..n {
            let mut p = usize::MAX;
            let mut best = f64::NEG_INFINITY;
            for i in 0..n {
                if !used[i] && d[i] > best {
                    best = d[i];
                    p = i;
                }
            }
            if p == usize::MAX || !(best > floor * scale) || best <= 0.0 {
                break;
            }
            col.copy_from_slice(&a[p * n..(p + 1) * n]);
            for m in 0..k {
                let lm = &l[m * n..(m + 1) * n];
                axpy(-lm[p], lm, &mut col);
            }
            let piv = best.sqrt();
            for i in 0..n {
                if used[i] {
                    col[i] = 0.0;
                } else if i == p {
                    col[i] = piv;
                } else {
                    col[i] /= piv;
                }
            }
            used[p] = true;
            for i in 0..n {
                if !used[i] {
                    d[i] -= col[i] * col[i];
                }
            }
            l.extend_from_slice(&col);
            pivots.push(p);
        }
        let rank = pivots.len();
        Ok(PivotedCholesky { n, rank, l, pivots })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Column `k` of the factor.
    pub fn column(&self, k: usize) -> &[f64] {
        &self.l[k * self.n..(k + 1) * self.n]
    }

    /// `L z` for `z` of length `rank`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (k, &zk) in z.iter().enumerate().take(self.rank) {
            axpy(zk, self.column(k), &mut x);
        }
        x
    }

    /// Reconstructs `L Lᵀ` as a column-major dense matrix.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for k in 0..self.rank {
            let c = self.column(k);
            for j in 0..n {
                if c[j] != 0.0 {
                    axpy(c[j], c, &mut out[j * n..(j + 1) * n]);
                }
            }
        }
        out
    }
}
