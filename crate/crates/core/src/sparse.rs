//! Symmetric sparse matrices on a fixed pattern and a direct SPD solver
//! (reverse Cuthill–McKee ordering + envelope Cholesky).

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Compressed-row pattern storing both triangles of a symmetric matrix,
/// columns sorted within each row.
#[derive(Clone, Debug)]
pub struct SparsePattern {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsePattern {
    /// Pattern of the graph with the given undirected edges plus the diagonal.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for (i, j) in edges {
            if i != j {
                rows[i].push(j);
                rows[j].push(i);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        Self { row_ptr, col_idx }
    }

    pub fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Storage position of entry `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = self.row(i);
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    /// `y = A x` for values stored on this pattern.
    pub fn mul(&self, values: &[f64], x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = self.col_idx[range.clone()]
                .iter()
                .zip(&values[range])
                .map(|(&j, a)| a * x[j])
                .sum();
        }
    }

    /// Reverse Cuthill–McKee permutation: `perm[new] = old`.
    pub fn rcm_order(&self) -> Vec<usize> {
        let n = self.n();
        let degree = |i: usize| self.row(i).len();
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            let seed = (0..n)
                .filter(|&i| !visited[i])
                .min_by_key(|&i| degree(i))
                .expect("unvisited vertex");
            let start = self.pseudo_peripheral(seed, &visited);
            visited[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                let mut next: Vec<usize> = self.row(v).iter().copied().filter(|&w| !visited[w]).collect();
                next.sort_by_key(|&w| (degree(w), w));
                for w in next {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
        order.reverse();
        order
    }

    fn pseudo_peripheral(&self, seed: usize, blocked: &[bool]) -> usize {
        let mut start = seed;
        let mut depth = 0;
        loop {
            let (far, d) = self.farthest(start, blocked);
            if d <= depth {
                return start;
            }
            depth = d;
            start = far;
        }
    }

    fn farthest(&self, start: usize, blocked: &[bool]) -> (usize, usize) {
        let mut level = vec![usize::MAX; self.n()];
        level[start] = 0;
        let mut queue = VecDeque::from([start]);
        let mut best = (start, 0);
        while let Some(v) = queue.pop_front() {
            let lv = level[v];
            if lv > best.1 || (lv == best.1 && self.row(v).len() < self.row(best.0).len()) {
                best = (v, lv);
            }
            for &w in self.row(v) {
                if !blocked[w] && level[w] == usize::MAX {
                    level[w] = lv + 1;
                    queue.push_back(w);
                }
            }
        }
        best
    }
}

/// Envelope (skyline) Cholesky factor `P A Pᵀ = L Lᵀ` with a symbolic
/// structure that can be refactored for new values on the same pattern.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    inv: Vec<usize>,
    /// First stored column of each permuted row.
    first: Vec<usize>,
    /// Offset of `(i, first[i])` in `values`; row `i` ends at `offsets[i + 1]` (diagonal last).
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn symbolic(pattern: &SparsePattern) -> Self {
        let n = pattern.n();
        let perm = pattern.rcm_order();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let first: Vec<usize> = (0..n)
            .map(|i| {
                pattern
                    .row(perm[i])
                    .iter()
                    .map(|&j| inv[j])
                    .min()
                    .unwrap_or(i)
                    .min(i)
            })
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + (i - first[i] + 1));
        }
        let size = offsets[n];
        Self {
            perm,
            inv,
            first,
            offsets,
            values: vec![0.0; size],
        }
    }

    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    /// Numeric factorization of values stored on `pattern`.
    pub fn factor(&mut self, pattern: &SparsePattern, values: &[f64]) -> Result<()> {
        let n = self.perm.len();
        self.values.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let old = self.perm[i];
            let range = pattern.row_ptr[old]..pattern.row_ptr[old + 1];
            for (&j_old, &a) in pattern.col_idx[range.clone()].iter().zip(&values[range]) {
                let j = self.inv[j_old];
                if j <= i {
                    self.values[self.offsets[i] + j - self.first[i]] = a;
                }
            }
        }

        for i in 0..n {
            let (fi, oi) = (self.first[i], self.offsets[i]);
            for j in fi..i {
                let (fj, oj) = (self.first[j], self.offsets[j]);
                let k0 = fi.max(fj);
                let dot: f64 = self.values[oi + k0 - fi..oi + j - fi]
                    .iter()
                    .zip(&self.values[oj + k0 - fj..oj + j - fj])
                    .map(|(a, b)| a * b)
                    .sum();
                let ljj = self.values[oj + j - fj];
                let slot = oi + j - fi;
                self.values[slot] = (self.values[slot] - dot) / ljj;
            }
            let diag_slot = oi + i - fi;
            let sq: f64 = self.values[oi..diag_slot].iter().map(|v| v * v).sum();
            let d = self.values[diag_slot] - sq;
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Solver(format!(
                    "matrix is not positive definite (pivot {d:e} at row {i})"
                )));
            }
            self.values[diag_slot] = d.sqrt();
        }
        Ok(())
    }

    /// Solves with the current factor.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| rhs[old]).collect();
        for i in 0..n {
            let (fi, oi) = (self.first[i], self.offsets[i]);
            let dot: f64 = self.values[oi..oi + i - fi]
                .iter()
                .zip(&y[fi..i])
                .map(|(l, x)| l * x)
                .sum();
            y[i] = (y[i] - dot) / self.values[oi + i - fi];
        }
        for i in (0..n).rev() {
            let (fi, oi) = (self.first[i], self.offsets[i]);
            y[i] /= self.values[oi + i - fi];
            let yi = y[i];
            for (l, x) in self.values[oi..oi + i - fi].iter().zip(&mut y[fi..i]) {
                *x -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &old) in self.perm.iter().enumerate() {
            x[old] = y[i];
        }
        x
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct solve followed by iterative refinement until the residual is
/// below `1e-12 ‖rhs‖`, or down to the rounding floor `64 ε ‖|A| |x|‖` when
/// that is larger (the best any backward-stable solve can certify).
pub fn solve_refined(
    factor: &EnvelopeCholesky,
    pattern: &SparsePattern,
    values: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let abs_values: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let mut x = factor.solve(rhs);
    let mut ax = vec![0.0; rhs.len()];
    let mut magnitude = vec![0.0; rhs.len()];
    let mut res = f64::INFINITY;
    let mut target = 0.0;
    for pass in 0..=4 {
        pattern.mul(values, &x, &mut ax);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let abs_x: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        pattern.mul(&abs_values, &abs_x, &mut magnitude);
        target = (1e-12 * norm(rhs)).max(64.0 * f64::EPSILON * norm(&magnitude));
        res = norm(&r);
        if res <= target || pass == 4 {
            break;
        }
        let dx = factor.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
    }
    if res <= target {
        Ok(x)
    } else {
        Err(Error::Solver(format!(
            "linear residual {res:e} above {target:e} after refinement"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_laplacian(m: usize) -> (SparsePattern, Vec<f64>) {
        let id = |i: usize, j: usize| j * m + i;
        let mut edges = Vec::new();
        for j in 0..m {
            for i in 0..m {
                if i + 1 < m {
                    edges.push((id(i, j), id(i + 1, j)));
                }
                if j + 1 < m {
                    edges.push((id(i, j), id(i, j + 1)));
                }
            }
        }
        let pattern = SparsePattern::from_edges(m * m, edges);
        let mut values = vec![0.0; pattern.nnz()];
        for i in 0..m * m {
            for (k, &j) in pattern.row(i).iter().enumerate() {
                let pos = pattern.row_ptr[i] + k;
                values[pos] = if i == j { 4.1 } else { -1.0 };
            }
        }
        (pattern, values)
    }

    #[test]
    fn rcm_is_a_permutation() {
        let (pattern, _) = grid_laplacian(7);
        let mut order = pattern.rcm_order();
        order.sort_unstable();
        assert_eq!(order, (0..49).collect::<Vec<_>>());
    }

    #[test]
    fn envelope_solve_matches_residual_contract() {
        let (pattern, values) = grid_laplacian(20);
        let mut chol = EnvelopeCholesky::symbolic(&pattern);
        assert!(chol.envelope_size() < 400 * 60);
        chol.factor(&pattern, &values).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rhs: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = solve_refined(&chol, &pattern, &values, &rhs).unwrap();
        let mut ax = vec![0.0; 400];
        pattern.mul(&values, &x, &mut ax);
        let res = norm(&rhs.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>());
        assert!(res <= 1e-12 * norm(&rhs));
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let (pattern, mut values) = grid_laplacian(4);
        for i in 0..16 {
            let pos = pattern.position(i, i).unwrap();
            values[pos] = -1.0;
        }
        let mut chol = EnvelopeCholesky::symbolic(&pattern);
        assert!(matches!(chol.factor(&pattern, &values), Err(Error::Solver(_))));
    }
}
