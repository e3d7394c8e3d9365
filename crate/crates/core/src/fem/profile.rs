//! Direct solver: reverse Cuthill-McKee ordering followed by an envelope
//! (profile) LU factorization without pivoting. Intended for matrices with a
//! symmetric pattern that are either definite or mildly indefinite.

use super::{FemError, SparseSym};
use std::collections::VecDeque;

/// Reverse Cuthill-McKee permutation: `perm[new] = old`.
pub fn rcm_order(a: &SparseSym) -> Vec<usize> {
    let n = a.n;
    let deg: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| -> usize {
        // returns the last level's first vertex of minimal degree
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        let begin = out.len();
        while let Some(v) = queue.pop_front() {
            out.push(v);
            let mut nb: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            nb.sort_by_key(|&j| (deg[j], j));
            for j in nb {
                visited[j] = true;
                queue.push_back(j);
            }
        }
        out[begin..].iter().copied().rev().min_by_key(|&v| deg[v]).unwrap_or(start)
    };
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start: two BFS sweeps from the seed
        let mut scratch = Vec::new();
        let mut tmp = visited.clone();
        let far = bfs(seed, &mut tmp, &mut scratch);
        let mut tmp = visited.clone();
        scratch.clear();
        let far2 = bfs(far, &mut tmp, &mut scratch);
        bfs(far2, &mut visited, &mut order);
    }
    order.reverse();
    order
}

/// `L U` factors in envelope storage, in permuted numbering.
#[derive(Clone, Debug)]
pub struct ProfileLu {
    n: usize,
    perm: Vec<usize>,
    /// First column in the envelope of each permuted row.
    first: Vec<usize>,
    /// Offsets of row `i` of `L` (strictly lower part) and column `i` of `U`
    /// (upper part with diagonal) into `lower` / `upper`.
    start: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ProfileLu {
    pub fn factor(a: &SparseSym) -> Result<Self, FemError> {
        let perm = rcm_order(a);
        Self::factor_with(a, perm)
    }

    pub fn factor_with(a: &SparseSym, perm: Vec<usize>) -> Result<Self, FemError> {
        let n = a.n;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for (j, _) in a.row(old) {
                let j = inv[j];
                if j < i {
                    first[i] = first[i].min(j);
                } else {
                    first[j] = first[j].min(i);
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut lower = vec![0.0; start[n]];
        let mut upper = vec![0.0; start[n] + n];
        // upper column i occupies upper[start[i] + i ..= start[i+1] + i]
        let ucol = |i: usize| start[i] + i;
        let mut diag_scale: f64 = 0.0;
        for old in 0..n {
            let i = inv[old];
            for (j, v) in a.row(old) {
                let j = inv[j];
                if j < i {
                    lower[start[i] + j - first[i]] = v;
                } else {
                    upper[ucol(j) + i - first[j]] = v;
                }
                diag_scale = diag_scale.max(v.abs());
            }
        }

        for i in 0..n {
            let fi = first[i];
            let (li, ui) = (start[i], ucol(i));
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let len = j - k0;
                let (lj, uj) = (start[j], ucol(j));
                // L[i][j] = (A[i][j] - sum L[i][k] U[k][j]) / U[j][j]
                let s_l = dot(&lower[li + k0 - fi..li + k0 - fi + len], &upper[uj + k0 - fj..uj + k0 - fj + len]);
                let s_u = dot(&lower[lj + k0 - fj..lj + k0 - fj + len], &upper[ui + k0 - fi..ui + k0 - fi + len]);
                let ujj = upper[uj + j - fj];
                lower[li + j - fi] = (lower[li + j - fi] - s_l) / ujj;
                upper[ui + j - fi] -= s_u;
            }
            let len = i - fi;
            let s = dot(&lower[li..li + len], &upper[ui..ui + len]);
            let d = upper[ui + len] - s;
            if !(d.abs() > 1e-14 * diag_scale) {
                return Err(FemError::SingularMatrix { row: perm[i], pivot: d });
            }
            upper[ui + len] = d;
        }
        Ok(ProfileLu { n, perm, first, start, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored factor entries.
    pub fn envelope(&self) -> usize {
        self.lower.len() + self.upper.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            y[i] -= dot(row, &y[fi..i]);
        }
        for j in (0..n).rev() {
            let fj = self.first[j];
            let col = &self.upper[self.start[j] + j..self.start[j + 1] + j + 1];
            let xj = y[j] / col[j - fj];
            y[j] = xj;
            for (yk, u) in y[fj..j].iter_mut().zip(col) {
                *yk -= u * xj;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_grid(m: usize, shift: f64, skew: f64) -> SparseSym {
        let id = |i: usize, j: usize| i * m + j;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                t.push((id(i, j), id(i, j), 4.0 + shift));
                if i + 1 < m {
                    t.push((id(i, j), id(i + 1, j), -1.0 + skew));
                    t.push((id(i + 1, j), id(i, j), -1.0 - skew));
                }
                if j + 1 < m {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                    t.push((id(i, j + 1), id(i, j), -1.0));
                }
            }
        }
        SparseSym::from_triplets(m * m, t, skew == 0.0, false)
    }

    fn residual(a: &SparseSym, x: &[f64], b: &[f64]) -> f64 {
        a.matvec(x).iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rcm_is_a_permutation_and_shrinks_the_envelope() {
        let a = laplacian_grid(12, 0.0, 0.0);
        let mut p = rcm_order(&a);
        let lu = ProfileLu::factor_with(&a, p.clone()).unwrap();
        let natural = ProfileLu::factor_with(&a, (0..a.n).collect()).unwrap();
        assert!(lu.envelope() <= natural.envelope());
        p.sort();
        assert_eq!(p, (0..a.n).collect::<Vec<_>>());
    }

    #[test]
    fn solves_symmetric_and_nonsymmetric_systems() {
        for (shift, skew) in [(0.0, 0.0), (0.5, 0.3), (-1.0, 0.0)] {
            let a = laplacian_grid(15, shift, skew);
            let b: Vec<f64> = (0..a.n).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
            let x = ProfileLu::factor(&a).unwrap().solve(&b);
            assert!(residual(&a, &x, &b) < 1e-11, "{shift} {skew}");
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = SparseSym::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)], true, true);
        assert!(matches!(ProfileLu::factor(&a), Err(FemError::SingularMatrix { .. })));
    }

    proptest! {
        #[test]
        fn random_diagonally_dominant_systems(
            n in 2usize..40,
            seed in prop::collection::vec((0usize..40, 0usize..40, -1.0f64..1.0), 0..120),
        ) {
            let mut t: Vec<(usize, usize, f64)> = Vec::new();
            let mut rowsum = vec![0.0; n];
            for &(i, j, v) in &seed {
                let (i, j) = (i % n, j % n);
                if i != j {
                    t.push((i, j, v));
                    t.push((j, i, 0.5 * v));
                    rowsum[i] += v.abs();
                    rowsum[j] += 0.5 * v.abs();
                }
            }
            for (i, s) in rowsum.iter().enumerate() {
                t.push((i, i, 1.0 + 2.0 * s));
            }
            let a = SparseSym::from_triplets(n, t, false, false);
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let x = ProfileLu::factor(&a).unwrap().solve(&b);
            prop_assert!(residual(&a, &x, &b) < 1e-12);
        }
    }
}
