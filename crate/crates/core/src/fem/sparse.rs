use std::fmt::Write as _;

/// Compressed sparse row matrix. All matrices built here have a symmetric
/// sparsity pattern; `symmetric` records whether the values are symmetric too.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
    pub symmetric: bool,
    pub positive_semidefinite: bool,
}

impl SparseSym {
    /// Sums duplicate entries in insertion order, so the result is
    /// bitwise reproducible for a given triplet sequence.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, f64)>, symmetric: bool, psd: bool) -> Self {
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(trip.len() / 4);
        let mut values: Vec<f64> = Vec::with_capacity(trip.len() / 4);
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            assert!(r < n && c < n, "triplet index out of range");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSym { n, row_ptr, col_idx, values, symmetric, positive_semidefinite: psd }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn same_pattern(&self, other: &SparseSym) -> bool {
        self.n == other.n && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }

    /// `a*A + b*B*diag(d)` for matrices sharing one pattern; `d = None`
    /// means the identity.
    pub fn combine(a: f64, ma: &SparseSym, b: f64, mb: &SparseSym, d: Option<&[f64]>) -> SparseSym {
        assert!(ma.same_pattern(mb), "patterns differ");
        let mut values = ma.values.clone();
        for i in 0..ma.n {
            for k in ma.row_ptr[i]..ma.row_ptr[i + 1] {
                let s = d.map_or(1.0, |d| d[ma.col_idx[k]]);
                values[k] = a * ma.values[k] + b * mb.values[k] * s;
            }
        }
        SparseSym {
            n: ma.n,
            row_ptr: ma.row_ptr.clone(),
            col_idx: ma.col_idx.clone(),
            values,
            symmetric: ma.symmetric && mb.symmetric && d.is_none(),
            positive_semidefinite: false,
        }
    }

    /// Maps every entry `(i, j)` to `(map[i], map[j])`, dropping unmapped
    /// rows and columns and summing collisions.
    pub fn restrict(&self, map: &[Option<usize>], n_new: usize) -> SparseSym {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let Some(ri) = map[i] else { continue };
            for (j, v) in self.row(i) {
                if let Some(cj) = map[j] {
                    trip.push((ri, cj, v));
                }
            }
        }
        SparseSym::from_triplets(n_new, trip, self.symmetric, self.positive_semidefinite)
    }

    pub fn is_value_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// MatrixMarket coordinate format, general real.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        writeln!(s, "{} {} {}", self.n, self.n, self.nnz()).unwrap();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(s, "{} {} {:e}", i + 1, j + 1, v).unwrap();
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_and_lookup() {
        let m = SparseSym::from_triplets(3, vec![(0, 0, 1.0), (2, 1, 4.0), (0, 0, 2.0), (1, 2, 4.0)], true, false);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 4.0, 4.0]);
        assert!(m.is_value_symmetric());
        let mm = m.to_matrix_market();
        assert!(mm.starts_with("%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 3e0\n"));
    }

    #[test]
    fn restrict_merges_rows() {
        let m = SparseSym::from_triplets(
            3,
            vec![(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (0, 2, 1.0), (2, 0, 1.0)],
            true,
            true,
        );
        let r = m.restrict(&[Some(0), None, Some(0)], 1);
        assert_eq!(r.get(0, 0), 6.0);
    }
}
