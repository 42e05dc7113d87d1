use super::{CMat, CVec};
use crate::C64;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<C64>,
}

impl Csr {
    /// Build from unsorted triplets; duplicates are summed, exact zeros dropped.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        let mut m = Csr { n, indptr, indices, values };
        m.prune();
        m
    }

    fn prune(&mut self) {
        let mut indptr = vec![0usize; self.n + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.values[k] != C64::new(0.0, 0.0) {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[i + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn from_dense(a: &CMat) -> Self {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != C64::new(0.0, 0.0) {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Csr::from_triplets(a.nrows(), t)
    }

    pub fn to_dense(&self) -> CMat {
        let mut a = CMat::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                a[(i, self.indices[k])] += self.values[k];
            }
        }
        a
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &CVec) -> CVec {
        let mut y = CVec::zeros(self.n);
        for i in 0..self.n {
            let mut s = C64::new(0.0, 0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            y[i] = s;
        }
        y
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| (self.indptr[i]..self.indptr[i + 1]).map(|k| self.values[k].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.to_dense_if_small();
        match d {
            Some(m) => super::hermiticity_defect(&m),
            None => {
                let mut worst: f64 = 0.0;
                for i in 0..self.n {
                    for k in self.indptr[i]..self.indptr[i + 1] {
                        let j = self.indices[k];
                        let other = self.get(j, i);
                        worst = worst.max((self.values[k] - other.conj()).norm());
                    }
                }
                worst
            }
        }
    }

    fn to_dense_if_small(&self) -> Option<CMat> {
        (self.n <= 512).then(|| self.to_dense())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let row = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        match row.binary_search(&j) {
            Ok(p) => self.values[self.indptr[i] + p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }
}
