use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest entrywise deviation from `m = m^dagger`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

pub fn check_hermitian(m: &CMatrix, tol: f64) -> Result<()> {
    let dev = hermiticity_defect(m);
    if dev > tol {
        return Err(Error::NonHermitian { max_dev: dev });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvector columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let dim = m.nrows();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// `e^{-iht} v` via full Hermitian eigendecomposition.
pub fn evolve_dense(h: &CMatrix, t: f64, v: &[Complex64]) -> Vec<Complex64> {
    let (vals, vecs) = hermitian_eigen(h);
    let dim = h.nrows();
    let mut coeffs = vec![Complex64::default(); dim];
    for l in 0..dim {
        let mut acc = Complex64::default();
        for i in 0..dim {
            acc += vecs[(i, l)].conj() * v[i];
        }
        coeffs[l] = acc * Complex64::from_polar(1.0, -vals[l] * t);
    }
    let mut out = vec![Complex64::default(); dim];
    for l in 0..dim {
        for i in 0..dim {
            out[i] += vecs[(i, l)] * coeffs[l];
        }
    }
    out
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Anything that can act as a Hermitian operator on complex vectors.
pub trait HermitianOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[Complex64], out: &mut [Complex64]);

    fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.dim()];
        self.apply(v, &mut out);
        out
    }
}

impl HermitianOp for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.nrows();
        for i in 0..n {
            let mut acc = Complex64::default();
            for j in 0..n {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
    }
}

/// Real symmetric sparse matrix in compressed-row form. Entries are built
/// from coordinate triplets; duplicate coordinates accumulate.
#[derive(Clone, Debug)]
pub struct SparseSym {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseSym {
    /// Build from triplets `(row, col, value)`. Every entry must be mirrored
    /// by the caller (both `(i,j)` and `(j,i)` present, or `i == j`).
    pub fn from_triplets(dim: usize, triplets: &[(u32, u32, f64)]) -> Self {
        let mut counts = vec![0usize; dim + 1];
        for &(r, _, _) in triplets {
            counts[r as usize + 1] += 1;
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let nnz = triplets.len();
        let mut cols = vec![0u32; nnz];
        let mut vals = vec![0.0f64; nnz];
        let mut cursor = row_ptr.clone();
        for &(r, c, v) in triplets {
            let at = cursor[r as usize];
            cols[at] = c;
            vals[at] = v;
            cursor[r as usize] += 1;
        }
        let mut m = SparseSym { dim, row_ptr, cols, vals };
        m.compress();
        m
    }

    /// Sort each row by column and merge duplicates.
    fn compress(&mut self) {
        let mut new_ptr = vec![0usize; self.dim + 1];
        let mut new_cols = Vec::with_capacity(self.cols.len());
        let mut new_vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.dim {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            let mut row: Vec<(u32, f64)> =
                (lo..hi).map(|i| (self.cols[i], self.vals[i])).collect();
            row.sort_by_key(|&(c, _)| c);
            let row_start = new_cols.len();
            for (c, v) in row {
                if new_cols.len() > row_start && *new_cols.last().unwrap() == c {
                    *new_vals.last_mut().unwrap() += v;
                } else {
                    new_cols.push(c);
                    new_vals.push(v);
                }
            }
            new_ptr[r + 1] = new_cols.len();
        }
        self.row_ptr = new_ptr;
        self.cols = new_cols;
        self.vals = new_vals;
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &[u32], &[f64])> {
        (0..self.dim).map(move |r| {
            let (cols, vals) = self.row(r);
            (r, cols, vals)
        })
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.cols[lo..hi].binary_search(&(c as u32)) {
            Ok(at) => self.vals[lo + at],
            Err(_) => 0.0,
        }
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, cols, vals) in self.rows() {
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c as usize, r)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (r, cols, vals) in self.rows() {
            for (&c, &v) in cols.iter().zip(vals) {
                m[(r, c as usize)] = Complex64::new(v, 0.0);
            }
        }
        m
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.vals[lo..hi].iter().sum()
    }
}

impl HermitianOp for SparseSym {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (r, cols, vals) in self.rows() {
            let mut acc = Complex64::default();
            for (&c, &w) in cols.iter().zip(vals) {
                acc += v[c as usize] * w;
            }
            out[r] = acc;
        }
    }
}
