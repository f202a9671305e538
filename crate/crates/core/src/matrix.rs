//! Dense and compressed-sparse-row matrix containers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense column-major real matrix.
pub type Dense = DMatrix<f64>;

/// Compressed sparse row storage. Column indices inside a row are sorted and
/// unique.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Validates raw CSR arrays.
    pub fn try_new(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 {
            return Err(Error::shape(
                format!("indptr of length {}", nrows + 1),
                format!("length {}", indptr.len()),
            ));
        }
        if indices.len() != values.len() || indptr[nrows] != indices.len() || indptr[0] != 0 {
            return Err(Error::InvalidDimension(
                "inconsistent nnz between indptr, indices and values".into(),
            ));
        }
        for i in 0..nrows {
            if indptr[i] > indptr[i + 1] {
                return Err(Error::InvalidDimension(format!("indptr decreases at row {i}")));
            }
            let cols = &indices[indptr[i]..indptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidDimension(format!(
                    "column indices of row {i} are not strictly increasing"
                )));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return Err(Error::InvalidDimension(format!("column index out of range in row {i}")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("non-finite matrix entry".into()));
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Builds a CSR matrix from `(row, col, value)` triplets in any order.
    /// Duplicate positions are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidDimension(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::DegenerateInput(format!("non-finite entry at ({i}, {j})")));
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            let at = next[i];
            cols[at] = j;
            vals[at] = v;
            next[i] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in &row {
                if indices.len() > indptr[i] && indices.last() == Some(&c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Keeps every entry of `d` that is not exactly zero.
    pub fn from_dense(d: &Dense) -> Self {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let v = d[(i, j)];
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: d.nrows(),
            ncols: d.ncols(),
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn to_dense(&self) -> Dense {
        let mut d = Dense::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] += v;
        }
        d
    }

    /// `self * b`.
    pub fn mul_dense(&self, b: &Dense) -> Result<Dense> {
        if b.nrows() != self.ncols {
            return Err(Error::shape(
                format!("{} rows", self.ncols),
                format!("{} rows", b.nrows()),
            ));
        }
        let mut out = Dense::zeros(self.nrows, b.ncols());
        for c in 0..b.ncols() {
            let bc = b.column(c);
            let bc = bc.as_slice();
            let oc = out.column_mut(c);
            for (i, o) in oc.into_iter().enumerate() {
                let (cols, vals) = self.row(i);
                *o = cols.iter().zip(vals).map(|(&j, &v)| v * bc[j]).sum();
            }
        }
        Ok(out)
    }

    /// Columns as `(row, value)` lists, i.e. a CSC view.
    pub fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.ncols];
        for (i, j, v) in self.iter() {
            cols[j].push((i, v));
        }
        cols
    }

    pub fn fro_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A real matrix in either dense or sparse layout.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixHandle {
    Dense(Dense),
    Csr(CsrMatrix),
}

impl MatrixHandle {
    pub fn nrows(&self) -> usize {
        match self {
            MatrixHandle::Dense(d) => d.nrows(),
            MatrixHandle::Csr(c) => c.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            MatrixHandle::Dense(d) => d.ncols(),
            MatrixHandle::Csr(c) => c.ncols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, MatrixHandle::Csr(_))
    }

    pub fn to_dense(&self) -> Dense {
        match self {
            MatrixHandle::Dense(d) => d.clone(),
            MatrixHandle::Csr(c) => c.to_dense(),
        }
    }

    /// `self * b`; the sparse layout is never densified.
    pub fn mul_dense(&self, b: &Dense) -> Result<Dense> {
        match self {
            MatrixHandle::Dense(d) => {
                if b.nrows() != d.ncols() {
                    return Err(Error::shape(
                        format!("{} rows", d.ncols()),
                        format!("{} rows", b.nrows()),
                    ));
                }
                Ok(d * b)
            }
            MatrixHandle::Csr(c) => c.mul_dense(b),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        match self {
            MatrixHandle::Dense(d) => d.norm(),
            MatrixHandle::Csr(c) => c.fro_norm(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            MatrixHandle::Dense(d) => d.iter().all(|v| v.is_finite()),
            MatrixHandle::Csr(c) => c.values.iter().all(|v| v.is_finite()),
        }
    }
}

impl From<Dense> for MatrixHandle {
    fn from(d: Dense) -> Self {
        MatrixHandle::Dense(d)
    }
}

impl From<CsrMatrix> for MatrixHandle {
    fn from(c: CsrMatrix) -> Self {
        MatrixHandle::Csr(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let c = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 2.0), (0, 1, 0.5)]).unwrap();
        assert_eq!(c.nnz(), 2);
        assert_eq!(c.to_dense()[(0, 1)], 1.5);
    }

    #[test]
    fn sparse_product_matches_dense() {
        let d = Dense::from_fn(5, 3, |i, j| if (i + j) % 2 == 0 { (i * 3 + j) as f64 } else { 0.0 });
        let b = Dense::from_fn(3, 4, |i, j| (i as f64) - 0.5 * j as f64);
        let c = CsrMatrix::from_dense(&d);
        assert_eq!(c.mul_dense(&b).unwrap(), &d * &b);
        assert_eq!(c.to_dense(), d);
    }

    #[test]
    fn rejects_bad_arrays() {
        assert!(CsrMatrix::try_new(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(CsrMatrix::try_new(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::try_new(1, 2, vec![0, 1], vec![0], vec![f64::NAN]).is_err());
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }
}
