use nalgebra::{DMatrix, DVector};

/// Modified Gram-Schmidt. Vectors whose residual falls below `rel_tol` times
/// their original norm are dropped; the second element of the result counts them.
pub(crate) fn gram_schmidt(vectors: &[DVector<f64>], rel_tol: f64) -> (Vec<DVector<f64>>, usize) {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    let mut dropped = 0;
    for v in vectors {
        let norm0 = v.norm();
        let mut w = v.clone();
        // Reorthogonalize once.
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let n = w.norm();
        if norm0 == 0.0 || n <= rel_tol * norm0 {
            dropped += 1;
            continue;
        }
        out.push(w / n);
    }
    (out, dropped)
}

pub(crate) fn columns(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    (0..m.ncols()).map(|j| m.column(j).into_owned()).collect()
}

pub(crate) fn from_columns(n: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(cols)
}

/// Orthonormal basis of the range of a symmetric projector, obtained by
/// orthonormalizing its columns in order. The result depends only on the
/// projector, not on the basis it was built from.
pub(crate) fn canonical_basis(projector: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let n = projector.nrows();
    let cols = columns(projector);
    let mut picked: Vec<DVector<f64>> = Vec::with_capacity(rank);
    for c in cols {
        if picked.len() == rank {
            break;
        }
        let mut w = c.clone();
        for _ in 0..2 {
            for q in &picked {
                let d = q.dot(&w);
                w.axpy(-d, q, 1.0);
            }
        }
        let nw = w.norm();
        if nw > 1e-6 {
            picked.push(w / nw);
        }
    }
    from_columns(n, &picked)
}

pub(crate) fn projector(basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis * basis.transpose()
}

/// Orthonormal basis of the orthogonal complement of the range of `basis`.
pub(crate) fn complement_basis(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let n = basis.nrows();
    let comp = DMatrix::identity(n, n) - projector(basis);
    canonical_basis(&comp, n - basis.ncols())
}
