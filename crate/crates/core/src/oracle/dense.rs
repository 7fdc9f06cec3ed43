//! Dense reference linear algebra, independent of the push machinery.

use nalgebra::{DMatrix, DVector};

use crate::appr::ApprParams;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default node-count ceiling for dense computations.
pub const DEFAULT_DENSE_CAP: usize = 5000;

pub(crate) fn check_cap(n: usize, cap: usize, hint: &str) -> Result<()> {
    if n > cap {
        Err(Error::SizeCap {
            n,
            cap,
            hint: hint.to_string(),
        })
    } else {
        Ok(())
    }
}

/// Dense adjacency matrix.
pub fn dense_adjacency(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut a = DMatrix::zeros(n, n);
    for u in 0..n {
        for (v, w) in g.neighbors(u) {
            a[(u, v)] = w;
        }
    }
    a
}

/// `D^{-1/2} A D^{-1/2}` built entry by entry; isolated rows stay zero.
pub fn dense_normalized_adjacency(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut a = DMatrix::zeros(n, n);
    for u in 0..n {
        for (v, w) in g.neighbors(u) {
            a[(u, v)] = w / (g.degree(u) * g.degree(v)).sqrt();
        }
    }
    a
}

/// `I - beta D^{-1/2} A D^{-1/2}`.
pub fn dense_q(g: &Graph, beta: f64) -> DMatrix<f64> {
    let n = g.node_count();
    DMatrix::identity(n, n) - dense_normalized_adjacency(g) * beta
}

/// Unnormalized Laplacian `D - A`.
pub fn dense_combinatorial_laplacian(g: &Graph) -> DMatrix<f64> {
    let mut l = -dense_adjacency(g);
    for u in 0..g.node_count() {
        l[(u, u)] = g.degree(u);
    }
    l
}

/// Solves `Q x = b` by Cholesky factorization of the dense `Q`.
pub fn dense_solve(g: &Graph, b: &[f64], params: &ApprParams) -> Result<Vec<f64>> {
    dense_solve_capped(g, b, params, DEFAULT_DENSE_CAP)
}

pub fn dense_solve_capped(g: &Graph, b: &[f64], params: &ApprParams, cap: usize) -> Result<Vec<f64>> {
    let n = g.node_count();
    check_cap(n, cap, "use the push solver instead")?;
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    params.validate()?;
    let q = dense_q(g, params.beta());
    let chol = q
        .cholesky()
        .ok_or_else(|| Error::Numerical("Q is not positive definite".into()))?;
    Ok(chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))
}

/// Moore–Penrose pseudoinverse of a symmetric matrix through its
/// eigendecomposition; eigenvalues below `1e-9 * max |lambda|` count as zero.
pub fn symmetric_pinv(m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let tol = 1e-9 * top.max(f64::MIN_POSITIVE);
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > tol {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lam;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{edgeless, path};

    #[test]
    fn zero_rhs_gives_zero() {
        let g = path(4);
        let p = ApprParams::new(0.3, 1e-4).unwrap();
        assert!(dense_solve(&g, &[0.0; 4], &p).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn edgeless_graph_is_identity_system() {
        let g = edgeless(3);
        let p = ApprParams::new(0.3, 1e-4).unwrap();
        let b = [0.2, -1.0, 3.0];
        let x = dense_solve(&g, &b, &p).unwrap();
        for i in 0..3 {
            assert!((x[i] - b[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn path_solution_shape_and_residual() {
        let g = path(3);
        let p = ApprParams::new(0.5, 1e-4).unwrap();
        let mut b = vec![0.0; 3];
        b[1] = 2.0 * 0.5 / 1.5 / 2f64.sqrt();
        let x = dense_solve(&g, &b, &p).unwrap();
        assert!(x[1] > x[0] && (x[0] - x[2]).abs() < 1e-15 && x[0] > 0.0);
        let q = dense_q(&g, p.beta());
        let r = &q * DVector::from_vec(x) - DVector::from_vec(b.clone());
        assert!(r.amax() <= 1e-10 * b[1]);
    }

    #[test]
    fn size_cap_enforced() {
        let g = edgeless(11);
        let p = ApprParams::new(0.3, 1e-4).unwrap();
        assert!(matches!(
            dense_solve_capped(&g, &[0.0; 11], &p, 10),
            Err(Error::SizeCap { n: 11, cap: 10, .. })
        ));
    }

    #[test]
    fn pinv_of_path_laplacian() {
        let l = dense_combinatorial_laplacian(&path(3));
        let p = symmetric_pinv(l.clone());
        assert!((&l * &p * &l - &l).amax() < 1e-12);
    }
}
