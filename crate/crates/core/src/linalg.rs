//! Rank decisions, nullspaces and least squares on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold used for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

/// Singular values and right singular vectors of `a`, padding with zero rows
/// so that the full right basis is available.
fn full_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = DMatrix::from_fn(n, order.len(), |r, c| vt[(order[c], r)]);
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    (s, u, v)
}

fn threshold(s: &[f64], rel: f64) -> f64 {
    let smax = s.first().copied().unwrap_or(0.0);
    (rel * smax).max(1e-300)
}

/// Numerical rank with threshold `rel * sigma_max`.
pub fn rank(a: &DMatrix<f64>, rel: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let (s, _, _) = full_svd(a);
    let t = threshold(&s, rel);
    s.iter().filter(|&&x| x > t).count()
}

/// Orthonormal basis (as columns) of the kernel of `a`.
pub fn nullspace(a: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 || a.iter().all(|x| *x == 0.0) {
        return DMatrix::identity(n, n);
    }
    let (s, _, v) = full_svd(a);
    let t = threshold(&s, rel);
    let r = s.iter().filter(|&&x| x > t).count();
    v.columns(r, n - r).into_owned()
}

/// Orthonormal basis (as columns) of the column span of `a`.
pub fn column_space(a: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    if a.ncols() == 0 || a.iter().all(|x| *x == 0.0) {
        return DMatrix::zeros(a.nrows(), 0);
    }
    // Right singular vectors of a^T are left singular vectors of a.
    let (s, _, v) = full_svd(&a.transpose());
    let t = threshold(&s, rel);
    let r = s.iter().filter(|&&x| x > t).count();
    v.columns(0, r).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the span of `a`'s columns.
pub fn orthogonal_complement(a: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return DMatrix::identity(a.nrows(), a.nrows());
    }
    nullspace(&a.transpose(), rel)
}

/// Ratio between the last kept and the first dropped singular value.
pub fn spectral_gap(a: &DMatrix<f64>, rel: f64) -> f64 {
    let (s, _, _) = full_svd(a);
    let t = threshold(&s, rel);
    let r = s.iter().filter(|&&x| x > t).count();
    if r == 0 || r == s.len() {
        return f64::INFINITY;
    }
    s[r - 1] / s[r].max(1e-300)
}

/// Smallest singular value.
pub fn min_singular_value(a: &DMatrix<f64>) -> f64 {
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.iter().fold(f64::INFINITY, |m, &x| m.min(x))
}

/// Ratio of largest to smallest singular value.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let s = a.clone().svd(false, false).singular_values;
    let max = s.iter().fold(0.0f64, |m, &x| m.max(x));
    let min = s.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Moore-Penrose pseudo-inverse.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.is_empty() {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &x| m.max(x));
    svd.pseudo_inverse(1e-13 * smax.max(1e-300)).expect("svd computed with u and v")
}

/// Least-squares solution and the residual norm `|a x - b|`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let x = pinv(a) * b;
    let r = (a * &x - b).norm();
    (x, r)
}

/// Largest distance of a unit column of either span from the other span.
pub fn span_distance(a: &DMatrix<f64>, b: &DMatrix<f64>, rel: f64) -> f64 {
    let qa = column_space(a, rel);
    let qb = column_space(b, rel);
    if qa.ncols() != qb.ncols() {
        return 1.0;
    }
    let leak = |p: &DMatrix<f64>, q: &DMatrix<f64>| {
        let proj = q * (q.transpose() * p);
        (p - proj).amax()
    };
    leak(&qa, &qb).max(leak(&qb, &qa))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = nullspace(&a, RANK_TOL);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).amax() < 1e-14);
        assert_eq!(rank(&a, RANK_TOL), 1);
    }

    #[test]
    fn column_space_and_complement() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let q = column_space(&a, RANK_TOL);
        assert_eq!(q.ncols(), 1);
        let c = orthogonal_complement(&a, RANK_TOL);
        assert_eq!(c.ncols(), 2);
        assert!((a.transpose() * c).amax() < 1e-14);
    }

    #[test]
    fn lstsq_recovers_consistent_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 1.0, 1.0, 0.0]);
        let x0 = DVector::from_vec(vec![0.5, -1.5]);
        let (x, r) = lstsq(&a, &(&a * &x0));
        assert!((x - x0).amax() < 1e-13);
        assert!(r < 1e-13);
    }

    #[test]
    fn span_distance_detects_equal_spans() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        let b = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 1.0, 1.0, 0.0, -1.0]);
        assert!(span_distance(&a, &b, RANK_TOL) < 1e-12);
        let c = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(span_distance(&a, &c, RANK_TOL) > 0.1);
    }
}
