use nalgebra::{DMatrix, SymmetricEigen};

/// Projects points onto their top `k` principal components (fewer when the
/// points have lower dimension). Components are ordered by decreasing
/// variance and signed so their largest-magnitude loading is positive.
pub fn project(points: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let n = points.len();
    let d = points.first().map_or(0, Vec::len);
    if n == 0 || d == 0 {
        return vec![Vec::new(); n];
    }
    let x = DMatrix::from_fn(n, d, |i, j| points[i][j]);
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n.max(2) - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let axes: Vec<Vec<f64>> = order
        .iter()
        .take(k.min(d))
        .map(|&c| {
            let v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let pivot = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            if pivot < 0.0 {
                v.iter().map(|x| -x).collect()
            } else {
                v
            }
        })
        .collect();
    (0..n)
        .map(|i| {
            axes.iter()
                .map(|axis| (0..d).map(|j| centered[(i, j)] * axis[j]).sum())
                .collect()
        })
        .collect()
}
