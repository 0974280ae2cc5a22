//! PCA reduction of the embedding matrix.
//!
//! Columns are centered and rows projected onto the top principal
//! components, ordered by descending eigenvalue of the covariance matrix.
//! When there are fewer rows than input dimensions the spectrum comes from
//! the (rows x rows) Gram matrix instead of the (dim x dim) covariance —
//! the nonzero eigenvalues agree, the factorization is just cheaper.
//!
//! Sign convention: within each component the entry of largest magnitude
//! (first index on ties) is made positive, so repeated runs and both
//! eigendecomposition routes produce identical output.

#![allow(clippy::needless_range_loop)] // index loops mirror the textbook kernels

use crate::echo::embed::EmbeddingMatrix;
use crate::echo::linalg::sym_eigen;
use crate::error::Result;
use crate::ingest::PostId;

/// Outcome of a [`reduce`] call.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// The projected matrix, aligned row-for-row with the input.
    pub matrix: EmbeddingMatrix,
    /// Covariance eigenvalues of the kept components, descending.
    pub eigenvalues: Vec<f64>,
    /// Trace of the covariance matrix (total variance).
    pub total_variance: f64,
    /// Requested dimension after clamping to `min(target, rows - 1, dim)`.
    pub kept: usize,
    /// Set when the input had no variance at all; the output rows are
    /// all-zero in that case.
    pub zero_variance: bool,
    /// Principal components (kept x input-dim), for reconstruction checks.
    pub components: Vec<Vec<f64>>,
    /// Column means removed before projection.
    pub mean: Vec<f64>,
}

/// Projects the matrix onto its top `target_dim` principal components.
pub fn reduce(matrix: &EmbeddingMatrix, target_dim: usize) -> Result<Reduction> {
    let n = matrix.rows();
    let d = matrix.dim();
    let kept = target_dim.min(n.saturating_sub(1)).min(d);

    let mut mean = vec![0.0f64; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(matrix.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n.max(1) as f64;
    }

    // Row-major centered copy.
    let mut centered = vec![0.0f64; n * d];
    for i in 0..n {
        for (j, v) in matrix.row(i).iter().enumerate() {
            centered[i * d + j] = v - mean[j];
        }
    }

    let denom = (n.saturating_sub(1)).max(1) as f64;
    let total_variance = centered.iter().map(|v| v * v).sum::<f64>() / denom;

    if kept == 0 || total_variance == 0.0 {
        let rows: Vec<(PostId, Vec<f64>)> = matrix
            .ids()
            .iter()
            .map(|id| (id.clone(), vec![0.0; kept]))
            .collect();
        return Ok(Reduction {
            matrix: EmbeddingMatrix::from_rows(rows)?,
            eigenvalues: vec![0.0; kept],
            total_variance,
            kept,
            zero_variance: true,
            components: vec![vec![0.0; d]; kept],
            mean,
        });
    }

    let (mut eigenvalues, mut components) = if n <= d {
        // Gram route: eigenvectors u of (Xc Xc^T) map to components
        // Xc^T u / sqrt(mu); covariance eigenvalues are mu / (n - 1).
        let mut gram = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let dot: f64 = (0..d).map(|k| centered[i * d + k] * centered[j * d + k]).sum();
                gram[i][j] = dot;
                gram[j][i] = dot;
            }
        }
        let (mu, u) = sym_eigen(&gram);
        let cutoff = mu.first().copied().unwrap_or(0.0).max(0.0) * 1e-12;
        let mut vals = Vec::with_capacity(kept);
        let mut comps = Vec::with_capacity(kept);
        for i in 0..kept {
            if mu[i] <= cutoff {
                // Beyond numerical rank: a zero component keeps the output
                // dimension stable without inventing a direction.
                vals.push(0.0);
                comps.push(vec![0.0; d]);
                continue;
            }
            let scale = 1.0 / mu[i].sqrt();
            let mut comp = vec![0.0f64; d];
            for (row, &ui) in u[i].iter().enumerate() {
                if ui != 0.0 {
                    for k in 0..d {
                        comp[k] += centered[row * d + k] * ui;
                    }
                }
            }
            for c in &mut comp {
                *c *= scale;
            }
            vals.push(mu[i] / denom);
            comps.push(comp);
        }
        (vals, comps)
    } else {
        // Covariance route.
        let mut cov = vec![vec![0.0f64; d]; d];
        for i in 0..n {
            let row = &centered[i * d..(i + 1) * d];
            for (a, &va) in row.iter().enumerate() {
                if va == 0.0 {
                    continue;
                }
                for (b, &vb) in row.iter().enumerate().skip(a) {
                    cov[a][b] += va * vb;
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                cov[a][b] /= denom;
                cov[b][a] = cov[a][b];
            }
        }
        let (vals, vecs) = sym_eigen(&cov);
        (
            vals.into_iter().take(kept).map(|v| v.max(0.0)).collect(),
            vecs.into_iter().take(kept).collect(),
        )
    };

    // Deterministic sign convention.
    for comp in &mut components {
        let mut best = 0usize;
        for (i, v) in comp.iter().enumerate() {
            if v.abs() > comp[best].abs() {
                best = i;
            }
        }
        if comp[best] < 0.0 {
            for v in comp.iter_mut() {
                *v = -*v;
            }
        }
    }
    eigenvalues.truncate(kept);

    let rows: Vec<(PostId, Vec<f64>)> = matrix
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let row = &centered[i * d..(i + 1) * d];
            let projected: Vec<f64> = components
                .iter()
                .map(|comp| comp.iter().zip(row).map(|(c, v)| c * v).sum())
                .collect();
            (id.clone(), projected)
        })
        .collect();

    Ok(Reduction {
        matrix: EmbeddingMatrix::from_rows(rows)?,
        eigenvalues,
        total_variance,
        kept,
        zero_variance: false,
        components,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::echo::embed::EmbeddingMatrix;
    use crate::ingest::PostId;
    use approx::assert_abs_diff_eq;

    fn matrix_of(rows: Vec<Vec<f64>>) -> EmbeddingMatrix {
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| (PostId(format!("p{i:04}")), r))
            .collect();
        EmbeddingMatrix::from_rows(rows).unwrap()
    }

    fn random_matrix(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = crate::rng::seeded(seed);
        matrix_of(
            (0..n)
                .map(|_| (0..d).map(|_| crate::rng::normal(&mut rng)).collect())
                .collect(),
        )
    }

    #[test]
    fn rank_one_data_is_captured_by_one_component() {
        let mut rng = crate::rng::seeded(5);
        let direction: Vec<f64> = (0..512).map(|_| crate::rng::normal(&mut rng)).collect();
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let t = crate::rng::normal(&mut rng) * 3.0;
                direction.iter().map(|v| v * t).collect()
            })
            .collect();
        let reduction = reduce(&matrix_of(rows), 5).unwrap();
        let captured = reduction.eigenvalues[0] / reduction.total_variance;
        assert!(captured >= 0.99999, "captured {captured}");
    }

    #[test]
    fn spectrum_is_invariant_under_orthogonal_transform() {
        // Rotating the input in the plane of coordinates (2i, 2i+1) is an
        // orthogonal change of basis; the explained-variance spectrum must
        // not move.
        let base = random_matrix(30, 16, 42);
        let theta = 0.7f64;
        let rotated: Vec<Vec<f64>> = (0..base.rows())
            .map(|i| {
                let row = base.row(i);
                let mut out = vec![0.0; 16];
                for p in 0..8 {
                    let (a, b) = (row[2 * p], row[2 * p + 1]);
                    out[2 * p] = theta.cos() * a - theta.sin() * b;
                    out[2 * p + 1] = theta.sin() * a + theta.cos() * b;
                }
                out
            })
            .collect();
        let r1 = reduce(&base, 8).unwrap();
        let r2 = reduce(&matrix_of(rotated), 8).unwrap();
        for (a, b) in r1.eigenvalues.iter().zip(&r2.eigenvalues) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    /// Frobenius reconstruction error against the eigenvalue tail; both
    /// routes must satisfy the optimal-rank-k identity.
    fn eckart_young_residual(n: usize, d: usize, kept: usize, seed: u64) {
        let matrix = random_matrix(n, d, seed);
        let reduction = reduce(&matrix, kept).unwrap();
        // Brute-force reconstruction residual.
        let mut residual = 0.0f64;
        for i in 0..n {
            let row = matrix.row(i);
            let centered: Vec<f64> = row
                .iter()
                .zip(&reduction.mean)
                .map(|(v, m)| v - m)
                .collect();
            let coords = reduction.matrix.row(i);
            for j in 0..d {
                let rebuilt: f64 = reduction
                    .components
                    .iter()
                    .zip(coords)
                    .map(|(comp, c)| comp[j] * c)
                    .sum();
                let diff = centered[j] - rebuilt;
                residual += diff * diff;
            }
        }
        let denom = (n - 1) as f64;
        let discarded =
            reduction.total_variance - reduction.eigenvalues.iter().sum::<f64>();
        let expected = discarded * denom;
        let rel = (residual - expected).abs() / expected.max(1e-12);
        assert!(rel < 1e-6, "relative gap {rel}");
    }

    #[test]
    fn reconstruction_error_equals_discarded_eigenvalue_mass() {
        eckart_young_residual(50, 20, 6, 7);   // covariance route
        eckart_young_residual(20, 50, 6, 8);   // gram route
    }

    #[test]
    fn zero_variance_input_reduces_to_zero_rows() {
        let rows = vec![vec![1.0, 2.0, 3.0]; 5];
        let reduction = reduce(&matrix_of(rows), 2).unwrap();
        assert!(reduction.zero_variance);
        for i in 0..reduction.matrix.rows() {
            assert!(reduction.matrix.row(i).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn target_dimension_is_clamped() {
        let reduction = reduce(&random_matrix(4, 10, 3), 64).unwrap();
        assert_eq!(reduction.kept, 3); // rows - 1
        assert_eq!(reduction.matrix.dim(), 3);
    }

    #[test]
    fn repeated_runs_are_bit_identical_and_signs_canonical() {
        let matrix = random_matrix(25, 12, 11);
        let r1 = reduce(&matrix, 6).unwrap();
        let r2 = reduce(&matrix, 6).unwrap();
        assert_eq!(r1.matrix, r2.matrix);
        for comp in &r1.components {
            let best = comp
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
                .unwrap();
            assert!(*best.1 >= 0.0);
        }
    }

    #[test]
    fn gram_and_covariance_routes_agree() {
        // 30 x 30 sits exactly on the route boundary; compare against a
        // 31-row slice pushed through the other branch by shape.
        let wide = random_matrix(20, 40, 21); // gram
        let tall = random_matrix(40, 20, 22); // covariance
        for m in [wide, tall] {
            let r = reduce(&m, 5).unwrap();
            // Projected variance per component equals its eigenvalue.
            let n = m.rows();
            for (c, &lambda) in r.eigenvalues.iter().enumerate() {
                let mean: f64 =
                    (0..n).map(|i| r.matrix.row(i)[c]).sum::<f64>() / n as f64;
                let var: f64 = (0..n)
                    .map(|i| {
                        let v = r.matrix.row(i)[c] - mean;
                        v * v
                    })
                    .sum::<f64>()
                    / (n - 1) as f64;
                assert_abs_diff_eq!(var, lambda, epsilon = 1e-8 * lambda.max(1.0));
            }
        }
    }
}
