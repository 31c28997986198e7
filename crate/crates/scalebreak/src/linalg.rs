//! Small dense linear-algebra helpers for the spline fits. Systems here are
//! tiny (a few dozen unknowns), so plain Cholesky and modified Gram-Schmidt
//! are adequate.

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// stored row-major. `None` when a pivot falls below the tolerance, i.e. the
/// matrix is numerically singular.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Vec<f64>,
    dim: usize,
}

impl Cholesky {
    pub fn factor(g: &[f64], dim: usize) -> Option<Self> {
        debug_assert_eq!(g.len(), dim * dim);
        let max_diag = (0..dim)
            .map(|i| g[i * dim + i].abs())
            .fold(0.0f64, f64::max);
        let tol = max_diag * 1e-12 + f64::MIN_POSITIVE;
        let mut l = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut s = g[i * dim + j];
                for k in 0..j {
                    s -= l[i * dim + k] * l[j * dim + k];
                }
                if i == j {
                    if s <= tol {
                        return None;
                    }
                    l[i * dim + i] = s.sqrt();
                } else {
                    l[i * dim + j] = s / l[j * dim + j];
                }
            }
        }
        Some(Self { l, dim })
    }

    /// Solves `L x = b` (forward substitution).
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.l[i * n + k] * x[k];
            }
            x[i] /= self.l[i * n + i];
        }
        x
    }

    /// Solves `L^T x = b` (back substitution).
    pub fn solve_lower_t(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.l[k * n + i] * x[k];
            }
            x[i] /= self.l[i * n + i];
        }
        x
    }

    /// Solves the full system `L L^T x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_lower_t(&self.solve_lower(b))
    }
}

/// Solves `G x = b` for symmetric `G`, falling back to a ridge-stabilised
/// factorisation when `G` is numerically singular. The ridge path plays the
/// role of a minimum-norm resolution for rank-deficient systems.
pub fn solve_sym(g: &[f64], dim: usize, b: &[f64]) -> Vec<f64> {
    if let Some(ch) = Cholesky::factor(g, dim) {
        return ch.solve(b);
    }
    let max_diag = (0..dim)
        .map(|i| g[i * dim + i].abs())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut ridged = g.to_vec();
    let mut ridge = max_diag * 1e-10;
    loop {
        for i in 0..dim {
            ridged[i * dim + i] = g[i * dim + i] + ridge;
        }
        if let Some(ch) = Cholesky::factor(&ridged, dim) {
            return ch.solve(b);
        }
        ridge *= 100.0;
    }
}

/// Least-squares coefficients for `cols * beta ~= y` via modified
/// Gram-Schmidt with one reorthogonalisation pass. Columns that are linearly
/// dependent on earlier ones receive a zero coefficient.
pub fn lstsq(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = cols.len();
    let n = y.len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut r = vec![0.0f64; p * p];
    let mut live = vec![true; p];
    for (j, col) in cols.iter().enumerate() {
        debug_assert_eq!(col.len(), n);
        let norm0 = dot(col, col).sqrt();
        let mut v = col.clone();
        for _pass in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let proj = dot(qk, &v);
                r[k * p + j] += proj;
                for i in 0..n {
                    v[i] -= proj * qk[i];
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm <= norm0 * 1e-12 + f64::MIN_POSITIVE {
            live[j] = false;
            q.push(vec![0.0; n]);
            r[j * p + j] = 1.0;
        } else {
            for x in v.iter_mut() {
                *x /= norm;
            }
            r[j * p + j] = norm;
            q.push(v);
        }
    }
    // back-substitute R beta = Q^T y
    let qty: Vec<f64> = q.iter().map(|qk| dot(qk, y)).collect();
    let mut beta = vec![0.0f64; p];
    for j in (0..p).rev() {
        if !live[j] {
            beta[j] = 0.0;
            continue;
        }
        let mut s = qty[j];
        for k in j + 1..p {
            s -= r[j * p + k] * beta[k];
        }
        beta[j] = s / r[j * p + j];
    }
    beta
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        // G = [[4,2],[2,3]], b = [2, 5] -> x = [-0.5, 2]
        let g = vec![4.0, 2.0, 2.0, 3.0];
        let ch = Cholesky::factor(&g, 2).unwrap();
        let x = ch.solve(&[2.0, 5.0]);
        assert!((x[0] + 0.5).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let g = vec![1.0, 1.0, 1.0, 1.0];
        assert!(Cholesky::factor(&g, 2).is_none());
    }

    #[test]
    fn lstsq_recovers_exact_line() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let ones = vec![1.0; 10];
        let y: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let beta = lstsq(&[ones, xs], &y);
        assert!((beta[0] - 3.0).abs() < 1e-12);
        assert!((beta[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn lstsq_zeroes_dependent_column() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let dup = xs.clone();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let beta = lstsq(&[xs, dup], &y);
        assert!((beta[0] - 2.0).abs() < 1e-10);
        assert_eq!(beta[1], 0.0);
    }
}
