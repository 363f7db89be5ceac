//! Dense symmetric positive-definite solves for the normal equations.

/// Relative pivot floor on the diagonally scaled matrix.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Cholesky factor of `D^{-1} A D^{-1}` where `D = sqrt(diag(A))`.
/// Scaling makes the pivot test independent of column units.
#[derive(Debug, Clone)]
pub struct ScaledCholesky {
    n: usize,
    scale: Vec<f64>,
    /// Lower triangle, row-major `n * n`.
    lower: Vec<f64>,
}

/// Index of the column whose pivot collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular(pub usize);

impl ScaledCholesky {
    /// `a` is a symmetric `n * n` row-major matrix.
    pub fn factor(a: &[f64], n: usize) -> Result<Self, Singular> {
        debug_assert_eq!(a.len(), n * n);
        let mut scale = Vec::with_capacity(n);
        for i in 0..n {
            let d = a[i * n + i];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Singular(i));
            }
            scale.push(d.sqrt());
        }
        let mut lower = vec![0.0; n * n];
        for j in 0..n {
            let mut diag = a[j * n + j] / (scale[j] * scale[j]);
            for k in 0..j {
                diag -= lower[j * n + k] * lower[j * n + k];
            }
            if diag < PIVOT_TOLERANCE {
                return Err(Singular(j));
            }
            let ljj = diag.sqrt();
            lower[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = a[i * n + j] / (scale[i] * scale[j]);
                for k in 0..j {
                    s -= lower[i * n + k] * lower[j * n + k];
                }
                lower[i * n + j] = s / ljj;
            }
        }
        Ok(Self { n, scale, lower })
    }

    // Index loops mirror the textbook triangular solves.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z: Vec<f64> = b.iter().zip(&self.scale).map(|(v, s)| v / s).collect();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * z[k];
            }
            z[i] = s / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i] * z[k];
            }
            z[i] = s / self.lower[i * n + i];
        }
        z.iter().zip(&self.scale).map(|(v, s)| v / s).collect()
    }

    /// Diagonal of `A^{-1}`.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| {
                let mut e = vec![0.0; self.n];
                e[j] = 1.0;
                self.solve(&e)[j]
            })
            .collect()
    }
}
