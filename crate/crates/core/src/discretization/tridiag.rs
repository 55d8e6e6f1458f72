use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = A x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// `I + scale * A`
    pub fn shifted_identity(&self, scale: f64) -> Self {
        Tridiagonal {
            lower: self.lower.iter().map(|c| scale * c).collect(),
            diag: self.diag.iter().map(|c| 1.0 + scale * c).collect(),
            upper: self.upper.iter().map(|c| scale * c).collect(),
        }
    }

    /// Thomas algorithm. No pivoting; the matrices assembled by the solver are
    /// diagonally dominant for the meshes used here.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::invalid(format!(
                "right-hand side has length {}, matrix has {n} rows",
                rhs.len()
            )));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];

        let mut pivot = self.diag[0];
        check_pivot(pivot, 0)?;
        c_prime[0] = self.upper[0] / pivot;
        d_prime[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i] * c_prime[i - 1];
            check_pivot(pivot, i)?;
            c_prime[i] = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            d_prime[i] = (rhs[i] - self.lower[i] * d_prime[i - 1]) / pivot;
        }

        let mut x = d_prime;
        for i in (0..n - 1).rev() {
            x[i] -= c_prime[i] * x[i + 1];
        }
        Ok(x)
    }
}

fn check_pivot(pivot: f64, row: usize) -> Result<()> {
    if pivot.is_finite() && pivot.abs() > 1e-300 {
        Ok(())
    } else {
        Err(Error::SingularSystem { row })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_against_dense_product() {
        let n = 7;
        let mut a = Tridiagonal::zeros(n);
        for i in 0..n {
            a.diag[i] = 4.0 + i as f64 * 0.1;
            a.lower[i] = -1.0 - 0.05 * i as f64;
            a.upper[i] = -0.7;
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 2.0).collect();
        let b = a.apply(&x);
        let y = a.solve(&b).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((xi - yi).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut a = Tridiagonal::zeros(3);
        a.diag = vec![1.0, 1.0, 1.0];
        a.lower = vec![0.0, 1.0, 0.0];
        a.upper = vec![1.0, 0.0, 0.0];
        // second pivot: 1 - 1*1 = 0
        assert!(matches!(
            a.solve(&[1.0, 1.0, 1.0]),
            Err(Error::SingularSystem { row: 1 })
        ));
    }

    #[test]
    fn length_mismatch() {
        assert!(Tridiagonal::zeros(3).shifted_identity(1.0).solve(&[1.0]).is_err());
    }
}
