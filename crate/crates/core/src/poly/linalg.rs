//! Small dense complex linear algebra: LU determinant and solve.

use num_complex::Complex64;

/// Row-major square matrix.
#[derive(Clone, Debug)]
pub struct Matrix {
    n: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::ZERO; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.n {
            self.data.swap(a * self.n + j, b * self.n + j);
        }
    }

    /// Determinant by Gaussian elimination with partial pivoting. Consumes
    /// the matrix as scratch space.
    pub fn determinant(mut self) -> Complex64 {
        let n = self.n;
        let mut det = Complex64::ONE;
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, self.get(i, k).norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 {
                return Complex64::ZERO;
            }
            if piv != k {
                self.swap_rows(piv, k);
                det = -det;
            }
            let pivot = self.get(k, k);
            det *= pivot;
            let inv = pivot.inv();
            for i in (k + 1)..n {
                let f = self.get(i, k) * inv;
                if f == Complex64::ZERO {
                    continue;
                }
                for j in (k + 1)..n {
                    let v = self.get(i, j) - f * self.get(k, j);
                    self.set(i, j, v);
                }
            }
        }
        det
    }

    /// Solve `M x = rhs`; `None` when a pivot vanishes.
    pub fn solve(mut self, mut rhs: Vec<Complex64>) -> Option<Vec<Complex64>> {
        let n = self.n;
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, self.get(i, k).norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 || !pmax.is_finite() {
                return None;
            }
            self.swap_rows(piv, k);
            rhs.swap(piv, k);
            let inv = self.get(k, k).inv();
            for i in (k + 1)..n {
                let f = self.get(i, k) * inv;
                for j in (k + 1)..n {
                    let v = self.get(i, j) - f * self.get(k, j);
                    self.set(i, j, v);
                }
                let r = rhs[i] - f * rhs[k];
                rhs[i] = r;
            }
        }
        for k in (0..n).rev() {
            let mut acc = rhs[k];
            for j in (k + 1)..n {
                acc -= self.get(k, j) * rhs[j];
            }
            rhs[k] = acc / self.get(k, k);
        }
        Some(rhs)
    }
}
