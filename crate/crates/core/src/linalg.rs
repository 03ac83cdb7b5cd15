//! Small dense linear algebra: row reduction with partial pivoting and the
//! minimum-norm least-squares solve used by the algebraic identification route.

/// Pivot threshold for treating an eliminated entry as zero.
pub const PIVOT_TOL: f64 = 1e-10;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }
}

/// Reduced row echelon form in place with partial pivoting. Returns the
/// pivot columns; their count is the rank.
pub fn rref(m: &mut Matrix) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let (best, best_abs) =
            (r..m.rows)
                .map(|i| (i, m.get(i, c).abs()))
                .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= PIVOT_TOL {
            for i in r..m.rows {
                m.set(i, c, 0.0);
            }
            continue;
        }
        m.swap_rows(r, best);
        let p = m.get(r, c);
        for j in 0..m.cols {
            let v = m.get(r, j) / p;
            m.set(r, j, v);
        }
        for i in 0..m.rows {
            if i == r {
                continue;
            }
            let f = m.get(i, c);
            if f != 0.0 {
                for j in 0..m.cols {
                    let v = m.get(i, j) - f * m.get(r, j);
                    m.set(i, j, v);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Solves a square non-singular system by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot vanishes.
pub fn solve_square(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.len(), n);
    let mut aug = Matrix::zeros(n, n + 1);
    for (i, &bi) in b.iter().enumerate() {
        for j in 0..n {
            aug.set(i, j, a.get(i, j));
        }
        aug.set(i, n, bi);
    }
    for c in 0..n {
        let (best, best_abs) =
            (c..n)
                .map(|i| (i, aug.get(i, c).abs()))
                .fold((c, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= PIVOT_TOL {
            return None;
        }
        aug.swap_rows(c, best);
        for i in c + 1..n {
            let f = aug.get(i, c) / aug.get(c, c);
            if f != 0.0 {
                for j in c..=n {
                    let v = aug.get(i, j) - f * aug.get(c, j);
                    aug.set(i, j, v);
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| aug.get(i, j) * x[j]).sum();
        x[i] = (aug.get(i, n) - s) / aug.get(i, i);
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub solution: Vec<f64>,
    pub rank: usize,
    /// Dimension of the null space of `A` (`cols - rank`).
    pub null_dim: usize,
}

/// Minimum-Euclidean-norm least-squares solution of `A q ≈ b`.
///
/// The solution is searched in the row space of `A` (spanned by the nonzero
/// rows of its RREF `R`): `q = Rᵀ z` with `(R Aᵀ A Rᵀ) z = R Aᵀ b`.
pub fn min_norm_least_squares(a: &Matrix, b: &[f64]) -> LeastSquares {
    assert_eq!(a.rows, b.len());
    let mut r = a.clone();
    let pivots = rref(&mut r);
    let rank = pivots.len();
    let null_dim = a.cols - rank;
    if rank == 0 {
        return LeastSquares {
            solution: vec![0.0; a.cols],
            rank,
            null_dim,
        };
    }
    let basis = Matrix::from_rows(&(0..rank).map(|i| r.row(i).to_vec()).collect::<Vec<_>>());
    let ar = a.matmul(&basis.transpose()); // rows(A) x rank
    let normal = ar.transpose().matmul(&ar);
    let rhs = ar.transpose().mul_vec(b);
    let z = solve_square(&normal, &rhs).expect("row-space basis has full rank");
    let solution = basis.transpose().mul_vec(&z);
    LeastSquares {
        solution,
        rank,
        null_dim,
    }
}
