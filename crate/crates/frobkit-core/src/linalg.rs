//! Dense linear algebra over a single p-adic field with minimal-valuation
//! pivoting, plus the division-free Berkowitz characteristic polynomial.

use crate::error::{Error, Result};
use crate::padic::{Field, PadicElement};

#[derive(Clone, Debug)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<PadicElement>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<PadicElement>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn zero(field: &Field, rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![PadicElement::zero(field); rows * cols],
        }
    }

    pub fn identity(field: &Field, n: usize) -> Self {
        let mut m = Self::zero(field, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = PadicElement::one(field);
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> &PadicElement {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut PadicElement {
        &mut self.data[i * self.cols + j]
    }

    pub fn map<F: Fn(&PadicElement) -> PadicElement>(&self, f: F) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.at(i, j).clone());
            }
        }
        Mat { rows: self.cols, cols: self.rows, data }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let field = self.data[0].field().clone();
        let mut out = Mat::zero(&field, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero_at_precision() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = a.mul(other.at(k, j));
                    *out.at_mut(i, j) = out.at(i, j).add(&t);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: &PadicElement) -> Mat {
        self.map(|x| x.mul(c))
    }

    /// Componentwise agreement in relative p-digits.
    pub fn agrees_to(&self, other: &Mat, digits: i64) -> bool {
        self.data
            .iter()
            .zip(other.data.iter())
            .all(|(a, b)| a.agrees_to(b, digits))
    }
}

fn swap_rows(m: &mut Mat, a: usize, b: usize) {
    if a == b {
        return;
    }
    for k in 0..m.cols {
        let cols = m.cols;
        m.data.swap(a * cols + k, b * cols + k);
    }
}

/// An entry is a trustworthy pivot only when its tracked relative precision
/// is above the noise floor: catastrophic cancellation leaves values of high
/// valuation that carry one or two digits and must not determine ranks.
fn pivotable(x: &PadicElement) -> Option<i64> {
    let v = x.vnum_t()?;
    let floor = (x.field().precision() as i64 / 8).clamp(2, 4);
    if x.rel_prec_digits().unwrap_or(0) < floor {
        return None;
    }
    Some(v)
}

/// Row echelon with min-valuation pivoting, in place. Returns pivot columns.
fn echelon(m: &mut Mat) -> Vec<(usize, usize)> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m.cols {
        if row >= m.rows {
            break;
        }
        // choose the row with the smallest valuation in this column, ties by
        // lowest row index
        let mut best: Option<(usize, i64)> = None;
        for r in row..m.rows {
            if let Some(v) = pivotable(m.at(r, col)) {
                if best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((r, v));
                }
            }
        }
        let Some((prow, _)) = best else { continue };
        swap_rows(m, row, prow);
        let piv_inv = m.at(row, col).inverse().expect("pivot not invertible");
        for r in 0..m.rows {
            if r == row {
                continue;
            }
            if m.at(r, col).is_zero_at_precision() {
                continue;
            }
            let factor = m.at(r, col).mul(&piv_inv);
            for c in col..m.cols {
                let t = factor.mul(m.at(row, c));
                *m.at_mut(r, c) = m.at(r, c).sub(&t);
            }
        }
        pivots.push((row, col));
        row += 1;
    }
    pivots
}

/// Solutions of A x = b: one particular solution plus a kernel basis.
pub struct SolveResult {
    pub particular: Vec<PadicElement>,
    pub kernel: Vec<Vec<PadicElement>>,
}

/// Solve A x = b over the field with consistency checking; `b` may be the
/// zero vector to compute the kernel only.
pub fn solve(a: &Mat, b: &[PadicElement]) -> Result<SolveResult> {
    assert_eq!(a.rows, b.len());
    let field = if !a.data.is_empty() {
        a.data[0].field().clone()
    } else {
        b[0].field().clone()
    };
    // augmented matrix
    let mut aug = Mat::zero(&field, a.rows, a.cols + 1);
    for i in 0..a.rows {
        for j in 0..a.cols {
            *aug.at_mut(i, j) = a.at(i, j).clone();
        }
        *aug.at_mut(i, a.cols) = b[i].clone();
    }
    let pivots = echelon(&mut aug);
    // consistency: a pivot in the last column means inconsistent
    if pivots.iter().any(|&(_, c)| c == a.cols) {
        return Err(Error::Inconsistent);
    }
    let mut particular = vec![PadicElement::zero(&field); a.cols];
    for &(r, c) in &pivots {
        particular[c] = aug.at(r, a.cols).div(aug.at(r, c))?;
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let mut kernel = Vec::new();
    for free in 0..a.cols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![PadicElement::zero(&field); a.cols];
        v[free] = PadicElement::one(&field);
        for &(r, c) in &pivots {
            v[c] = aug.at(r, free).div(aug.at(r, c))?.neg();
        }
        kernel.push(v);
    }
    Ok(SolveResult { particular, kernel })
}

/// Kernel basis of A.
pub fn kernel(a: &Mat) -> Result<Vec<Vec<PadicElement>>> {
    let field = a.data[0].field().clone();
    let zero = vec![PadicElement::zero(&field); a.rows];
    Ok(solve(a, &zero)?.kernel)
}

/// Matrix rank at working precision.
pub fn rank(a: &Mat) -> usize {
    let mut m = a.clone();
    echelon(&mut m).len()
}

pub fn inverse(a: &Mat) -> Result<Mat> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let field = a.data[0].field().clone();
    let mut aug = Mat::zero(&field, n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            *aug.at_mut(i, j) = a.at(i, j).clone();
        }
        *aug.at_mut(i, n + i) = PadicElement::one(&field);
    }
    let pivots = echelon(&mut aug);
    if pivots.len() < n || pivots.iter().any(|&(_, c)| c >= n) {
        return Err(Error::PrecisionLoss("matrix not invertible at precision".into()));
    }
    let mut out = Mat::zero(&field, n, n);
    for &(r, c) in &pivots {
        let piv = aug.at(r, c).clone();
        for j in 0..n {
            *out.at_mut(c, j) = aug.at(r, n + j).div(&piv)?;
        }
    }
    Ok(out)
}

/// Determinant, via the division-free characteristic polynomial.
pub fn det(a: &Mat) -> PadicElement {
    assert_eq!(a.rows, a.cols);
    let cp = charpoly(a);
    // det(tI - A) at t = 0 is (-1)^n det A
    let c0 = cp[0].clone();
    if a.rows % 2 == 1 {
        c0.neg()
    } else {
        c0
    }
}

/// Characteristic polynomial det(tI - A), monic, by the division-free
/// Berkowitz algorithm: no pivoting, no precision loss beyond multiplication.
/// Returns coefficients c_0..c_n with c_n = 1.
pub fn charpoly(a: &Mat) -> Vec<PadicElement> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let field = a.data[0].field().clone();
    let one = PadicElement::one(&field);
    if n == 0 {
        return vec![one];
    }
    // Berkowitz: iteratively build the coefficient vector via Toeplitz products.
    let mut coeffs: Vec<PadicElement> = vec![one.clone()];
    for k in 1..=n {
        // principal k x k submatrix quantities
        let sub = |i: usize, j: usize| a.at(i, j);
        let m = k - 1; // leading block size
        // row vector R = a[m][0..m], column S = a[0..m][m], block B = a[0..m][0..m]
        let mut series: Vec<PadicElement> = Vec::with_capacity(k + 1);
        series.push(one.neg()); // -1
        series.push(sub(m, m).clone()); // a_mm
        if m > 0 {
            // series entries: R B^i S for i = 0..m-1
            let mut vec_s: Vec<PadicElement> = (0..m).map(|i| sub(i, m).clone()).collect();
            for _ in 0..m {
                // R . vec
                let mut dot = PadicElement::zero(&field);
                for i in 0..m {
                    dot = dot.add(&sub(m, i).mul(&vec_s[i]));
                }
                series.push(dot);
                // vec <- B vec
                let mut nv = vec![PadicElement::zero(&field); m];
                for i in 0..m {
                    for j in 0..m {
                        nv[i] = nv[i].add(&sub(i, j).mul(&vec_s[j]));
                    }
                }
                vec_s = nv;
            }
            series.truncate(k + 1);
        }
        // Toeplitz multiply: next[j + s] = sum series[s] * coeffs[j]
        let mut next = vec![PadicElement::zero(&field); coeffs.len() + 1];
        for (j, c) in coeffs.iter().enumerate() {
            for (s, sv) in series.iter().enumerate() {
                if j + s < next.len() {
                    next[j + s] = next[j + s].add(&sv.mul(c));
                }
            }
        }
        coeffs = next;
    }
    // coeffs[i] multiplies t^(n-i) and coeffs[0] = (-1)^n exactly; reorder to
    // ascending and fix the global sign for odd n.
    let mut out: Vec<PadicElement> = coeffs.into_iter().rev().collect();
    if n % 2 == 1 {
        for c in out.iter_mut() {
            *c = c.neg();
        }
    }
    out
}
