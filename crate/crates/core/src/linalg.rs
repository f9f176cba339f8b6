//! Direct solvers: scalar tridiagonal (Thomas), block-tridiagonal LU and a
//! general banded LU without pivoting.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves a tridiagonal system in place. `sub[0]` and `sup[n-1]` are ignored;
/// `diag` is overwritten and `rhs` receives the solution.
pub fn solve_tridiagonal(sub: &[f64], diag: &mut [f64], sup: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    if n == 0 {
        return Ok(());
    }
    let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 1..n {
        if diag[i - 1].abs() <= 1e-14 * scale {
            return Err(Error::Singular {
                what: "tridiagonal solve",
                row: i - 1,
            });
        }
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if diag[n - 1].abs() <= 1e-14 * scale || !diag[n - 1].is_finite() {
        return Err(Error::Singular {
            what: "tridiagonal solve",
            row: n - 1,
        });
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
    Ok(())
}

/// Square block-tridiagonal matrix with `n` block rows of size `m × m`.
///
/// `lower[s]` couples block row `s` to block column `s − 1` (`lower[0]` unused),
/// `upper[s]` couples block row `s` to `s + 1` (`upper[n−1]` unused).
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTridiagonal {
    m: usize,
    lower: Vec<DMatrix<f64>>,
    diag: Vec<DMatrix<f64>>,
    upper: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn zeros(m: usize, n: usize) -> Self {
        let z = DMatrix::zeros(m, m);
        Self {
            m,
            lower: vec![z.clone(); n],
            diag: vec![z.clone(); n],
            upper: vec![z; n],
        }
    }

    pub fn block_size(&self) -> usize {
        self.m
    }

    pub fn block_rows(&self) -> usize {
        self.diag.len()
    }

    pub fn order(&self) -> usize {
        self.m * self.diag.len()
    }

    pub fn lower(&self, s: usize) -> &DMatrix<f64> {
        &self.lower[s]
    }

    pub fn diag(&self, s: usize) -> &DMatrix<f64> {
        &self.diag[s]
    }

    pub fn upper(&self, s: usize) -> &DMatrix<f64> {
        &self.upper[s]
    }

    pub fn lower_mut(&mut self, s: usize) -> &mut DMatrix<f64> {
        &mut self.lower[s]
    }

    pub fn diag_mut(&mut self, s: usize) -> &mut DMatrix<f64> {
        &mut self.diag[s]
    }

    pub fn upper_mut(&mut self, s: usize) -> &mut DMatrix<f64> {
        &mut self.upper[s]
    }

    /// Entry `(row, col)` in the flat node-major numbering.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (s, i) = (row / self.m, row % self.m);
        let (t, j) = (col / self.m, col % self.m);
        match t as isize - s as isize {
            0 => self.diag[s][(i, j)],
            -1 => self.lower[s][(i, j)],
            1 => self.upper[s][(i, j)],
            _ => 0.0,
        }
    }

    /// `a·self + b·other`, blockwise.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.m, other.m);
        assert_eq!(self.block_rows(), other.block_rows());
        let mix = |x: &[DMatrix<f64>], y: &[DMatrix<f64>]| {
            x.iter().zip(y).map(|(p, q)| p * a + q * b).collect()
        };
        Self {
            m: self.m,
            lower: mix(&self.lower, &other.lower),
            diag: mix(&self.diag, &other.diag),
            upper: mix(&self.upper, &other.upper),
        }
    }

    /// Replaces block row `s` by identity rows.
    pub fn pin_block_row(&mut self, s: usize) {
        self.lower[s].fill(0.0);
        self.upper[s].fill(0.0);
        self.diag[s].fill_with_identity();
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.block_rows());
        assert_eq!(x.len(), m * n);
        let mut y = vec![0.0; m * n];
        for s in 0..n {
            let out = &mut y[s * m..(s + 1) * m];
            let mut acc = |blk: &DMatrix<f64>, t: usize| {
                let xs = &x[t * m..(t + 1) * m];
                for i in 0..m {
                    let mut sum = 0.0;
                    for j in 0..m {
                        sum += blk[(i, j)] * xs[j];
                    }
                    out[i] += sum;
                }
            };
            if s > 0 {
                acc(&self.lower[s], s - 1);
            }
            acc(&self.diag[s], s);
            if s + 1 < n {
                acc(&self.upper[s], s + 1);
            }
        }
        y
    }

    /// Block LU (block Thomas algorithm) with partially pivoted dense LU of the
    /// diagonal Schur complements.
    pub fn factor(&self) -> Result<BlockLu> {
        let (m, n) = (self.m, self.block_rows());
        let mut pivots = Vec::with_capacity(n);
        let mut coupling = Vec::with_capacity(n);
        let mut schur = self.diag[0].clone();
        for s in 0..n {
            let scale = schur.amax().max(f64::MIN_POSITIVE);
            let lu = schur.clone().lu();
            let u = lu.u();
            if let Some(k) = (0..m).find(|&k| !(u[(k, k)].abs() > 1e-13 * scale)) {
                return Err(Error::Singular {
                    what: "block-tridiagonal LU",
                    row: s * m + k,
                });
            }
            if s + 1 < n {
                let x = lu.solve(&self.upper[s]).ok_or(Error::Singular {
                    what: "block-tridiagonal LU",
                    row: s * m,
                })?;
                schur = &self.diag[s + 1] - &self.lower[s + 1] * &x;
                coupling.push(x);
            }
            pivots.push(lu);
        }
        Ok(BlockLu {
            m,
            lower: self.lower.clone(),
            pivots,
            coupling,
        })
    }
}

/// Factorisation produced by [`BlockTridiagonal::factor`].
#[derive(Clone, Debug)]
pub struct BlockLu {
    m: usize,
    lower: Vec<DMatrix<f64>>,
    pivots: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    coupling: Vec<DMatrix<f64>>,
}

impl BlockLu {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let (m, n) = (self.m, self.pivots.len());
        assert_eq!(rhs.len(), m * n);
        let mut z: Vec<DVector<f64>> = Vec::with_capacity(n);
        for s in 0..n {
            let mut b = DVector::from_column_slice(&rhs[s * m..(s + 1) * m]);
            if s > 0 {
                b -= &self.lower[s] * &z[s - 1];
            }
            let v = self.pivots[s].solve(&b).ok_or(Error::Singular {
                what: "block-tridiagonal LU",
                row: s * m,
            })?;
            z.push(v);
        }
        for s in (0..n - 1).rev() {
            let next = z[s + 1].clone();
            z[s] -= &self.coupling[s] * next;
        }
        let mut out = Vec::with_capacity(m * n);
        for v in z {
            out.extend(v.iter());
        }
        Ok(out)
    }
}

/// General banded matrix stored row-wise, `kl` sub- and `ku` super-diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku || i >= self.n || j >= self.n {
            None
        } else {
            Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `v` at `(i, j)`; panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) lies outside the band"));
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) lies outside the band"));
        self.data[k] = v;
    }

    /// Zeroes row `i` and puts 1 on the diagonal.
    pub fn pin_row(&mut self, i: usize) {
        let w = self.kl + self.ku + 1;
        self.data[i * w..(i + 1) * w].fill(0.0);
        self.set(i, i, 1.0);
    }

    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!((self.n, self.kl, self.ku), (other.n, other.kl, other.ku));
        Self {
            n: self.n,
            kl: self.kl,
            ku: self.ku,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let w = self.kl + self.ku + 1;
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                let row = &self.data[i * w..(i + 1) * w];
                (lo..=hi).map(|j| row[j + self.kl - i] * x[j]).sum()
            })
            .collect()
    }

    /// In-place LU without pivoting. Stable for matrices whose symmetric part is
    /// positive definite (and for identity rows mixed into such matrices).
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let w = kl + ku + 1;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let pivot = self.data[k * w + kl];
            if !(pivot.abs() > 1e-14 * scale) {
                return Err(Error::Singular {
                    what: "banded LU",
                    row: k,
                });
            }
            let col_end = (k + ku).min(n - 1);
            for i in k + 1..=(k + kl).min(n - 1) {
                let ik = i * w + (k + kl - i);
                let factor = self.data[ik] / pivot;
                self.data[ik] = factor;
                if factor == 0.0 {
                    continue;
                }
                let (head, tail) = self.data.split_at_mut(i * w);
                let krow = &head[k * w..(k + 1) * w];
                let irow = &mut tail[..w];
                for j in k + 1..=col_end {
                    irow[j + kl - i] -= factor * krow[j + kl - k];
                }
            }
        }
        Ok(BandedLu { inner: self })
    }
}

#[derive(Clone, Debug)]
pub struct BandedLu {
    inner: BandedMatrix,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let a = &self.inner;
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let w = kl + ku + 1;
        assert_eq!(rhs.len(), n);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let row = &a.data[i * w..(i + 1) * w];
            let mut s = x[i];
            for j in lo..i {
                s -= row[j + kl - i] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + ku).min(n - 1);
            let row = &a.data[i * w..(i + 1) * w];
            let mut s = x[i];
            for j in i + 1..=hi {
                s -= row[j + kl - i] * x[j];
            }
            x[i] = s / row[kl];
        }
        x
    }
}
