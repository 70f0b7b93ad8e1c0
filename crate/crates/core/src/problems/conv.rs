//! 2-D convolution with symmetric (mirror) boundary handling and its exact
//! adjoint.
//!
//! The image is extended by `r` pixels per side with half-sample symmetric
//! padding (`…, u1, u0 | u0, u1, …`), then convolved in the valid region.
//! The adjoint correlates into the padded domain and folds the border back
//! onto the pixels it was copied from.

use std::f64::consts::PI;

use crate::error::{check_len, Error, Result};

/// A square convolution kernel of odd size.
#[derive(Debug, Clone, PartialEq)]
pub enum Filter {
    /// Row-major taps `k[a][b]`.
    Dense { size: usize, taps: Vec<f64> },
    /// `k[a][b] = col[a]·row[b]`.
    Separable { col: Vec<f64>, row: Vec<f64> },
}

impl Filter {
    pub fn dense(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size % 2 == 0 || taps.len() != size * size {
            return Err(Error::Config(format!(
                "dense filter needs odd size and size² taps, got size {size} with {} taps",
                taps.len()
            )));
        }
        Ok(Filter::Dense { size, taps })
    }

    pub fn separable(col: Vec<f64>, row: Vec<f64>) -> Result<Self> {
        if col.len() % 2 == 0 || col.len() != row.len() {
            return Err(Error::Config(format!(
                "separable filter needs equal odd lengths, got {} and {}",
                col.len(),
                row.len()
            )));
        }
        Ok(Filter::Separable { col, row })
    }

    /// The 1×1 unit impulse.
    pub fn identity() -> Self {
        Filter::Dense {
            size: 1,
            taps: vec![1.0],
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Filter::Dense { size, .. } => *size,
            Filter::Separable { col, .. } => col.len(),
        }
    }

    pub fn radius(&self) -> usize {
        self.size() / 2
    }

    /// Row-major taps.
    pub fn taps(&self) -> Vec<f64> {
        match self {
            Filter::Dense { taps, .. } => taps.clone(),
            Filter::Separable { col, row } => col.iter().flat_map(|c| row.iter().map(move |r| c * r)).collect(),
        }
    }

    /// The same kernel stored densely.
    pub fn to_dense(&self) -> Self {
        Filter::Dense {
            size: self.size(),
            taps: self.taps(),
        }
    }

    fn check_image(&self, height: usize, width: usize, len: usize) -> Result<()> {
        check_len(height * width, len)?;
        let r = self.radius();
        if r > height || r > width {
            return Err(Error::Config(format!(
                "{0}x{0} kernel larger than {height}x{width} image",
                self.size()
            )));
        }
        Ok(())
    }

    /// `k ∗ u` on a `height × width` image.
    pub fn apply(&self, u: &[f64], height: usize, width: usize) -> Result<Vec<f64>> {
        self.check_image(height, width, u.len())?;
        let r = self.radius();
        let padded = pad(u, height, width, r);
        Ok(match self {
            Filter::Dense { size, taps } => {
                let pw = width + 2 * r;
                let mut out = vec![0.0; height * width];
                for a in 0..*size {
                    for b in 0..*size {
                        let k = taps[a * size + b];
                        if k == 0.0 {
                            continue;
                        }
                        for i in 0..height {
                            let src = &padded[(i + 2 * r - a) * pw + 2 * r - b..][..width];
                            axpy(k, src, &mut out[i * width..][..width]);
                        }
                    }
                }
                out
            }
            Filter::Separable { col, row } => {
                vertical(&horizontal(&padded, height, width, row), height, width, col)
            }
        })
    }

    /// `Kᵀv`, the exact adjoint of [`Filter::apply`].
    pub fn adjoint(&self, v: &[f64], height: usize, width: usize) -> Result<Vec<f64>> {
        self.check_image(height, width, v.len())?;
        let r = self.radius();
        let pw = width + 2 * r;
        let ph = height + 2 * r;
        let mut padded = vec![0.0; ph * pw];
        match self {
            Filter::Dense { size, taps } => {
                for a in 0..*size {
                    for b in 0..*size {
                        let k = taps[a * size + b];
                        if k == 0.0 {
                            continue;
                        }
                        for i in 0..height {
                            let dst = &mut padded[(i + 2 * r - a) * pw + 2 * r - b..][..width];
                            axpy(k, &v[i * width..][..width], dst);
                        }
                    }
                }
            }
            Filter::Separable { col, row } => {
                let mut tmp = vec![0.0; ph * width];
                vertical_adjoint(v, height, width, col, &mut tmp);
                horizontal_adjoint(&tmp, height, width, row, &mut padded);
            }
        }
        Ok(fold(&padded, height, width, r))
    }
}

fn axpy(k: f64, src: &[f64], dst: &mut [f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += k * s;
    }
}

/// Horizontal pass of a separable kernel over every row of a padded image;
/// the result has `height + 2r` rows of `width` values.
pub(crate) fn horizontal(padded: &[f64], height: usize, width: usize, row: &[f64]) -> Vec<f64> {
    let r = row.len() / 2;
    let (pw, ph) = (width + 2 * r, height + 2 * r);
    let mut tmp = vec![0.0; ph * width];
    for (b, &k) in row.iter().enumerate() {
        for i in 0..ph {
            axpy(k, &padded[i * pw + 2 * r - b..][..width], &mut tmp[i * width..][..width]);
        }
    }
    tmp
}

/// Vertical pass completing [`horizontal`].
pub(crate) fn vertical(tmp: &[f64], height: usize, width: usize, col: &[f64]) -> Vec<f64> {
    let r = col.len() / 2;
    let mut out = vec![0.0; height * width];
    for (a, &k) in col.iter().enumerate() {
        for i in 0..height {
            axpy(k, &tmp[(i + 2 * r - a) * width..][..width], &mut out[i * width..][..width]);
        }
    }
    out
}

/// Adds the adjoint of [`vertical`] applied to `v` into `tmp`.
pub(crate) fn vertical_adjoint(v: &[f64], height: usize, width: usize, col: &[f64], tmp: &mut [f64]) {
    let r = col.len() / 2;
    for (a, &k) in col.iter().enumerate() {
        for i in 0..height {
            axpy(k, &v[i * width..][..width], &mut tmp[(i + 2 * r - a) * width..][..width]);
        }
    }
}

/// Adds the adjoint of [`horizontal`] applied to `tmp` into `padded`.
pub(crate) fn horizontal_adjoint(tmp: &[f64], height: usize, width: usize, row: &[f64], padded: &mut [f64]) {
    let r = row.len() / 2;
    let (pw, ph) = (width + 2 * r, height + 2 * r);
    for (b, &k) in row.iter().enumerate() {
        for i in 0..ph {
            axpy(k, &tmp[i * width..][..width], &mut padded[i * pw + 2 * r - b..][..width]);
        }
    }
}

/// Source index of padded position `p` (may be negative or ≥ `n`).
fn mirror(p: isize, n: usize) -> usize {
    let n = n as isize;
    let q = if p < 0 {
        -p - 1
    } else if p >= n {
        2 * n - p - 1
    } else {
        p
    };
    q as usize
}

fn mirror_map(n: usize, r: usize) -> Vec<usize> {
    (0..n + 2 * r).map(|p| mirror(p as isize - r as isize, n)).collect()
}

pub(crate) fn pad(u: &[f64], height: usize, width: usize, r: usize) -> Vec<f64> {
    let cols = mirror_map(width, r);
    let mut out = Vec::with_capacity((height + 2 * r) * cols.len());
    for si in mirror_map(height, r) {
        let src = &u[si * width..][..width];
        out.extend(cols.iter().map(|&sj| src[sj]));
    }
    out
}

/// Adjoint of [`pad`]: every padded value is added back to its source pixel.
pub(crate) fn fold(padded: &[f64], height: usize, width: usize, r: usize) -> Vec<f64> {
    let cols = mirror_map(width, r);
    let pw = cols.len();
    let mut out = vec![0.0; height * width];
    for (pi, si) in mirror_map(height, r).into_iter().enumerate() {
        let dst = &mut out[si * width..][..width];
        for (pj, &sj) in cols.iter().enumerate() {
            dst[sj] += padded[pi * pw + pj];
        }
    }
    out
}

/// Orthonormal DCT-II basis vectors of length `n`, lowest frequency first.
pub fn dct_basis(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            (0..n)
                .map(|i| s * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos())
                .collect()
        })
        .collect()
}

/// The `size² − 1` non-constant separable 2-D DCT filters of a `size × size`
/// block, ordered by (vertical, horizontal) frequency.
pub fn dct_filter_bank(size: usize) -> Vec<Filter> {
    let basis = dct_basis(size);
    let mut bank = Vec::with_capacity(size * size - 1);
    for (a, col) in basis.iter().enumerate() {
        for (b, row) in basis.iter().enumerate() {
            if a == 0 && b == 0 {
                continue;
            }
            bank.push(Filter::Separable {
                col: col.clone(),
                row: row.clone(),
            });
        }
    }
    bank
}
