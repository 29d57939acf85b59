use std::f64::consts::PI;

use super::{Result, Tensor, TensorError, Var};

fn check_len(len: usize) -> Result<()> {
    if len < 2 || len % 2 != 0 {
        return Err(TensorError::UnsupportedLength {
            op: "rdft",
            len,
            reason: "length must be even and at least 2",
        });
    }
    Ok(())
}

/// Twiddle table `(cos, sin)` of `2π·j/len` for `j in 0..len`.
///
/// Indexing by `(k·n) mod len` keeps every argument inside one period.
fn twiddles(len: usize) -> (Vec<f64>, Vec<f64>) {
    (0..len)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / len as f64;
            (a.cos(), a.sin())
        })
        .unzip()
}

/// Forward real DFT operators for length `len`.
///
/// Returns `(cos_op, neg_sin_op)`, both `[(len/2+1) × len]`, such that
/// `re = cos_op · x` and `im = neg_sin_op · x`.
pub fn rdft_matrices(len: usize) -> Result<(Tensor, Tensor)> {
    check_len(len)?;
    let bins = len / 2 + 1;
    let (c, s) = twiddles(len);
    let mut re = Vec::with_capacity(bins * len);
    let mut im = Vec::with_capacity(bins * len);
    for k in 0..bins {
        for n in 0..len {
            let j = (k * n) % len;
            re.push(c[j]);
            im.push(-s[j]);
        }
    }
    Ok((Tensor::matrix(bins, len, re)?, Tensor::matrix(bins, len, im)?))
}

/// Non-redundant half spectrum of a real series.
pub fn rdft_values(x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = x.len();
    check_len(len)?;
    let (c, s) = twiddles(len);
    let bins = len / 2 + 1;
    let mut re = vec![0.0; bins];
    let mut im = vec![0.0; bins];
    for k in 0..bins {
        for (n, &xn) in x.iter().enumerate() {
            let j = (k * n) % len;
            re[k] += xn * c[j];
            im[k] -= xn * s[j];
        }
    }
    Ok((re, im))
}

impl<'t> Var<'t> {
    /// Real DFT along the first (time) axis of a `[L]` or `[L×D]` value.
    ///
    /// Vector input yields `[L/2+1]` outputs, matrix input `[(L/2+1)×D]`.
    pub fn rdft(&self) -> Result<(Var<'t>, Var<'t>)> {
        let shape = self.shape();
        let len = shape[0];
        let (cos_op, sin_op) = rdft_matrices(len)?;
        let tape = self.tape();
        let x = if shape.len() == 1 {
            self.reshape(&[len, 1])?
        } else {
            *self
        };
        let mut re = tape.constant(cos_op).matmul(x)?;
        let mut im = tape.constant(sin_op).matmul(x)?;
        if shape.len() == 1 {
            re = re.reshape(&[len / 2 + 1])?;
            im = im.reshape(&[len / 2 + 1])?;
        }
        Ok((re, im))
    }
}
