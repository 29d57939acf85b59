// Raw kernels shared by the tape and by plain tensor arithmetic.

/// out[m×n] += a[m×k] · b[k×n]
pub(crate) fn gemm(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aip * bv;
            }
        }
    }
}

/// out[m×k] += g[m×n] · bᵀ  where b is [k×n]
pub(crate) fn gemm_bt(g: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let g_row = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let b_row = &b[p * n..(p + 1) * n];
            let dot: f64 = g_row.iter().zip(b_row).map(|(x, y)| x * y).sum();
            out[i * k + p] += dot;
        }
    }
}

/// out[k×n] += aᵀ · g  where a is [m×k], g is [m×n]
pub(crate) fn gemm_at(a: &[f64], g: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let g_row = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let out_row = &mut out[p * n..(p + 1) * n];
            for (o, &gv) in out_row.iter_mut().zip(g_row) {
                *o += aip * gv;
            }
        }
    }
}

pub(crate) fn softmax_rows(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let o = &mut out[r * cols..(r + 1) * cols];
        let mut sum = 0.0;
        for (ov, &xv) in o.iter_mut().zip(row) {
            *ov = (xv - max).exp();
            sum += *ov;
        }
        for ov in o.iter_mut() {
            *ov /= sum;
        }
    }
    out
}

pub(crate) struct LayerNormCache {
    pub out: Vec<f64>,
    pub xhat: Vec<f64>,
    pub inv_std: Vec<f64>,
}

pub(crate) fn layer_norm(
    x: &[f64],
    gain: &[f64],
    bias: &[f64],
    rows: usize,
    cols: usize,
    eps: f64,
) -> LayerNormCache {
    let mut out = vec![0.0; rows * cols];
    let mut xhat = vec![0.0; rows * cols];
    let mut inv_std = vec![0.0; rows];
    let n = cols as f64;
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let is = 1.0 / (var + eps).sqrt();
        inv_std[r] = is;
        for c in 0..cols {
            let h = (row[c] - mean) * is;
            xhat[r * cols + c] = h;
            out[r * cols + c] = h * gain[c] + bias[c];
        }
    }
    LayerNormCache { out, xhat, inv_std }
}
