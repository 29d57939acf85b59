use std::cell::{Ref, RefCell};
use std::fmt;

use super::ops::{self, gemm_at, gemm_bt};
use super::{Result, Tensor, TensorError};

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Transpose(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddRow(usize, usize),
    Softmax(usize),
    LayerNorm {
        x: usize,
        gain: usize,
        bias: usize,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    ConcatCols(Vec<usize>),
    SelectRows(usize, Vec<usize>),
    Sum(usize),
    Reshape(usize),
}

impl Op {
    fn operands(&self) -> Vec<usize> {
        match self {
            Op::Leaf => vec![],
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::AddRow(a, b) => {
                vec![*a, *b]
            }
            Op::Transpose(a) | Op::Scale(a, _) | Op::Softmax(a) | Op::Sum(a) | Op::Reshape(a) => {
                vec![*a]
            }
            Op::SelectRows(a, _) => vec![*a],
            Op::LayerNorm { x, gain, bias, .. } => vec![*x, *gain, *bias],
            Op::ConcatCols(parts) => parts.clone(),
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Append-only record of a forward computation.
///
/// Nodes are stored in creation order, so every operand index is smaller
/// than the index of the node that consumes it.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var({}, {:?})", self.id, self.shape())
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records a trainable leaf.
    pub fn param(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// Records a leaf that never receives a gradient.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, false)
    }

    fn push(&self, value: Tensor, op: Op, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn record(&self, value: Tensor, op: Op) -> Var<'_> {
        let requires_grad = {
            let nodes = self.nodes.borrow();
            op.operands().iter().any(|&i| nodes[i].requires_grad)
        };
        self.push(value, op, requires_grad)
    }

    /// Reverse sweep from a scalar loss.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let shape = nodes[loss.id].value.shape().to_vec();
        if nodes[loss.id].value.len() != 1 {
            return Err(TensorError::NonScalarLoss(shape));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.id] = Some(vec![1.0]);

        for id in (0..=loss.id).rev() {
            let node = &nodes[id];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            propagate(&nodes, id, &g, &mut grads);
            grads[id] = Some(g);
        }

        let leaf_grads = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                if matches!(n.op, Op::Leaf) && n.requires_grad {
                    Some(grads[i].take().unwrap_or_else(|| vec![0.0; n.value.len()]))
                } else {
                    None
                }
            })
            .collect();
        Ok(Gradients {
            grads: leaf_grads,
            shapes: nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], id: usize, len: usize) -> &mut Vec<f64> {
    grads[id].get_or_insert_with(|| vec![0.0; len])
}

fn propagate(nodes: &[Node], id: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
    let node = &nodes[id];
    let needs = |i: usize| nodes[i].requires_grad;
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let av = &nodes[*a].value;
            let bv = &nodes[*b].value;
            let (m, k, n) = (av.rows(), av.cols(), bv.cols());
            if needs(*a) {
                let ga = accumulate(grads, *a, m * k);
                gemm_bt(g, bv.data(), ga, m, k, n);
            }
            if needs(*b) {
                let gb = accumulate(grads, *b, k * n);
                gemm_at(av.data(), g, gb, m, k, n);
            }
        }
        Op::Transpose(a) => {
            if needs(*a) {
                let (r, c) = (node.value.rows(), node.value.cols());
                let ga = accumulate(grads, *a, r * c);
                // node is [r×c], operand is [c×r]
                for i in 0..r {
                    for j in 0..c {
                        ga[j * r + i] += g[i * c + j];
                    }
                }
            }
        }
        Op::Add(a, b) => {
            for &x in [a, b] {
                if needs(x) {
                    let gx = accumulate(grads, x, g.len());
                    gx.iter_mut().zip(g).for_each(|(o, v)| *o += v);
                }
            }
        }
        Op::Sub(a, b) => {
            if needs(*a) {
                let ga = accumulate(grads, *a, g.len());
                ga.iter_mut().zip(g).for_each(|(o, v)| *o += v);
            }
            if needs(*b) {
                let gb = accumulate(grads, *b, g.len());
                gb.iter_mut().zip(g).for_each(|(o, v)| *o -= v);
            }
        }
        Op::Mul(a, b) => {
            if needs(*a) {
                let bv = nodes[*b].value.data();
                let ga = accumulate(grads, *a, g.len());
                for ((o, gv), bx) in ga.iter_mut().zip(g).zip(bv) {
                    *o += gv * bx;
                }
            }
            if needs(*b) {
                let av = nodes[*a].value.data();
                let gb = accumulate(grads, *b, g.len());
                for ((o, gv), ax) in gb.iter_mut().zip(g).zip(av) {
                    *o += gv * ax;
                }
            }
        }
        Op::Scale(a, s) => {
            if needs(*a) {
                let ga = accumulate(grads, *a, g.len());
                ga.iter_mut().zip(g).for_each(|(o, v)| *o += s * v);
            }
        }
        Op::AddRow(a, b) => {
            let cols = node.value.cols();
            if needs(*a) {
                let ga = accumulate(grads, *a, g.len());
                ga.iter_mut().zip(g).for_each(|(o, v)| *o += v);
            }
            if needs(*b) {
                let gb = accumulate(grads, *b, cols);
                for row in g.chunks(cols) {
                    gb.iter_mut().zip(row).for_each(|(o, v)| *o += v);
                }
            }
        }
        Op::Softmax(a) => {
            if needs(*a) {
                let y = node.value.data();
                let cols = node.value.cols();
                let ga = accumulate(grads, *a, g.len());
                for ((yr, gr), or) in y.chunks(cols).zip(g.chunks(cols)).zip(ga.chunks_mut(cols)) {
                    let dot: f64 = yr.iter().zip(gr).map(|(p, q)| p * q).sum();
                    for ((o, &yv), &gv) in or.iter_mut().zip(yr).zip(gr) {
                        *o += yv * (gv - dot);
                    }
                }
            }
        }
        Op::LayerNorm {
            x,
            gain,
            bias,
            xhat,
            inv_std,
        } => {
            let cols = node.value.cols();
            let n = cols as f64;
            if needs(*gain) {
                let gg = accumulate(grads, *gain, cols);
                for (gr, hr) in g.chunks(cols).zip(xhat.chunks(cols)) {
                    for ((o, gv), hv) in gg.iter_mut().zip(gr).zip(hr) {
                        *o += gv * hv;
                    }
                }
            }
            if needs(*bias) {
                let gb = accumulate(grads, *bias, cols);
                for gr in g.chunks(cols) {
                    gb.iter_mut().zip(gr).for_each(|(o, v)| *o += v);
                }
            }
            if needs(*x) {
                let gain_v = nodes[*gain].value.data();
                let gx = accumulate(grads, *x, g.len());
                for (r, ((gr, hr), or)) in g
                    .chunks(cols)
                    .zip(xhat.chunks(cols))
                    .zip(gx.chunks_mut(cols))
                    .enumerate()
                {
                    let mut mean_d = 0.0;
                    let mut mean_dh = 0.0;
                    for c in 0..cols {
                        let d = gr[c] * gain_v[c];
                        mean_d += d;
                        mean_dh += d * hr[c];
                    }
                    mean_d /= n;
                    mean_dh /= n;
                    for c in 0..cols {
                        let d = gr[c] * gain_v[c];
                        or[c] += inv_std[r] * (d - mean_d - hr[c] * mean_dh);
                    }
                }
            }
        }
        Op::ConcatCols(parts) => {
            let rows = node.value.rows();
            let total = node.value.cols();
            let mut offset = 0;
            for &p in parts {
                let pc = nodes[p].value.cols();
                if needs(p) {
                    let gp = accumulate(grads, p, rows * pc);
                    for r in 0..rows {
                        for c in 0..pc {
                            gp[r * pc + c] += g[r * total + offset + c];
                        }
                    }
                }
                offset += pc;
            }
        }
        Op::SelectRows(a, idx) => {
            if needs(*a) {
                let cols = node.value.cols();
                let len = nodes[*a].value.len();
                let ga = accumulate(grads, *a, len);
                for (out_r, &src_r) in idx.iter().enumerate() {
                    for c in 0..cols {
                        ga[src_r * cols + c] += g[out_r * cols + c];
                    }
                }
            }
        }
        Op::Reshape(a) => {
            if needs(*a) {
                let ga = accumulate(grads, *a, g.len());
                ga.iter_mut().zip(g).for_each(|(o, v)| *o += v);
            }
        }
        Op::Sum(a) => {
            if needs(*a) {
                let len = nodes[*a].value.len();
                let ga = accumulate(grads, *a, len);
                ga.iter_mut().for_each(|o| *o += g[0]);
            }
        }
    }
}

/// Gradients of every trainable leaf after a backward sweep.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient of a trainable leaf; `None` for constants and interior nodes.
    pub fn get(&self, var: Var<'_>) -> Option<Tensor> {
        self.grads
            .get(var.id)
            .and_then(|g| g.as_ref())
            .map(|g| Tensor::new(self.shapes[var.id].clone(), g.clone()).expect("gradient shape"))
    }

    /// Moves the gradient out, leaving `None` behind.
    pub fn take(&mut self, var: Var<'_>) -> Option<Tensor> {
        let shape = self.shapes.get(var.id)?.clone();
        self.grads[var.id]
            .take()
            .map(|g| Tensor::new(shape, g).expect("gradient shape"))
    }
}

fn dim_err(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::Dimension {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Ref<'t, Tensor> {
        Ref::map(self.tape.nodes.borrow(), |n| &n[self.id].value)
    }

    pub fn to_tensor(&self) -> Tensor {
        self.value().clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape().to_vec()
    }

    pub fn scalar(&self) -> f64 {
        self.value().data()[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.nodes.borrow()[self.id].requires_grad
    }

    fn binary(&self, other: Var<'t>, f: impl FnOnce(&Tensor, &Tensor) -> Result<Tensor>, op: impl FnOnce(usize, usize) -> Op) -> Result<Var<'t>> {
        let value = {
            let a = self.value();
            let b = other.value();
            f(&a, &b)?
        };
        Ok(self.tape.record(value, op(self.id, other.id)))
    }

    pub fn matmul(&self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, |a, b| a.matmul(b), Op::MatMul)
    }

    pub fn t(&self) -> Var<'t> {
        let v = self.value().transpose();
        self.tape.record(v, Op::Transpose(self.id))
    }

    fn elementwise(
        &self,
        other: Var<'t>,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: impl FnOnce(usize, usize) -> Op,
    ) -> Result<Var<'t>> {
        self.binary(
            other,
            |a, b| {
                if a.shape() != b.shape() {
                    return Err(dim_err(name, a, b));
                }
                let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
                Tensor::new(a.shape().to_vec(), data)
            },
            op,
        )
    }

    pub fn add(&self, other: Var<'t>) -> Result<Var<'t>> {
        self.elementwise(other, "add", |x, y| x + y, Op::Add)
    }

    pub fn sub(&self, other: Var<'t>) -> Result<Var<'t>> {
        self.elementwise(other, "sub", |x, y| x - y, Op::Sub)
    }

    pub fn mul(&self, other: Var<'t>) -> Result<Var<'t>> {
        self.elementwise(other, "mul", |x, y| x * y, Op::Mul)
    }

    pub fn scale(&self, s: f64) -> Var<'t> {
        let v = self.value().map(|x| x * s);
        self.tape.record(v, Op::Scale(self.id, s))
    }

    /// Adds a length-`n` vector to every row of an `m×n` matrix.
    pub fn add_row(&self, row: Var<'t>) -> Result<Var<'t>> {
        self.binary(
            row,
            |a, b| {
                if a.shape().len() != 2 || b.len() != a.cols() {
                    return Err(dim_err("add_row", a, b));
                }
                let cols = a.cols();
                let mut data = a.data().to_vec();
                for r in data.chunks_mut(cols) {
                    r.iter_mut().zip(b.data()).for_each(|(o, v)| *o += v);
                }
                Tensor::new(a.shape().to_vec(), data)
            },
            Op::AddRow,
        )
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&self) -> Var<'t> {
        let v = {
            let x = self.value();
            let (r, c) = (x.rows(), x.cols());
            Tensor::new(x.shape().to_vec(), ops::softmax_rows(x.data(), r, c)).expect("softmax shape")
        };
        self.tape.record(v, Op::Softmax(self.id))
    }

    /// Per-row normalization using the population variance, then `gain ⊙ x̂ + bias`.
    pub fn layer_norm(&self, gain: Var<'t>, bias: Var<'t>, eps: f64) -> Result<Var<'t>> {
        if eps <= 0.0 {
            return Err(TensorError::Invalid(format!("layer_norm eps must be > 0, got {eps}")));
        }
        let (cache, shape) = {
            let x = self.value();
            let g = gain.value();
            let b = bias.value();
            let cols = x.cols();
            if g.len() != cols {
                return Err(dim_err("layer_norm gain", &x, &g));
            }
            if b.len() != cols {
                return Err(dim_err("layer_norm bias", &x, &b));
            }
            (
                ops::layer_norm(x.data(), g.data(), b.data(), x.rows(), cols, eps),
                x.shape().to_vec(),
            )
        };
        let value = Tensor::new(shape, cache.out).expect("layer_norm shape");
        Ok(self.tape.record(
            value,
            Op::LayerNorm {
                x: self.id,
                gain: gain.id,
                bias: bias.id,
                xhat: cache.xhat,
                inv_std: cache.inv_std,
            },
        ))
    }

    /// Horizontal concatenation of matrices with equal row counts.
    pub fn concat_cols(parts: &[Var<'t>]) -> Result<Var<'t>> {
        let tape = parts
            .first()
            .ok_or_else(|| TensorError::Invalid("concat of zero parts".into()))?
            .tape;
        let value = {
            let vals: Vec<Ref<Tensor>> = parts.iter().map(|p| p.value()).collect();
            let rows = vals[0].rows();
            for v in &vals {
                if v.rows() != rows {
                    return Err(dim_err("concat_cols", &vals[0], v));
                }
            }
            let total: usize = vals.iter().map(|v| v.cols()).sum();
            let mut data = Vec::with_capacity(rows * total);
            for r in 0..rows {
                for v in &vals {
                    data.extend_from_slice(v.row(r));
                }
            }
            Tensor::matrix(rows, total, data)?
        };
        Ok(tape.record(value, Op::ConcatCols(parts.iter().map(|p| p.id).collect())))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Var<'t>> {
        let value = {
            let x = self.value();
            let mut data = Vec::with_capacity(rows.len() * x.cols());
            for &r in rows {
                if r >= x.rows() {
                    return Err(TensorError::Invalid(format!(
                        "row {r} out of range for shape {:?}",
                        x.shape()
                    )));
                }
                data.extend_from_slice(x.row(r));
            }
            Tensor::matrix(rows.len(), x.cols(), data)?
        };
        Ok(self.tape.record(value, Op::SelectRows(self.id, rows.to_vec())))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Var<'t>> {
        let v = Tensor::new(shape.to_vec(), self.value().data().to_vec())?;
        Ok(self.tape.record(v, Op::Reshape(self.id)))
    }

    pub fn sum(&self) -> Var<'t> {
        let s: f64 = self.value().data().iter().sum();
        self.tape.record(Tensor::scalar(s), Op::Sum(self.id))
    }

    pub fn mean(&self) -> Var<'t> {
        let n = self.value().len() as f64;
        self.sum().scale(1.0 / n)
    }
}
