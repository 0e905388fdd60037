use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::gemm::{gemm, Layout};
use super::tensor::{check_finite, Tensor};
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `a * b^T`
    MatMulT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    /// Adds a `1 x n` row to every row of a `B x n` matrix.
    AddRow(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Affine(Var, f64),
    SoftmaxRows(Var),
    ConcatCols(Vec<Var>),
    Column(Var, usize),
    /// Scales each row of a `B x n` matrix by the matching entry of a `B x 1` column.
    MulCol(Var, Var),
    Sum(Var),
    Mean(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    /// Some requires-grad leaf is upstream of this node.
    tracked: bool,
}

/// Wengert list for reverse-mode differentiation.
///
/// Values are appended in evaluation order, so every operation's inputs sit
/// strictly earlier on the tape. [`Tape::backward`] walks it in reverse and
/// adds the total derivative of the loss into the gradient buffer of every
/// reachable leaf created with `requires_grad`. Leaf gradients accumulate
/// across calls until [`Tape::zero_grad`].
///
/// [`Tape::reset`] empties the tape but keeps its buffers, so a loop that
/// records graphs of the same shape stops allocating after the first pass.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    /// Spare buffers keyed by capacity.
    pool: BTreeMap<usize, Vec<Vec<f64>>>,
}

fn val(nodes: &[Node], v: Var) -> &Tensor {
    &nodes[v.0].value
}

/// Empty buffer with room for `len` values.
fn take(pool: &mut BTreeMap<usize, Vec<Vec<f64>>>, len: usize) -> Vec<f64> {
    match pool.get_mut(&len).and_then(Vec::pop) {
        Some(buf) => buf,
        None => Vec::with_capacity(len),
    }
}

fn give(pool: &mut BTreeMap<usize, Vec<Vec<f64>>>, mut buf: Vec<f64>) {
    if buf.capacity() > 0 {
        buf.clear();
        pool.entry(buf.capacity()).or_default().push(buf);
    }
}

fn zeroed(pool: &mut BTreeMap<usize, Vec<Vec<f64>>>, len: usize) -> Vec<f64> {
    let mut buf = take(pool, len);
    buf.resize(len, 0.0);
    buf
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every recorded value, keeping the storage for later records.
    /// Handles from before the reset become invalid.
    pub fn reset(&mut self) {
        for node in self.nodes.drain(..) {
            let (data, grad) = node.value.into_buffers();
            give(&mut self.pool, data);
            if let Some(g) = grad {
                give(&mut self.pool, g);
            }
        }
    }

    fn push(&mut self, value: Tensor, op: Op, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    /// Records an input. It is differentiated iff `tensor.requires_grad()`.
    pub fn leaf(&mut self, tensor: Tensor) -> Var {
        let tracked = tensor.requires_grad();
        self.push(tensor, Op::Leaf, tracked)
    }

    pub fn constant(&mut self, tensor: Tensor) -> Var {
        self.leaf(tensor.with_requires_grad(false))
    }

    /// Records a copy of `tensor`'s values, differentiated iff `requires_grad`.
    pub fn leaf_copy(&mut self, tensor: &Tensor, requires_grad: bool) -> Var {
        let mut data = take(&mut self.pool, tensor.numel());
        data.extend_from_slice(tensor.data());
        let t = Tensor::from_parts(tensor.shape().to_vec(), data).with_requires_grad(requires_grad);
        self.push(t, Op::Leaf, requires_grad)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Accumulated gradient of a leaf, if any backward pass reached it.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].value.grad()
    }

    pub fn zero_grad(&mut self) {
        self.nodes.iter_mut().for_each(|n| n.value.zero_grad());
    }

    fn t(&self, v: Var) -> &Tensor {
        val(&self.nodes, v)
    }

    fn tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    fn finish(
        &mut self,
        op_name: &'static str,
        shape: Vec<usize>,
        data: Vec<f64>,
        op: Op,
        tracked: bool,
    ) -> Result<Var> {
        check_finite(op_name, &data)?;
        Ok(self.push(Tensor::from_parts(shape, data), op, tracked))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (val(&self.nodes, a), val(&self.nodes, b));
        let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
        if tb.rows() != k {
            return Err(shape_err("matmul", ta, tb));
        }
        let mut out = zeroed(&mut self.pool, m * n);
        gemm(
            m,
            k,
            n,
            ta.data(),
            Layout::row_major(k),
            tb.data(),
            Layout::row_major(n),
            &mut out,
            0.0,
        );
        let tracked = self.tracked(a) || self.tracked(b);
        self.finish("matmul", vec![m, n], out, Op::MatMul(a, b), tracked)
    }

    /// `a * b^T`, i.e. applies a `n x k` weight matrix to each row of `a`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (val(&self.nodes, a), val(&self.nodes, b));
        let (m, k, n) = (ta.rows(), ta.cols(), tb.rows());
        if tb.cols() != k {
            return Err(shape_err("matmul_t", ta, tb));
        }
        let mut out = zeroed(&mut self.pool, m * n);
        gemm(
            m,
            k,
            n,
            ta.data(),
            Layout::row_major(k),
            tb.data(),
            Layout::transposed(k),
            &mut out,
            0.0,
        );
        let tracked = self.tracked(a) || self.tracked(b);
        self.finish("matmul_t", vec![m, n], out, Op::MatMulT(a, b), tracked)
    }

    fn zip(&mut self, name: &'static str, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Result<Var> {
        let (ta, tb) = (val(&self.nodes, a), val(&self.nodes, b));
        if ta.numel() != tb.numel() || ta.rows() != tb.rows() {
            return Err(shape_err(name, ta, tb));
        }
        let mut data = take(&mut self.pool, ta.numel());
        data.extend(ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)));
        let shape = ta.shape().to_vec();
        let tracked = self.tracked(a) || self.tracked(b);
        self.finish(name, shape, data, op, tracked)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    /// Broadcasts a bias row over the rows of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (tx, tb) = (val(&self.nodes, x), val(&self.nodes, bias));
        let n = tx.cols();
        if tb.numel() != n {
            return Err(shape_err("add_row", tx, tb));
        }
        let mut data = take(&mut self.pool, tx.numel());
        data.extend_from_slice(tx.data());
        for row in data.chunks_exact_mut(n) {
            row.iter_mut().zip(tb.data()).for_each(|(v, b)| *v += b);
        }
        let shape = tx.shape().to_vec();
        let tracked = self.tracked(x) || self.tracked(bias);
        self.finish("add_row", shape, data, Op::AddRow(x, bias), tracked)
    }

    fn map(&mut self, name: &'static str, x: Var, op: Op, f: impl Fn(f64) -> f64) -> Result<Var> {
        let tx = val(&self.nodes, x);
        let mut data = take(&mut self.pool, tx.numel());
        data.extend(tx.data().iter().map(|&v| f(v)));
        let shape = tx.shape().to_vec();
        let tracked = self.tracked(x);
        self.finish(name, shape, data, op, tracked)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.map("sigmoid", x, Op::Sigmoid(x), sigmoid)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.map("tanh", x, Op::Tanh(x), libm::tanh)
    }

    /// `scale * x + shift`
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Result<Var> {
        self.map("affine", x, Op::Affine(x, scale), |v| scale * v + shift)
    }

    /// Softmax along each row, with max subtraction.
    pub fn softmax_rows(&mut self, x: Var) -> Result<Var> {
        let tx = val(&self.nodes, x);
        let n = tx.cols();
        if tx.numel() == 0 || n == 0 {
            return Err(Error::Empty("softmax"));
        }
        let mut data = take(&mut self.pool, tx.numel());
        data.extend_from_slice(tx.data());
        for row in data.chunks_exact_mut(n) {
            softmax_in_place(row);
        }
        let shape = tx.shape().to_vec();
        let tracked = self.tracked(x);
        self.finish("softmax", shape, data, Op::SoftmaxRows(x), tracked)
    }

    /// Joins matrices with equal row counts side by side.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(Error::Empty("concat_cols"))?;
        let rows = val(&self.nodes, first).rows();
        for &p in parts {
            if val(&self.nodes, p).rows() != rows {
                return Err(shape_err("concat_cols", val(&self.nodes, first), val(&self.nodes, p)));
            }
        }
        let total: usize = parts.iter().map(|&p| val(&self.nodes, p).cols()).sum();
        let mut data = take(&mut self.pool, rows * total);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(val(&self.nodes, p).row(r));
            }
        }
        let tracked = parts.iter().any(|&p| self.tracked(p));
        self.finish(
            "concat_cols",
            vec![rows, total],
            data,
            Op::ConcatCols(parts.to_vec()),
            tracked,
        )
    }

    pub fn column(&mut self, x: Var, index: usize) -> Result<Var> {
        let tx = val(&self.nodes, x);
        let (rows, cols) = (tx.rows(), tx.cols());
        if index >= cols {
            return Err(Error::ShapeMismatch {
                op: "column",
                left: tx.shape().to_vec(),
                right: vec![index],
            });
        }
        let data = (0..rows).map(|r| tx.data()[r * cols + index]).collect();
        let tracked = self.tracked(x);
        self.finish("column", vec![rows, 1], data, Op::Column(x, index), tracked)
    }

    pub fn mul_col(&mut self, x: Var, col: Var) -> Result<Var> {
        let (tx, tc) = (val(&self.nodes, x), val(&self.nodes, col));
        let (rows, n) = (tx.rows(), tx.cols());
        if tc.numel() != rows {
            return Err(shape_err("mul_col", tx, tc));
        }
        let mut data = take(&mut self.pool, tx.numel());
        data.extend_from_slice(tx.data());
        for (row, s) in data.chunks_exact_mut(n).zip(tc.data()) {
            row.iter_mut().for_each(|v| *v *= s);
        }
        let shape = tx.shape().to_vec();
        let tracked = self.tracked(x) || self.tracked(col);
        self.finish("mul_col", shape, data, Op::MulCol(x, col), tracked)
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s = val(&self.nodes, x).data().iter().sum();
        let tracked = self.tracked(x);
        self.finish("sum", Vec::new(), vec![s], Op::Sum(x), tracked)
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let tx = val(&self.nodes, x);
        if tx.numel() == 0 {
            return Err(Error::Empty("mean"));
        }
        let s = tx.data().iter().sum::<f64>() / tx.numel() as f64;
        let tracked = self.tracked(x);
        self.finish("mean", Vec::new(), vec![s], Op::Mean(x), tracked)
    }

    /// Mean squared difference between `pred` and `target`.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        let d = self.sub(pred, target)?;
        let sq = self.mul(d, d)?;
        self.mean(sq)
    }

    /// Back-propagates from a scalar `loss`, accumulating into leaf gradients.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::EmptyTape);
        }
        let lt = val(&self.nodes, loss);
        if lt.numel() != 1 {
            return Err(Error::NotScalar(lt.shape().to_vec()));
        }
        let mut pool = core::mem::take(&mut self.pool);
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            if !self.nodes[i].tracked {
                give(&mut pool, g);
                continue;
            }
            if matches!(self.nodes[i].op, Op::Leaf) {
                if let Some(spare) = self.nodes[i].value.accumulate_grad_owned(g) {
                    give(&mut pool, spare);
                }
                continue;
            }
            self.propagate(i, &g, &mut adj, &mut pool);
            give(&mut pool, g);
        }
        self.pool = pool;
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[f64], adj: &mut [Option<Vec<f64>>], pool: &mut BTreeMap<usize, Vec<Vec<f64>>>) {
        let node = &self.nodes[i];
        let y = node.value.data();
        // Returns the adjoint buffer of `v` when `v` needs one.
        type Pool = BTreeMap<usize, Vec<Vec<f64>>>;
        fn slot<'a>(tape: &Tape, adj: &'a mut [Option<Vec<f64>>], pool: &mut Pool, v: Var) -> Option<&'a mut Vec<f64>> {
            if !tape.tracked(v) {
                return None;
            }
            let n = tape.t(v).numel();
            Some(adj[v.0].get_or_insert_with(|| zeroed(pool, n)))
        }
        match node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (val(&self.nodes, a), val(&self.nodes, b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                if let Some(da) = slot(self, adj, pool, a) {
                    // dA += dC * B^T
                    gemm(
                        m,
                        n,
                        k,
                        g,
                        Layout::row_major(n),
                        tb.data(),
                        Layout::transposed(n),
                        da,
                        1.0,
                    );
                }
                if let Some(db) = slot(self, adj, pool, b) {
                    // dB += A^T * dC
                    gemm(
                        k,
                        m,
                        n,
                        ta.data(),
                        Layout::transposed(k),
                        g,
                        Layout::row_major(n),
                        db,
                        1.0,
                    );
                }
            }
            Op::MatMulT(a, b) => {
                let (ta, tb) = (val(&self.nodes, a), val(&self.nodes, b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.rows());
                if let Some(da) = slot(self, adj, pool, a) {
                    // dA += dC * B
                    gemm(
                        m,
                        n,
                        k,
                        g,
                        Layout::row_major(n),
                        tb.data(),
                        Layout::row_major(k),
                        da,
                        1.0,
                    );
                }
                if let Some(db) = slot(self, adj, pool, b) {
                    // dB += dC^T * A
                    gemm(
                        n,
                        m,
                        k,
                        g,
                        Layout::transposed(n),
                        ta.data(),
                        Layout::row_major(k),
                        db,
                        1.0,
                    );
                }
            }
            Op::Add(a, b) => {
                for v in [a, b] {
                    if let Some(d) = slot(self, adj, pool, v) {
                        d.iter_mut().zip(g).for_each(|(d, g)| *d += g);
                    }
                }
            }
            Op::Sub(a, b) => {
                if let Some(d) = slot(self, adj, pool, a) {
                    d.iter_mut().zip(g).for_each(|(d, g)| *d += g);
                }
                if let Some(d) = slot(self, adj, pool, b) {
                    d.iter_mut().zip(g).for_each(|(d, g)| *d -= g);
                }
            }
            Op::Mul(a, b) => {
                let (xa, xb) = (val(&self.nodes, a).data(), val(&self.nodes, b).data());
                if let Some(d) = slot(self, adj, pool, a) {
                    for ((d, g), x) in d.iter_mut().zip(g).zip(xb) {
                        *d += g * x;
                    }
                }
                if let Some(d) = slot(self, adj, pool, b) {
                    for ((d, g), x) in d.iter_mut().zip(g).zip(xa) {
                        *d += g * x;
                    }
                }
            }
            Op::AddRow(x, bias) => {
                if let Some(d) = slot(self, adj, pool, x) {
                    d.iter_mut().zip(g).for_each(|(d, g)| *d += g);
                }
                let n = val(&self.nodes, x).cols();
                if let Some(d) = slot(self, adj, pool, bias) {
                    for row in g.chunks_exact(n) {
                        d.iter_mut().zip(row).for_each(|(d, g)| *d += g);
                    }
                }
            }
            Op::Sigmoid(x) => {
                if let Some(d) = slot(self, adj, pool, x) {
                    for ((d, g), y) in d.iter_mut().zip(g).zip(y) {
                        *d += g * y * (1.0 - y);
                    }
                }
            }
            Op::Tanh(x) => {
                if let Some(d) = slot(self, adj, pool, x) {
                    for ((d, g), y) in d.iter_mut().zip(g).zip(y) {
                        *d += g * (1.0 - y * y);
                    }
                }
            }
            Op::Affine(x, scale) => {
                if let Some(d) = slot(self, adj, pool, x) {
                    d.iter_mut().zip(g).for_each(|(d, g)| *d += scale * g);
                }
            }
            Op::SoftmaxRows(x) => {
                let n = node.value.cols();
                if let Some(d) = slot(self, adj, pool, x) {
                    for ((d, g), y) in d.chunks_exact_mut(n).zip(g.chunks_exact(n)).zip(y.chunks_exact(n)) {
                        let dot: f64 = g.iter().zip(y).map(|(g, y)| g * y).sum();
                        for j in 0..n {
                            d[j] += y[j] * (g[j] - dot);
                        }
                    }
                }
            }
            Op::ConcatCols(ref parts) => {
                let total = node.value.cols();
                let rows = node.value.rows();
                let mut offset = 0;
                for &p in parts {
                    let c = val(&self.nodes, p).cols();
                    if let Some(d) = slot(self, adj, pool, p) {
                        for r in 0..rows {
                            let src = &g[r * total + offset..r * total + offset + c];
                            d[r * c..(r + 1) * c].iter_mut().zip(src).for_each(|(d, g)| *d += g);
                        }
                    }
                    offset += c;
                }
            }
            Op::Column(x, index) => {
                let cols = val(&self.nodes, x).cols();
                if let Some(d) = slot(self, adj, pool, x) {
                    for (r, gv) in g.iter().enumerate() {
                        d[r * cols + index] += gv;
                    }
                }
            }
            Op::MulCol(x, col) => {
                let n = val(&self.nodes, x).cols();
                let (xd, cd) = (val(&self.nodes, x).data(), val(&self.nodes, col).data());
                if let Some(d) = slot(self, adj, pool, x) {
                    for ((d, g), s) in d.chunks_exact_mut(n).zip(g.chunks_exact(n)).zip(cd) {
                        d.iter_mut().zip(g).for_each(|(d, g)| *d += g * s);
                    }
                }
                if let Some(d) = slot(self, adj, pool, col) {
                    for ((d, g), xr) in d.iter_mut().zip(g.chunks_exact(n)).zip(xd.chunks_exact(n)) {
                        *d += g.iter().zip(xr).map(|(g, x)| g * x).sum::<f64>();
                    }
                }
            }
            Op::Sum(x) => {
                if let Some(d) = slot(self, adj, pool, x) {
                    d.iter_mut().for_each(|d| *d += g[0]);
                }
            }
            Op::Mean(x) => {
                let scale = g[0] / val(&self.nodes, x).numel() as f64;
                if let Some(d) = slot(self, adj, pool, x) {
                    d.iter_mut().for_each(|d| *d += scale);
                }
            }
        }
    }
}

/// Numerically stable softmax of one row.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = libm::exp(*v - max);
        total += *v;
    }
    row.iter_mut().for_each(|v| *v /= total);
}
