//! Eager tape: each operation computes its value immediately and records
//! what `backward` needs.

use rand::Rng;

use super::subword_cnn::{conv_maxpool, conv_maxpool_backward, embed, padded};
use super::tensor::{matmul_acc, matmul_nt_acc, matmul_tn_acc, ParamId, ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Input,
    Param(ParamId),
    Gather { table: ParamId, rows: Vec<usize> },
    SubwordConv { table: ParamId, filters: ParamId, k: usize, words: Vec<ConvRecord> },
    ConcatCols(Vec<Var>),
    Dropout { x: Var, mask: Vec<f64> },
    MatMul(Var, Var),
    MatMulTn(Var, Var),
    Rnn { x: Var, wx: ParamId, wh: ParamId, b: ParamId, reverse: bool },
    Softmax(Var),
    NllLogits { logits: Var, target: usize, probs: Vec<f64> },
    Add(Var, Var),
    Scale(Var, f64),
}

struct ConvRecord {
    ids: Vec<usize>,
    e: Vec<f64>,
    argmax: Vec<usize>,
}

struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn mat(rows: usize, cols: usize, data: Vec<f64>) -> Tensor {
    Tensor::from_vec(&[rows, cols], data).expect("shape computed from data")
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every node recorded after the first `len`.
    pub fn truncate(&mut self, len: usize) {
        self.nodes.truncate(len);
    }

    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        let t = store.get(id);
        let t = Tensor::from_vec(t.shape(), t.data().to_vec()).expect("same shape");
        self.push(t, Op::Param(id))
    }

    /// Rows of a parameter matrix, stacked.
    pub fn gather(&mut self, store: &ParamStore, table: ParamId, rows: &[usize]) -> Var {
        let t = store.get(table);
        let c = t.cols();
        let mut data = Vec::with_capacity(rows.len() * c);
        for &r in rows {
            data.extend_from_slice(t.row(r));
        }
        self.push(mat(rows.len(), c, data), Op::Gather { table, rows: rows.to_vec() })
    }

    /// One max-pooled convolution vector per word; output is words × filters.
    pub fn subword_conv(&mut self, store: &ParamStore, table: ParamId, filters: ParamId, k: usize, words: &[Vec<usize>]) -> Var {
        let h = store.get(table);
        let f = store.get(filters);
        let d = h.cols();
        let n = f.rows();
        let mut out = vec![0.0; words.len() * n];
        let mut records = Vec::with_capacity(words.len());
        for (w, ids) in words.iter().enumerate() {
            let ids = padded(ids, k);
            let e = embed(h.data(), d, &ids);
            let mut argmax = vec![0; n];
            conv_maxpool(&e, d, f.data(), n, k, &mut out[w * n..(w + 1) * n], &mut argmax);
            records.push(ConvRecord { ids, e, argmax });
        }
        self.push(mat(words.len(), n, out), Op::SubwordConv { table, filters, k, words: records })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows();
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        self.push(mat(rows, cols, data), Op::ConcatCols(parts.to_vec()))
    }

    /// Inverted dropout: survivors are scaled by `1 / (1 - p)`.
    pub fn dropout(&mut self, x: Var, p: f64, rng: &mut impl Rng) -> Var {
        if p <= 0.0 {
            return x;
        }
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..self.value(x).len()).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect();
        let v = self.value(x);
        let data = v.data().iter().zip(&mask).map(|(a, m)| a * m).collect();
        let value = Tensor::from_vec(v.shape(), data).expect("same shape");
        self.push(value, Op::Dropout { x, mask })
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k, n) = (av.rows(), av.cols(), bv.cols());
        assert_eq!(k, bv.rows(), "matmul inner dimensions");
        let mut c = vec![0.0; m * n];
        matmul_acc(av.data(), bv.data(), &mut c, m, k, n);
        self.push(mat(m, n, c), Op::MatMul(a, b))
    }

    /// `aᵀ · b`.
    pub fn matmul_tn(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k, n) = (av.rows(), av.cols(), bv.cols());
        assert_eq!(m, bv.rows(), "matmul_tn row counts");
        let mut c = vec![0.0; k * n];
        matmul_tn_acc(av.data(), bv.data(), &mut c, m, k, n);
        self.push(mat(k, n, c), Op::MatMulTn(a, b))
    }

    /// Elman recurrence `h_t = tanh(x_t Wx + h_{t-1} Wh + b)` over the rows of
    /// `x`, right to left when `reverse`. Output row `t` is the state at input row `t`.
    pub fn rnn(&mut self, store: &ParamStore, x: Var, wx: ParamId, wh: ParamId, b: ParamId, reverse: bool) -> Var {
        let xv = self.value(x);
        let (t_len, input) = (xv.rows(), xv.cols());
        let hidden = store.get(wh).rows();
        let mut xw = vec![0.0; t_len * hidden];
        matmul_acc(xv.data(), store.get(wx).data(), &mut xw, t_len, input, hidden);
        let whd = store.get(wh).data();
        let bd = store.get(b).data();
        let mut h = vec![0.0; t_len * hidden];
        let mut prev: Option<usize> = None;
        for s in 0..t_len {
            let t = if reverse { t_len - 1 - s } else { s };
            let mut z: Vec<f64> = xw[t * hidden..(t + 1) * hidden].iter().zip(bd).map(|(a, b)| a + b).collect();
            if let Some(p) = prev {
                let hp = h[p * hidden..(p + 1) * hidden].to_vec();
                matmul_acc(&hp, whd, &mut z, 1, hidden, hidden);
            }
            for (o, zv) in h[t * hidden..(t + 1) * hidden].iter_mut().zip(&z) {
                *o = zv.tanh();
            }
            prev = Some(t);
        }
        self.push(mat(t_len, hidden, h), Op::Rnn { x, wx, wh, b, reverse })
    }

    /// Softmax over every entry of `x`.
    pub fn softmax(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let p = softmax(v.data());
        let value = Tensor::from_vec(v.shape(), p).expect("same shape");
        self.push(value, Op::Softmax(x))
    }

    /// `-log softmax(logits)[target]`, a 1×1 scalar.
    pub fn nll_logits(&mut self, logits: Var, target: usize) -> Var {
        let d = self.value(logits).data();
        let probs = softmax(d);
        let m = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let loss = m + d.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - d[target];
        self.push(mat(1, 1, vec![loss]), Op::NllLogits { logits, target, probs })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.len(), bv.len(), "add operands");
        let data = av.data().iter().zip(bv.data()).map(|(x, y)| x + y).collect();
        let value = Tensor::from_vec(av.shape(), data).expect("same shape");
        self.push(value, Op::Add(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let av = self.value(a);
        let value = Tensor::from_vec(av.shape(), av.data().iter().map(|x| x * c).collect()).expect("same shape");
        self.push(value, Op::Scale(a, c))
    }

    /// Accumulates d`loss`/dθ into the gradient buffers of `store`.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) {
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0; self.value(loss).len()]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => add_into(store.get_mut(*id).grad_mut(), &g),
                Op::Gather { table, rows } => {
                    let t = store.get_mut(*table);
                    let c = t.cols();
                    let tg = t.grad_mut();
                    for (r, &row) in rows.iter().enumerate() {
                        add_into(&mut tg[row * c..(row + 1) * c], &g[r * c..(r + 1) * c]);
                    }
                }
                Op::SubwordConv { table, filters, k, words } => {
                    let d = store.get(*table).cols();
                    let n = store.get(*filters).rows();
                    let mut d_table = vec![0.0; store.get(*table).len()];
                    let (fv, fg) = store.get_mut(*filters).parts_mut();
                    for (w, rec) in words.iter().enumerate() {
                        conv_maxpool_backward(&rec.e, &rec.ids, d, fv, *k, &rec.argmax, &g[w * n..(w + 1) * n], &mut d_table, fg);
                    }
                    add_into(store.get_mut(*table).grad_mut(), &d_table);
                }
                Op::ConcatCols(parts) => {
                    let rows = node.value.rows();
                    let cols = node.value.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let pc = self.value(p).cols();
                        let mut pg = vec![0.0; rows * pc];
                        for r in 0..rows {
                            pg[r * pc..(r + 1) * pc].copy_from_slice(&g[r * cols + offset..r * cols + offset + pc]);
                        }
                        accumulate(&mut grads, p, &pg);
                        offset += pc;
                    }
                }
                Op::Dropout { x, mask } => {
                    let gx: Vec<f64> = g.iter().zip(mask).map(|(a, m)| a * m).collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                    let mut ga = vec![0.0; m * k];
                    matmul_nt_acc(&g, bv.data(), &mut ga, m, n, k);
                    let mut gb = vec![0.0; k * n];
                    matmul_tn_acc(av.data(), &g, &mut gb, m, k, n);
                    accumulate(&mut grads, *a, &ga);
                    accumulate(&mut grads, *b, &gb);
                }
                Op::MatMulTn(a, b) => {
                    // c = aᵀ b, a m×k, b m×n, c k×n
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                    let mut ga = vec![0.0; m * k];
                    matmul_nt_acc(bv.data(), &g, &mut ga, m, n, k);
                    let mut gb = vec![0.0; m * n];
                    matmul_acc(av.data(), &g, &mut gb, m, k, n);
                    accumulate(&mut grads, *a, &ga);
                    accumulate(&mut grads, *b, &gb);
                }
                Op::Rnn { x, wx, wh, b, reverse } => {
                    let gx = self.rnn_backward(&node.value, &g, *x, *wx, *wh, *b, *reverse, store);
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Softmax(x) => {
                    let p = node.value.data();
                    let dot: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
                    let gx: Vec<f64> = p.iter().zip(&g).map(|(pi, gi)| pi * (gi - dot)).collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::NllLogits { logits, target, probs } => {
                    let mut gx: Vec<f64> = probs.iter().map(|p| p * g[0]).collect();
                    gx[*target] -= g[0];
                    accumulate(&mut grads, *logits, &gx);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    accumulate(&mut grads, *b, &g);
                }
                Op::Scale(a, c) => {
                    let ga: Vec<f64> = g.iter().map(|v| v * c).collect();
                    accumulate(&mut grads, *a, &ga);
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rnn_backward(
        &self,
        h: &Tensor,
        g: &[f64],
        x: Var,
        wx: ParamId,
        wh: ParamId,
        b: ParamId,
        reverse: bool,
        store: &mut ParamStore,
    ) -> Vec<f64> {
        let xv = self.value(x);
        let (t_len, input) = (xv.rows(), xv.cols());
        let hidden = h.cols();
        let hd = h.data();
        let mut dz_all = vec![0.0; t_len * hidden];
        let mut carry = vec![0.0; hidden];
        {
            let (whv, whg) = store.get_mut(wh).parts_mut();
            let whv = whv.to_vec();
            for s in (0..t_len).rev() {
                let t = if reverse { t_len - 1 - s } else { s };
                let dz: Vec<f64> = (0..hidden)
                    .map(|j| {
                        let hv = hd[t * hidden + j];
                        (g[t * hidden + j] + carry[j]) * (1.0 - hv * hv)
                    })
                    .collect();
                carry.iter_mut().for_each(|c| *c = 0.0);
                if s > 0 {
                    let p = if reverse { t + 1 } else { t - 1 };
                    let hp = &hd[p * hidden..(p + 1) * hidden];
                    matmul_tn_acc(hp, &dz, whg, 1, hidden, hidden);
                    matmul_nt_acc(&dz, &whv, &mut carry, 1, hidden, hidden);
                }
                dz_all[t * hidden..(t + 1) * hidden].copy_from_slice(&dz);
            }
        }
        let bg = store.get_mut(b).grad_mut();
        for t in 0..t_len {
            add_into(bg, &dz_all[t * hidden..(t + 1) * hidden]);
        }
        let (wxv, wxg) = store.get_mut(wx).parts_mut();
        matmul_tn_acc(xv.data(), &dz_all, wxg, t_len, input, hidden);
        let mut gx = vec![0.0; t_len * input];
        matmul_nt_acc(&dz_all, wxv, &mut gx, t_len, hidden, input);
        gx
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], v: Var, g: &[f64]) {
    match &mut grads[v.0] {
        Some(existing) => add_into(existing, g),
        slot @ None => *slot = Some(g.to_vec()),
    }
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
