//! Reverse-mode differentiation over vector-valued nodes.

use super::params::{Gradients, ParamId, ParamSet};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op<T> {
    Const,
    Param(ParamId),
    Row(ParamId, usize),
    MatVec(ParamId, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    Dots(Vec<Var>, Var),
    WeightedSum(Vec<Var>, Var),
    Softmax(Var),
    LogSoftmax(Var),
    Gather(Var, Vec<usize>),
    LogSumExp(Var),
    LinearSum(Vec<(Var, T)>),
}

/// Records operations against a borrowed parameter set.
pub struct Tape<'p, T> {
    params: &'p ParamSet<T>,
    values: Vec<Vec<T>>,
    ops: Vec<Op<T>>,
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p ParamSet<T>) -> Self {
        Tape {
            params,
            values: Vec::new(),
            ops: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.values[v.0]
    }

    pub fn scalar(&self, v: Var) -> T {
        self.values[v.0][0]
    }

    fn push(&mut self, value: Vec<T>, op: Op<T>) -> Var {
        self.values.push(value);
        self.ops.push(op);
        Var(self.values.len() - 1)
    }

    pub fn constant(&mut self, value: Vec<T>) -> Var {
        self.push(value, Op::Const)
    }

    pub fn zeros(&mut self, n: usize) -> Var {
        self.constant(vec![T::zero(); n])
    }

    /// The whole parameter, flattened.
    pub fn param(&mut self, p: ParamId) -> Var {
        let value = self.params.get(p).data.clone();
        self.push(value, Op::Param(p))
    }

    pub fn row(&mut self, p: ParamId, r: usize) -> Var {
        let value = self.params.get(p).row(r).to_vec();
        self.push(value, Op::Row(p, r))
    }

    pub fn matvec(&mut self, p: ParamId, x: Var) -> Var {
        let w = self.params.get(p);
        let xv = &self.values[x.0];
        assert_eq!(w.cols, xv.len(), "matvec shape");
        let out = (0..w.rows).map(|r| dot(w.row(r), xv)).collect();
        self.push(out, Op::MatVec(p, x))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = zip_map(&self.values[a.0], &self.values[b.0], |x, y| x + y);
        self.push(out, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = zip_map(&self.values[a.0], &self.values[b.0], |x, y| x * y);
        self.push(out, Op::Mul(a, b))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.values[a.0].iter().map(|&x| sigmoid(x)).collect();
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.values[a.0].iter().map(|&x| x.tanh()).collect();
        self.push(out, Op::Tanh(a))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let out = parts
            .iter()
            .flat_map(|p| self.values[p.0].iter().copied())
            .collect();
        self.push(out, Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Var {
        let out = self.values[a.0][start..start + len].to_vec();
        self.push(out, Op::Slice(a, start))
    }

    /// `out[k] = rows[k] . u`
    pub fn dots(&mut self, rows: &[Var], u: Var) -> Var {
        let uv = &self.values[u.0];
        let out = rows.iter().map(|r| dot(&self.values[r.0], uv)).collect();
        self.push(out, Op::Dots(rows.to_vec(), u))
    }

    /// `sum_k w[k] * rows[k]`
    pub fn weighted_sum(&mut self, rows: &[Var], w: Var) -> Var {
        let wv = &self.values[w.0];
        assert_eq!(rows.len(), wv.len(), "weighted_sum shape");
        let mut out = vec![T::zero(); self.values[rows[0].0].len()];
        for (r, &wk) in rows.iter().zip(wv) {
            for (o, &x) in out.iter_mut().zip(&self.values[r.0]) {
                *o += wk * x;
            }
        }
        self.push(out, Op::WeightedSum(rows.to_vec(), w))
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let out = softmax(&self.values[a.0]);
        self.push(out, Op::Softmax(a))
    }

    pub fn log_softmax(&mut self, a: Var) -> Var {
        let x = &self.values[a.0];
        let lse = log_sum_exp(x);
        let out = x.iter().map(|&v| v - lse).collect();
        self.push(out, Op::LogSoftmax(a))
    }

    pub fn gather(&mut self, a: Var, idx: &[usize]) -> Var {
        let x = &self.values[a.0];
        let out = idx.iter().map(|&i| x[i]).collect();
        self.push(out, Op::Gather(a, idx.to_vec()))
    }

    pub fn pick(&mut self, a: Var, i: usize) -> Var {
        self.gather(a, &[i])
    }

    pub fn log_sum_exp(&mut self, a: Var) -> Var {
        let out = vec![log_sum_exp(&self.values[a.0])];
        self.push(out, Op::LogSumExp(a))
    }

    /// Scalar `sum_k c_k * v_k[0]`.
    pub fn linear_sum(&mut self, terms: &[(Var, T)]) -> Var {
        let total = terms
            .iter()
            .fold(T::zero(), |acc, &(v, c)| acc + c * self.values[v.0][0]);
        self.push(vec![total], Op::LinearSum(terms.to_vec()))
    }

    /// Accumulates d`root`/d`params` into `grads`. `root` must be a scalar.
    pub fn backward(&self, root: Var, grads: &mut Gradients<T>) {
        assert_eq!(self.values[root.0].len(), 1, "backward from a non-scalar");
        let mut adj: Vec<Vec<T>> = vec![Vec::new(); root.0 + 1];
        adj[root.0] = vec![T::one()];
        for i in (0..=root.0).rev() {
            let g = std::mem::take(&mut adj[i]);
            if g.is_empty() {
                continue;
            }
            let y = &self.values[i];
            match &self.ops[i] {
                Op::Const => {}
                Op::Param(p) => add_into(&mut grads.0[p.0], &g),
                Op::Row(p, r) => {
                    let cols = self.params.get(*p).cols;
                    add_into(&mut grads.0[p.0][r * cols..(r + 1) * cols], &g);
                }
                Op::MatVec(p, x) => {
                    let w = self.params.get(*p);
                    let xv = &self.values[x.0];
                    let gw = &mut grads.0[p.0];
                    for (r, &gr) in g.iter().enumerate() {
                        if gr == T::zero() {
                            continue;
                        }
                        for (gwc, &xc) in gw[r * w.cols..(r + 1) * w.cols].iter_mut().zip(xv) {
                            *gwc += gr * xc;
                        }
                    }
                    let gx = acc(&mut adj, *x, w.cols);
                    for (r, &gr) in g.iter().enumerate() {
                        if gr == T::zero() {
                            continue;
                        }
                        for (gxc, &wc) in gx.iter_mut().zip(w.row(r)) {
                            *gxc += gr * wc;
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(acc(&mut adj, *a, g.len()), &g);
                    add_into(acc(&mut adj, *b, g.len()), &g);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.values[a.0], &self.values[b.0]);
                    let ga = acc(&mut adj, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * bv[k];
                    }
                    let gb = acc(&mut adj, *b, g.len());
                    for k in 0..g.len() {
                        gb[k] += g[k] * av[k];
                    }
                }
                Op::Sigmoid(a) => {
                    let ga = acc(&mut adj, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * y[k] * (T::one() - y[k]);
                    }
                }
                Op::Tanh(a) => {
                    let ga = acc(&mut adj, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * (T::one() - y[k] * y[k]);
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let n = self.values[p.0].len();
                        add_into(acc(&mut adj, *p, n), &g[offset..offset + n]);
                        offset += n;
                    }
                }
                Op::Slice(a, start) => {
                    let n = self.values[a.0].len();
                    add_into(&mut acc(&mut adj, *a, n)[*start..start + g.len()], &g);
                }
                Op::Dots(rows, u) => {
                    let uv = &self.values[u.0];
                    for (r, &gk) in rows.iter().zip(&g) {
                        let gr = acc(&mut adj, *r, uv.len());
                        for (a, &b) in gr.iter_mut().zip(uv) {
                            *a += gk * b;
                        }
                    }
                    let gu = acc(&mut adj, *u, uv.len());
                    for (r, &gk) in rows.iter().zip(&g) {
                        for (a, &b) in gu.iter_mut().zip(&self.values[r.0]) {
                            *a += gk * b;
                        }
                    }
                }
                Op::WeightedSum(rows, w) => {
                    let wv = &self.values[w.0];
                    for (r, &wk) in rows.iter().zip(wv) {
                        let gr = acc(&mut adj, *r, g.len());
                        for (a, &b) in gr.iter_mut().zip(&g) {
                            *a += wk * b;
                        }
                    }
                    let dw: Vec<T> = rows.iter().map(|r| dot(&self.values[r.0], &g)).collect();
                    add_into(acc(&mut adj, *w, dw.len()), &dw);
                }
                Op::Softmax(a) => {
                    let s = dot(&g, y);
                    let ga = acc(&mut adj, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += y[k] * (g[k] - s);
                    }
                }
                Op::LogSoftmax(a) => {
                    let total = g.iter().fold(T::zero(), |acc, &v| acc + v);
                    let ga = acc(&mut adj, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] - y[k].exp() * total;
                    }
                }
                Op::Gather(a, idx) => {
                    let n = self.values[a.0].len();
                    let ga = acc(&mut adj, *a, n);
                    for (&i, &gk) in idx.iter().zip(&g) {
                        ga[i] += gk;
                    }
                }
                Op::LogSumExp(a) => {
                    let x = &self.values[a.0];
                    let ga = acc(&mut adj, *a, x.len());
                    for k in 0..x.len() {
                        ga[k] += g[0] * (x[k] - y[0]).exp();
                    }
                }
                Op::LinearSum(terms) => {
                    for &(v, c) in terms {
                        acc(&mut adj, v, 1)[0] += g[0] * c;
                    }
                }
            }
        }
    }
}

fn acc<T: Scalar>(adj: &mut [Vec<T>], v: Var, n: usize) -> &mut Vec<T> {
    let slot = &mut adj[v.0];
    if slot.is_empty() {
        *slot = vec![T::zero(); n];
    }
    slot
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn zip_map<T: Scalar>(a: &[T], b: &[T], f: impl Fn(T, T) -> T) -> Vec<T> {
    assert_eq!(a.len(), b.len(), "elementwise shape");
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

/// Eight independent accumulators so the loop vectorizes.
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut lanes = [T::zero(); 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            lanes[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5]))
        + ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7]))
        + tail
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub(crate) fn log_sum_exp<T: Scalar>(x: &[T]) -> T {
    let m = x.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    m + x.iter().fold(T::zero(), |acc, &v| acc + (v - m).exp()).ln()
}

pub(crate) fn softmax<T: Scalar>(x: &[T]) -> Vec<T> {
    let lse = log_sum_exp(x);
    x.iter().map(|&v| (v - lse).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::Tensor;

    fn numeric(params: &ParamSet<f64>, f: &dyn Fn(&mut Tape<f64>) -> Var) -> Vec<Vec<f64>> {
        let h = 1e-6;
        let mut out = Vec::new();
        for (pi, (_, t)) in params.iter().enumerate() {
            let mut g = vec![0.0; t.data.len()];
            for (k, gk) in g.iter_mut().enumerate() {
                let mut plus = params.clone();
                plus.get_mut(ParamId(pi)).data[k] += h;
                let mut minus = params.clone();
                minus.get_mut(ParamId(pi)).data[k] -= h;
                let fp = {
                    let mut tp = Tape::new(&plus);
                    let v = f(&mut tp);
                    tp.scalar(v)
                };
                let fm = {
                    let mut tp = Tape::new(&minus);
                    let v = f(&mut tp);
                    tp.scalar(v)
                };
                *gk = (fp - fm) / (2.0 * h);
            }
            out.push(g);
        }
        out
    }

    #[test]
    fn every_op_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        use rand::SeedableRng;
        let mut params = ParamSet::new();
        let w = params.add("w", Tensor::uniform(4, 3, 1.0, &mut rng));
        let e = params.add("e", Tensor::uniform(5, 3, 1.0, &mut rng));
        let b = params.add("b", Tensor::uniform(4, 1, 1.0, &mut rng));
        let f = move |t: &mut Tape<f64>| {
            let x = t.row(e, 2);
            let y = t.row(e, 4);
            let h = t.matvec(w, x);
            let bias = t.param(b);
            let h = t.add(h, bias);
            let s = t.sigmoid(h);
            let th = t.tanh(h);
            let m = t.mul(s, th);
            let c = t.concat(&[m, x]);
            let sl = t.slice(c, 2, 3);
            let att = t.dots(&[x, y, sl], y);
            let a = t.softmax(att);
            let ctx = t.weighted_sum(&[x, y, sl], a);
            let ls = t.log_softmax(ctx);
            let gsel = t.gather(ls, &[2, 0]);
            let l = t.log_sum_exp(gsel);
            let p = t.pick(ls, 1);
            t.linear_sum(&[(l, -1.5), (p, 0.7)])
        };
        let mut tape = Tape::new(&params);
        let root = f(&mut tape);
        let mut grads = params.zero_grads();
        tape.backward(root, &mut grads);
        let num = numeric(&params, &f);
        for (a, n) in grads.0.iter().flatten().zip(num.iter().flatten()) {
            assert!((a - n).abs() < 1e-7, "{a} vs {n}");
        }
    }

    #[test]
    fn stable_helpers() {
        assert!((log_sum_exp(&[1000.0f64, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-9);
        assert_eq!(sigmoid(-1000.0f64), 0.0);
        let s = softmax(&[1.0f32, 2.0, 3.0]);
        assert!((s.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn clipping() {
        let mut g = Gradients(vec![vec![3.0f64], vec![4.0]]);
        assert_eq!(g.clip(1.0), 5.0);
        assert!((g.norm() - 1.0).abs() < 1e-12);
    }
}
