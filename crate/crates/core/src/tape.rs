//! Reverse-mode automatic differentiation over a linear tape.
//!
//! A forward pass records one node per operation, in execution order, so
//! inputs always precede their consumers. `backward` seeds the scalar loss
//! with 1 and visits every node exactly once in reverse, accumulating
//! gradients into the leaves. The tape is consumed by backward; a new forward
//! pass builds a new tape.

use crate::conv;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::svc;
use crate::tensor::Tensor;

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<T: Scalar> {
    Leaf,
    Conv2d {
        input: usize,
        weight: usize,
        bias: Option<usize>,
        stride: (usize, usize),
        padding: (usize, usize),
    },
    Svc {
        input: usize,
        banks: Vec<usize>,
        biases: Vec<usize>,
    },
    PixelShuffle {
        input: usize,
        factor: usize,
    },
    PackRggb {
        input: usize,
    },
    Relu {
        input: usize,
    },
    Add {
        lhs: usize,
        rhs: usize,
    },
    Mul {
        lhs: usize,
        rhs: usize,
    },
    ScaleConst {
        input: usize,
        factor: T,
    },
    /// Elementwise product with a 1-element tensor (the per-block fusion
    /// weights use this).
    ScaleByScalar {
        input: usize,
        scalar: usize,
    },
    ConcatChannels {
        inputs: Vec<usize>,
    },
    SumAll {
        input: usize,
    },
    L1Loss {
        pred: usize,
        target: usize,
    },
    ColorLoss {
        pred: usize,
        target: usize,
        eps: T,
    },
}

struct Node<T: Scalar> {
    op: Op<T>,
    value: Tensor<T>,
    requires_grad: bool,
}

pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Tensor<T>>>,
    consumed: bool,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), grads: Vec::new(), consumed: false }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, op: Op<T>, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node { op, value, requires_grad });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    /// Record an input tensor. Only leaves may require gradients.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(Op::Leaf, value, requires_grad)
    }

    pub fn conv2d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        stride: (usize, usize),
        padding: (usize, usize),
    ) -> Result<Var> {
        if let Some(b) = bias {
            let bs = self.nodes[b.0].value.shape();
            let c_out = self.nodes[weight.0].value.shape()[0];
            if bs != [1, c_out, 1, 1] {
                return Err(Error::ShapeMismatch {
                    op: "conv2d",
                    detail: format!("bias shape {bs:?}, expected [1, {c_out}, 1, 1]"),
                });
            }
        }
        let out = conv::conv2d(
            &self.nodes[input.0].value,
            &self.nodes[weight.0].value,
            bias.map(|b| self.nodes[b.0].value.data()),
            stride,
            padding,
        )?;
        let rg = self.nodes[input.0].requires_grad
            || self.nodes[weight.0].requires_grad
            || bias.is_some_and(|b| self.nodes[b.0].requires_grad);
        Ok(self.push(
            Op::Conv2d { input: input.0, weight: weight.0, bias: bias.map(|b| b.0), stride, padding },
            out,
            rg,
        ))
    }

    /// Spatially varying convolution; 8 banks select by (row mod 4, col mod 2),
    /// 4 banks by (row mod 2, col mod 2). One [1, C, 1, 1] bias per bank.
    pub fn svc(&mut self, input: Var, banks: &[Var], biases: &[Var]) -> Result<Var> {
        if banks.len() != biases.len() {
            return Err(Error::ShapeMismatch {
                op: "svc",
                detail: format!("{} banks but {} biases", banks.len(), biases.len()),
            });
        }
        let bank_refs: Vec<&Tensor<T>> = banks.iter().map(|v| &self.nodes[v.0].value).collect();
        let bias_refs: Vec<&[T]> =
            biases.iter().map(|v| self.nodes[v.0].value.data()).collect();
        let out = svc::svc_forward_kernel(&self.nodes[input.0].value, &bank_refs, &bias_refs)?;
        let rg = self.nodes[input.0].requires_grad
            || banks.iter().chain(biases).any(|v| self.nodes[v.0].requires_grad);
        Ok(self.push(
            Op::Svc {
                input: input.0,
                banks: banks.iter().map(|v| v.0).collect(),
                biases: biases.iter().map(|v| v.0).collect(),
            },
            out,
            rg,
        ))
    }

    pub fn pixel_shuffle(&mut self, input: Var, factor: usize) -> Result<Var> {
        let out = conv::pixel_shuffle(&self.nodes[input.0].value, factor)?;
        let rg = self.nodes[input.0].requires_grad;
        Ok(self.push(Op::PixelShuffle { input: input.0, factor }, out, rg))
    }

    pub fn pack_rggb(&mut self, input: Var) -> Result<Var> {
        let out = conv::pack_rggb(&self.nodes[input.0].value)?;
        let rg = self.nodes[input.0].requires_grad;
        Ok(self.push(Op::PackRggb { input: input.0 }, out, rg))
    }

    pub fn relu(&mut self, input: Var) -> Var {
        let out = self.nodes[input.0].value.map(|v| if v > T::zero() { v } else { T::zero() });
        let rg = self.nodes[input.0].requires_grad;
        self.push(Op::Relu { input: input.0 }, out, rg)
    }

    pub fn add(&mut self, lhs: Var, rhs: Var) -> Result<Var> {
        let (a, b) = (&self.nodes[lhs.0].value, &self.nodes[rhs.0].value);
        if a.shape() != b.shape() {
            return Err(Error::ShapeMismatch {
                op: "add",
                detail: format!("{:?} vs {:?}", a.shape(), b.shape()),
            });
        }
        let mut out = a.clone();
        for (o, &r) in out.data_mut().iter_mut().zip(b.data()) {
            *o += r;
        }
        let rg = self.nodes[lhs.0].requires_grad || self.nodes[rhs.0].requires_grad;
        Ok(self.push(Op::Add { lhs: lhs.0, rhs: rhs.0 }, out, rg))
    }

    pub fn mul(&mut self, lhs: Var, rhs: Var) -> Result<Var> {
        let (a, b) = (&self.nodes[lhs.0].value, &self.nodes[rhs.0].value);
        if a.shape() != b.shape() {
            return Err(Error::ShapeMismatch {
                op: "mul",
                detail: format!("{:?} vs {:?}", a.shape(), b.shape()),
            });
        }
        let mut out = a.clone();
        for (o, &r) in out.data_mut().iter_mut().zip(b.data()) {
            *o *= r;
        }
        let rg = self.nodes[lhs.0].requires_grad || self.nodes[rhs.0].requires_grad;
        Ok(self.push(Op::Mul { lhs: lhs.0, rhs: rhs.0 }, out, rg))
    }

    pub fn scale(&mut self, input: Var, factor: T) -> Var {
        let out = self.nodes[input.0].value.map(|v| v * factor);
        let rg = self.nodes[input.0].requires_grad;
        self.push(Op::ScaleConst { input: input.0, factor }, out, rg)
    }

    pub fn scale_by(&mut self, input: Var, scalar: Var) -> Result<Var> {
        let s = self.nodes[scalar.0].value.item()?;
        let out = self.nodes[input.0].value.map(|v| v * s);
        let rg = self.nodes[input.0].requires_grad || self.nodes[scalar.0].requires_grad;
        Ok(self.push(Op::ScaleByScalar { input: input.0, scalar: scalar.0 }, out, rg))
    }

    pub fn concat_channels(&mut self, inputs: &[Var]) -> Result<Var> {
        if inputs.is_empty() {
            return Err(Error::InvalidArgument("concat of zero tensors".into()));
        }
        let [n, _, h, w] = self.nodes[inputs[0].0].value.shape();
        let mut c_total = 0;
        for v in inputs {
            let s = self.nodes[v.0].value.shape();
            if s[0] != n || s[2] != h || s[3] != w {
                return Err(Error::ShapeMismatch {
                    op: "concat_channels",
                    detail: format!("{:?} vs leading {:?}", s, [n, 0, h, w]),
                });
            }
            c_total += s[1];
        }
        let mut out = Tensor::zeros([n, c_total, h, w]);
        for b in 0..n {
            let mut c_off = 0;
            for v in inputs {
                let t = &self.nodes[v.0].value;
                let c = t.shape()[1];
                let src = &t.data()[b * c * h * w..(b + 1) * c * h * w];
                let dst_start = (b * c_total + c_off) * h * w;
                out.data_mut()[dst_start..dst_start + c * h * w].copy_from_slice(src);
                c_off += c;
            }
        }
        let rg = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        Ok(self.push(Op::ConcatChannels { inputs: inputs.iter().map(|v| v.0).collect() }, out, rg))
    }

    pub fn sum_all(&mut self, input: Var) -> Var {
        let mut acc = T::zero();
        for &v in self.nodes[input.0].value.data() {
            acc += v;
        }
        let rg = self.nodes[input.0].requires_grad;
        self.push(Op::SumAll { input: input.0 }, Tensor::scalar(acc), rg)
    }

    /// Mean absolute difference over all elements (Eq.-style l1 with the
    /// 1/(C*H*W) normalization folded into the element count).
    pub fn l1_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (p, t) = (&self.nodes[pred.0].value, &self.nodes[target.0].value);
        if p.shape() != t.shape() {
            return Err(Error::ShapeMismatch {
                op: "l1_loss",
                detail: format!("{:?} vs {:?}", p.shape(), t.shape()),
            });
        }
        let mut acc = T::zero();
        for (&a, &b) in p.data().iter().zip(t.data()) {
            acc += (a - b).abs();
        }
        let val = acc / T::from_f64(p.numel() as f64);
        let rg = self.nodes[pred.0].requires_grad || self.nodes[target.0].requires_grad;
        Ok(self.push(Op::L1Loss { pred: pred.0, target: target.0 }, Tensor::scalar(val), rg))
    }

    /// Mean over pixels of 1 - cos(pred_rgb, target_rgb) with an
    /// eps-regularized denominator.
    pub fn color_loss(&mut self, pred: Var, target: Var, eps: T) -> Result<Var> {
        let (p, t) = (&self.nodes[pred.0].value, &self.nodes[target.0].value);
        if p.shape() != t.shape() {
            return Err(Error::ShapeMismatch {
                op: "color_loss",
                detail: format!("{:?} vs {:?}", p.shape(), t.shape()),
            });
        }
        let [n, c, h, w] = p.shape();
        if c != 3 {
            return Err(Error::ShapeMismatch {
                op: "color_loss",
                detail: format!("needs 3 channels, got {c}"),
            });
        }
        let mut acc = T::zero();
        for b in 0..n {
            for row in 0..h {
                for col in 0..w {
                    let mut dot = T::zero();
                    let mut na = T::zero();
                    let mut nb = T::zero();
                    for ch in 0..3 {
                        let a = p.at(b, ch, row, col);
                        let g = t.at(b, ch, row, col);
                        dot += a * g;
                        na += a * a;
                        nb += g * g;
                    }
                    acc += T::one() - dot / (na.sqrt() * nb.sqrt() + eps);
                }
            }
        }
        let val = acc / T::from_f64((n * h * w) as f64);
        let rg = self.nodes[pred.0].requires_grad || self.nodes[target.0].requires_grad;
        Ok(self.push(Op::ColorLoss { pred: pred.0, target: target.0, eps }, Tensor::scalar(val), rg))
    }

    fn accumulate(grads: &mut [Option<Tensor<T>>], idx: usize, delta: Tensor<T>) {
        match &mut grads[idx] {
            Some(g) => {
                for (a, &d) in g.data_mut().iter_mut().zip(delta.data()) {
                    *a += d;
                }
            }
            slot @ None => *slot = Some(delta),
        }
    }

    /// Run reverse-mode accumulation from a scalar loss. Gradients of leaves
    /// with `requires_grad` become available through [`Tape::grad`] /
    /// [`Tape::take_grad`]; the tape is consumed.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        let loss_shape = self.nodes[loss.0].value.shape();
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(Error::NonScalarLoss { shape: loss_shape });
        }
        self.consumed = true;
        self.grads[loss.0] = Some(Tensor::scalar(T::one()));

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            if matches!(self.nodes[i].op, Op::Leaf) {
                continue; // leaf grads stay in place for the caller
            }
            let Some(g) = self.grads[i].take() else { continue };
            self.propagate(i, g)?;
        }
        Ok(())
    }

    fn propagate(&mut self, i: usize, g: Tensor<T>) -> Result<()> {
        let nodes = &self.nodes;
        let grads = &mut self.grads;
        let rg = |idx: usize| nodes[idx].requires_grad;
        match &nodes[i].op {
            Op::Leaf => unreachable!(),
            Op::Conv2d { input, weight, bias, stride, padding } => {
                let (dx, dw, db) = conv::conv2d_backward(
                    &nodes[*input].value,
                    &nodes[*weight].value,
                    &g,
                    *stride,
                    *padding,
                )?;
                if rg(*input) {
                    Self::accumulate(grads, *input, dx);
                }
                if rg(*weight) {
                    Self::accumulate(grads, *weight, dw);
                }
                if let Some(b) = bias {
                    if rg(*b) {
                        let c = db.len();
                        Self::accumulate(grads, *b, Tensor::from_vec([1, c, 1, 1], db)?);
                    }
                }
            }
            Op::Svc { input, banks, biases } => {
                let bank_refs: Vec<&Tensor<T>> = banks.iter().map(|&v| &nodes[v].value).collect();
                let (dx, dbanks, dbiases) =
                    svc::svc_backward_kernel(&nodes[*input].value, &bank_refs, &g)?;
                if rg(*input) {
                    Self::accumulate(grads, *input, dx);
                }
                for (&bv, db) in banks.iter().zip(dbanks) {
                    if rg(bv) {
                        Self::accumulate(grads, bv, db);
                    }
                }
                for (&bv, db) in biases.iter().zip(dbiases) {
                    if rg(bv) {
                        let c = db.len();
                        Self::accumulate(grads, bv, Tensor::from_vec([1, c, 1, 1], db)?);
                    }
                }
            }
            Op::PixelShuffle { input, factor } => {
                if rg(*input) {
                    Self::accumulate(grads, *input, conv::pixel_unshuffle(&g, *factor)?);
                }
            }
            Op::PackRggb { input } => {
                if rg(*input) {
                    Self::accumulate(grads, *input, conv::unpack_rggb(&g)?);
                }
            }
            Op::Relu { input } => {
                if rg(*input) {
                    let x = &nodes[*input].value;
                    let mut dx = g;
                    for (d, &v) in dx.data_mut().iter_mut().zip(x.data()) {
                        if v <= T::zero() {
                            *d = T::zero();
                        }
                    }
                    Self::accumulate(grads, *input, dx);
                }
            }
            Op::Add { lhs, rhs } => {
                if rg(*lhs) {
                    Self::accumulate(grads, *lhs, g.clone());
                }
                if rg(*rhs) {
                    Self::accumulate(grads, *rhs, g);
                }
            }
            Op::Mul { lhs, rhs } => {
                if rg(*lhs) {
                    let mut d = g.clone();
                    for (dv, &r) in d.data_mut().iter_mut().zip(nodes[*rhs].value.data()) {
                        *dv *= r;
                    }
                    Self::accumulate(grads, *lhs, d);
                }
                if rg(*rhs) {
                    let mut d = g;
                    for (dv, &l) in d.data_mut().iter_mut().zip(nodes[*lhs].value.data()) {
                        *dv *= l;
                    }
                    Self::accumulate(grads, *rhs, d);
                }
            }
            Op::ScaleConst { input, factor } => {
                if rg(*input) {
                    let f = *factor;
                    Self::accumulate(grads, *input, g.map(|v| v * f));
                }
            }
            Op::ScaleByScalar { input, scalar } => {
                let s = nodes[*scalar].value.data()[0];
                if rg(*scalar) {
                    let mut acc = T::zero();
                    for (&gv, &xv) in g.data().iter().zip(nodes[*input].value.data()) {
                        acc += gv * xv;
                    }
                    Self::accumulate(grads, *scalar, Tensor::scalar(acc));
                }
                if rg(*input) {
                    Self::accumulate(grads, *input, g.map(|v| v * s));
                }
            }
            Op::ConcatChannels { inputs } => {
                let [n, c_total, h, w] = g.shape();
                let mut c_off = 0;
                for &v in inputs {
                    let c = nodes[v].value.shape()[1];
                    if rg(v) {
                        let mut part = Tensor::zeros([n, c, h, w]);
                        for b in 0..n {
                            let src_start = (b * c_total + c_off) * h * w;
                            let dst_start = b * c * h * w;
                            part.data_mut()[dst_start..dst_start + c * h * w]
                                .copy_from_slice(&g.data()[src_start..src_start + c * h * w]);
                        }
                        Self::accumulate(grads, v, part);
                    }
                    c_off += c;
                }
            }
            Op::SumAll { input } => {
                if rg(*input) {
                    let gv = g.data()[0];
                    Self::accumulate(grads, *input, Tensor::full(nodes[*input].value.shape(), gv));
                }
            }
            Op::L1Loss { pred, target } => {
                let gv = g.data()[0];
                let p = &nodes[*pred].value;
                let t = &nodes[*target].value;
                let scale = gv / T::from_f64(p.numel() as f64);
                // subgradient 0 at ties
                let sign = |a: T, b: T| {
                    if a > b {
                        scale
                    } else if a < b {
                        -scale
                    } else {
                        T::zero()
                    }
                };
                if rg(*pred) {
                    let mut d = Tensor::zeros(p.shape());
                    for ((dv, &a), &b) in d.data_mut().iter_mut().zip(p.data()).zip(t.data()) {
                        *dv = sign(a, b);
                    }
                    Self::accumulate(grads, *pred, d);
                }
                if rg(*target) {
                    let mut d = Tensor::zeros(p.shape());
                    for ((dv, &a), &b) in d.data_mut().iter_mut().zip(p.data()).zip(t.data()) {
                        *dv = -sign(a, b);
                    }
                    Self::accumulate(grads, *target, d);
                }
            }
            Op::ColorLoss { pred, target, eps } => {
                let gv = g.data()[0];
                let p = &nodes[*pred].value;
                let t = &nodes[*target].value;
                let [n, _, h, w] = p.shape();
                let scale = gv / T::from_f64((n * h * w) as f64);
                let mut dp = Tensor::zeros(p.shape());
                let mut dt = Tensor::zeros(p.shape());
                for b in 0..n {
                    for row in 0..h {
                        for col in 0..w {
                            let mut a = [T::zero(); 3];
                            let mut bb = [T::zero(); 3];
                            let mut dot = T::zero();
                            let mut na2 = T::zero();
                            let mut nb2 = T::zero();
                            for ch in 0..3 {
                                a[ch] = p.at(b, ch, row, col);
                                bb[ch] = t.at(b, ch, row, col);
                                dot += a[ch] * bb[ch];
                                na2 += a[ch] * a[ch];
                                nb2 += bb[ch] * bb[ch];
                            }
                            let na = na2.sqrt();
                            let nb = nb2.sqrt();
                            let d = na * nb + *eps;
                            for ch in 0..3 {
                                // d/da of (1 - dot/d): -b/d + dot*nb*a/(na*d^2)
                                if rg(*pred) {
                                    let mut grad = -bb[ch] / d;
                                    if na > T::zero() {
                                        grad += dot * nb * a[ch] / (na * d * d);
                                    }
                                    *dp.at_mut(b, ch, row, col) = grad * scale;
                                }
                                if rg(*target) {
                                    let mut grad = -a[ch] / d;
                                    if nb > T::zero() {
                                        grad += dot * na * bb[ch] / (nb * d * d);
                                    }
                                    *dt.at_mut(b, ch, row, col) = grad * scale;
                                }
                            }
                        }
                    }
                }
                if rg(*pred) {
                    Self::accumulate(grads, *pred, dp);
                }
                if rg(*target) {
                    Self::accumulate(grads, *target, dt);
                }
            }
        }
        Ok(())
    }

    /// Gradient of a leaf after backward.
    pub fn grad(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads[v.0].as_ref()
    }

    pub fn take_grad(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads[v.0].take()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grad_of_sum_is_ones() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(
            Tensor::from_vec([1, 2, 2, 2], (0..8).map(|v| v as f64).collect()).unwrap(),
            true,
        );
        let loss = tape.sum_all(x);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[1.0; 8]);
    }

    #[test]
    fn grad_of_half_square_sum_is_x() {
        let mut tape = Tape::<f64>::new();
        let data: Vec<f64> = vec![0.5, -1.5, 2.0, 3.0];
        let x = tape.leaf(Tensor::from_vec([1, 1, 2, 2], data.clone()).unwrap(), true);
        let sq = tape.mul(x, x).unwrap();
        let sum = tape.sum_all(sq);
        let loss = tape.scale(sum, 0.5);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), data.as_slice());
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::ones([1, 1, 2, 2]), true);
        assert!(matches!(tape.backward(x), Err(Error::NonScalarLoss { .. })));
    }

    #[test]
    fn backward_twice_fails() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::ones([1, 1, 1, 1]), true);
        let loss = tape.sum_all(x);
        tape.backward(loss).unwrap();
        assert!(matches!(tape.backward(loss), Err(Error::TapeConsumed)));
    }

    #[test]
    fn scale_by_scalar_grad() {
        // loss = sum(beta * x) -> dbeta = sum(x), dx = beta
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::from_vec([1, 1, 1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap(), true);
        let beta = tape.leaf(Tensor::scalar(0.25), true);
        let y = tape.scale_by(x, beta).unwrap();
        let loss = tape.sum_all(y);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(beta).unwrap().data(), &[10.0]);
        assert_eq!(tape.grad(x).unwrap().data(), &[0.25; 4]);
    }

    #[test]
    fn concat_splits_gradient() {
        let mut tape = Tape::<f64>::new();
        let a = tape.leaf(Tensor::ones([2, 1, 2, 2]), true);
        let b = tape.leaf(Tensor::ones([2, 2, 2, 2]), true);
        let cat = tape.concat_channels(&[a, b]).unwrap();
        assert_eq!(tape.value(cat).shape(), [2, 3, 2, 2]);
        let doubled = tape.scale(cat, 2.0);
        let loss = tape.sum_all(doubled);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(a).unwrap().data(), &[2.0; 8]);
        assert_eq!(tape.grad(b).unwrap().data(), &[2.0; 16]);
    }

    #[test]
    fn forward_is_deterministic() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut tape = Tape::<f64>::new();
            let x = tape.leaf(Tensor::rand_uniform([2, 3, 8, 8], 1.0, &mut rng), false);
            let w = tape.leaf(Tensor::rand_uniform([4, 3, 3, 3], 0.3, &mut rng), true);
            let b = tape.leaf(Tensor::rand_uniform([1, 4, 1, 1], 0.1, &mut rng), true);
            let y = tape.conv2d(x, w, Some(b), (1, 1), (1, 1)).unwrap();
            let r = tape.relu(y);
            let loss = tape.sum_all(r);
            tape.backward(loss).unwrap();
            (
                tape.value(loss).data()[0],
                tape.take_grad(w).unwrap(),
                tape.take_grad(b).unwrap(),
            )
        };
        let (l1, w1, b1) = run();
        let (l2, w2, b2) = run();
        assert_eq!(l1.to_bits(), l2.to_bits());
        assert_eq!(w1, w2);
        assert_eq!(b1, b2);
    }
}
