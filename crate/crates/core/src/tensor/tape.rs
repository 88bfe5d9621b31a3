use super::{kernels, Graph, Scalar, Shape, Tensor};
use crate::error::{dim_err, EpsrError, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    Conv2d { x: Var, w: Var, b: Option<Var>, padding: usize, dilation: usize },
    Conv1dChannel { x: Var, k: Var },
    AvgPool3x3 { x: Var },
    GlobalAvgPool { x: Var },
    Relu { x: Var },
    Sigmoid { x: Var },
    Add { a: Var, b: Var },
    Subtract { a: Var, b: Var },
    ScaleChannels { x: Var, s: Var },
    Concat { a: Var, b: Var },
    PixelShuffle { x: Var, r: usize },
    WeightedFuse { a: Var, b: Var, w1: Var, w2: Var },
    MeanAbsDiff { a: Var, b: Var },
    MulScalar { x: Var, factor: T },
    Sum { x: Var },
}

#[derive(Debug, Clone)]
struct Node<T: Scalar> {
    value: Tensor<T>,
    op: Op<T>,
    name: Option<String>,
}

/// Records operations during a forward pass and replays them in reverse.
///
/// Leaves added with [`Graph::param`] require gradients; any node computed
/// from such a leaf does too. After [`Tape::backward`] every such node
/// carries `dLoss/dNode` in its gradient slot, accumulated over fan-out.
#[derive(Debug, Clone, Default)]
pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn reset(&mut self) {
        self.nodes.clear();
    }

    pub fn get(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.nodes[v.0].value.grad()
    }

    /// Named trainable leaves with their gradients, in insertion order.
    pub fn param_grads(&self) -> impl Iterator<Item = (&str, Option<&[T]>)> {
        self.nodes
            .iter()
            .filter_map(|n| n.name.as_deref().map(|name| (name, n.value.grad())))
    }

    fn requires(&self, v: Var) -> bool {
        self.nodes[v.0].value.requires_grad()
    }

    fn push(&mut self, mut value: Tensor<T>, op: Op<T>, inputs: &[Var]) -> Var {
        let rg = inputs.iter().any(|&v| self.requires(v));
        value.set_requires_grad(rg);
        value.clear_grad();
        self.nodes.push(Node { value, op, name: None });
        Var(self.nodes.len() - 1)
    }

    /// Populates gradients of every node that requires them.
    ///
    /// `loss` must be a `(1, 1, 1, 1)` value that depends on at least one
    /// trainable leaf.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.nodes.is_empty() || !self.requires(loss) {
            return Err(EpsrError::EmptyTape);
        }
        if self.get(loss).shape() != Shape::scalar() {
            return dim_err(format!("loss must be a scalar, got {}", self.get(loss).shape()));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let contributions = self.local_grads(&node.op, &node.value, &g);
            for (v, delta) in contributions {
                if !self.requires(v) {
                    continue;
                }
                match &mut grads[v.0] {
                    Some(acc) => acc.iter_mut().zip(&delta).for_each(|(a, &d)| *a = *a + d),
                    slot @ None => *slot = Some(delta),
                }
            }
            self.nodes[i].value.accumulate_grad(&g)?;
        }
        Ok(())
    }

    fn local_grads(&self, op: &Op<T>, out: &Tensor<T>, g: &[T]) -> Vec<(Var, Vec<T>)> {
        let val = |v: Var| &self.nodes[v.0].value;
        let need = |v: Var| self.requires(v);
        let mut res = Vec::new();
        match *op {
            Op::Leaf => {}
            Op::Conv2d { x, w, b, padding, dilation } => {
                let os = out.shape();
                if need(x) {
                    res.push((x, kernels::conv2d_grad_input(g, os, val(w), val(x).shape(), padding, dilation)));
                }
                if need(w) {
                    res.push((w, kernels::conv2d_grad_weight(g, os, val(x), val(w).shape(), padding, dilation)));
                }
                if let Some(b) = b.filter(|&b| need(b)) {
                    res.push((b, kernels::conv2d_grad_bias(g, os)));
                }
            }
            Op::Conv1dChannel { x, k } => {
                let (gx, gk) = kernels::conv1d_channel_grad(g, val(x), val(k).data());
                res.push((x, gx));
                res.push((k, gk));
            }
            Op::AvgPool3x3 { x } => res.push((x, kernels::avg_pool3x3_grad(g, out.shape()))),
            Op::GlobalAvgPool { x } => res.push((x, kernels::global_avg_pool_grad(g, val(x).shape()))),
            Op::Relu { x } => res.push((
                x,
                g.iter()
                    .zip(val(x).data())
                    .map(|(&g, &v)| if v > T::zero() { g } else { T::zero() })
                    .collect(),
            )),
            Op::Sigmoid { x } => res.push((
                x,
                g.iter().zip(out.data()).map(|(&g, &y)| g * y * (T::one() - y)).collect(),
            )),
            Op::Add { a, b } => {
                res.push((a, g.to_vec()));
                res.push((b, g.to_vec()));
            }
            Op::Subtract { a, b } => {
                res.push((a, g.to_vec()));
                res.push((b, g.iter().map(|&v| -v).collect()));
            }
            Op::ScaleChannels { x, s } => {
                let (gx, gs) = kernels::scale_channels_grad(g, val(x), val(s));
                res.push((x, gx));
                res.push((s, gs));
            }
            Op::Concat { a, b } => {
                let (ga, gb) = kernels::concat_channels_grad(g, val(a).shape(), val(b).shape());
                res.push((a, ga));
                res.push((b, gb));
            }
            Op::PixelShuffle { x, r } => {
                let gt = Tensor::new(out.shape(), g.to_vec()).and_then(|t| kernels::pixel_unshuffle(&t, r));
                res.push((x, gt.expect("shuffle shapes were validated on the forward pass").into_data()));
            }
            Op::WeightedFuse { a, b, w1, w2 } => {
                let (ga, gb, g1, g2) =
                    kernels::weighted_fuse_grad(g, val(a), val(b), out, val(w1).data()[0], val(w2).data()[0]);
                res.push((a, ga));
                res.push((b, gb));
                res.push((w1, vec![g1]));
                res.push((w2, vec![g2]));
            }
            Op::MeanAbsDiff { a, b } => {
                let (ga, gb) = kernels::mean_abs_diff_grad(g[0], val(a), val(b));
                res.push((a, ga));
                res.push((b, gb));
            }
            Op::MulScalar { x, factor } => res.push((x, g.iter().map(|&v| v * factor).collect())),
            Op::Sum { x } => res.push((x, vec![g[0]; val(x).len()])),
        }
        res
    }
}

impl<T: Scalar> Graph<T> for Tape<T> {
    type Node = Var;

    fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, &[])
    }

    fn param(&mut self, name: &str, value: &Tensor<T>) -> Var {
        let mut value = value.clone();
        value.clear_grad();
        value.set_requires_grad(true);
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            name: Some(name.to_owned()),
        });
        Var(self.nodes.len() - 1)
    }

    fn value<'a>(&'a self, node: &'a Var) -> &'a Tensor<T> {
        self.get(*node)
    }

    fn conv2d(&mut self, x: &Var, w: &Var, b: Option<&Var>, padding: usize, dilation: usize) -> Result<Var> {
        let out = kernels::conv2d(self.get(*x), self.get(*w), b.map(|b| self.get(*b)), padding, dilation)?;
        let mut inputs = vec![*x, *w];
        inputs.extend(b.copied());
        Ok(self.push(
            out,
            Op::Conv2d { x: *x, w: *w, b: b.copied(), padding, dilation },
            &inputs,
        ))
    }

    fn conv1d_channel(&mut self, x: &Var, k: &Var) -> Result<Var> {
        let out = kernels::conv1d_channel(self.get(*x), self.get(*k).data())?;
        Ok(self.push(out, Op::Conv1dChannel { x: *x, k: *k }, &[*x, *k]))
    }

    fn avg_pool3x3(&mut self, x: &Var) -> Result<Var> {
        let out = kernels::avg_pool3x3(self.get(*x))?;
        Ok(self.push(out, Op::AvgPool3x3 { x: *x }, &[*x]))
    }

    fn global_avg_pool(&mut self, x: &Var) -> Result<Var> {
        let out = kernels::global_avg_pool(self.get(*x))?;
        Ok(self.push(out, Op::GlobalAvgPool { x: *x }, &[*x]))
    }

    fn relu(&mut self, x: &Var) -> Result<Var> {
        let out = kernels::relu(self.get(*x));
        Ok(self.push(out, Op::Relu { x: *x }, &[*x]))
    }

    fn sigmoid(&mut self, x: &Var) -> Result<Var> {
        let out = kernels::sigmoid(self.get(*x));
        Ok(self.push(out, Op::Sigmoid { x: *x }, &[*x]))
    }

    fn add(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let out = kernels::add(self.get(*a), self.get(*b))?;
        Ok(self.push(out, Op::Add { a: *a, b: *b }, &[*a, *b]))
    }

    fn subtract(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let out = kernels::subtract(self.get(*a), self.get(*b))?;
        Ok(self.push(out, Op::Subtract { a: *a, b: *b }, &[*a, *b]))
    }

    fn scale_channels(&mut self, x: &Var, s: &Var) -> Result<Var> {
        let out = kernels::scale_channels(self.get(*x), self.get(*s))?;
        Ok(self.push(out, Op::ScaleChannels { x: *x, s: *s }, &[*x, *s]))
    }

    fn concat_channels(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let out = kernels::concat_channels(self.get(*a), self.get(*b))?;
        Ok(self.push(out, Op::Concat { a: *a, b: *b }, &[*a, *b]))
    }

    fn pixel_shuffle(&mut self, x: &Var, r: usize) -> Result<Var> {
        let out = kernels::pixel_shuffle(self.get(*x), r)?;
        Ok(self.push(out, Op::PixelShuffle { x: *x, r }, &[*x]))
    }

    fn weighted_fuse(&mut self, a: &Var, b: &Var, w1: &Var, w2: &Var) -> Result<Var> {
        for w in [w1, w2] {
            if self.get(*w).shape() != Shape::scalar() {
                return dim_err("fusion weights must be scalars");
            }
        }
        let out = kernels::weighted_fuse(self.get(*a), self.get(*b), self.get(*w1).data()[0], self.get(*w2).data()[0])?;
        Ok(self.push(
            out,
            Op::WeightedFuse { a: *a, b: *b, w1: *w1, w2: *w2 },
            &[*a, *b, *w1, *w2],
        ))
    }

    fn mean_abs_diff(&mut self, a: &Var, b: &Var) -> Result<Var> {
        let out = kernels::mean_abs_diff(self.get(*a), self.get(*b))?;
        Ok(self.push(out, Op::MeanAbsDiff { a: *a, b: *b }, &[*a, *b]))
    }

    fn mul_scalar(&mut self, x: &Var, factor: T) -> Result<Var> {
        let out = self.get(*x).map(|v| v * factor);
        Ok(self.push(out, Op::MulScalar { x: *x, factor }, &[*x]))
    }

    fn sum(&mut self, x: &Var) -> Result<Var> {
        let out = Tensor::scalar(self.get(*x).sum());
        Ok(self.push(out, Op::Sum { x: *x }, &[*x]))
    }
}
