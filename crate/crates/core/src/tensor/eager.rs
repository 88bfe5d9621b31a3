use std::rc::Rc;

use super::{kernels, Graph, Scalar, Tensor};
use crate::error::Result;

/// Immediate-mode evaluation with no recording.
///
/// Intermediates are reference counted and freed as soon as the model code
/// drops them, so full-size networks fit in memory at inference time.
#[derive(Debug, Default)]
pub struct Eager;

impl Eager {
    pub fn new() -> Self {
        Self
    }
}

impl<T: Scalar> Graph<T> for Eager {
    type Node = Rc<Tensor<T>>;

    fn constant(&mut self, value: Tensor<T>) -> Self::Node {
        Rc::new(value)
    }

    fn param(&mut self, _name: &str, value: &Tensor<T>) -> Self::Node {
        let mut t = value.clone();
        t.clear_grad();
        Rc::new(t)
    }

    fn value<'a>(&'a self, node: &'a Self::Node) -> &'a Tensor<T> {
        node
    }

    fn conv2d(
        &mut self,
        input: &Self::Node,
        weight: &Self::Node,
        bias: Option<&Self::Node>,
        padding: usize,
        dilation: usize,
    ) -> Result<Self::Node> {
        kernels::conv2d(input, weight, bias.map(|b| &**b), padding, dilation).map(Rc::new)
    }

    fn conv1d_channel(&mut self, input: &Self::Node, kernel: &Self::Node) -> Result<Self::Node> {
        kernels::conv1d_channel(input, kernel.data()).map(Rc::new)
    }

    fn avg_pool3x3(&mut self, input: &Self::Node) -> Result<Self::Node> {
        kernels::avg_pool3x3(input).map(Rc::new)
    }

    fn global_avg_pool(&mut self, input: &Self::Node) -> Result<Self::Node> {
        kernels::global_avg_pool(input).map(Rc::new)
    }

    fn relu(&mut self, input: &Self::Node) -> Result<Self::Node> {
        Ok(Rc::new(kernels::relu(input)))
    }

    fn sigmoid(&mut self, input: &Self::Node) -> Result<Self::Node> {
        Ok(Rc::new(kernels::sigmoid(input)))
    }

    fn add(&mut self, a: &Self::Node, b: &Self::Node) -> Result<Self::Node> {
        kernels::add(a, b).map(Rc::new)
    }

    fn subtract(&mut self, a: &Self::Node, b: &Self::Node) -> Result<Self::Node> {
        kernels::subtract(a, b).map(Rc::new)
    }

    fn scale_channels(&mut self, input: &Self::Node, weights: &Self::Node) -> Result<Self::Node> {
        kernels::scale_channels(input, weights).map(Rc::new)
    }

    fn concat_channels(&mut self, a: &Self::Node, b: &Self::Node) -> Result<Self::Node> {
        kernels::concat_channels(a, b).map(Rc::new)
    }

    fn pixel_shuffle(&mut self, input: &Self::Node, r: usize) -> Result<Self::Node> {
        kernels::pixel_shuffle(input, r).map(Rc::new)
    }

    fn weighted_fuse(
        &mut self,
        a: &Self::Node,
        b: &Self::Node,
        w1_raw: &Self::Node,
        w2_raw: &Self::Node,
    ) -> Result<Self::Node> {
        kernels::weighted_fuse(a, b, w1_raw.data()[0], w2_raw.data()[0]).map(Rc::new)
    }

    fn mean_abs_diff(&mut self, a: &Self::Node, b: &Self::Node) -> Result<Self::Node> {
        kernels::mean_abs_diff(a, b).map(Rc::new)
    }

    fn mul_scalar(&mut self, input: &Self::Node, factor: T) -> Result<Self::Node> {
        Ok(Rc::new(input.map(|v| v * factor)))
    }

    fn sum(&mut self, input: &Self::Node) -> Result<Self::Node> {
        Ok(Rc::new(Tensor::scalar(input.sum())))
    }
}
