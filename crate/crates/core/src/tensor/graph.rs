use super::{Scalar, Shape, Tensor};
use crate::error::Result;

/// The operation set the network is built from.
///
/// Implemented by [`Tape`](super::Tape) (records for backward) and
/// [`Eager`](super::Eager) (inference only).
pub trait Graph<T: Scalar> {
    type Node: Clone;

    /// Inserts a value that never receives a gradient.
    fn constant(&mut self, value: Tensor<T>) -> Self::Node;

    /// Inserts a named trainable leaf.
    fn param(&mut self, name: &str, value: &Tensor<T>) -> Self::Node;

    fn value<'a>(&'a self, node: &'a Self::Node) -> &'a Tensor<T>;

    fn shape(&self, node: &Self::Node) -> Shape {
        self.value(node).shape()
    }

    fn conv2d(
        &mut self,
        input: &Self::Node,
        weight: &Self::Node,
        bias: Option<&Self::Node>,
        padding: usize,
        dilation: usize,
    ) -> Result<Self::Node>;

    /// `kernel` is a `(1, 1, 1, k)` tensor.
    fn conv1d_channel(&mut self, input: &Self::Node, kernel: &Self::Node) -> Result<Self::Node>;

    fn avg_pool3x3(&mut self, input: &Self::Node) -> Result<Self::Node>;

    fn global_avg_pool(&mut self, input: &Self::Node) -> Result<Self::Node>;

    fn relu(&mut self, input: &Self::Node) -> Result<Self::Node>;

    fn sigmoid(&mut self, input: &Self::Node) -> Result<Self::Node>;

    fn add(&mut self, a: &Self::Node, b: &Self::Node) -> Result<Self::Node>;

    fn subtract(&mut self, a: &Self::Node, b: &Self::Node) -> Result<Self::Node>;

    fn scale_channels(&mut self, input: &Self::Node, weights: &Self::Node) -> Result<Self::Node>;

    fn concat_channels(&mut self, a: &Self::Node, b: &Self::Node) -> Result<Self::Node>;

    fn pixel_shuffle(&mut self, input: &Self::Node, r: usize) -> Result<Self::Node>;

    /// Learned two-way residual fusion; `w1_raw` and `w2_raw` are scalar tensors.
    fn weighted_fuse(
        &mut self,
        a: &Self::Node,
        b: &Self::Node,
        w1_raw: &Self::Node,
        w2_raw: &Self::Node,
    ) -> Result<Self::Node>;

    /// Mean absolute difference, reduced to a scalar.
    fn mean_abs_diff(&mut self, a: &Self::Node, b: &Self::Node) -> Result<Self::Node>;

    fn mul_scalar(&mut self, input: &Self::Node, factor: T) -> Result<Self::Node>;

    /// Sum of all elements, reduced to a scalar.
    fn sum(&mut self, input: &Self::Node) -> Result<Self::Node>;
}
