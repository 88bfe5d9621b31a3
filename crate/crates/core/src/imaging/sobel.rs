use crate::error::Result;
use crate::tensor::{kernels, Graph, Scalar, Tensor};

const GX: [f64; 9] = [-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0];
const GY: [f64; 9] = [-1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0];

/// Fixed `(2C, C, 3, 3)` weight producing, per input channel, the horizontal
/// then the vertical response.
pub fn sobel_weight<T: Scalar>(channels: usize) -> Tensor<T> {
    Tensor::from_fn([2 * channels, channels, 3, 3], |oc, ic, y, x| {
        if oc / 2 != ic {
            return T::zero();
        }
        let k = if oc % 2 == 0 { &GX } else { &GY };
        T::from_f64(k[y * 3 + x])
    })
}

/// Differentiable Sobel gradients with zero padding.
pub fn sobel_gradients<T: Scalar, G: Graph<T>>(g: &mut G, x: &G::Node) -> Result<G::Node> {
    let c = g.shape(x).c;
    let w = g.constant(sobel_weight(c));
    g.conv2d(x, &w, None, 1, 1)
}

pub fn sobel<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    kernels::conv2d(x, &sobel_weight(x.shape().c), None, 1, 1)
}
