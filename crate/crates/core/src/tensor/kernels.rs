//! Forward and backward numeric kernels.
//!
//! Every kernel fixes the reduction order of each output element, so results
//! are bit-identical across runs and across thread counts. Work is split over
//! independent output planes only.

use rayon::prelude::*;

use super::{Scalar, Shape, Tensor};
use crate::error::{dim_err, EpsrError, Result};

/// Range of output positions `o` for which `o + offset` lands inside `0..input_len`.
#[inline]
fn valid_range(out_len: usize, input_len: usize, offset: isize) -> (usize, usize) {
    let lo = (-offset).max(0) as usize;
    let hi = (input_len as isize - offset).clamp(0, out_len as isize) as usize;
    (lo.min(hi), hi)
}

#[inline]
fn axpy<T: Scalar>(dst: &mut [T], src: &[T], a: T) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = *d + a * s;
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn conv2d_output_shape(input: Shape, weight: Shape, padding: usize, dilation: usize) -> Result<Shape> {
    if dilation == 0 {
        return Err(EpsrError::Config("dilation must be at least 1".into()));
    }
    if input.c != weight.c {
        return dim_err(format!(
            "conv2d input has {} channels but weight {} expects {}",
            input.c, weight, weight.c
        ));
    }
    let span_h = dilation * (weight.h.max(1) - 1);
    let span_w = dilation * (weight.w.max(1) - 1);
    let h = (input.h + 2 * padding).checked_sub(span_h).filter(|&v| v > 0);
    let w = (input.w + 2 * padding).checked_sub(span_w).filter(|&v| v > 0);
    match (h, w) {
        (Some(h), Some(w)) if weight.h > 0 && weight.w > 0 => Ok(Shape::new(input.n, weight.n, h, w)),
        _ => dim_err(format!(
            "conv2d kernel {weight} with dilation {dilation} does not fit input {input} padded by {padding}"
        )),
    }
}

/// Stride-1 cross-correlation with zero padding and optional dilation.
///
/// `weight` is laid out `(out_channels, in_channels, kh, kw)`.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    padding: usize,
    dilation: usize,
) -> Result<Tensor<T>> {
    let (xs, ws) = (input.shape(), weight.shape());
    let os = conv2d_output_shape(xs, ws, padding, dilation)?;
    if let Some(b) = bias {
        if b.len() != ws.n {
            return dim_err(format!("bias has {} entries for {} output channels", b.len(), ws.n));
        }
    }
    let x = input.data();
    let w = weight.data();
    let bias = bias.map(|b| b.data());
    let mut out = vec![T::zero(); os.len()];
    let plane = os.plane();
    let in_plane = xs.plane();
    let ksz = ws.h * ws.w;
    out.par_chunks_mut(plane).enumerate().for_each(|(idx, dst)| {
        let (n, oc) = (idx / os.c, idx % os.c);
        if let Some(b) = bias {
            dst.iter_mut().for_each(|v| *v = b[oc]);
        }
        for ic in 0..xs.c {
            let src = &x[(n * xs.c + ic) * in_plane..][..in_plane];
            let wk = &w[(oc * ws.c + ic) * ksz..][..ksz];
            for ky in 0..ws.h {
                let dy = (ky * dilation) as isize - padding as isize;
                let (oy0, oy1) = valid_range(os.h, xs.h, dy);
                for kx in 0..ws.w {
                    let wv = wk[ky * ws.w + kx];
                    let dx = (kx * dilation) as isize - padding as isize;
                    let (ox0, ox1) = valid_range(os.w, xs.w, dx);
                    if ox0 >= ox1 {
                        continue;
                    }
                    for oy in oy0..oy1 {
                        let iy = (oy as isize + dy) as usize;
                        let ix0 = (ox0 as isize + dx) as usize;
                        let row = &src[iy * xs.w + ix0..][..ox1 - ox0];
                        axpy(&mut dst[oy * os.w + ox0..oy * os.w + ox1], row, wv);
                    }
                }
            }
        }
    });
    Tensor::new(os, out)
}

/// Gradient of [`conv2d`] with respect to its input.
pub fn conv2d_grad_input<T: Scalar>(
    grad_out: &[T],
    out_shape: Shape,
    weight: &Tensor<T>,
    in_shape: Shape,
    padding: usize,
    dilation: usize,
) -> Vec<T> {
    let ws = weight.shape();
    let w = weight.data();
    let os = out_shape;
    let ksz = ws.h * ws.w;
    let mut gin = vec![T::zero(); in_shape.len()];
    gin.par_chunks_mut(in_shape.plane()).enumerate().for_each(|(idx, dst)| {
        let (n, ic) = (idx / in_shape.c, idx % in_shape.c);
        for oc in 0..os.c {
            let g = &grad_out[(n * os.c + oc) * os.plane()..][..os.plane()];
            let wk = &w[(oc * ws.c + ic) * ksz..][..ksz];
            for ky in 0..ws.h {
                let dy = (ky * dilation) as isize - padding as isize;
                let (oy0, oy1) = valid_range(os.h, in_shape.h, dy);
                for kx in 0..ws.w {
                    let wv = wk[ky * ws.w + kx];
                    let dx = (kx * dilation) as isize - padding as isize;
                    let (ox0, ox1) = valid_range(os.w, in_shape.w, dx);
                    if ox0 >= ox1 {
                        continue;
                    }
                    for oy in oy0..oy1 {
                        let iy = (oy as isize + dy) as usize;
                        let ix0 = (ox0 as isize + dx) as usize;
                        let src = &g[oy * os.w + ox0..oy * os.w + ox1];
                        axpy(&mut dst[iy * in_shape.w + ix0..][..ox1 - ox0], src, wv);
                    }
                }
            }
        }
    });
    gin
}

/// Gradient of [`conv2d`] with respect to its weight.
pub fn conv2d_grad_weight<T: Scalar>(
    grad_out: &[T],
    out_shape: Shape,
    input: &Tensor<T>,
    weight_shape: Shape,
    padding: usize,
    dilation: usize,
) -> Vec<T> {
    let xs = input.shape();
    let x = input.data();
    let os = out_shape;
    let ws = weight_shape;
    let per_oc = ws.c * ws.h * ws.w;
    let mut gw = vec![T::zero(); ws.len()];
    gw.par_chunks_mut(per_oc).enumerate().for_each(|(oc, dst)| {
        for ic in 0..ws.c {
            for ky in 0..ws.h {
                let dy = (ky * dilation) as isize - padding as isize;
                let (oy0, oy1) = valid_range(os.h, xs.h, dy);
                for kx in 0..ws.w {
                    let dx = (kx * dilation) as isize - padding as isize;
                    let (ox0, ox1) = valid_range(os.w, xs.w, dx);
                    let mut acc = T::zero();
                    if ox0 < ox1 {
                        for n in 0..xs.n {
                            let g = &grad_out[(n * os.c + oc) * os.plane()..][..os.plane()];
                            let src = &x[(n * xs.c + ic) * xs.plane()..][..xs.plane()];
                            for oy in oy0..oy1 {
                                let iy = (oy as isize + dy) as usize;
                                let ix0 = (ox0 as isize + dx) as usize;
                                acc = acc
                                    + dot(
                                        &g[oy * os.w + ox0..oy * os.w + ox1],
                                        &src[iy * xs.w + ix0..][..ox1 - ox0],
                                    );
                            }
                        }
                    }
                    dst[(ic * ws.h + ky) * ws.w + kx] = acc;
                }
            }
        }
    });
    gw
}

/// Gradient of [`conv2d`] with respect to its bias.
pub fn conv2d_grad_bias<T: Scalar>(grad_out: &[T], out_shape: Shape) -> Vec<T> {
    let plane = out_shape.plane();
    (0..out_shape.c)
        .map(|oc| {
            (0..out_shape.n).fold(T::zero(), |acc, n| {
                let g = &grad_out[(n * out_shape.c + oc) * plane..][..plane];
                g.iter().fold(acc, |a, &v| a + v)
            })
        })
        .collect()
}

fn check_channel_kernel(k: usize) -> Result<()> {
    if k == 0 || k % 2 == 0 {
        return Err(EpsrError::Config(format!("1-D channel kernel size must be odd, got {k}")));
    }
    Ok(())
}

/// 1-D convolution across the channel axis of an `(N, C, 1, 1)` descriptor.
pub fn conv1d_channel<T: Scalar>(input: &Tensor<T>, kernel: &[T]) -> Result<Tensor<T>> {
    check_channel_kernel(kernel.len())?;
    let s = input.shape();
    if s.h != 1 || s.w != 1 {
        return dim_err(format!("channel convolution expects (N, C, 1, 1), got {s}"));
    }
    let half = (kernel.len() / 2) as isize;
    let x = input.data();
    let mut out = vec![T::zero(); s.len()];
    for n in 0..s.n {
        for c in 0..s.c {
            let mut acc = T::zero();
            for (j, &kv) in kernel.iter().enumerate() {
                let src = c as isize + j as isize - half;
                if src >= 0 && (src as usize) < s.c {
                    acc = acc + kv * x[n * s.c + src as usize];
                }
            }
            out[n * s.c + c] = acc;
        }
    }
    Tensor::new(s, out)
}

/// Gradients of [`conv1d_channel`]: `(d input, d kernel)`.
pub fn conv1d_channel_grad<T: Scalar>(grad_out: &[T], input: &Tensor<T>, kernel: &[T]) -> (Vec<T>, Vec<T>) {
    let s = input.shape();
    let half = (kernel.len() / 2) as isize;
    let x = input.data();
    let mut gx = vec![T::zero(); s.len()];
    let mut gk = vec![T::zero(); kernel.len()];
    for n in 0..s.n {
        for c in 0..s.c {
            let g = grad_out[n * s.c + c];
            for (j, &kv) in kernel.iter().enumerate() {
                let src = c as isize + j as isize - half;
                if src >= 0 && (src as usize) < s.c {
                    let src = n * s.c + src as usize;
                    gx[src] = gx[src] + kv * g;
                    gk[j] = gk[j] + x[src] * g;
                }
            }
        }
    }
    (gx, gk)
}

fn uniform_box<T: Scalar>() -> Tensor<T> {
    Tensor::full([1, 1, 3, 3], T::one() / T::from_f64(9.0))
}

/// 3x3 mean filter, padding 1, fixed divisor 9 at the border.
///
/// Each channel plane goes through [`conv2d`] with the uniform 1/9 kernel,
/// so the result is exactly that convolution.
pub fn avg_pool3x3<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let s = input.shape();
    if s.h == 0 || s.w == 0 {
        return dim_err("average pooling needs a non-empty plane");
    }
    let planes = Tensor::new([s.n * s.c, 1, s.h, s.w], input.data().to_vec())?;
    conv2d(&planes, &uniform_box(), None, 1, 1)?.reshape(s)
}

pub fn avg_pool3x3_grad<T: Scalar>(grad_out: &[T], shape: Shape) -> Vec<T> {
    let planes = Shape::new(shape.n * shape.c, 1, shape.h, shape.w);
    conv2d_grad_input(grad_out, planes, &uniform_box(), planes, 1, 1)
}

/// Per-channel spatial mean, `(N, C, H, W) -> (N, C, 1, 1)`.
pub fn global_avg_pool<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let s = input.shape();
    if s.plane() == 0 {
        return dim_err("global average pooling needs H*W >= 1");
    }
    let count = T::from_usize(s.plane());
    let out = input
        .data()
        .chunks(s.plane())
        .map(|p| p.iter().fold(T::zero(), |a, &v| a + v) / count)
        .collect();
    Tensor::new([s.n, s.c, 1, 1], out)
}

pub fn global_avg_pool_grad<T: Scalar>(grad_out: &[T], shape: Shape) -> Vec<T> {
    let count = T::from_usize(shape.plane());
    let mut g = Vec::with_capacity(shape.len());
    for &go in grad_out {
        g.extend(std::iter::repeat(go / count).take(shape.plane()));
    }
    g
}

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

pub fn sigmoid<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| T::one() / (T::one() + (-v).exp()))
}

fn same_shape<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, op: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return dim_err(format!("{op}: shape {} vs {}", a.shape(), b.shape()));
    }
    Ok(())
}

pub fn add<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape(a, b, "add")?;
    Tensor::new(a.shape(), a.data().iter().zip(b.data()).map(|(&x, &y)| x + y).collect())
}

pub fn subtract<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape(a, b, "subtract")?;
    Tensor::new(a.shape(), a.data().iter().zip(b.data()).map(|(&x, &y)| x - y).collect())
}

fn check_channel_weights(s: Shape, ws: Shape) -> Result<()> {
    if ws != Shape::new(s.n, s.c, 1, 1) {
        return dim_err(format!("channel weights {ws} do not match input {s}"));
    }
    Ok(())
}

/// Multiplies each channel plane by its `(N, C, 1, 1)` weight.
pub fn scale_channels<T: Scalar>(input: &Tensor<T>, weights: &Tensor<T>) -> Result<Tensor<T>> {
    let s = input.shape();
    check_channel_weights(s, weights.shape())?;
    let mut out = Vec::with_capacity(s.len());
    for (plane, &wv) in input.data().chunks(s.plane()).zip(weights.data()) {
        out.extend(plane.iter().map(|&v| v * wv));
    }
    Tensor::new(s, out)
}

pub fn scale_channels_grad<T: Scalar>(grad_out: &[T], input: &Tensor<T>, weights: &Tensor<T>) -> (Vec<T>, Vec<T>) {
    let plane = input.shape().plane();
    let mut gx = Vec::with_capacity(input.len());
    let mut gw = Vec::with_capacity(weights.len());
    for ((g, x), &wv) in grad_out.chunks(plane).zip(input.data().chunks(plane)).zip(weights.data()) {
        gx.extend(g.iter().map(|&v| v * wv));
        gw.push(dot(g, x));
    }
    (gx, gw)
}

/// Concatenates along channels, `a` first.
pub fn concat_channels<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (sa, sb) = (a.shape(), b.shape());
    if (sa.n, sa.h, sa.w) != (sb.n, sb.h, sb.w) {
        return dim_err(format!("concat: {sa} vs {sb}"));
    }
    let (pa, pb) = (sa.c * sa.plane(), sb.c * sb.plane());
    let mut out = Vec::with_capacity(sa.len() + sb.len());
    for n in 0..sa.n {
        out.extend_from_slice(&a.data()[n * pa..(n + 1) * pa]);
        out.extend_from_slice(&b.data()[n * pb..(n + 1) * pb]);
    }
    Tensor::new([sa.n, sa.c + sb.c, sa.h, sa.w], out)
}

pub fn concat_channels_grad<T: Scalar>(grad_out: &[T], sa: Shape, sb: Shape) -> (Vec<T>, Vec<T>) {
    let (pa, pb) = (sa.c * sa.plane(), sb.c * sb.plane());
    let mut ga = Vec::with_capacity(sa.len());
    let mut gb = Vec::with_capacity(sb.len());
    for chunk in grad_out.chunks(pa + pb) {
        ga.extend_from_slice(&chunk[..pa]);
        gb.extend_from_slice(&chunk[pa..]);
    }
    (ga, gb)
}

pub fn pixel_shuffle_shape(s: Shape, r: usize) -> Result<Shape> {
    if r == 0 || s.c % (r * r) != 0 {
        return dim_err(format!("pixel shuffle by {r} needs channels divisible by {}, got {}", r * r, s.c));
    }
    Ok(Shape::new(s.n, s.c / (r * r), s.h * r, s.w * r))
}

/// `out(n, c, r*h + a, r*w + b) = in(n, c*r*r + a*r + b, h, w)`.
pub fn pixel_shuffle<T: Scalar>(input: &Tensor<T>, r: usize) -> Result<Tensor<T>> {
    let s = input.shape();
    let os = pixel_shuffle_shape(s, r)?;
    let x = input.data();
    let mut out = vec![T::zero(); os.len()];
    for n in 0..s.n {
        for ci in 0..s.c {
            let (c, a, b) = (ci / (r * r), (ci / r) % r, ci % r);
            for h in 0..s.h {
                for w in 0..s.w {
                    out[os.index(n, c, r * h + a, r * w + b)] = x[s.index(n, ci, h, w)];
                }
            }
        }
    }
    Tensor::new(os, out)
}

/// Inverse of [`pixel_shuffle`].
pub fn pixel_unshuffle<T: Scalar>(input: &Tensor<T>, r: usize) -> Result<Tensor<T>> {
    let s = input.shape();
    if r == 0 || s.h % r != 0 || s.w % r != 0 {
        return dim_err(format!("pixel unshuffle by {r} needs spatial dims divisible by {r}, got {s}"));
    }
    let os = Shape::new(s.n, s.c * r * r, s.h / r, s.w / r);
    let x = input.data();
    let mut out = vec![T::zero(); os.len()];
    for n in 0..os.n {
        for ci in 0..os.c {
            let (c, a, b) = (ci / (r * r), (ci / r) % r, ci % r);
            for h in 0..os.h {
                for w in 0..os.w {
                    out[os.index(n, ci, h, w)] = x[s.index(n, c, r * h + a, r * w + b)];
                }
            }
        }
    }
    Tensor::new(os, out)
}

/// Added to the fusion denominator.
pub const FUSION_EPS: f64 = 1e-5;

fn relu_scalar<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

/// `(relu(w1) * a + relu(w2) * b) / (eps + relu(w1) + relu(w2))` with scalar raw weights.
pub fn weighted_fuse<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, w1_raw: T, w2_raw: T) -> Result<Tensor<T>> {
    same_shape(a, b, "weighted fuse")?;
    let (w1, w2) = (relu_scalar(w1_raw), relu_scalar(w2_raw));
    let denom = T::from_f64(FUSION_EPS) + w1 + w2;
    Tensor::new(
        a.shape(),
        a.data().iter().zip(b.data()).map(|(&x, &y)| (w1 * x + w2 * y) / denom).collect(),
    )
}

/// Gradients of [`weighted_fuse`]: `(d a, d b, d w1_raw, d w2_raw)`.
pub fn weighted_fuse_grad<T: Scalar>(
    grad_out: &[T],
    a: &Tensor<T>,
    b: &Tensor<T>,
    out: &Tensor<T>,
    w1_raw: T,
    w2_raw: T,
) -> (Vec<T>, Vec<T>, T, T) {
    let (w1, w2) = (relu_scalar(w1_raw), relu_scalar(w2_raw));
    let denom = T::from_f64(FUSION_EPS) + w1 + w2;
    let ga = grad_out.iter().map(|&g| g * w1 / denom).collect();
    let gb = grad_out.iter().map(|&g| g * w2 / denom).collect();
    let mut g1 = T::zero();
    let mut g2 = T::zero();
    for ((&g, (&x, &y)), &o) in grad_out.iter().zip(a.data().iter().zip(b.data())).zip(out.data()) {
        g1 = g1 + g * (x - o);
        g2 = g2 + g * (y - o);
    }
    let g1 = if w1_raw > T::zero() { g1 / denom } else { T::zero() };
    let g2 = if w2_raw > T::zero() { g2 / denom } else { T::zero() };
    (ga, gb, g1, g2)
}

/// Mean absolute difference as a `(1, 1, 1, 1)` tensor.
pub fn mean_abs_diff<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape(a, b, "mean absolute difference")?;
    if a.is_empty() {
        return dim_err("mean absolute difference of empty tensors");
    }
    let total = a.data().iter().zip(b.data()).fold(T::zero(), |acc, (&x, &y)| acc + (x - y).abs());
    Ok(Tensor::scalar(total / T::from_usize(a.len())))
}

pub fn mean_abs_diff_grad<T: Scalar>(g: T, a: &Tensor<T>, b: &Tensor<T>) -> (Vec<T>, Vec<T>) {
    let scale = g / T::from_usize(a.len());
    let ga: Vec<T> = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x - y;
            if d > T::zero() {
                scale
            } else if d < T::zero() {
                -scale
            } else {
                T::zero()
            }
        })
        .collect();
    let gb = ga.iter().map(|&v| -v).collect();
    (ga, gb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: [usize; 4], data: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(shape, data).unwrap()
    }

    #[test]
    fn conv_box_sum() {
        let x = Tensor::<f64>::full([1, 1, 3, 3], 1.0);
        let w = Tensor::<f64>::full([1, 1, 3, 3], 1.0);
        let y = conv2d(&x, &w, None, 1, 1).unwrap();
        assert_eq!(y.at(0, 0, 1, 1), 9.0);
        assert_eq!(y.at(0, 0, 0, 0), 4.0);
        assert_eq!(y.at(0, 0, 2, 2), 4.0);
        assert_eq!(y.at(0, 0, 0, 1), 6.0);
    }

    #[test]
    fn conv_output_size_law() {
        let s = conv2d_output_shape(Shape::new(1, 2, 10, 7), Shape::new(4, 2, 3, 3), 1, 2).unwrap();
        assert_eq!(s, Shape::new(1, 4, 8, 5));
        assert!(conv2d_output_shape(Shape::new(1, 3, 8, 8), Shape::new(4, 2, 3, 3), 1, 1).is_err());
        assert!(conv2d_output_shape(Shape::new(1, 1, 2, 2), Shape::new(1, 1, 3, 3), 0, 2).is_err());
    }

    #[test]
    fn conv_bias_length_checked() {
        let x = Tensor::<f64>::zeros([1, 1, 4, 4]);
        let w = Tensor::<f64>::zeros([2, 1, 3, 3]);
        assert!(conv2d(&x, &w, Some(&Tensor::zeros([1, 1, 1, 3])), 1, 1).is_err());
    }

    #[test]
    fn channel_conv_hand_values() {
        let x = t([1, 4, 1, 1], &[1.0, 2.0, 3.0, 4.0]);
        let y = conv1d_channel(&x, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(y.data(), &[3.0, 6.0, 9.0, 7.0]);
        assert_eq!(conv1d_channel(&x, &[0.0, 1.0, 0.0]).unwrap(), x);
        assert!(matches!(conv1d_channel(&x, &[1.0, 1.0]), Err(EpsrError::Config(_))));
    }

    #[test]
    fn avg_pool_divisor_nine() {
        let y = avg_pool3x3(&t([1, 1, 1, 1], &[9.0])).unwrap();
        assert!((y.data()[0] - 1.0).abs() < 1e-15);
        let v = 0.7;
        let y = avg_pool3x3(&Tensor::<f64>::full([1, 1, 5, 5], v)).unwrap();
        assert!((y.at(0, 0, 2, 2) - v).abs() < 1e-12);
        assert!((y.at(0, 0, 0, 0) - 4.0 * v / 9.0).abs() < 1e-12);
        assert!((y.at(0, 0, 0, 2) - 6.0 * v / 9.0).abs() < 1e-12);
    }

    #[test]
    fn gap_mean() {
        let y = global_avg_pool(&t([1, 1, 2, 2], &[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert_eq!(y.data(), &[1.5]);
        assert_eq!(y.shape(), Shape::new(1, 1, 1, 1));
    }

    #[test]
    fn elementwise_basics() {
        let x = t([1, 1, 1, 2], &[-1.0, 2.0]);
        assert_eq!(relu(&x).data(), &[0.0, 2.0]);
        assert_eq!(sigmoid(&t([1, 1, 1, 1], &[0.0])).data(), &[0.5]);
        let ones = Tensor::<f64>::full([1, 1, 1, 1], 1.0);
        assert_eq!(scale_channels(&x, &ones).unwrap(), x);
        assert!(add(&x, &ones).is_err());
    }

    #[test]
    fn concat_order() {
        let a = Tensor::<f64>::full([1, 1, 1, 2], 1.0);
        let b = Tensor::<f64>::full([1, 2, 1, 2], 2.0);
        let c = concat_channels(&a, &b).unwrap();
        assert_eq!(c.shape(), Shape::new(1, 3, 1, 2));
        assert_eq!(c.data(), &[1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
        assert!(concat_channels(&a, &Tensor::zeros([1, 1, 2, 2])).is_err());
    }

    #[test]
    fn pixel_shuffle_unrolled() {
        let x = t([1, 4, 1, 1], &[0.0, 1.0, 2.0, 3.0]);
        let y = pixel_shuffle(&x, 2).unwrap();
        assert_eq!(y.shape(), Shape::new(1, 1, 2, 2));
        assert_eq!(y.data(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(pixel_shuffle(&x, 1).unwrap(), x);
        assert!(pixel_shuffle(&t([1, 3, 1, 1], &[0.0; 3]), 2).is_err());
    }

    #[test]
    fn fuse_edge_cases() {
        let f = Tensor::<f64>::full([1, 2, 2, 2], 3.0);
        let g = Tensor::<f64>::full([1, 2, 2, 2], -1.0);
        let y = weighted_fuse(&f, &g, 1.0, 0.0).unwrap();
        assert!((y.data()[0] - 3.0 / (1.0 + 1e-5)).abs() < 1e-12);
        let y = weighted_fuse(&f, &f, 1.0, 1.0).unwrap();
        assert!((y.data()[0] - 3.0).abs() < 1e-4);
        let y = weighted_fuse(&f, &g, -0.5, -2.0).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn l1_values() {
        let a = Tensor::<f64>::full([1, 3, 4, 4], 0.25);
        assert_eq!(mean_abs_diff(&a, &a).unwrap().data(), &[0.0]);
        let b = a.map(|v| v + 0.5);
        assert!((mean_abs_diff(&b, &a).unwrap().data()[0] - 0.5).abs() < 1e-15);
    }
}
