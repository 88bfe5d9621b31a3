use super::image::ImageRGB;
use crate::tensor::{Dihedral, Scalar, Tensor};

/// Applies the same dihedral transform to an HR/LR tensor pair.
pub fn augment<T: Scalar>(hr: &Tensor<T>, lr: &Tensor<T>, transform: Dihedral) -> (Tensor<T>, Tensor<T>) {
    (transform.apply(hr), transform.apply(lr))
}

pub fn augment_images(hr: &ImageRGB, lr: &ImageRGB, transform: Dihedral) -> (ImageRGB, ImageRGB) {
    (hr.transform(transform), lr.transform(transform))
}
