use super::{Scalar, Shape, Tensor};

/// One of the eight symmetries of the square acting on the spatial axes.
///
/// Id `t` applies an optional horizontal flip (`t >= 4`) followed by
/// `t % 4` counter-clockwise quarter turns. Id 0 is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dihedral(u8);

impl Dihedral {
    pub const IDENTITY: Self = Self(0);

    pub fn all() -> impl Iterator<Item = Self> {
        (0..8).map(Self)
    }

    /// Returns `None` for ids outside `0..8`.
    pub fn from_id(id: u8) -> Option<Self> {
        (id < 8).then_some(Self(id))
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn quarter_turns(self) -> u8 {
        self.0 % 4
    }

    pub fn flips(self) -> bool {
        self.0 >= 4
    }

    pub fn inverse(self) -> Self {
        if self.flips() {
            self
        } else {
            Self((4 - self.0) % 4)
        }
    }

    pub fn output_dims(self, h: usize, w: usize) -> (usize, usize) {
        if self.quarter_turns() % 2 == 1 {
            (w, h)
        } else {
            (h, w)
        }
    }

    /// Destination coordinate of source pixel `(y, x)` in an `h x w` plane.
    #[inline]
    pub fn map(self, h: usize, w: usize, y: usize, x: usize) -> (usize, usize) {
        let (mut y, mut x) = (y, x);
        let (mut ch, mut cw) = (h, w);
        if self.flips() {
            x = cw - 1 - x;
        }
        for _ in 0..self.quarter_turns() {
            let (ny, nx) = (cw - 1 - x, y);
            y = ny;
            x = nx;
            std::mem::swap(&mut ch, &mut cw);
        }
        (y, x)
    }

    /// Applies the transform to a row-major plane of `h x w` pixels, each
    /// `stride` elements wide.
    pub fn apply_interleaved<E: Copy>(self, src: &[E], h: usize, w: usize, stride: usize) -> Vec<E> {
        if self.0 == 0 {
            return src.to_vec();
        }
        let (_, ow) = self.output_dims(h, w);
        let mut out = src.to_vec();
        for y in 0..h {
            for x in 0..w {
                let (ty, tx) = self.map(h, w, y, x);
                let s = (y * w + x) * stride;
                let d = (ty * ow + tx) * stride;
                out[d..d + stride].copy_from_slice(&src[s..s + stride]);
            }
        }
        out
    }

    /// Applies the transform to every `(n, c)` plane of a tensor.
    pub fn apply<T: Scalar>(self, t: &Tensor<T>) -> Tensor<T> {
        let s = t.shape();
        let (oh, ow) = self.output_dims(s.h, s.w);
        let mut data = Vec::with_capacity(s.len());
        for plane in t.data().chunks(s.plane().max(1)) {
            data.extend(self.apply_interleaved(plane, s.h, s.w, 1));
        }
        Tensor::new(Shape::new(s.n, s.c, oh, ow), data).expect("dihedral transform preserves element count")
    }
}

/// Undoes `d` on a tensor produced by `d.apply`.
pub fn dihedral_inverse<T: Scalar>(d: Dihedral, t: &Tensor<T>) -> Tensor<T> {
    d.inverse().apply(t)
}
