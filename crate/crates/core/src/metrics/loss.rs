use crate::error::{dim_err, Result};
use crate::imaging::sobel_gradients;
use crate::tensor::{Graph, Scalar};

/// Weight of the Sobel term in the total objective.
pub const GRADIENT_WEIGHT: f64 = 0.1;

/// Scalar loss values for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub l1: f64,
    pub gradient: f64,
    pub total: f64,
}

impl LossReport {
    pub fn new(l1: f64, gradient: f64) -> Self {
        Self {
            l1,
            gradient,
            total: l1 + GRADIENT_WEIGHT * gradient,
        }
    }
}

fn check_pair<T: Scalar, G: Graph<T>>(g: &G, sr: &G::Node, hr: &G::Node) -> Result<()> {
    let (a, b) = (g.shape(sr), g.shape(hr));
    if a != b {
        return dim_err(format!("loss operands differ in shape: {a} vs {b}"));
    }
    Ok(())
}

/// Mean absolute error over every element.
pub fn l1_loss<T: Scalar, G: Graph<T>>(g: &mut G, sr: &G::Node, hr: &G::Node) -> Result<G::Node> {
    check_pair(g, sr, hr)?;
    g.mean_abs_diff(sr, hr)
}

/// Mean absolute error between the Sobel responses of `sr` and `hr`.
pub fn gradient_loss<T: Scalar, G: Graph<T>>(g: &mut G, sr: &G::Node, hr: &G::Node) -> Result<G::Node> {
    check_pair(g, sr, hr)?;
    let a = sobel_gradients(g, sr)?;
    let b = sobel_gradients(g, hr)?;
    g.mean_abs_diff(&a, &b)
}

/// `l1 + 0.1 * gradient`, returned as a graph node plus the scalar report.
pub fn total_loss<T: Scalar, G: Graph<T>>(g: &mut G, sr: &G::Node, hr: &G::Node) -> Result<(G::Node, LossReport)> {
    let l1 = l1_loss(g, sr, hr)?;
    let grad = gradient_loss(g, sr, hr)?;
    let weighted = g.mul_scalar(&grad, T::from_f64(GRADIENT_WEIGHT))?;
    let total = g.add(&l1, &weighted)?;
    let report = LossReport::new(g.value(&l1).data()[0].as_f64(), g.value(&grad).data()[0].as_f64());
    Ok((total, report))
}
