use ndarray::{Array2, ArrayView2, Zip};

use super::NeuroError;

/// Probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]` before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

fn check_shapes(targets: &ArrayView2<f64>, probs: &ArrayView2<f64>) -> Result<(), NeuroError> {
    if targets.dim() != probs.dim() {
        return Err(NeuroError::Shape(format!(
            "targets {:?} vs probabilities {:?}",
            targets.dim(),
            probs.dim()
        )));
    }
    if targets.nrows() == 0 {
        return Err(NeuroError::Shape("empty batch".into()));
    }
    Ok(())
}

/// Binary cross-entropy summed over outputs and averaged over the batch:
/// `-(1/B) Σ_b Σ_i [t log p + (1-t) log(1-p)]`.
pub fn cross_entropy(targets: ArrayView2<f64>, probs: ArrayView2<f64>) -> Result<f64, NeuroError> {
    check_shapes(&targets, &probs)?;
    let mut total = 0.0;
    Zip::from(&targets).and(&probs).for_each(|&t, &p| {
        let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        total -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
    });
    Ok(total / targets.nrows() as f64)
}

/// `∂L/∂p` of [`cross_entropy`].
pub fn cross_entropy_grad(targets: ArrayView2<f64>, probs: ArrayView2<f64>) -> Result<Array2<f64>, NeuroError> {
    check_shapes(&targets, &probs)?;
    let scale = 1.0 / targets.nrows() as f64;
    Ok(Zip::from(&targets).and(&probs).map_collect(|&t, &p| {
        let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        scale * (-t / p + (1.0 - t) / (1.0 - p))
    }))
}
