use ndarray::ArrayView2;

use super::{cross_entropy, Mode, Network, NeuroError};

/// Denominator floor for the relative error, so near-zero gradient entries
/// (such as pre-batch-norm biases) are compared on an absolute scale.
pub const REL_ERROR_FLOOR: f64 = 1e-5;

/// Anything whose trainable parameters can be exposed as flat mutable tensors.
pub trait Parameterized {
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_labels(&self) -> Vec<String>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    pub checked: usize,
}

/// Central differences `(f(θ+h) - f(θ-h)) / 2h` for every parameter, in tensor order.
pub fn finite_difference<M, F>(model: &mut M, h: f64, mut f: F) -> Vec<Vec<f64>>
where
    M: Parameterized,
    F: FnMut(&M) -> f64,
{
    let sizes: Vec<usize> = model.param_slices_mut().iter().map(|s| s.len()).collect();
    let mut out = Vec::with_capacity(sizes.len());
    for (t, &n) in sizes.iter().enumerate() {
        let mut grads = Vec::with_capacity(n);
        for k in 0..n {
            let orig = model.param_slices_mut()[t][k];
            model.param_slices_mut()[t][k] = orig + h;
            let up = f(model);
            model.param_slices_mut()[t][k] = orig - h;
            let down = f(model);
            model.param_slices_mut()[t][k] = orig;
            grads.push((up - down) / (2.0 * h));
        }
        out.push(grads);
    }
    out
}

pub fn compare_gradients(analytic: &[Vec<f64>], numeric: &[Vec<f64>], labels: &[String]) -> GradCheckReport {
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_tensor: String::new(),
        worst_index: 0,
        checked: 0,
    };
    for (t, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        assert_eq!(a.len(), n.len(), "tensor {t} length differs");
        for (k, (&av, &nv)) in a.iter().zip(n).enumerate() {
            let err = (av - nv).abs() / av.abs().max(nv.abs()).max(REL_ERROR_FLOOR);
            report.checked += 1;
            if err > report.max_rel_error || err.is_nan() {
                report.max_rel_error = if err.is_nan() { f64::INFINITY } else { err };
                report.worst_tensor = labels.get(t).cloned().unwrap_or_else(|| format!("tensor{t}"));
                report.worst_index = k;
            }
        }
    }
    report
}

/// Backprop versus central differences on the cross-entropy of one train-mode batch.
pub fn grad_check(
    net: &mut Network,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    h: f64,
) -> Result<GradCheckReport, NeuroError> {
    let pass = net.forward(inputs, Mode::Train)?;
    let (_, grads, _) = net.loss_and_backward(&pass, targets)?;
    let analytic = grads.to_vecs();
    let numeric = finite_difference(net, h, |n| {
        let p = n.forward(inputs, Mode::Train).expect("shapes checked above");
        cross_entropy(targets, p.output().view()).expect("shapes checked above")
    });
    Ok(compare_gradients(&analytic, &numeric, &net.param_labels()))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic(Vec<f64>);

    impl Parameterized for Quadratic {
        fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0[..]]
        }

        fn param_labels(&self) -> Vec<String> {
            vec!["q".into()]
        }
    }

    #[test]
    fn finite_difference_of_cubic() {
        let mut q = Quadratic(vec![1.0, -2.0, 0.5]);
        let num = finite_difference(&mut q, 1e-4, |m| m.0.iter().map(|x| x * x * x).sum());
        for (g, x) in num[0].iter().zip([1.0, -2.0, 0.5]) {
            assert!((g - 3.0 * x * x).abs() < 1e-7);
        }
        // Parameters are restored.
        assert_eq!(q.0, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn comparison_uses_floor_and_reports_worst() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let analytic = vec![vec![1.0, 1e-9], vec![2.0, 0.0]];
        let numeric = vec![vec![1.0, 0.0], vec![2.2, 0.0]];
        let r = compare_gradients(&analytic, &numeric, &labels);
        assert_eq!(r.checked, 4);
        assert_eq!((r.worst_tensor.as_str(), r.worst_index), ("b", 0));
        assert!((r.max_rel_error - 0.2 / 2.2).abs() < 1e-12);
    }

    #[test]
    fn nan_is_worst() {
        let r = compare_gradients(&[vec![f64::NAN]], &[vec![0.0]], &["x".into()]);
        assert!(r.max_rel_error.is_infinite());
    }
}
