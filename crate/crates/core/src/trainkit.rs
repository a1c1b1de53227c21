//! Loss, optimizer, classical baseline and the local training loop shared
//! by all model variants.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::datagen::Sample;
use crate::error::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
pub const DEFAULT_BATCH_SIZE: usize = 32;

/// Softmax cross-entropy for two classes. Returns the loss and its
/// gradient with respect to the logits.
pub fn loss_and_grad(logits: &[f64; 2], label: usize) -> Result<(f64, [f64; 2])> {
    if label > 1 {
        return Err(Error::InvalidLabel(label));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("logits"));
    }
    let max = logits[0].max(logits[1]);
    let shifted = [logits[0] - max, logits[1] - max];
    let log_norm = (shifted[0].exp() + shifted[1].exp()).ln();
    let loss = log_norm - shifted[label];
    let mut grad = [(shifted[0] - log_norm).exp(), (shifted[1] - log_norm).exp()];
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Plain stochastic gradient descent, `p ← p − lr·g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sgd {
    learning_rate: f64,
}

impl Sgd {
    pub fn new(learning_rate: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {learning_rate}")));
        }
        Ok(Sgd { learning_rate })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn step(&self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != grad.len() {
            return Err(Error::LengthMismatch {
                what: "gradient",
                expected: params.len(),
                actual: grad.len(),
            });
        }
        for (p, g) in params.iter_mut().zip(grad) {
            *p -= self.learning_rate * g;
        }
        Ok(())
    }
}

impl Default for Sgd {
    fn default() -> Self {
        Sgd {
            learning_rate: DEFAULT_LEARNING_RATE,
        }
    }
}

/// A two-class model producing one logit per class.
pub trait Classifier {
    fn logits(&self, features: &[f64; 2]) -> Result<[f64; 2]>;

    /// Argmax of the logits; ties go to class 0.
    fn predict(&self, features: &[f64; 2]) -> Result<usize> {
        let l = self.logits(features)?;
        Ok(usize::from(l[1] > l[0]))
    }
}

/// A classifier with a flat trainable parameter vector.
pub trait Trainable: Classifier {
    fn params(&self) -> &[f64];

    fn params_mut(&mut self) -> &mut [f64];

    /// Loss and parameter gradient for one sample.
    fn sample_loss_grad(&self, sample: &Sample) -> Result<(f64, Vec<f64>)>;

    /// Mean loss and mean gradient over a batch, reduced in sample order.
    fn batch_loss_grad(&self, batch: &[Sample]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.params().len()];
        for sample in batch {
            let (l, g) = self.sample_loss_grad(sample)?;
            loss += l;
            for (acc, v) in grad.iter_mut().zip(&g) {
                *acc += v;
            }
        }
        let scale = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok((loss * scale, grad))
    }

    /// Checked after every optimizer step.
    fn check_invariants(&self) -> Result<()> {
        if self.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("parameters after update"));
        }
        Ok(())
    }
}

/// Hyperparameters of local client training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTraining {
    pub batch_size: usize,
    pub optimizer: Sgd,
}

impl LocalTraining {
    pub fn new(batch_size: usize, learning_rate: f64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(LocalTraining {
            batch_size,
            optimizer: Sgd::new(learning_rate)?,
        })
    }
}

impl Default for LocalTraining {
    fn default() -> Self {
        LocalTraining {
            batch_size: DEFAULT_BATCH_SIZE,
            optimizer: Sgd::default(),
        }
    }
}

/// Running sum of per-sample training losses.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTally {
    pub total: f64,
    pub samples: usize,
}

impl LossTally {
    pub fn add(&mut self, other: LossTally) {
        self.total += other.total;
        self.samples += other.samples;
    }

    pub fn mean(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.total / self.samples as f64
        }
    }
}

/// Mini-batch SGD over `data` for `epochs` epochs, reshuffling with `rng`
/// at the start of every epoch. Losses are recorded before each update.
pub fn train_local<M, R>(model: &mut M, data: &[Sample], epochs: usize, hp: &LocalTraining, rng: &mut R) -> Result<LossTally>
where
    M: Trainable + ?Sized,
    R: Rng + ?Sized,
{
    if data.is_empty() {
        return Err(Error::Empty("training shard"));
    }
    let mut order: Vec<usize> = Vec::with_capacity(data.len());
    let mut batch = Vec::with_capacity(hp.batch_size);
    let mut tally = LossTally::default();
    for _ in 0..epochs {
        // a fresh permutation per epoch, so splitting epochs across calls changes nothing
        order.clear();
        order.extend(0..data.len());
        order.shuffle(rng);
        for chunk in order.chunks(hp.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i]));
            let (loss, grad) = model.batch_loss_grad(&batch)?;
            hp.optimizer.step(model.params_mut(), &grad)?;
            model.check_invariants()?;
            tally.add(LossTally {
                total: loss * batch.len() as f64,
                samples: batch.len(),
            });
        }
    }
    Ok(tally)
}

/// Fraction of `test` whose argmax prediction equals the label.
pub fn evaluate<C: Classifier + ?Sized>(model: &C, test: &[Sample]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let mut correct = 0usize;
    for s in test {
        if model.predict(&s.features)? == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

pub const MLP_INPUTS: usize = 2;
pub const MLP_HIDDEN: usize = 4;
pub const MLP_OUTPUTS: usize = 2;
pub const MLP_PARAM_COUNT: usize =
    MLP_HIDDEN * MLP_INPUTS + MLP_HIDDEN + MLP_OUTPUTS * MLP_HIDDEN + MLP_OUTPUTS;

const W1: usize = 0;
const B1: usize = W1 + MLP_HIDDEN * MLP_INPUTS;
const W2: usize = B1 + MLP_HIDDEN;
const B2: usize = W2 + MLP_OUTPUTS * MLP_HIDDEN;

/// 2→4→2 perceptron with a tanh hidden layer.
///
/// Parameters are stored flat: hidden weights (row-major, one row per
/// hidden unit), hidden biases, output weights (one row per output),
/// output biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMlp {
    params: Vec<f64>,
}

impl ClassicalMlp {
    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        if params.len() != MLP_PARAM_COUNT {
            return Err(Error::LengthMismatch {
                what: "MLP parameters",
                expected: MLP_PARAM_COUNT,
                actual: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("MLP parameters"));
        }
        Ok(ClassicalMlp { params })
    }

    pub fn zeros() -> Self {
        ClassicalMlp {
            params: vec![0.0; MLP_PARAM_COUNT],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut params = vec![0.0; MLP_PARAM_COUNT];
        let limit1 = (6.0 / (MLP_INPUTS + MLP_HIDDEN) as f64).sqrt();
        let limit2 = (6.0 / (MLP_HIDDEN + MLP_OUTPUTS) as f64).sqrt();
        for w in &mut params[W1..B1] {
            *w = rng.random_range(-limit1..=limit1);
        }
        for w in &mut params[W2..B2] {
            *w = rng.random_range(-limit2..=limit2);
        }
        ClassicalMlp { params }
    }

    fn hidden(&self, x: &[f64; 2]) -> [f64; MLP_HIDDEN] {
        let p = &self.params;
        std::array::from_fn(|h| {
            let z = p[W1 + h * MLP_INPUTS] * x[0] + p[W1 + h * MLP_INPUTS + 1] * x[1] + p[B1 + h];
            z.tanh()
        })
    }

    fn output(&self, hidden: &[f64; MLP_HIDDEN]) -> [f64; 2] {
        let p = &self.params;
        std::array::from_fn(|o| {
            let row = &p[W2 + o * MLP_HIDDEN..W2 + (o + 1) * MLP_HIDDEN];
            row.iter().zip(hidden).map(|(w, a)| w * a).sum::<f64>() + p[B2 + o]
        })
    }

    /// Loss and backpropagated gradient for one labelled input.
    pub fn forward_backward(&self, features: &[f64; 2], label: usize) -> Result<(f64, Vec<f64>)> {
        if features.iter().any(|f| !f.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let p = &self.params;
        let hidden = self.hidden(features);
        let logits = self.output(&hidden);
        let (loss, dlogits) = loss_and_grad(&logits, label)?;

        let mut grad = vec![0.0; MLP_PARAM_COUNT];
        for o in 0..MLP_OUTPUTS {
            for h in 0..MLP_HIDDEN {
                grad[W2 + o * MLP_HIDDEN + h] = dlogits[o] * hidden[h];
            }
            grad[B2 + o] = dlogits[o];
        }
        for h in 0..MLP_HIDDEN {
            let dact: f64 = (0..MLP_OUTPUTS).map(|o| p[W2 + o * MLP_HIDDEN + h] * dlogits[o]).sum();
            let dz = dact * (1.0 - hidden[h] * hidden[h]);
            grad[W1 + h * MLP_INPUTS] = dz * features[0];
            grad[W1 + h * MLP_INPUTS + 1] = dz * features[1];
            grad[B1 + h] = dz;
        }
        Ok((loss, grad))
    }
}

impl Classifier for ClassicalMlp {
    fn logits(&self, features: &[f64; 2]) -> Result<[f64; 2]> {
        if features.iter().any(|f| !f.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        Ok(self.output(&self.hidden(features)))
    }
}

impl Trainable for ClassicalMlp {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn sample_loss_grad(&self, sample: &Sample) -> Result<(f64, Vec<f64>)> {
        self.forward_backward(&sample.features, sample.label)
    }
}

/// One row of the per-round metrics file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    /// Client whose parameters were evaluated (the hub id for hub-spoke).
    pub client_id: usize,
    pub mean_train_loss: f64,
    pub test_accuracy: f64,
    pub wall_ms: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_logits() {
        let (loss, grad) = loss_and_grad(&[0.0, 0.0], 0).unwrap();
        assert_abs_diff_eq!(loss, std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(grad[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(grad[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn extreme_logits_do_not_overflow() {
        let (loss, grad) = loss_and_grad(&[100.0, -100.0], 0).unwrap();
        assert!(loss.is_finite() && loss >= 0.0 && loss < 1e-80);
        assert!(grad.iter().all(|g| g.is_finite()));
        let (loss, _) = loss_and_grad(&[1000.0, -1000.0], 1).unwrap();
        assert_abs_diff_eq!(loss, 2000.0, epsilon = 1e-9);
    }

    #[test]
    fn loss_errors() {
        assert_eq!(loss_and_grad(&[0.0, 0.0], 2), Err(Error::InvalidLabel(2)));
        assert_eq!(loss_and_grad(&[f64::NAN, 0.0], 0), Err(Error::NonFinite("logits")));
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let eps = 1e-6;
        for _ in 0..50 {
            let logits = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let label = rng.random_range(0..2);
            let (loss, grad) = loss_and_grad(&logits, label).unwrap();
            assert!(loss >= 0.0);
            for k in 0..2 {
                let mut up = logits;
                up[k] += eps;
                let mut down = logits;
                down[k] -= eps;
                let fd = (loss_and_grad(&up, label).unwrap().0 - loss_and_grad(&down, label).unwrap().0) / (2.0 * eps);
                assert_abs_diff_eq!(grad[k], fd, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn sgd_step_is_exact() {
        let sgd = Sgd::new(0.1).unwrap();
        let mut p = vec![1.0, -2.0, 0.3];
        let before = p.clone();
        sgd.step(&mut p, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, before);
        let g = [0.5, -1.25, 3.0];
        sgd.step(&mut p, &g).unwrap();
        for i in 0..3 {
            assert_eq!(p[i].to_bits(), (before[i] - 0.1 * g[i]).to_bits());
        }
        assert!(sgd.step(&mut p, &[1.0]).is_err());
        assert!(Sgd::new(0.0).is_err());
        assert!(Sgd::new(f64::NAN).is_err());
    }

    #[test]
    fn mlp_shape() {
        assert_eq!(MLP_PARAM_COUNT, 22);
        assert!(ClassicalMlp::from_params(vec![0.0; 21]).is_err());
    }

    #[test]
    fn zero_weights_yield_bias_logits() {
        let mut params = vec![0.0; MLP_PARAM_COUNT];
        params[B2] = 0.7;
        params[B2 + 1] = -1.3;
        params[B1] = 5.0;
        let mlp = ClassicalMlp::from_params(params).unwrap();
        assert_eq!(mlp.logits(&[2.0, -3.0]).unwrap(), [0.7, -1.3]);
    }

    #[test]
    fn mlp_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let eps = 1e-5;
        for _ in 0..10 {
            let mut mlp = ClassicalMlp::random(&mut rng);
            for b in B1..W2 {
                mlp.params[b] = rng.random_range(-0.5..0.5);
            }
            let x = [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)];
            let label = rng.random_range(0..2);
            let (_, grad) = mlp.forward_backward(&x, label).unwrap();
            for i in 0..MLP_PARAM_COUNT {
                let mut plus = mlp.clone();
                plus.params[i] += eps;
                let mut minus = mlp.clone();
                minus.params[i] -= eps;
                let fd = (plus.forward_backward(&x, label).unwrap().0 - minus.forward_backward(&x, label).unwrap().0) / (2.0 * eps);
                assert_abs_diff_eq!(grad[i], fd, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn permuting_hidden_units_leaves_logits_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mlp = ClassicalMlp::random(&mut rng);
        let perm = [2usize, 0, 3, 1];
        let mut p = mlp.params.clone();
        for (new_h, &old_h) in perm.iter().enumerate() {
            p[W1 + new_h * 2] = mlp.params[W1 + old_h * 2];
            p[W1 + new_h * 2 + 1] = mlp.params[W1 + old_h * 2 + 1];
            p[B1 + new_h] = mlp.params[B1 + old_h];
            for o in 0..2 {
                p[W2 + o * MLP_HIDDEN + new_h] = mlp.params[W2 + o * MLP_HIDDEN + old_h];
            }
        }
        let permuted = ClassicalMlp::from_params(p).unwrap();
        for _ in 0..10 {
            let x = [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)];
            let a = mlp.logits(&x).unwrap();
            let b = permuted.logits(&x).unwrap();
            assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-12);
            assert_abs_diff_eq!(a[1], b[1], epsilon = 1e-12);
        }
    }

    struct Constant(usize);

    impl Classifier for Constant {
        fn logits(&self, _: &[f64; 2]) -> Result<[f64; 2]> {
            Ok(if self.0 == 0 { [1.0, 0.0] } else { [0.0, 1.0] })
        }
    }

    /// Looks up the label of a known point.
    struct Memorizer(Vec<Sample>);

    impl Classifier for Memorizer {
        fn logits(&self, x: &[f64; 2]) -> Result<[f64; 2]> {
            let s = self.0.iter().find(|s| s.features == *x).expect("memorized");
            Ok(if s.label == 0 { [1.0, 0.0] } else { [0.0, 1.0] })
        }
    }

    fn balanced(n: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| Sample {
                features: [i as f64, 0.0],
                label: i % 2,
            })
            .collect()
    }

    #[test]
    fn evaluate_examples() {
        let data = balanced(10);
        assert_eq!(evaluate(&Constant(0), &data).unwrap(), 0.5);
        assert_eq!(evaluate(&Constant(1), &data).unwrap(), 0.5);
        assert_eq!(evaluate(&Memorizer(data.clone()), &data).unwrap(), 1.0);
        assert_eq!(evaluate(&Constant(0), &[]), Err(Error::Empty("test set")));
    }

    #[test]
    fn ties_predict_class_zero() {
        let mlp = ClassicalMlp::zeros();
        assert_eq!(mlp.predict(&[1.0, 1.0]).unwrap(), 0);
    }

    #[test]
    fn single_batch_epoch_is_one_sgd_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = balanced(6);
        let mut mlp = ClassicalMlp::random(&mut rng);
        let initial = mlp.clone();
        let hp = LocalTraining::new(32, 0.1).unwrap();
        train_local(&mut mlp, &data, 1, &hp, &mut rng).unwrap();
        // the shuffle only reorders a single batch; gradient sum order aside,
        // the update equals one full-batch step
        let (_, grad) = initial.batch_loss_grad(&data).unwrap();
        for i in 0..MLP_PARAM_COUNT {
            assert_abs_diff_eq!(mlp.params[i], initial.params[i] - 0.1 * grad[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn train_local_reports_mean_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data = balanced(70);
        let mut mlp = ClassicalMlp::zeros();
        let tally = train_local(&mut mlp, &data, 2, &LocalTraining::default(), &mut rng).unwrap();
        assert_eq!(tally.samples, 140);
        // the first batch starts from all-zero logits
        assert!(tally.mean() > 0.0);
        assert!(train_local(&mut mlp, &[], 1, &LocalTraining::default(), &mut rng).is_err());
        assert!(LocalTraining::new(0, 0.1).is_err());
    }

    #[test]
    fn mlp_loss_decreases_on_separable_toy_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data: Vec<Sample> = (0..40)
            .map(|i| {
                let label = i % 2;
                let x = if label == 0 { 0.5 } else { 2.5 };
                Sample { features: [x + rng.random_range(-0.3..0.3), rng.random_range(0.0..3.0)], label }
            })
            .collect();
        let mut mlp = ClassicalMlp::random(&mut rng);
        let sgd = Sgd::default();
        let (first, _) = mlp.batch_loss_grad(&data).unwrap();
        for _ in 0..50 {
            let (_, g) = mlp.batch_loss_grad(&data).unwrap();
            sgd.step(mlp.params_mut(), &g).unwrap();
        }
        let (last, _) = mlp.batch_loss_grad(&data).unwrap();
        assert!(last < first, "{first} -> {last}");
    }
}
