//! Test-set error measures.

use crate::dgp::{bayes_classifier, mean_function, DgpKind, Task, Trajectory};
use crate::error::{Error, Result};
use crate::net::{LossKind, Network};

/// Anything that maps a feature vector to a real prediction.
pub trait Predictor {
    fn input_dim(&self) -> usize;

    /// Prediction for one feature vector of length [`Predictor::input_dim`].
    fn predict(&self, x: &[f64]) -> f64;

    /// Predictions for every row of a trajectory, using the full feature vectors.
    fn predict_trajectory(&self, traj: &Trajectory) -> Vec<f64> {
        traj.rows().map(|x| self.predict(x)).collect()
    }
}

impl Predictor for Network {
    fn input_dim(&self) -> usize {
        self.architecture().input_dim()
    }

    fn predict(&self, x: &[f64]) -> f64 {
        self.forward(x).expect("input dimension checked by the caller")
    }

    fn predict_trajectory(&self, traj: &Trajectory) -> Vec<f64> {
        self.predict_rows(traj.features())
            .expect("input dimension checked by the caller")
    }
}

/// The true regression function of a process, as a predictor.
#[derive(Debug, Clone, Copy)]
pub struct TrueMean(pub DgpKind);

impl Predictor for TrueMean {
    fn input_dim(&self) -> usize {
        self.0.feature_dim()
    }

    fn predict(&self, x: &[f64]) -> f64 {
        mean_function(self.0, x).expect("dimension checked by the caller")
    }
}

/// The Bayes classifier of a binary process, as a predictor.
#[derive(Debug, Clone, Copy)]
pub struct BayesRule(pub DgpKind);

impl Predictor for BayesRule {
    fn input_dim(&self) -> usize {
        self.0.feature_dim()
    }

    fn predict(&self, x: &[f64]) -> f64 {
        bayes_classifier(self.0, x).expect("binary kind checked by the caller")
    }
}

/// Feeds a predictor trained on `(Y_{t-1}, .., Y_{t-lags}, x_{t-1})` from the full feature
/// rows of `kind`.
pub struct LagView<'a, P: Predictor + ?Sized> {
    pub inner: &'a P,
    pub lags: usize,
    pub kind: DgpKind,
}

impl<P: Predictor + ?Sized> Predictor for LagView<'_, P> {
    fn input_dim(&self) -> usize {
        self.kind.feature_dim()
    }

    fn predict(&self, x: &[f64]) -> f64 {
        let mut v = x[..self.lags].to_vec();
        v.push(x[x.len() - 1]);
        self.inner.predict(&v)
    }

    fn predict_trajectory(&self, traj: &Trajectory) -> Vec<f64> {
        traj.rows().map(|x| self.predict(x)).collect()
    }
}

fn check(pred: &(impl Predictor + ?Sized), test: &Trajectory, kind: DgpKind) -> Result<()> {
    if test.kind() != kind {
        return Err(Error::InvalidConfig(format!(
            "test trajectory is {} but evaluation requested {kind}",
            test.kind()
        )));
    }
    if test.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if pred.input_dim() != test.feature_dim() {
        return Err(Error::DimensionMismatch {
            layer: "predictor input".into(),
            expected: test.feature_dim(),
            got: pred.input_dim(),
        });
    }
    Ok(())
}

/// `(1/m) sum_t (h(X_t) - f(X_t))^2`: squared distance to the true regression function.
pub fn evaluate_l2(pred: &(impl Predictor + ?Sized), test: &Trajectory, kind: DgpKind) -> Result<f64> {
    check(pred, test, kind)?;
    let preds = pred.predict_trajectory(test);
    let total: f64 = test
        .rows()
        .zip(&preds)
        .map(|(x, &h)| {
            let f = mean_function(kind, x)?;
            Ok((h - f) * (h - f))
        })
        .sum::<Result<f64>>()?;
    Ok(total / test.len() as f64)
}

/// `(1/m) sum_t (h(X_t) - Y_t)^2`: test mean squared error against the noisy targets.
pub fn evaluate_test_mse(
    pred: &(impl Predictor + ?Sized),
    test: &Trajectory,
    kind: DgpKind,
) -> Result<f64> {
    check(pred, test, kind)?;
    let preds = pred.predict_trajectory(test);
    let total: f64 = preds
        .iter()
        .zip(test.targets())
        .map(|(&h, &y)| LossKind::Square.value(y, h))
        .sum();
    Ok(total / test.len() as f64)
}

/// `(1/m) sum_t [hinge(Y_t h(X_t)) - hinge(Y_t h*(X_t))]` with `h*` the Bayes classifier.
pub fn evaluate_excess_risk(
    pred: &(impl Predictor + ?Sized),
    test: &Trajectory,
    kind: DgpKind,
) -> Result<f64> {
    check(pred, test, kind)?;
    if kind.task() != Task::Binary {
        return Err(Error::WrongTask {
            kind: kind.name().into(),
            task: kind.task().name(),
            required: Task::Binary.name(),
        });
    }
    let preds = pred.predict_trajectory(test);
    let total: f64 = test
        .rows()
        .zip(test.targets())
        .zip(&preds)
        .map(|((x, &y), &h)| {
            let bayes = bayes_classifier(kind, x)?;
            Ok(LossKind::Hinge.value(y, h) - LossKind::Hinge.value(y, bayes))
        })
        .sum::<Result<f64>>()?;
    Ok(total / test.len() as f64)
}
