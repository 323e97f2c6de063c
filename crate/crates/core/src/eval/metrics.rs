use serde::{Deserialize, Serialize};

use crate::model::{Example, Gcae, ParamSet};
use crate::{Error, Result};

const EVAL_BATCH: usize = 256;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Counts indexed `[true label][predicted label]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(labels: &[usize], preds: &[usize], num_classes: usize) -> Result<Self> {
        if labels.len() != preds.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                found: preds.len(),
            });
        }
        let mut counts = vec![vec![0; num_classes]; num_classes];
        for (&y, &p) in labels.iter().zip(preds) {
            if y >= num_classes || p >= num_classes {
                return Err(Error::InvalidInput(format!(
                    "class {} outside 0..{num_classes}",
                    y.max(p)
                )));
            }
            counts[y][p] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    /// Per-class scores are 0 whenever their denominator is 0; the macro
    /// average runs over all `num_classes` classes.
    pub fn from_predictions(labels: &[usize], preds: &[usize], num_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("evaluation set"));
        }
        let confusion = ConfusionMatrix::new(labels, preds, num_classes)?;
        let c = &confusion.counts;
        let mut precision = Vec::with_capacity(num_classes);
        let mut recall = Vec::with_capacity(num_classes);
        let mut f1 = Vec::with_capacity(num_classes);
        for k in 0..num_classes {
            let tp = c[k][k];
            let predicted: usize = (0..num_classes).map(|y| c[y][k]).sum();
            let actual: usize = c[k].iter().sum();
            let p = ratio(tp, predicted);
            let r = ratio(tp, actual);
            precision.push(p);
            recall.push(r);
            f1.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
        }
        Ok(Metrics {
            accuracy: ratio(confusion.trace(), confusion.total()),
            macro_f1: f1.iter().sum::<f64>() / num_classes as f64,
            precision,
            recall,
            f1,
            confusion,
        })
    }
}

/// Eval-mode predictions of `params` on `data`, scored against its labels.
pub fn evaluate(model: &Gcae, params: &ParamSet, data: &[Example]) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut preds = Vec::with_capacity(data.len());
    for chunk in data.chunks(EVAL_BATCH) {
        preds.extend(model.predict(params, chunk)?.iter().map(|p| argmax(p)));
    }
    let labels: Vec<usize> = data.iter().map(|e| e.label).collect();
    Metrics::from_predictions(&labels, &preds, model.config().num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let m = Metrics::from_predictions(&[0, 1, 2, 0], &[0, 1, 1, 0], 3).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert!((m.macro_f1 - 5.0 / 9.0).abs() < 1e-12);
        assert_eq!(m.f1[2], 0.0);
        assert_eq!(m.confusion.total(), 4);
    }

    #[test]
    fn perfect_and_degenerate() {
        let labels = [0, 1, 2, 2, 1, 0];
        let m = Metrics::from_predictions(&labels, &labels, 3).unwrap();
        assert_eq!((m.accuracy, m.macro_f1), (1.0, 1.0));
        let m = Metrics::from_predictions(&labels, &[1; 6], 3).unwrap();
        assert!((m.accuracy - 1.0 / 3.0).abs() < 1e-15);
        assert!(Metrics::from_predictions(&[], &[], 3).is_err());
        assert!(Metrics::from_predictions(&[0], &[3], 3).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.1, 0.2, 0.7]), 2);
    }
}
