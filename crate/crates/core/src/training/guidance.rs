use crate::model::{softmax_backward, ParamSet, LOG_EPS};
use crate::{Error, Result};

/// Batch-mean terms of the guidance loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceLoss {
    /// `alpha * classification + (1 - alpha) * consistency`.
    pub total: f64,
    /// Cross-entropy of the guidance model against target labels.
    pub classification: f64,
    /// Summed squared difference of guidance and learner distributions.
    pub consistency: f64,
}

fn check_shapes(p_g: &[Vec<f64>], p_l: &[Vec<f64>], labels: &[usize]) -> Result<()> {
    if p_g.is_empty() {
        return Err(Error::Empty("batch"));
    }
    if p_g.len() != p_l.len() || p_g.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: p_g.len(),
            found: if p_g.len() != p_l.len() { p_l.len() } else { labels.len() },
        });
    }
    for ((g, l), &y) in p_g.iter().zip(p_l).zip(labels) {
        if g.len() != l.len() {
            return Err(Error::DimensionMismatch {
                expected: g.len(),
                found: l.len(),
            });
        }
        if y >= g.len() {
            return Err(Error::InvalidInput(format!("label {y} outside 0..{}", g.len())));
        }
    }
    Ok(())
}

pub fn guidance_loss(p_g: &[Vec<f64>], p_l: &[Vec<f64>], labels: &[usize], alpha: f64) -> Result<GuidanceLoss> {
    check_shapes(p_g, p_l, labels)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside [0, 1]")));
    }
    let n = p_g.len() as f64;
    let mut ce = 0.0;
    let mut sq = 0.0;
    for ((g, l), &y) in p_g.iter().zip(p_l).zip(labels) {
        ce -= g[y].max(LOG_EPS).ln();
        sq += g.iter().zip(l).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    let (classification, consistency) = (ce / n, sq / n);
    Ok(GuidanceLoss {
        total: alpha * classification + (1.0 - alpha) * consistency,
        classification,
        consistency,
    })
}

/// Gradient of the guidance loss with respect to the guidance model's
/// logits, with the learner's distribution held constant. With
/// `consistency = false` the loss is `alpha * classification` alone.
pub fn guidance_logit_grads(
    p_g: &[Vec<f64>],
    p_l: &[Vec<f64>],
    labels: &[usize],
    alpha: f64,
    consistency: bool,
) -> Result<Vec<Vec<f64>>> {
    check_shapes(p_g, p_l, labels)?;
    let scale = 1.0 / p_g.len() as f64;
    Ok(p_g
        .iter()
        .zip(p_l)
        .zip(labels)
        .map(|((g, l), &y)| {
            let mut dz: Vec<f64> = g.iter().map(|p| alpha * scale * p).collect();
            dz[y] -= alpha * scale;
            if consistency {
                let dp: Vec<f64> = g
                    .iter()
                    .zip(l)
                    .map(|(a, b)| (1.0 - alpha) * scale * 2.0 * (a - b))
                    .collect();
                for (z, r) in dz.iter_mut().zip(softmax_backward(g, &dp)) {
                    *z += r;
                }
            }
            dz
        })
        .collect())
}

/// `learner <- beta * learner + (1 - beta) * guidance`, elementwise.
pub fn ema_update_in_place(learner: &mut ParamSet, guidance: &ParamSet, beta: f64) -> Result<()> {
    learner.check_compatible(guidance)?;
    let step = 1.0 - beta;
    for (name, l) in learner.iter_mut() {
        let g = guidance.get(name).expect("checked compatible");
        for (li, &gi) in l.data_mut().iter_mut().zip(g.data()) {
            // Written as a step towards the target so equal values stay
            // bit-identical; the clamp holds the result inside the segment
            // when rounding would step past an endpoint.
            let (lo, hi) = if *li <= gi { (*li, gi) } else { (gi, *li) };
            *li = (*li + step * (gi - *li)).clamp(lo, hi);
        }
    }
    Ok(())
}

pub fn ema_update(learner: &ParamSet, guidance: &ParamSet, beta: f64) -> Result<ParamSet> {
    let mut out = learner.clone();
    ema_update_in_place(&mut out, guidance, beta)?;
    Ok(out)
}
