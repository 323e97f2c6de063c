mod common;

use common::tiny_model;
use rand::rngs::mock::StepRng;
use uika_core::model::{Gcae, Mode};
use uika_core::rng::SeedStream;

#[test]
fn dropout_preserves_expected_features() {
    let (cfg, params, batch) = tiny_model(3, 1);
    let model = Gcae::new(cfg).unwrap();
    let eval = model.forward(&params, &batch, Mode::Eval, &mut StepRng::new(0, 0)).unwrap();
    let mut rng = SeedStream::new(3).rng("dropout expectation");
    let draws = 4000;
    let dim = eval.features(0).len();
    let mut sums = vec![vec![0.0; dim]; batch.len()];
    for _ in 0..draws {
        let fwd = model.forward(&params, &batch, Mode::Train, &mut rng).unwrap();
        for (i, s) in sums.iter_mut().enumerate() {
            for (a, x) in s.iter_mut().zip(fwd.features(i)) {
                *a += x;
            }
        }
    }
    let mut checked = 0;
    for (i, s) in sums.iter().enumerate() {
        let want: f64 = eval.features(i).iter().map(|x| x.abs()).sum();
        // An example whose gates are all closed has nothing to drop.
        if want < 1e-6 {
            continue;
        }
        checked += 1;
        let got: f64 = s.iter().map(|x| x.abs() / draws as f64).sum();
        let mean_dev: f64 = s
            .iter()
            .zip(eval.features(i))
            .map(|(a, e)| (a / draws as f64 - e).abs())
            .sum();
        assert!((got - want).abs() / want < 0.05, "example {i}: {got} vs {want}");
        assert!(mean_dev / want < 0.05, "example {i}: deviation {mean_dev} of {want}");
    }
    assert!(checked >= 2, "only {checked} examples with active features");
}
