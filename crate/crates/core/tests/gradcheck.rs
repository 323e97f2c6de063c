mod common;

use common::{finite_difference_check, tiny_model};
use rand::rngs::mock::StepRng;
use uika_core::model::{Gcae, Mode};

#[test]
fn cross_entropy_gradients_match_finite_differences() {
    for (classes, seed) in [(2, 1), (3, 2), (3, 3)] {
        let (cfg, params, batch) = tiny_model(classes, seed);
        let model = Gcae::new(cfg).unwrap();
        let mut rng = StepRng::new(0, 0);
        let (_, grads) = model.ce_loss_and_grad(&params, &batch, Mode::Eval, &mut rng).unwrap();
        let report = finite_difference_check(&params, &grads, |p| {
            model.ce_loss_and_grad(p, &batch, Mode::Eval, &mut StepRng::new(0, 0)).unwrap().0
        });
        assert!(report.checked > 400);
        assert!(
            report.failures.is_empty(),
            "worst {} = {:e}\n{}",
            report.worst_name,
            report.worst_rel,
            report.failures.join("\n")
        );
        eprintln!("classes={classes}: {} values, worst rel {:e} at {}", report.checked, report.worst_rel, report.worst_name);
    }
}

#[test]
fn dropout_gradients_use_the_forward_mask() {
    let (cfg, params, batch) = tiny_model(3, 4);
    let model = Gcae::new(cfg).unwrap();
    let seeded = || uika_core::rng::SeedStream::new(11).rng("dropout");
    let (_, grads) = model.ce_loss_and_grad(&params, &batch, Mode::Train, &mut seeded()).unwrap();
    let report = finite_difference_check(&params, &grads, |p| {
        model.ce_loss_and_grad(p, &batch, Mode::Train, &mut seeded()).unwrap().0
    });
    assert!(report.failures.is_empty(), "{}", report.failures.join("\n"));
}

#[test]
fn guidance_loss_gradients_match_finite_differences() {
    use uika_core::training::{guidance_logit_grads, guidance_loss};
    let (cfg, params, batch) = tiny_model(3, 5);
    let (_, learner, _) = tiny_model(3, 105);
    let model = Gcae::new(cfg).unwrap();
    let labels: Vec<usize> = batch.iter().map(|e| e.label).collect();
    let p_l = model.predict(&learner, &batch).unwrap();
    for (alpha, consistency) in [(10.0 / 11.0, true), (0.3, true), (0.0, true), (0.7, false)] {
        let objective = |p: &uika_core::model::ParamSet| {
            let probs = model.predict(p, &batch).unwrap();
            let t = guidance_loss(&probs, &p_l, &labels, alpha).unwrap();
            if consistency {
                t.total
            } else {
                alpha * t.classification
            }
        };
        let fwd = model.forward(&params, &batch, Mode::Eval, &mut StepRng::new(0, 0)).unwrap();
        let d = guidance_logit_grads(&fwd.probs, &p_l, &labels, alpha, consistency).unwrap();
        let grads = model.backward(&params, &fwd, &d).unwrap();
        let report = finite_difference_check(&params, &grads, objective);
        assert!(
            report.failures.is_empty(),
            "alpha={alpha} consistency={consistency}: {}",
            report.failures.join("\n")
        );
    }
}
