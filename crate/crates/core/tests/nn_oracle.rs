//! Network forward/backward and Adam checked against independent reference
//! implementations written directly from the defining formulas.

use coverbot::nn::{
    adam_step, grad_check, masked_l2_grad, AdamState, DenseNet, Gradients, HIDDEN, INPUT, OUTPUT,
    PARAM_COUNT,
};
use coverbot::rng::SimRng;
use coverbot::world::Action;
use proptest::prelude::*;

fn random_input(rng: &mut SimRng) -> Vec<f64> {
    let mut x = vec![rng.unit()];
    x.extend((0..INPUT - 1).map(|_| rng.index(4) as f64 - 1.0));
    x
}

/// Plain nested-loop evaluation of relu(W1 x + b1) then W2 h + b2, reading
/// parameters through the flat layout rather than the accessors.
fn reference_forward(p: &[f64], x: &[f64]) -> [f64; OUTPUT] {
    let b1 = HIDDEN * INPUT;
    let w2 = b1 + HIDDEN;
    let b2 = w2 + OUTPUT * HIDDEN;
    let mut h = vec![0.0; HIDDEN];
    for (r, hr) in h.iter_mut().enumerate() {
        let mut z = p[b1 + r];
        for c in 0..INPUT {
            z += p[r * INPUT + c] * x[c];
        }
        *hr = z.max(0.0);
    }
    let mut q = [0.0; OUTPUT];
    for (a, qa) in q.iter_mut().enumerate() {
        let mut z = p[b2 + a];
        for (k, hk) in h.iter().enumerate() {
            z += p[w2 + a * HIDDEN + k] * hk;
        }
        *qa = z;
    }
    q
}

#[test]
fn parameter_count() {
    assert_eq!(PARAM_COUNT, 64 * 82 + 64 + 3 * 64 + 3);
}

#[test]
fn forward_matches_reference() {
    let mut rng = SimRng::new(77);
    for seed in 0..50 {
        let net = DenseNet::new(seed);
        let x = random_input(&mut rng);
        let got = net.q_values(&x);
        let want = reference_forward(net.params(), &x);
        for a in 0..OUTPUT {
            assert!((got[a] - want[a]).abs() <= 1e-12, "seed {seed} action {a}");
        }
    }
}

#[test]
fn post_relu_is_max_of_pre_activation() {
    let mut rng = SimRng::new(5);
    let net = DenseNet::new(6);
    for _ in 0..20 {
        let c = net.forward(&random_input(&mut rng));
        for h in 0..HIDDEN {
            assert_eq!(c.hidden[h], c.pre_activation[h].max(0.0));
        }
    }
}

#[test]
fn glorot_limits_and_zero_biases() {
    let net = DenseNet::new(3);
    let l1 = (6.0f64 / (82.0 + 64.0)).sqrt();
    let l2 = (6.0f64 / (64.0 + 3.0)).sqrt();
    assert!(net.layer1_weights().iter().all(|w| w.abs() <= l1));
    assert!(net.layer2_weights().iter().all(|w| w.abs() <= l2));
    assert!((0..HIDDEN).all(|h| net.b1(h) == 0.0));
    assert!((0..OUTPUT).all(|a| net.b2(a) == 0.0));
    assert_ne!(DenseNet::new(3), DenseNet::new(4));
}

#[test]
fn grad_check_over_random_cases() {
    let mut rng = SimRng::new(2024);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let net = DenseNet::new(1000 + case);
        let x = random_input(&mut rng);
        let action = Action::ALL[rng.index(3)];
        let target = rng.unit() * 4.0 - 2.0;
        worst = worst.max(grad_check(&net, &x, action, target));
    }
    assert!(worst < 1e-6, "max relative error {worst:e}");
}

#[test]
fn masked_rows_are_exactly_zero() {
    let mut rng = SimRng::new(8);
    let net = DenseNet::new(8);
    for _ in 0..1000 {
        let x = random_input(&mut rng);
        let action = Action::ALL[rng.index(3)];
        let cache = net.forward(&x);
        let (_, dq) = masked_l2_grad(&cache.q, action, rng.unit() * 10.0 - 5.0);
        let g = net.backward(&cache, &dq);
        for other in Action::ALL.into_iter().filter(|&a| a != action) {
            assert!(g.output_weight_row(other.index()).iter().all(|&v| v == 0.0));
            assert_eq!(g.output_bias()[other.index()], 0.0);
        }
    }
}

#[test]
fn masked_loss_values() {
    let (loss, g) = masked_l2_grad(&[1.0, 2.0, 3.0], Action::TurnLeft, 5.0);
    assert_eq!(loss, 9.0);
    assert_eq!(g, [0.0, -6.0, 0.0]);
}

/// Adam written out with explicit bias-correction powers.
fn reference_adam(theta: &mut [f64], grads: &[Vec<f64>], lr: f64) {
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    for (t, g) in grads.iter().enumerate() {
        let t = t as i32 + 1;
        for i in 0..theta.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let mh = m[i] / (1.0 - b1.powi(t));
            let vh = v[i] / (1.0 - b2.powi(t));
            theta[i] -= lr * mh / (vh.sqrt() + eps);
        }
    }
}

#[test]
fn adam_matches_reference() {
    let mut rng = SimRng::new(31);
    let grads: Vec<Vec<f64>> = (0..40)
        .map(|_| (0..6).map(|_| rng.unit() * 2.0 - 1.0).collect())
        .collect();
    let start: Vec<f64> = (0..6).map(|i| i as f64 * 0.1 - 0.2).collect();
    let mut expected = start.clone();
    reference_adam(&mut expected, &grads, 1e-3);
    let mut got = start;
    let mut adam = AdamState::new(6, 1e-3);
    for g in &grads {
        adam.step(&mut got, g).unwrap();
    }
    for (a, b) in got.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-14, "{a} vs {b}");
    }
    assert_eq!(adam.t(), 40);
    assert!(adam.second_moment().iter().all(|&v| v >= 0.0));
}

#[test]
fn zero_gradient_leaves_a_trained_net_unchanged() {
    let mut net = DenseNet::new(2);
    let mut adam = AdamState::for_net(2e-4);
    let g = Gradients(
        (0..PARAM_COUNT)
            .map(|i| ((i % 7) as f64 - 3.0) * 1e-2)
            .collect(),
    );
    adam_step(&mut net, &mut adam, &g).unwrap();
    // zero moments and zero gradient: no movement
    let mut fresh = AdamState::for_net(2e-4);
    let before = net.clone();
    adam_step(&mut net, &mut fresh, &Gradients::zeros()).unwrap();
    assert_eq!(net, before);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_is_pure(seed in any::<u64>(), xs in prop::collection::vec(-1.0f64..2.0, INPUT)) {
        let net = DenseNet::new(seed);
        prop_assert_eq!(net.forward(&xs), net.forward(&xs));
        let want = reference_forward(net.params(), &xs);
        let got = net.q_values(&xs);
        for a in 0..OUTPUT {
            prop_assert!((got[a] - want[a]).abs() <= 1e-12);
        }
    }

    #[test]
    fn grad_check_holds(seed in any::<u64>(), xs in prop::collection::vec(-1.0f64..2.0, INPUT),
                        a in 0usize..3, target in -3.0f64..3.0) {
        let net = DenseNet::new(seed);
        let err = grad_check(&net, &xs, Action::ALL[a], target);
        prop_assert!(err < 1e-6, "relative error {}", err);
    }

    #[test]
    fn adam_keeps_second_moment_non_negative(gs in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 1..30)) {
        let mut adam = AdamState::new(4, 1e-2);
        let mut theta = [0.0; 4];
        for (k, g) in gs.iter().enumerate() {
            adam.step(&mut theta, g).unwrap();
            prop_assert_eq!(adam.t(), k as u64 + 1);
            prop_assert!(adam.second_moment().iter().all(|&v| v >= 0.0));
            prop_assert!(theta.iter().all(|t| t.is_finite()));
        }
    }
}
