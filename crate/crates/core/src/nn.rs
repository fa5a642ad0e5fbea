//! A two-layer dense Q-network with hand-written backpropagation and Adam.
//!
//! The network maps an 82-element state vector to three action values:
//!
//! ```text
//! hidden = relu(W1 · x + b1)      W1: 64 × 82
//! q      = W2 · hidden + b2       W2:  3 × 64
//! ```
//!
//! All parameters live in one flat `Vec<f64>` in the order W1 (row-major),
//! b1, W2 (row-major), b2. Gradients and both Adam moment vectors use the
//! same order, which is also the order of the checkpoint file.

use thiserror::Error;

use crate::rng::SimRng;
use crate::world::Action;

pub const INPUT: usize = 82;
pub const HIDDEN: usize = 64;
pub const OUTPUT: usize = Action::COUNT;

const W1: usize = 0;
const B1: usize = W1 + HIDDEN * INPUT;
const W2: usize = B1 + HIDDEN;
const B2: usize = W2 + OUTPUT * HIDDEN;
pub const PARAM_COUNT: usize = B2 + OUTPUT;

pub type QValues = [f64; OUTPUT];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("parameter {index} became non-finite ({value}) after an update")]
    NonFinite { index: usize, value: f64 },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    params: Vec<f64>,
}

/// Intermediate values of one forward pass, needed by [`DenseNet::backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub pre_activation: [f64; HIDDEN],
    pub hidden: [f64; HIDDEN],
    pub q: QValues,
}

/// Loss gradient for every parameter, in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl Gradients {
    pub fn zeros() -> Self {
        Gradients(vec![0.0; PARAM_COUNT])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Rows of the output-layer weight gradient, one per action.
    pub fn output_weight_row(&self, action: usize) -> &[f64] {
        &self.0[W2 + action * HIDDEN..W2 + (action + 1) * HIDDEN]
    }

    pub fn output_bias(&self) -> &[f64] {
        &self.0[B2..B2 + OUTPUT]
    }
}

impl DenseNet {
    /// Glorot-uniform weights, zero biases.
    pub fn new(seed: u64) -> Self {
        let mut rng = SimRng::new(seed);
        let mut params = vec![0.0; PARAM_COUNT];
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[range] {
                *p = (2.0 * rng.unit() - 1.0) * limit;
            }
        };
        fill(W1..B1, INPUT, HIDDEN);
        fill(W2..B2, HIDDEN, OUTPUT);
        Self { params }
    }

    pub fn zeros() -> Self {
        Self {
            params: vec![0.0; PARAM_COUNT],
        }
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self, NnError> {
        if params.len() != PARAM_COUNT {
            return Err(NnError::Length {
                expected: PARAM_COUNT,
                got: params.len(),
            });
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn w1(&self, h: usize, i: usize) -> f64 {
        self.params[W1 + h * INPUT + i]
    }

    pub fn b1(&self, h: usize) -> f64 {
        self.params[B1 + h]
    }

    pub fn w2(&self, a: usize, h: usize) -> f64 {
        self.params[W2 + a * HIDDEN + h]
    }

    pub fn b2(&self, a: usize) -> f64 {
        self.params[B2 + a]
    }

    pub fn set_w1(&mut self, h: usize, i: usize, v: f64) {
        self.params[W1 + h * INPUT + i] = v;
    }

    pub fn set_b1(&mut self, h: usize, v: f64) {
        self.params[B1 + h] = v;
    }

    pub fn set_w2(&mut self, a: usize, h: usize, v: f64) {
        self.params[W2 + a * HIDDEN + h] = v;
    }

    pub fn set_b2(&mut self, a: usize, v: f64) {
        self.params[B2 + a] = v;
    }

    pub fn layer1_weights(&self) -> &[f64] {
        &self.params[W1..B1]
    }

    pub fn layer2_weights(&self) -> &[f64] {
        &self.params[W2..B2]
    }

    /// Q-values only.
    pub fn q_values(&self, x: &[f64]) -> QValues {
        self.forward(x).q
    }

    pub fn forward(&self, x: &[f64]) -> ForwardCache {
        assert_eq!(x.len(), INPUT, "network input must have {INPUT} elements");
        let mut pre = [0.0; HIDDEN];
        let mut hidden = [0.0; HIDDEN];
        for h in 0..HIDDEN {
            let row = &self.params[W1 + h * INPUT..W1 + (h + 1) * INPUT];
            let z = row
                .iter()
                .zip(x)
                .fold(self.b1(h), |acc, (w, xi)| acc + w * xi);
            pre[h] = z;
            hidden[h] = if z > 0.0 { z } else { 0.0 };
        }
        let mut q = [0.0; OUTPUT];
        for (a, qa) in q.iter_mut().enumerate() {
            let row = &self.params[W2 + a * HIDDEN..W2 + (a + 1) * HIDDEN];
            *qa = row
                .iter()
                .zip(&hidden)
                .fold(self.b2(a), |acc, (w, hv)| acc + w * hv);
        }
        ForwardCache {
            input: x.to_vec(),
            pre_activation: pre,
            hidden,
            q,
        }
    }

    /// Gradient of the loss with respect to every parameter, given the
    /// gradient with respect to the Q-values. ReLU's derivative at 0 is 0.
    pub fn backward(&self, cache: &ForwardCache, dq: &QValues) -> Gradients {
        let mut g = vec![0.0; PARAM_COUNT];
        let mut d_hidden = [0.0; HIDDEN];
        for a in 0..OUTPUT {
            g[B2 + a] = dq[a];
            for h in 0..HIDDEN {
                g[W2 + a * HIDDEN + h] = dq[a] * cache.hidden[h];
                d_hidden[h] += self.w2(a, h) * dq[a];
            }
        }
        for h in 0..HIDDEN {
            let d_pre = if cache.pre_activation[h] > 0.0 {
                d_hidden[h]
            } else {
                0.0
            };
            g[B1 + h] = d_pre;
            let row = &mut g[W1 + h * INPUT..W1 + (h + 1) * INPUT];
            for (gw, xi) in row.iter_mut().zip(&cache.input) {
                *gw = d_pre * xi;
            }
        }
        Gradients(g)
    }
}

/// Squared error on the chosen action only. Returns the loss and its gradient
/// with respect to the Q-values, which is zero for the other actions.
pub fn masked_l2_grad(q: &QValues, action: Action, target: f64) -> (f64, QValues) {
    let a = action.index();
    let diff = q[a] - target;
    let mut grad = [0.0; OUTPUT];
    grad[a] = 2.0 * diff;
    (diff * diff, grad)
}

/// Adam optimiser state for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: u64,
    beta1_pow: f64,
    beta2_pow: f64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub const DEFAULT_LEARNING_RATE: f64 = 2e-4;

    pub fn new(len: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            beta1_pow: 1.0,
            beta2_pow: 1.0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    /// State sized for [`DenseNet`].
    pub fn for_net(learning_rate: f64) -> Self {
        Self::new(PARAM_COUNT, learning_rate)
    }

    /// Rebuilds a state from stored moments and step count.
    pub fn from_parts(
        learning_rate: f64,
        m: Vec<f64>,
        v: Vec<f64>,
        t: u64,
    ) -> Result<Self, NnError> {
        if m.len() != v.len() {
            return Err(NnError::Length {
                expected: m.len(),
                got: v.len(),
            });
        }
        let mut state = Self::new(m.len(), learning_rate);
        state.m = m;
        state.v = v;
        // powers are accumulated by repeated multiplication, exactly as step() does
        for _ in 0..t {
            state.beta1_pow *= state.beta1;
            state.beta2_pow *= state.beta2;
        }
        state.t = t;
        Ok(state)
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// One Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NnError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::Length {
                expected: self.m.len(),
                got: params.len().min(grads.len()),
            });
        }
        self.t += 1;
        self.beta1_pow *= self.beta1;
        self.beta2_pow *= self.beta2;
        let c1 = 1.0 - self.beta1_pow;
        let c2 = 1.0 - self.beta2_pow;
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = flush_subnormal(self.beta1 * self.m[i] + (1.0 - self.beta1) * g);
            self.v[i] = flush_subnormal(self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g);
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        match params.iter().position(|p| !p.is_finite()) {
            Some(index) => Err(NnError::NonFinite {
                index,
                value: params[index],
            }),
            None => Ok(()),
        }
    }
}

/// Moments of parameters that stop receiving gradient decay geometrically
/// into the subnormal range, where arithmetic is very slow on most CPUs.
/// Their contribution is below any representable update, so they are zeroed.
fn flush_subnormal(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}

/// Applies one Adam update to the network.
pub fn adam_step(
    net: &mut DenseNet,
    adam: &mut AdamState,
    grads: &Gradients,
) -> Result<(), NnError> {
    adam.step(net.params_mut(), grads.as_slice())
}

/// Gradients smaller than this in every component count as zero in
/// [`grad_check`]; central differences with h = 1e-5 cannot resolve them.
pub const GRAD_NOISE_FLOOR: f64 = 1e-9;

/// Compares backprop against central differences (h = 1e-5) on every
/// parameter for the loss `masked_l2(forward(x), action, target)`.
///
/// The error is `max_i |analytic_i − numeric_i| / max(‖analytic‖∞, ‖numeric‖∞)`,
/// defined as 0 when both gradients are below the difference quotient's
/// resolution ([`GRAD_NOISE_FLOOR`]).
pub fn grad_check(net: &DenseNet, x: &[f64], action: Action, target: f64) -> f64 {
    grad_check_with(net, x, action, target, |n, cache, dq| n.backward(cache, dq))
}

/// [`grad_check`] with a caller-supplied backward pass.
pub fn grad_check_with<F>(
    net: &DenseNet,
    x: &[f64],
    action: Action,
    target: f64,
    backward: F,
) -> f64
where
    F: Fn(&DenseNet, &ForwardCache, &QValues) -> Gradients,
{
    const H: f64 = 1e-5;
    let cache = net.forward(x);
    let (_, dq) = masked_l2_grad(&cache.q, action, target);
    let analytic = backward(net, &cache, &dq);

    let loss_at = |n: &DenseNet| masked_l2_grad(&n.q_values(x), action, target).0;
    let mut probe = net.clone();
    let mut numeric = vec![0.0; PARAM_COUNT];
    for (i, slot) in numeric.iter_mut().enumerate() {
        let original = probe.params[i];
        probe.params[i] = original + H;
        let up = loss_at(&probe);
        probe.params[i] = original - H;
        let down = loss_at(&probe);
        probe.params[i] = original;
        *slot = (up - down) / (2.0 * H);
    }

    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = max_abs(analytic.as_slice()).max(max_abs(&numeric));
    if scale < GRAD_NOISE_FLOOR {
        return 0.0;
    }
    let worst = analytic
        .as_slice()
        .iter()
        .zip(&numeric)
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    worst / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_input(rng: &mut SimRng) -> Vec<f64> {
        (0..INPUT).map(|_| rng.below(4) as f64 - 1.0).collect()
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = DenseNet::new(3);
        assert_eq!(a, DenseNet::new(3));
        assert_ne!(a, DenseNet::new(4));
        let bound = (6.0f64 / 146.0).sqrt();
        assert!(a.layer1_weights().iter().all(|w| w.abs() <= bound));
        let bound2 = (6.0f64 / 67.0).sqrt();
        assert!(a.layer2_weights().iter().all(|w| w.abs() <= bound2));
        assert!((0..HIDDEN).all(|h| a.b1(h) == 0.0));
        assert_eq!(PARAM_COUNT, 64 * 82 + 64 + 3 * 64 + 3);
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = DenseNet::zeros();
        let mut rng = SimRng::new(1);
        assert_eq!(net.q_values(&random_input(&mut rng)), [0.0; 3]);
    }

    #[test]
    fn single_hidden_unit_hand_case() {
        let mut net = DenseNet::zeros();
        net.set_w1(0, 1, 1.0);
        net.set_w2(0, 0, 1.0);
        let mut x = vec![0.0; INPUT];
        x[1] = 2.0;
        assert_eq!(net.q_values(&x), [2.0, 0.0, 0.0]);
        // negative input is cut by the ReLU
        x[1] = -2.0;
        assert_eq!(net.q_values(&x), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn masked_loss_examples() {
        let q = [1.0, 2.0, 3.0];
        assert_eq!(
            masked_l2_grad(&q, Action::Forward, 1.0),
            (0.0, [0.0, 0.0, 0.0])
        );
        assert_eq!(
            masked_l2_grad(&q, Action::TurnRight, 5.0),
            (4.0, [0.0, 0.0, -4.0])
        );
    }

    #[test]
    fn zero_output_gradient_gives_zero_parameter_gradient() {
        let net = DenseNet::new(8);
        let mut rng = SimRng::new(2);
        let cache = net.forward(&random_input(&mut rng));
        let g = net.backward(&cache, &[0.0; 3]);
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dead_hidden_unit_passes_no_gradient() {
        let mut net = DenseNet::new(9);
        net.set_b1(5, -1e6);
        let mut rng = SimRng::new(3);
        let cache = net.forward(&random_input(&mut rng));
        assert!(cache.pre_activation[5] < 0.0);
        let g = net.backward(&cache, &[1.0, -2.0, 0.5]);
        assert_eq!(g.as_slice()[B1 + 5], 0.0);
        assert!((0..INPUT).all(|i| g.as_slice()[W1 + 5 * INPUT + i] == 0.0));
    }

    #[test]
    fn grad_check_passes_and_catches_a_sign_flip() {
        let net = DenseNet::new(10);
        let mut rng = SimRng::new(4);
        let x = random_input(&mut rng);
        assert!(grad_check(&net, &x, Action::TurnLeft, 0.7) < 1e-6);
        let flipped = grad_check_with(&net, &x, Action::TurnLeft, 0.7, |n, c, dq| {
            let mut g = n.backward(c, dq);
            g.0.iter_mut().for_each(|v| *v = -*v);
            g
        });
        assert!(flipped > 0.1, "{flipped}");
    }

    #[test]
    fn grad_check_zero_loss_is_zero() {
        let net = DenseNet::new(12);
        let x = vec![0.5; INPUT];
        let q = net.q_values(&x);
        assert_eq!(grad_check(&net, &x, Action::Forward, q[0]), 0.0);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut adam = AdamState::new(1, 0.1);
        let mut theta = [1.0];
        adam.step(&mut theta, &[1.0]).unwrap();
        assert!((theta[0] - 0.9).abs() < 1e-8);
        assert_eq!(adam.t(), 1);
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let mut net = DenseNet::new(5);
        let before = net.clone();
        let mut adam = AdamState::for_net(2e-4);
        adam_step(&mut net, &mut adam, &Gradients::zeros()).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn adam_step_size_is_bounded_under_constant_gradient() {
        let lr = 0.01;
        let mut adam = AdamState::new(1, lr);
        let mut theta = [0.0];
        for _ in 0..100 {
            let before = theta[0];
            adam.step(&mut theta, &[3.5]).unwrap();
            assert!((theta[0] - before).abs() <= lr * (1.0 + 1e-8));
        }
    }

    #[test]
    fn adam_reports_non_finite_parameters() {
        let mut adam = AdamState::new(2, 0.1);
        let mut theta = [0.0, f64::INFINITY];
        let err = adam.step(&mut theta, &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, NnError::NonFinite { index: 1, .. }));
    }

    #[test]
    fn adam_from_parts_resumes_identically() {
        let mut a = AdamState::new(3, 0.05);
        let mut pa = [0.1, -0.2, 0.3];
        for k in 0..7 {
            a.step(&mut pa, &[1.0, k as f64, -0.5]).unwrap();
        }
        let mut b = AdamState::from_parts(
            0.05,
            a.first_moment().to_vec(),
            a.second_moment().to_vec(),
            a.t(),
        )
        .unwrap();
        let mut pb = pa;
        a.step(&mut pa, &[0.3, 0.3, 0.3]).unwrap();
        b.step(&mut pb, &[0.3, 0.3, 0.3]).unwrap();
        assert_eq!(pa, pb);
    }
}
