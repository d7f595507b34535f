use std::borrow::Borrow;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::agent::Transition;
use crate::error::{Error, Result};

/// Hidden widths of the Q-network.
pub const HIDDEN_LAYERS: [usize; 3] = [200, 100, 40];

/// `c = a * b (+ c if accumulate)`, all row-major with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
    accumulate: bool,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(k == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert!(c.len() >= m * n);
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the asserts above bound every index dgemm touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Dense rectifier network. Parameters live in one flat vector, layer by
/// layer: the `out × in` row-major weight matrix followed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Same layout as [`QNetwork`]'s parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient(pub Vec<f64>);

impl Gradient {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Rescale so the Euclidean norm is at most `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f64) {
        let n = self.norm();
        if n > max_norm && n > 0.0 {
            let s = max_norm / n;
            self.0.iter_mut().for_each(|g| *g *= s);
        }
    }
}

/// How the squared TD errors of a minibatch are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossReduction {
    /// Plain sum over the batch.
    #[default]
    Sum,
    Mean,
}

struct LayerView {
    fan_in: usize,
    fan_out: usize,
    w: usize,
    b: usize,
}

impl QNetwork {
    /// He-initialized network: weights `N(0, 2 / fan_in)`, zero biases.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = QNetwork::zeros(dims)?;
        for l in net.layers() {
            let scale = (2.0 / l.fan_in as f64).sqrt();
            for w in &mut net.params[l.w..l.b] {
                let z: f64 = StandardNormal.sample(rng);
                *w = z * scale;
            }
        }
        Ok(net)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "network needs at least two non-zero layer widths, got {dims:?}"
            )));
        }
        let count = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(QNetwork {
            dims: dims.to_vec(),
            params: vec![0.0; count],
        })
    }

    /// Rebuild from a flat parameter vector.
    pub fn from_parts(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = QNetwork::zeros(dims)?;
        if params.len() != net.params.len() {
            return Err(Error::DimensionMismatch {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameter".into()));
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two layers")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layers(&self) -> Vec<LayerView> {
        let mut off = 0;
        self.dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let l = LayerView {
                    fan_in,
                    fan_out,
                    w: off,
                    b: off + fan_in * fan_out,
                };
                off = l.b + fan_out;
                l
            })
            .collect()
    }

    /// Activations of every layer for a row-major `batch × input_dim`
    /// block; entry 0 is the input, the last entry the linear output.
    fn forward_all(&self, input: &[f64], batch: usize) -> Vec<Vec<f64>> {
        let layers = self.layers();
        let last = layers.len() - 1;
        let mut acts = Vec::with_capacity(layers.len() + 1);
        acts.push(input.to_vec());
        for (i, l) in layers.iter().enumerate() {
            let bias = &self.params[l.b..l.b + l.fan_out];
            let mut z: Vec<f64> = bias
                .iter()
                .copied()
                .cycle()
                .take(batch * l.fan_out)
                .collect();
            gemm(
                batch,
                l.fan_in,
                l.fan_out,
                &acts[i],
                (l.fan_in, 1),
                &self.params[l.w..l.b],
                (1, l.fan_in),
                &mut z,
                true,
            );
            if i < last {
                z.iter_mut().for_each(|x| *x = x.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    /// Q-values for one state.
    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.forward_batch(state, 1)
    }

    /// Q-values for `batch` states stacked row-major.
    pub fn forward_batch(&self, states: &[f64], batch: usize) -> Result<Vec<f64>> {
        let d = self.input_dim();
        if states.len() != batch * d {
            return Err(Error::DimensionMismatch {
                expected: batch * d,
                got: states.len(),
            });
        }
        if states.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(self.forward_all(states, batch).pop().expect("output layer"))
    }

    /// Sum (or mean) of squared TD errors on the taken actions, and its
    /// gradient with respect to every parameter. `targets` are constants.
    pub fn loss_and_gradient<T: Borrow<Transition>>(
        &self,
        batch: &[T],
        targets: &[f64],
        reduction: LossReduction,
    ) -> Result<(f64, Gradient)> {
        let n = batch.len();
        if targets.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: targets.len(),
            });
        }
        let d = self.input_dim();
        let actions = self.output_dim();
        let mut states = Vec::with_capacity(n * d);
        for t in batch {
            let t = t.borrow();
            if t.state.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: t.state.len(),
                });
            }
            if t.action >= actions {
                return Err(Error::ActionOutOfRange {
                    index: t.action,
                    count: actions,
                });
            }
            states.extend_from_slice(&t.state);
        }

        let acts = self.forward_all(&states, n);
        let out = acts.last().expect("output layer");
        let scale = match reduction {
            LossReduction::Sum => 1.0,
            LossReduction::Mean => 1.0 / n.max(1) as f64,
        };
        let mut loss = 0.0;
        let mut delta = vec![0.0; n * actions];
        for (i, t) in batch.iter().enumerate() {
            let a = t.borrow().action;
            let err = targets[i] - out[i * actions + a];
            loss += err * err;
            delta[i * actions + a] = -2.0 * err * scale;
        }
        loss *= scale;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("loss {loss}")));
        }

        let mut grad = vec![0.0; self.params.len()];
        let layers = self.layers();
        for (i, l) in layers.iter().enumerate().rev() {
            let input = &acts[i];
            // dW = delta^T * input
            gemm(
                l.fan_out,
                n,
                l.fan_in,
                &delta,
                (1, l.fan_out),
                input,
                (l.fan_in, 1),
                &mut grad[l.w..l.b],
                false,
            );
            let db = &mut grad[l.b..l.b + l.fan_out];
            for row in delta.chunks(l.fan_out) {
                db.iter_mut().zip(row).for_each(|(g, d)| *g += d);
            }
            if i == 0 {
                break;
            }
            // back through the weights, then the rectifier of the layer below
            let mut below = vec![0.0; n * l.fan_in];
            gemm(
                n,
                l.fan_out,
                l.fan_in,
                &delta,
                (l.fan_out, 1),
                &self.params[l.w..l.b],
                (l.fan_in, 1),
                &mut below,
                false,
            );
            below.iter_mut().zip(input).for_each(|(g, &a)| {
                if a <= 0.0 {
                    *g = 0.0
                }
            });
            delta = below;
        }
        Ok((loss, Gradient(grad)))
    }
}

/// Q-network for `state_dim` inputs and `action_count` outputs with the
/// default 200/100/40 hidden layers.
pub fn init_params<R: Rng + ?Sized>(
    state_dim: usize,
    action_count: usize,
    rng: &mut R,
) -> Result<QNetwork> {
    let mut dims = vec![state_dim];
    dims.extend(HIDDEN_LAYERS);
    dims.push(action_count);
    QNetwork::new(&dims, rng)
}

/// Bootstrapped regression targets `r + discount * max_a Q_target(s', a)`;
/// terminal transitions keep just `r`.
pub fn td_targets<T: Borrow<Transition>>(
    batch: &[T],
    target: &QNetwork,
    discount: f64,
) -> Result<Vec<f64>> {
    let d = target.input_dim();
    let actions = target.output_dim();
    let live: Vec<usize> = (0..batch.len())
        .filter(|&i| !batch[i].borrow().terminal)
        .collect();
    let mut next = Vec::with_capacity(live.len() * d);
    for &i in &live {
        next.extend_from_slice(&batch[i].borrow().next_state);
    }
    let q = target.forward_batch(&next, live.len())?;
    let mut y: Vec<f64> = batch.iter().map(|t| t.borrow().reward).collect();
    for (row, &i) in q.chunks(actions).zip(&live) {
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        y[i] += discount * best;
    }
    Ok(y)
}

/// Frozen copy for target evaluation.
pub fn sync_target(params: &QNetwork) -> QNetwork {
    params.clone()
}
