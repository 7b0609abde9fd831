//! Fully-connected surrogate `y_theta(t)` mapping normalized time to log-volume.
//!
//! Hidden layers use `tanh`, the output layer is affine. The derivative with
//! respect to the time input is carried forward as a tangent alongside every
//! activation (forward-mode dual numbers). Parameter gradients of any loss
//! in `(y, dy/dx)` are then obtained by reverse accumulation through both the
//! value and tangent programs, which covers the second-order terms the
//! physics residual needs.
//!
//! Parameters are stored flat, layer by layer, as `W` (row-major,
//! `out x in`) followed by `b`.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{inverse_softplus, sigmoid, softplus, sqrt, tanh};
use crate::rng::{seeded, stream};

pub const DEFAULT_LAYER_SIZES: [usize; 5] = [1, 64, 64, 64, 1];

/// Affine map of `[t_min, t_max]` onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeNormalizer {
    t_min: f64,
    t_max: f64,
}

impl TimeNormalizer {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_max > t_min) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::arg("time window must satisfy t_max > t_min"));
        }
        Ok(Self { t_min, t_max })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn span(&self) -> f64 {
        self.t_max - self.t_min
    }

    pub fn normalize(&self, t: f64) -> f64 {
        (t - self.t_min) / self.span()
    }

    /// `dx/dt` for the normalized input `x`.
    pub fn scale(&self) -> f64 {
        1.0 / self.span()
    }
}

/// Unconstrained kinetic coordinates; `alpha = softplus(raw_alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticReparam {
    pub raw_alpha: f64,
    pub raw_beta: f64,
}

impl KineticReparam {
    pub fn from_rates(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::arg("rates must be positive"));
        }
        Ok(Self {
            raw_alpha: inverse_softplus(alpha),
            raw_beta: inverse_softplus(beta),
        })
    }

    pub fn alpha(&self) -> f64 {
        softplus(self.raw_alpha)
    }

    pub fn beta(&self) -> f64 {
        softplus(self.raw_beta)
    }

    /// `(d alpha / d raw_alpha, d beta / d raw_beta)`.
    pub fn jacobian(&self) -> (f64, f64) {
        (sigmoid(self.raw_alpha), sigmoid(self.raw_beta))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateNetwork {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Offsets of one layer's weights and biases in the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct LayerSpan {
    n_in: usize,
    n_out: usize,
    w: usize,
    b: usize,
}

fn layer_spans(sizes: &[usize]) -> impl Iterator<Item = LayerSpan> + '_ {
    let mut offset = 0;
    sizes.windows(2).map(move |w| {
        let (n_in, n_out) = (w[0], w[1]);
        let span = LayerSpan {
            n_in,
            n_out,
            w: offset,
            b: offset + n_in * n_out,
        };
        offset += n_in * n_out + n_out;
        span
    })
}

pub fn parameter_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes[0] != 1 || sizes[sizes.len() - 1] != 1 || sizes.contains(&0) {
        return Err(Error::arg("layer sizes must start and end with 1 and contain no zero width"));
    }
    Ok(())
}

impl SurrogateNetwork {
    /// Glorot-uniform weights, `U(±sqrt(6 / (fan_in + fan_out)))`, zero biases.
    pub fn glorot(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let mut rng = seeded(seed, stream::NETWORK_INIT);
        let mut params = vec![0.0; parameter_count(layer_sizes)];
        for span in layer_spans(layer_sizes) {
            let limit = sqrt(6.0 / (span.n_in + span.n_out) as f64);
            for w in &mut params[span.w..span.b] {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params,
        })
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params: vec![0.0; parameter_count(layer_sizes)],
        })
    }

    pub fn from_params(layer_sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        check_sizes(layer_sizes)?;
        if params.len() != parameter_count(layer_sizes) {
            return Err(Error::arg("parameter count does not match layer sizes"));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Value and derivative with respect to the normalized input `x`.
    pub fn eval_with_tangent(&self, x: f64) -> (f64, f64) {
        let widest = self.layer_sizes.iter().copied().max().unwrap_or(1);
        let mut a = vec![0.0; widest];
        let mut da = vec![0.0; widest];
        let mut z = vec![0.0; widest];
        let mut dz = vec![0.0; widest];
        a[0] = x;
        da[0] = 1.0;
        let n_layers = self.layer_sizes.len() - 1;
        for (l, span) in layer_spans(&self.layer_sizes).enumerate() {
            let w = &self.params[span.w..span.b];
            let b = &self.params[span.b..span.b + span.n_out];
            for o in 0..span.n_out {
                let row = &w[o * span.n_in..(o + 1) * span.n_in];
                let mut acc = b[o];
                let mut dacc = 0.0;
                for i in 0..span.n_in {
                    acc += row[i] * a[i];
                    dacc += row[i] * da[i];
                }
                z[o] = acc;
                dz[o] = dacc;
            }
            let hidden = l + 1 < n_layers;
            for o in 0..span.n_out {
                if hidden {
                    let h = tanh(z[o]);
                    a[o] = h;
                    da[o] = (1.0 - h * h) * dz[o];
                } else {
                    a[o] = z[o];
                    da[o] = dz[o];
                }
            }
        }
        (a[0], da[0])
    }

    /// Predicted log-volume at raw time `t`.
    pub fn forward(&self, norm: &TimeNormalizer, t: f64) -> f64 {
        self.eval_with_tangent(norm.normalize(t)).0
    }

    /// `d y_theta / dt` with respect to raw time, including the `1/span` factor.
    pub fn time_derivative(&self, norm: &TimeNormalizer, t: f64) -> f64 {
        self.eval_with_tangent(norm.normalize(t)).1 * norm.scale()
    }
}

/// Batched evaluation record kept for the reverse pass.
///
/// Every activation matrix stacks the value rows (first `n`) on top of the
/// tangent rows (last `n`), so each layer is one GEMM in each direction.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    n: usize,
    /// Post-activation stacks, one per layer boundary (input included).
    acts: Vec<Vec<f64>>,
    /// Pre-activation tangents of each hidden layer (`n x width`).
    dz: Vec<Vec<f64>>,
    grad_a: Vec<f64>,
    grad_z: Vec<f64>,
}

impl Tape {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Network outputs for the batch.
    pub fn values(&self) -> &[f64] {
        let last = self.acts.last().expect("tape has been run");
        &last[..self.n]
    }

    /// Derivatives of the outputs with respect to the normalized input.
    pub fn tangents(&self) -> &[f64] {
        let last = self.acts.last().expect("tape has been run");
        &last[self.n..2 * self.n]
    }
}

/// `C (m x n) = beta*C + A (m x k) * B (k x n)`, with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: the callers pass slices whose lengths cover every index
    // reachable from the given shapes and strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl SurrogateNetwork {
    /// Evaluate the network and its input tangent at normalized inputs `xs`.
    pub fn forward_batch(&self, xs: &[f64], tape: &mut Tape) {
        let n = xs.len();
        let n_layers = self.layer_sizes.len() - 1;
        tape.n = n;
        tape.acts.resize_with(n_layers + 1, Vec::new);
        tape.dz.resize_with(n_layers, Vec::new);

        let input = &mut tape.acts[0];
        input.clear();
        input.extend_from_slice(xs);
        input.extend(core::iter::repeat_n(1.0, n));

        for (l, span) in layer_spans(&self.layer_sizes).enumerate() {
            let (done, rest) = tape.acts.split_at_mut(l + 1);
            let prev = &done[l];
            let out = &mut rest[0];
            out.resize(2 * n * span.n_out, 0.0);
            let w = &self.params[span.w..span.b];
            let b = &self.params[span.b..span.b + span.n_out];
            let k = span.n_in as isize;
            gemm(2 * n, span.n_in, span.n_out, prev, k, 1, w, 1, k, 0.0, out);
            let (values, tangents) = out.split_at_mut(n * span.n_out);
            for row in values.chunks_exact_mut(span.n_out) {
                for (z, bias) in row.iter_mut().zip(b) {
                    *z += bias;
                }
            }
            if l + 1 < n_layers {
                let dz = &mut tape.dz[l];
                dz.clear();
                dz.extend_from_slice(tangents);
                for (z, dz) in values.iter_mut().zip(tangents.iter_mut()) {
                    let h = tanh(*z);
                    *z = h;
                    *dz *= 1.0 - h * h;
                }
            }
        }
    }

    /// Accumulate into `grad` the parameter gradient of a loss whose partials
    /// with respect to the batch outputs are `grad_y` and, with respect to the
    /// normalized-input tangents, `grad_dy`. `tape` must come from
    /// [`Self::forward_batch`] on the current parameters.
    pub fn backward_batch(&self, tape: &mut Tape, grad_y: &[f64], grad_dy: &[f64], grad: &mut [f64]) {
        let n = tape.n;
        assert_eq!(grad_y.len(), n);
        assert_eq!(grad_dy.len(), n);
        assert_eq!(grad.len(), self.params.len());
        let spans: Vec<LayerSpan> = layer_spans(&self.layer_sizes).collect();
        let n_layers = spans.len();

        // Gradient with respect to the (stacked) output activations.
        let mut grad_a = core::mem::take(&mut tape.grad_a);
        let mut grad_z = core::mem::take(&mut tape.grad_z);
        grad_a.clear();
        grad_a.extend_from_slice(grad_y);
        grad_a.extend_from_slice(grad_dy);

        for l in (0..n_layers).rev() {
            let span = spans[l];
            let width = span.n_out;
            grad_z.resize(2 * n * width, 0.0);
            if l + 1 < n_layers {
                let acts = &tape.acts[l + 1];
                let dz = &tape.dz[l];
                let (ga, gda) = grad_a.split_at(n * width);
                let (gz, gdz) = grad_z.split_at_mut(n * width);
                let rows = acts[..n * width].iter().zip(dz.iter()).zip(ga.iter().zip(gda.iter()));
                for ((((h, dz), (ga, gda)), gz), gdz) in rows.zip(gz.iter_mut()).zip(gdz.iter_mut()) {
                    let s = 1.0 - h * h;
                    *gdz = s * gda;
                    *gz = s * (ga - 2.0 * h * dz * gda);
                }
            } else {
                grad_z.copy_from_slice(&grad_a);
            }

            let prev = &tape.acts[l];
            let k = span.n_in;
            // dL/dW (out x in) += G_z^T (out x 2n) * A_prev (2n x in)
            gemm(
                width,
                2 * n,
                k,
                &grad_z,
                1,
                width as isize,
                prev,
                k as isize,
                1,
                1.0,
                &mut grad[span.w..span.b],
            );
            let gb = &mut grad[span.b..span.b + width];
            for row in grad_z[..n * width].chunks_exact(width) {
                for (g, r) in gb.iter_mut().zip(row) {
                    *g += r;
                }
            }
            if l > 0 {
                // dL/dA_prev (2n x in) = G_z (2n x out) * W (out x in)
                grad_a.resize(2 * n * k, 0.0);
                let w = &self.params[span.w..span.b];
                gemm(
                    2 * n,
                    width,
                    k,
                    &grad_z,
                    width as isize,
                    1,
                    w,
                    k as isize,
                    1,
                    0.0,
                    &mut grad_a,
                );
            }
        }
        tape.grad_a = grad_a;
        tape.grad_z = grad_z;
    }
}
