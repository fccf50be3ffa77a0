use rand::Rng;

use crate::scalar::Scalar;

use super::AgentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
}

impl Activation {
    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    fn affine(&self, x: &[T]) -> Vec<T> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).fold(*b, |acc, (w, xi)| acc + *w * *xi))
            .collect()
    }
}

/// Multilayer perceptron with rectifier hidden units.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub layers: Vec<Layer<T>>,
    pub output: Activation,
}

/// Intermediate values of one forward pass, consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// Input of every layer.
    inputs: Vec<Vec<T>>,
    /// Pre-activation of every layer.
    pre: Vec<Vec<T>>,
    output: Vec<T>,
}

impl<T> ForwardCache<T> {
    pub fn output(&self) -> &[T] {
        &self.output
    }

    pub fn pre_activations(&self) -> &[Vec<T>] {
        &self.pre
    }
}

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<Vec<T>>,
}

impl<T: Scalar> MlpGradients<T> {
    pub fn zeros_like(net: &Mlp<T>) -> Self {
        Self {
            weights: net
                .layers
                .iter()
                .map(|l| vec![T::zero(); l.weights.len()])
                .collect(),
            bias: net
                .layers
                .iter()
                .map(|l| vec![T::zero(); l.bias.len()])
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.weights
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| w.iter().chain(b))
    }

    pub fn is_zero(&self) -> bool {
        self.iter().all(|g| *g == T::zero())
    }
}

impl<T: Scalar> Mlp<T> {
    /// Network with all-zero parameters; `sizes` lists input, hidden and output widths.
    pub fn zeros(sizes: &[usize], output: Activation) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        Self {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
            output,
        }
    }

    /// Uniform fan-in initialization; the last layer is drawn from
    /// `[-final_scale, final_scale]` so initial outputs start near zero.
    pub fn random<R: Rng + ?Sized>(
        sizes: &[usize],
        output: Activation,
        final_scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut net = Self::zeros(sizes, output);
        let last = net.layers.len() - 1;
        for (idx, layer) in net.layers.iter_mut().enumerate() {
            let bound = if idx == last {
                final_scale
            } else {
                1.0 / (layer.inputs as f64).sqrt()
            };
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = T::lit(rng.random_range(-bound..=bound));
            }
        }
        net
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    fn check_input(&self, x: &[T]) -> Result<(), AgentError> {
        if x.len() != self.input_dim() {
            return Err(AgentError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn activate(&self, idx: usize, z: &[T]) -> Vec<T> {
        if idx + 1 < self.layers.len() {
            z.iter().map(|v| v.max(T::zero())).collect()
        } else {
            match self.output {
                Activation::Identity => z.to_vec(),
                Activation::Tanh => z.iter().map(|v| v.tanh()).collect(),
            }
        }
    }

    /// Output only, without keeping intermediates.
    pub fn predict(&self, x: &[T]) -> Result<Vec<T>, AgentError> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&a);
            a = self.activate(idx, &z);
        }
        Ok(a)
    }

    pub fn forward(&self, x: &[T]) -> Result<ForwardCache<T>, AgentError> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&a);
            let next = self.activate(idx, &z);
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Ok(ForwardCache {
            inputs,
            pre,
            output: a,
        })
    }

    /// Reverse-mode pass. Adds parameter gradients into `grads` when given and
    /// returns the gradient with respect to the network input.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        upstream: &[T],
        mut grads: Option<&mut MlpGradients<T>>,
    ) -> Result<Vec<T>, AgentError> {
        if upstream.len() != self.output_dim() {
            return Err(AgentError::DimensionMismatch {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        if cache.pre.len() != self.layers.len()
            || cache
                .pre
                .iter()
                .zip(&self.layers)
                .any(|(p, l)| p.len() != l.outputs)
        {
            return Err(AgentError::DimensionMismatch {
                expected: self.layers.len(),
                got: cache.pre.len(),
            });
        }
        let last = self.layers.len() - 1;
        // gradient w.r.t. the pre-activation of the current layer
        let mut delta: Vec<T> = match self.output {
            Activation::Identity => upstream.to_vec(),
            Activation::Tanh => upstream
                .iter()
                .zip(&cache.output)
                .map(|(g, y)| *g * (T::one() - *y * *y))
                .collect(),
        };
        for idx in (0..=last).rev() {
            let layer = &self.layers[idx];
            let input = &cache.inputs[idx];
            if let Some(g) = grads.as_deref_mut() {
                let gw = &mut g.weights[idx];
                for (o, d) in delta.iter().enumerate() {
                    if *d == T::zero() {
                        continue;
                    }
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gwi, xi) in row.iter_mut().zip(input) {
                        *gwi += *d * *xi;
                    }
                }
                for (gb, d) in g.bias[idx].iter_mut().zip(&delta) {
                    *gb += *d;
                }
            }
            let mut dx = vec![T::zero(); layer.inputs];
            for (o, d) in delta.iter().enumerate() {
                if *d == T::zero() {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (dxi, w) in dx.iter_mut().zip(row) {
                    *dxi += *d * *w;
                }
            }
            if idx == 0 {
                return Ok(dx);
            }
            // rectifier of the previous layer
            delta = dx
                .iter()
                .zip(&cache.pre[idx - 1])
                .map(|(g, z)| if *z > T::zero() { *g } else { T::zero() })
                .collect();
        }
        unreachable!("network has at least one layer")
    }
}
