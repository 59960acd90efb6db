use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::params::{ParamId, ParameterSet, Real};
use crate::error::{Error, Result};
use crate::rng::LabRng;

/// Input of a layer: either a dense vector or a binary vector given by the
/// positions of its ones.
#[derive(Debug, Clone, Copy)]
pub enum Input<'a, T> {
    Dense(&'a [T]),
    Binary { dim: usize, active: &'a [u32] },
}

impl<T: Real> Input<'_, T> {
    pub fn dim(&self) -> usize {
        match self {
            Input::Dense(x) => x.len(),
            Input::Binary { dim, .. } => *dim,
        }
    }

    fn validate(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::Shape {
                expected,
                got: self.dim(),
            });
        }
        if let Input::Binary { dim, active } = self {
            if let Some(&bad) = active.iter().find(|&&i| i as usize >= *dim) {
                return Err(Error::Usage(format!(
                    "active index {bad} outside input of size {dim}"
                )));
            }
        }
        Ok(())
    }
}

/// Fully connected layer. The weight array has shape `[inputs, outputs]` so
/// that row `i` holds the fan-out of input `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    /// Fan-in scaled uniform weights in `±1/sqrt(inputs)`, zero biases.
    pub fn new<T: Real>(
        params: &mut ParameterSet<T>,
        name: &str,
        inputs: usize,
        outputs: usize,
        rng: &mut LabRng,
    ) -> Self {
        let bound = 1.0 / num_traits::Float::sqrt(inputs.max(1) as f64);
        let w: Vec<T> = (0..inputs * outputs)
            .map(|_| T::of(rng.gen_range(-bound..bound)))
            .collect();
        let weight = params.add(format!("{name}.weight"), vec![inputs, outputs], w);
        let bias = params.add(format!("{name}.bias"), vec![outputs], vec![T::zero(); outputs]);
        Self {
            weight,
            bias,
            inputs,
            outputs,
        }
    }

    pub fn forward<T: Real>(&self, params: &ParameterSet<T>, input: Input<'_, T>, out: &mut [T]) {
        let w = params.get(self.weight);
        let n = self.outputs;
        out.copy_from_slice(params.get(self.bias));
        match input {
            Input::Dense(x) => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi != T::zero() {
                        axpy(xi, &w[i * n..(i + 1) * n], out);
                    }
                }
            }
            Input::Binary { active, .. } => {
                for &i in active {
                    let i = i as usize;
                    add_assign(out, &w[i * n..(i + 1) * n]);
                }
            }
        }
    }

    /// Accumulates parameter gradients for one sample and, when `dx` is
    /// given, writes the gradient with respect to the (dense) input.
    pub fn backward<T: Real>(
        &self,
        params: &ParameterSet<T>,
        input: Input<'_, T>,
        dout: &[T],
        grads: &mut ParameterSet<T>,
        dx: Option<&mut [T]>,
    ) {
        let n = self.outputs;
        add_assign(grads.get_mut(self.bias), dout);
        let gw = grads.get_mut(self.weight);
        match input {
            Input::Dense(x) => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi != T::zero() {
                        axpy(xi, dout, &mut gw[i * n..(i + 1) * n]);
                    }
                }
            }
            Input::Binary { active, .. } => {
                for &i in active {
                    let i = i as usize;
                    add_assign(&mut gw[i * n..(i + 1) * n], dout);
                }
            }
        }
        if let Some(dx) = dx {
            let w = params.get(self.weight);
            for (i, d) in dx.iter_mut().enumerate() {
                *d = dot(&w[i * n..(i + 1) * n], dout);
            }
        }
    }
}

#[inline]
fn axpy<T: Real>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn add_assign<T: Real>(y: &mut [T], x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += xi;
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Stack of dense layers, each followed by a ReLU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trunk {
    pub layers: Vec<Dense>,
    pub input_dim: usize,
}

/// Post-activation outputs of every trunk layer for one sample.
#[derive(Debug, Clone, Default)]
pub struct TrunkCache<T> {
    pub activations: Vec<Vec<T>>,
}

impl Trunk {
    pub fn new<T: Real>(
        params: &mut ParameterSet<T>,
        name: &str,
        input_dim: usize,
        hidden: &[usize],
        rng: &mut LabRng,
    ) -> Self {
        let mut layers = Vec::with_capacity(hidden.len());
        let mut width = input_dim;
        for (i, &h) in hidden.iter().enumerate() {
            layers.push(Dense::new(params, &format!("{name}.{i}"), width, h, rng));
            width = h;
        }
        Self { layers, input_dim }
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, |l| l.outputs)
    }

    pub fn cache<T: Real>(&self) -> TrunkCache<T> {
        TrunkCache {
            activations: self.layers.iter().map(|l| vec![T::zero(); l.outputs]).collect(),
        }
    }

    pub fn check_input<T: Real>(&self, input: &Input<'_, T>) -> Result<()> {
        input.validate(self.input_dim)
    }

    /// Runs the trunk; the result is the last activation in `cache`, or the
    /// input itself when the trunk is empty.
    pub fn forward<T: Real>(
        &self,
        params: &ParameterSet<T>,
        input: Input<'_, T>,
        cache: &mut TrunkCache<T>,
    ) {
        for (l, layer) in self.layers.iter().enumerate() {
            let (prev, rest) = cache.activations.split_at_mut(l);
            let out = &mut rest[0];
            let layer_in = if l == 0 {
                input
            } else {
                Input::Dense(&prev[l - 1][..])
            };
            layer.forward(params, layer_in, out);
            for v in out.iter_mut() {
                if *v < T::zero() {
                    *v = T::zero();
                }
            }
        }
    }

    /// Backpropagates `dout` (gradient w.r.t. the trunk output) into `grads`.
    pub fn backward<T: Real>(
        &self,
        params: &ParameterSet<T>,
        input: Input<'_, T>,
        cache: &TrunkCache<T>,
        dout: &[T],
        grads: &mut ParameterSet<T>,
    ) {
        let mut delta: Vec<T> = dout.to_vec();
        for l in (0..self.layers.len()).rev() {
            for (d, &a) in delta.iter_mut().zip(cache.activations[l].iter()) {
                if a <= T::zero() {
                    *d = T::zero();
                }
            }
            if l == 0 {
                self.layers[0].backward(params, input, &delta, grads, None);
            } else {
                let mut dx = vec![T::zero(); self.layers[l].inputs];
                let layer_in = Input::Dense(&cache.activations[l - 1][..]);
                self.layers[l].backward(params, layer_in, &delta, grads, Some(&mut dx));
                delta = dx;
            }
        }
    }

    pub fn output<'c, T: Real>(&self, input: Input<'c, T>, cache: &'c TrunkCache<T>) -> Input<'c, T> {
        match cache.activations.last() {
            Some(a) => Input::Dense(&a[..]),
            None => input,
        }
    }
}

/// Trunk followed by one linear output layer: the plain feed-forward network.
/// With no hidden layers it is a single linear map.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub params: ParameterSet<T>,
    pub trunk: Trunk,
    pub head: Dense,
}

impl<T: Real> Mlp<T> {
    pub fn new(input_dim: usize, hidden: &[usize], outputs: usize, seed: u64) -> Self {
        let mut rng = crate::rng::seeded(seed);
        let mut params = ParameterSet::new(seed);
        let trunk = Trunk::new(&mut params, "trunk", input_dim, hidden, &mut rng);
        let head = Dense::new(&mut params, "head", trunk.output_dim(), outputs, &mut rng);
        Self {
            params,
            trunk,
            head,
        }
    }

    pub fn forward(&self, input: Input<'_, T>) -> Result<Vec<T>> {
        self.trunk.check_input(&input)?;
        let mut cache = self.trunk.cache();
        Ok(self.forward_cached(input, &mut cache))
    }

    pub fn forward_cached(&self, input: Input<'_, T>, cache: &mut TrunkCache<T>) -> Vec<T> {
        self.forward_with(&self.params, input, cache)
    }

    /// Forward pass with an external parameter set of the same layout.
    pub fn forward_with(
        &self,
        params: &ParameterSet<T>,
        input: Input<'_, T>,
        cache: &mut TrunkCache<T>,
    ) -> Vec<T> {
        self.trunk.forward(params, input, cache);
        let mut out = vec![T::zero(); self.head.outputs];
        self.head
            .forward(params, self.trunk.output(input, cache), &mut out);
        out
    }

    /// Backpropagates `dout` (gradient w.r.t. the network output) for one
    /// sample whose forward pass filled `cache`.
    pub fn backward_with(
        &self,
        params: &ParameterSet<T>,
        input: Input<'_, T>,
        cache: &TrunkCache<T>,
        dout: &[T],
        grads: &mut ParameterSet<T>,
    ) {
        let hidden = self.trunk.output(input, cache);
        if self.trunk.layers.is_empty() {
            self.head.backward(params, hidden, dout, grads, None);
        } else {
            let mut dh = vec![T::zero(); self.head.inputs];
            self.head.backward(params, hidden, dout, grads, Some(&mut dh));
            self.trunk.backward(params, input, cache, &dh, grads);
        }
    }
}
