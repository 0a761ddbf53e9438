use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|x| if x > 0.0 { x } else { 0.0 }),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Linear => {}
        }
    }

    /// Multiply `grad` in place by the derivative, expressed via the output.
    /// The ReLU subgradient at 0 is 0.
    fn backprop(self, out: &Array2<f64>, grad: &mut Array2<f64>) {
        match self {
            Activation::Relu => grad.zip_mut_with(out, |g, &y| {
                if y <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => grad.zip_mut_with(out, |g, &y| *g *= 1.0 - y * y),
            Activation::Linear => {}
        }
    }
}

/// Fully connected layer `y = act(x·W + b)` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self { weight: Array2::zeros((inputs, outputs)), bias: Array1::zeros(outputs), activation }
    }

    /// Uniform init in `±bound`, zero bias.
    pub fn uniform<R: Rng + ?Sized>(inputs: usize, outputs: usize, bound: f64, activation: Activation, rng: &mut R) -> Self {
        let weight = Array2::from_shape_simple_fn((inputs, outputs), || rng.gen_range(-bound..=bound));
        Self { weight, bias: Array1::zeros(outputs), activation }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weight);
        z += &self.bias;
        self.activation.apply(&mut z);
        z
    }
}

/// Gradients for one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// A chain of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    pub layers: Vec<Dense>,
}

/// Per-layer outputs retained for the backward pass; `outputs[0]` is the input.
#[derive(Debug, Clone)]
pub struct StackCache {
    pub outputs: Vec<Array2<f64>>,
}

impl StackCache {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().unwrap()
    }
}

impl Stack {
    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().unwrap().outputs()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut h = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            h = layer.forward(h.view());
        }
        h
    }

    pub fn forward_cached(&self, x: Array2<f64>) -> StackCache {
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        outputs.push(x);
        for layer in &self.layers {
            let y = layer.forward(outputs.last().unwrap().view());
            outputs.push(y);
        }
        StackCache { outputs }
    }

    /// Reverse-mode pass. `upstream` is dL/d(output). Returns parameter
    /// gradients and dL/d(input).
    pub fn backward(&self, cache: &StackCache, upstream: Array2<f64>) -> (Vec<DenseGrad>, Array2<f64>) {
        let (grads, dx) = self.backward_impl(cache, upstream, true);
        (grads, dx.expect("input gradient requested"))
    }

    /// Parameter gradients only; the input gradient is never formed.
    pub fn param_gradients(&self, cache: &StackCache, upstream: Array2<f64>) -> Vec<DenseGrad> {
        self.backward_impl(cache, upstream, false).0
    }

    fn backward_impl(
        &self,
        cache: &StackCache,
        upstream: Array2<f64>,
        input_grad: bool,
    ) -> (Vec<DenseGrad>, Option<Array2<f64>>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = upstream;
        let mut dx_out = None;
        for (k, layer) in self.layers.iter().enumerate().rev() {
            layer.activation.backprop(&cache.outputs[k + 1], &mut g);
            let input = &cache.outputs[k];
            let mut dw = input.t().dot(&g);
            if !dw.is_standard_layout() {
                dw = dw.as_standard_layout().into_owned();
            }
            let db = g.sum_axis(Axis(0));
            let dx = (k > 0 || input_grad).then(|| g.dot(&layer.weight.t()));
            grads.push(DenseGrad { weight: dw, bias: db });
            match dx {
                Some(dx) if k > 0 => g = dx,
                dx => dx_out = dx,
            }
        }
        grads.reverse();
        (grads, dx_out)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice().unwrap(), l.bias.as_slice().unwrap()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_slice_mut().unwrap(), l.bias.as_slice_mut().unwrap()])
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

/// Flat gradient slices in the same order as `Stack::tensors`.
pub fn grad_tensors(grads: &[DenseGrad]) -> Vec<&[f64]> {
    grads.iter().flat_map(|g| [g.weight.as_slice().unwrap(), g.bias.as_slice().unwrap()]).collect()
}

/// Split columns `[0, at)` and `[at, n)` of a matrix.
pub(crate) fn split_cols(m: &Array2<f64>, at: usize) -> (Array2<f64>, Array2<f64>) {
    (m.slice(s![.., ..at]).to_owned(), m.slice(s![.., at..]).to_owned())
}
