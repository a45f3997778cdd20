//! Dense feed-forward network with rectifier hidden layers and a linear output.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// Hidden widths used by every agent network.
pub const HIDDEN: [usize; 2] = [256, 128];

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// in × out
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Layer {
    fn zeros(input: usize, output: usize) -> Self {
        Self {
            w: Array2::zeros((input, output)),
            b: Array1::zeros(output),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Per-layer gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub layers: Vec<Layer>,
}

impl Grads {
    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.w *= s;
            l.b *= s;
        }
    }

    pub fn add(&mut self, other: &Grads) {
        for (l, o) in self.layers.iter_mut().zip(&other.layers) {
            l.w += &o.w;
            l.b += &o.b;
        }
    }
}

/// Activations kept from a batched forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input of every layer (the batch itself first).
    inputs: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

fn flatten(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend(l.w.iter());
        out.extend(l.b.iter());
    }
    out
}

impl Mlp {
    /// Glorot-uniform weights and zero biases; the output layer is scaled by
    /// `output_gain`.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], output_gain: f64, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!("network dims {dims:?}")));
        }
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, d)| {
                let limit = (6.0 / (d[0] + d[1]) as f64).sqrt() * if i == last { output_gain } else { 1.0 };
                let w = Array2::from_shape_fn((d[0], d[1]), |_| rng.random_range(-limit..=limit));
                Layer { w, b: Array1::zeros(d[1]) }
            })
            .collect();
        Ok(Self { layers })
    }

    /// `[input, 256, 128, output]`
    pub fn standard<R: Rng + ?Sized>(input: usize, output: usize, output_gain: f64, rng: &mut R) -> Result<Self> {
        Self::new(&[input, HIDDEN[0], HIDDEN[1], output], output_gain, rng)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!("network dims {dims:?}")));
        }
        Ok(Self {
            layers: dims.windows(2).map(|d| Layer::zeros(d[0], d[1])).collect(),
        })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network without layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].w.ncols() != pair[1].w.nrows() {
                return Err(Error::dims("Mlp::from_layers", pair[0].w.ncols(), pair[1].w.nrows()));
            }
        }
        if let Some(l) = layers.iter().find(|l| l.w.ncols() != l.b.len()) {
            return Err(Error::dims("Mlp::from_layers bias", l.w.ncols(), l.b.len()));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].w.nrows()];
        d.extend(self.layers.iter().map(|l| l.w.ncols()));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].w.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::dims("Mlp::set_params", self.param_count(), flat.len()));
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.w.iter_mut().for_each(|x| *x = it.next().expect("length checked"));
            l.b.iter_mut().for_each(|x| *x = it.next().expect("length checked"));
        }
        Ok(())
    }

    pub fn zero_grads(&self) -> Grads {
        Grads {
            layers: self.layers.iter().map(|l| Layer::zeros(l.w.nrows(), l.w.ncols())).collect(),
        }
    }

    fn check_batch(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::dims("Mlp input", self.input_dim(), x.ncols()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Mlp input"));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row shape");
        Ok(self.forward_batch(&batch)?.into_iter().collect())
    }

    /// One row per sample.
    pub fn forward_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_batch(x)?;
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            h = h.dot(&l.w) + &l.b;
            if i < last {
                h.mapv_inplace(|v| v.max(0.0));
            }
        }
        Ok(h)
    }

    pub fn forward_trace(&self, x: &Array2<f64>) -> Result<Trace> {
        self.check_batch(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let z = h.dot(&l.w) + &l.b;
            inputs.push(h);
            h = z;
            if i < last {
                h.mapv_inplace(|v| v.max(0.0));
            }
        }
        Ok(Trace { inputs, output: h })
    }

    /// Gradients of `Σ upstream ⊙ output` with respect to the parameters and
    /// the input batch.
    pub fn backward(&self, trace: &Trace, upstream: &Array2<f64>) -> Result<(Grads, Array2<f64>)> {
        if upstream.dim() != trace.output.dim() {
            return Err(Error::dims(
                "Mlp::backward",
                format!("{:?}", trace.output.dim()),
                format!("{:?}", upstream.dim()),
            ));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.clone();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let input = &trace.inputs[i];
            let gw = input.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            let mut back = delta.dot(&l.w.t());
            if i > 0 {
                // rectifier derivative: the stored input is the post-activation value
                back.zip_mut_with(input, |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            grads.push(Layer { w: gw, b: gb });
            delta = back;
        }
        grads.reverse();
        Ok((Grads { layers: grads }, delta))
    }

    /// `self ← (1 − tau)·self + tau·src`
    pub fn soft_update(&mut self, src: &Mlp, tau: f64) {
        for (l, s) in self.layers.iter_mut().zip(&src.layers) {
            l.w.zip_mut_with(&s.w, |a, &b| *a += tau * (b - *a));
            l.b.zip_mut_with(&s.b, |a, &b| *a += tau * (b - *a));
        }
    }

    /// `self ← self + step·g`
    pub fn apply(&mut self, g: &Grads, step: f64) {
        for (l, d) in self.layers.iter_mut().zip(&g.layers) {
            l.w.scaled_add(step, &d.w);
            l.b.scaled_add(step, &d.b);
        }
    }
}

/// Rows of a batch as a matrix.
pub fn batch_matrix(rows: &[&[f64]]) -> Result<Array2<f64>> {
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::dims("batch_matrix", cols, "ragged rows"));
    }
    let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    Ok(Array2::from_shape_vec((rows.len(), cols), data).expect("row shape"))
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_biases() {
        let mut net = Mlp::zeros(&[3, 4, 2]).unwrap();
        net.layers_mut()[1].b = Array1::from(vec![0.5, -1.5]);
        assert_eq!(net.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![0.5, -1.5]);
    }

    #[test]
    fn identity_linear_layer() {
        let layer = Layer {
            w: Array2::eye(3),
            b: Array1::zeros(3),
        };
        let net = Mlp::from_layers(vec![layer]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 0.25]).unwrap(), vec![1.0, -2.0, 0.25]);
    }

    #[test]
    fn rejects_wrong_input() {
        let net = Mlp::zeros(&[3, 2]).unwrap();
        assert!(net.forward(&[1.0]).is_err());
        assert!(net.forward(&[1.0, f64::NAN, 0.0]).is_err());
        assert!(Mlp::zeros(&[3]).is_err());
    }

    #[test]
    fn standard_dims_and_params() {
        let net = Mlp::standard(3, 5, 1.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(net.dims(), vec![3, 256, 128, 5]);
        assert_eq!(net.param_count(), 3 * 256 + 256 + 256 * 128 + 128 + 128 * 5 + 5);
        let mut copy = Mlp::zeros(&net.dims()).unwrap();
        copy.set_params(&net.params()).unwrap();
        assert_eq!(copy, net);
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, 0.0, -3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn soft_update_moves_towards_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Mlp::new(&[2, 3, 1], 1.0, &mut rng).unwrap();
        let mut b = Mlp::zeros(&[2, 3, 1]).unwrap();
        b.soft_update(&a, 1.0);
        assert_eq!(a, b);
    }
}
