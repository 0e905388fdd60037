use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::init::{bias, glorot_uniform};
use super::lstm::check_cols;
use crate::ndmath::{Binding, ParamId, ParamStore, Tape, Var};
use crate::Result;

/// Fully connected layer `x W^T + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub input_size: usize,
    pub output_size: usize,
    w: ParamId,
    b: ParamId,
}

impl Dense {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        input_size: usize,
        output_size: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let w = store.insert(&format!("{prefix}.w"), glorot_uniform(rng, output_size, input_size));
        let b = store.insert(&format!("{prefix}.b"), bias(output_size, 0.0));
        Dense {
            input_size,
            output_size,
            w,
            b,
        }
    }

    pub fn param_ids(&self) -> [ParamId; 2] {
        [self.w, self.b]
    }

    pub fn forward(&self, tape: &mut Tape, p: &Binding, x: Var) -> Result<Var> {
        check_cols(tape, x, self.input_size, "dense")?;
        let wx = tape.matmul_t(x, p[self.w])?;
        tape.add_row(wx, p[self.b])
    }
}

/// Multilayer perceptron with `tanh` hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    /// `sizes = [input, hidden..., output]`.
    pub fn new(store: &mut ParamStore, prefix: &str, sizes: &[usize], rng: &mut impl Rng) -> Self {
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Dense::new(store, &format!("{prefix}.{i}"), w[0], w[1], rng))
            .collect();
        Mlp { layers }
    }

    pub fn input_size(&self) -> usize {
        self.layers.first().map_or(0, |l| l.input_size)
    }

    pub fn forward(&self, tape: &mut Tape, p: &Binding, x: Var) -> Result<Var> {
        let mut h = x;
        let last = self.layers.len().saturating_sub(1);
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(tape, p, h)?;
            if i < last {
                h = tape.tanh(h)?;
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_output_zero() {
        let mut store = ParamStore::new();
        let mlp = Mlp::new(&mut store, "m", &[6, 4, 3, 1], &mut ChaCha8Rng::seed_from_u64(0));
        store.tensors_mut().for_each(|t| t.data_mut().fill(0.0));
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let x = tape.constant(Tensor::filled(&[2, 6], 0.4));
        let y = mlp.forward(&mut tape, &p, x).unwrap();
        assert_eq!(tape.value(y).data(), &[0.0, 0.0]);
        assert_eq!(mlp.input_size(), 6);
    }

    #[test]
    fn single_layer_is_dot_product() {
        let mut store = ParamStore::new();
        let mlp = Mlp::new(&mut store, "m", &[3, 1], &mut ChaCha8Rng::seed_from_u64(5));
        let w = store.get(store.find("m.0.w").unwrap()).data().to_vec();
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let xs = [1.5, -2.0, 0.25];
        let x = tape.constant(Tensor::matrix(1, 3, xs.to_vec()).unwrap());
        let y = mlp.forward(&mut tape, &p, x).unwrap();
        let dot: f64 = w.iter().zip(xs).map(|(w, x)| w * x).sum();
        assert!((tape.value(y).data()[0] - dot).abs() < 1e-15);
    }

    #[test]
    fn width_mismatch() {
        let mut store = ParamStore::new();
        let mlp = Mlp::new(&mut store, "m", &[3, 1], &mut ChaCha8Rng::seed_from_u64(5));
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let x = tape.constant(Tensor::zeros(&[1, 4]));
        assert!(mlp.forward(&mut tape, &p, x).is_err());
    }
}
