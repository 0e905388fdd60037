use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::init::{bias, glorot_uniform};
use super::lstm::{affine_pair, check_cols};
use crate::ndmath::{Binding, ParamId, ParamStore, Tape, Var};
use crate::{Error, Result};

/// Gated recurrent unit:
///
/// ```text
/// z = σ(W_z x + U_z h + b_z)
/// r = σ(W_r x + U_r h + b_r)
/// h̃ = tanh(W_h x + U_h (r ∘ h) + b_h)
/// h' = (1 - z) ∘ h + z ∘ h̃
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruLayer {
    pub input_size: usize,
    pub hidden_size: usize,
    w_z: ParamId,
    u_z: ParamId,
    b_z: ParamId,
    w_r: ParamId,
    u_r: ParamId,
    b_r: ParamId,
    w_h: ParamId,
    u_h: ParamId,
    b_h: ParamId,
}

impl GruLayer {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        input_size: usize,
        hidden_size: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let (n, h) = (input_size, hidden_size);
        let mut w = |name: &str, rows: usize, cols: usize| {
            store.insert(&format!("{prefix}.{name}"), glorot_uniform(rng, rows, cols))
        };
        let (w_z, u_z) = (w("w_z", h, n), w("u_z", h, h));
        let (w_r, u_r) = (w("w_r", h, n), w("u_r", h, h));
        let (w_h, u_h) = (w("w_h", h, n), w("u_h", h, h));
        let b_z = store.insert(&format!("{prefix}.b_z"), bias(h, 0.0));
        let b_r = store.insert(&format!("{prefix}.b_r"), bias(h, 0.0));
        let b_h = store.insert(&format!("{prefix}.b_h"), bias(h, 0.0));
        GruLayer {
            input_size,
            hidden_size,
            w_z,
            u_z,
            b_z,
            w_r,
            u_r,
            b_r,
            w_h,
            u_h,
            b_h,
        }
    }

    pub fn step(&self, tape: &mut Tape, p: &Binding, x: Var, h_prev: Var) -> Result<Var> {
        check_cols(tape, x, self.input_size, "gru_step")?;
        check_cols(tape, h_prev, self.hidden_size, "gru_step")?;
        let pre_z = affine_pair(tape, x, p[self.w_z], h_prev, p[self.u_z], p[self.b_z])?;
        let z = tape.sigmoid(pre_z)?;
        let pre_r = affine_pair(tape, x, p[self.w_r], h_prev, p[self.u_r], p[self.b_r])?;
        let r = tape.sigmoid(pre_r)?;
        let gated = tape.mul(r, h_prev)?;
        let pre_h = affine_pair(tape, x, p[self.w_h], gated, p[self.u_h], p[self.b_h])?;
        let candidate = tape.tanh(pre_h)?;
        // (1 - z) h + z h̃ == h + z (h̃ - h)
        let delta = tape.sub(candidate, h_prev)?;
        let moved = tape.mul(z, delta)?;
        tape.add(h_prev, moved)
    }

    pub fn forward(&self, tape: &mut Tape, p: &Binding, xs: &[Var], h0: Var) -> Result<Vec<Var>> {
        if xs.is_empty() {
            return Err(Error::Empty("gru_forward"));
        }
        let mut out = Vec::with_capacity(xs.len());
        let mut h = h0;
        for &x in xs {
            h = self.step(tape, p, x, h)?;
            out.push(h);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_hand_cases() {
        let mut store = ParamStore::new();
        let layer = GruLayer::new(&mut store, "g", 2, 3, &mut ChaCha8Rng::seed_from_u64(0));
        store.tensors_mut().for_each(|t| t.data_mut().fill(0.0));
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let x = tape.constant(Tensor::matrix(1, 2, alloc::vec![0.7, -1.0]).unwrap());
        let h0 = tape.constant(Tensor::zeros(&[1, 3]));
        let h = layer.step(&mut tape, &p, x, h0).unwrap();
        assert_eq!(tape.value(h).data(), &[0.0; 3]);
        // z = r = 0.5, h̃ = tanh(U (r h)) = tanh(0) = 0, h = 0.5 * 2
        let h0 = tape.constant(Tensor::filled(&[1, 3], 2.0));
        let h = layer.step(&mut tape, &p, x, h0).unwrap();
        assert_eq!(tape.value(h).data(), &[1.0; 3]);
    }

    #[test]
    fn dimension_errors() {
        let mut store = ParamStore::new();
        let layer = GruLayer::new(&mut store, "g", 2, 3, &mut ChaCha8Rng::seed_from_u64(0));
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let x = tape.constant(Tensor::zeros(&[1, 2]));
        let bad = tape.constant(Tensor::zeros(&[1, 2]));
        assert!(matches!(
            layer.step(&mut tape, &p, x, bad),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
