use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::init::{bias, glorot_uniform};
use super::lstm::check_cols;
use crate::ndmath::{Binding, ParamId, ParamStore, Tape, Var};
use crate::{Error, Result};

/// Prediction head `h_s = tanh(W_p C + W_x h_n)`, `y = W_s h_s + b_s`.
///
/// With a layer context `L` the hidden term gains `W_l L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub context_size: usize,
    pub state_size: usize,
    pub hidden_size: usize,
    w_p: ParamId,
    w_x: ParamId,
    w_s: ParamId,
    b_s: ParamId,
    w_l: Option<(ParamId, usize)>,
}

impl Head {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        context_size: usize,
        state_size: usize,
        hidden_size: usize,
        layer_context_size: Option<usize>,
        rng: &mut impl Rng,
    ) -> Self {
        let w_p = store.insert(&format!("{prefix}.w_p"), glorot_uniform(rng, hidden_size, context_size));
        let w_x = store.insert(&format!("{prefix}.w_x"), glorot_uniform(rng, hidden_size, state_size));
        let w_s = store.insert(&format!("{prefix}.w_s"), glorot_uniform(rng, 1, hidden_size));
        let b_s = store.insert(&format!("{prefix}.b_s"), bias(1, 0.0));
        let w_l = layer_context_size.map(|n| {
            (
                store.insert(&format!("{prefix}.w_l"), glorot_uniform(rng, hidden_size, n)),
                n,
            )
        });
        Head {
            context_size,
            state_size,
            hidden_size,
            w_p,
            w_x,
            w_s,
            b_s,
            w_l,
        }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = alloc::vec![self.w_p, self.w_x, self.w_s, self.b_s];
        ids.extend(self.w_l.map(|(id, _)| id));
        ids
    }

    /// `B x 1` predictions.
    pub fn forward(&self, tape: &mut Tape, p: &Binding, context: Var, h_n: Var) -> Result<Var> {
        self.forward_layered(tape, p, context, h_n, None)
    }

    /// `layer_context` must be given exactly when the head was built with one.
    pub fn forward_layered(
        &self,
        tape: &mut Tape,
        p: &Binding,
        context: Var,
        h_n: Var,
        layer_context: Option<Var>,
    ) -> Result<Var> {
        check_cols(tape, context, self.context_size, "predict_head")?;
        check_cols(tape, h_n, self.state_size, "predict_head")?;
        let pc = tape.matmul_t(context, p[self.w_p])?;
        let xh = tape.matmul_t(h_n, p[self.w_x])?;
        let mut pre = tape.add(pc, xh)?;
        match (self.w_l, layer_context) {
            (Some((w_l, n)), Some(l)) => {
                check_cols(tape, l, n, "predict_head")?;
                let lh = tape.matmul_t(l, p[w_l])?;
                pre = tape.add(pre, lh)?;
            }
            (None, None) => {}
            _ => return Err(Error::config("layer context does not match the head configuration")),
        }
        let hs = tape.tanh(pre)?;
        let y = tape.matmul_t(hs, p[self.w_s])?;
        tape.add_row(y, p[self.b_s])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_output_weights_give_bias() {
        let mut store = ParamStore::new();
        let head = Head::new(&mut store, "h", 3, 2, 4, None, &mut ChaCha8Rng::seed_from_u64(0));
        store.get_mut(head.w_s).data_mut().fill(0.0);
        store.get_mut(head.b_s).data_mut()[0] = -0.75;
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let c = tape.constant(Tensor::matrix(2, 3, alloc::vec![1.0, 2.0, 3.0, -4.0, 5.0, 0.5]).unwrap());
        let h = tape.constant(Tensor::matrix(2, 2, alloc::vec![0.1, 0.2, 0.3, 0.4]).unwrap());
        let y = head.forward(&mut tape, &p, c, h).unwrap();
        assert_eq!(tape.value(y).data(), &[-0.75, -0.75]);

        store.tensors_mut().for_each(|t| t.data_mut().fill(0.0));
        store.get_mut(head.b_s).data_mut()[0] = 2.5;
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let c = tape.constant(Tensor::filled(&[1, 3], 9.0));
        let h = tape.constant(Tensor::filled(&[1, 2], -9.0));
        let y = head.forward(&mut tape, &p, c, h).unwrap();
        assert_eq!(tape.value(y).data(), &[2.5]);
    }

    #[test]
    fn hand_evaluation() {
        let mut store = ParamStore::new();
        let head = Head::new(&mut store, "h", 1, 1, 1, None, &mut ChaCha8Rng::seed_from_u64(0));
        for (id, v) in [(head.w_p, 0.5), (head.w_x, -1.0), (head.w_s, 2.0), (head.b_s, 0.1)] {
            store.get_mut(id).data_mut()[0] = v;
        }
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let c = tape.constant(Tensor::filled(&[1, 1], 3.0));
        let h = tape.constant(Tensor::filled(&[1, 1], 0.25));
        let y = head.forward(&mut tape, &p, c, h).unwrap();
        let expected = 2.0 * libm::tanh(0.5 * 3.0 - 0.25) + 0.1;
        assert!((tape.value(y).data()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn layer_context_must_match() {
        let mut store = ParamStore::new();
        let head = Head::new(&mut store, "h", 2, 2, 2, Some(3), &mut ChaCha8Rng::seed_from_u64(0));
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let c = tape.constant(Tensor::zeros(&[1, 2]));
        assert!(head.forward(&mut tape, &p, c, c).is_err());
        let l = tape.constant(Tensor::zeros(&[1, 3]));
        assert!(head.forward_layered(&mut tape, &p, c, c, Some(l)).is_ok());
    }
}
