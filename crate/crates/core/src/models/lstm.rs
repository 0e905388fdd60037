use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::init::{bias, glorot_uniform};
use crate::ndmath::{Binding, ParamId, ParamStore, Tape, Tensor, Var};
use crate::{Error, Result};

/// One LSTM layer with an output-gate peephole on the cell state:
///
/// ```text
/// i_t = σ(W_i x_t + U_i h_{t-1} + b_i)
/// c̃_t = tanh(W_c x_t + U_c h_{t-1} + b_c)
/// f_t = σ(W_f x_t + U_f h_{t-1} + b_f)
/// c_t = i_t ∘ c̃_t + f_t ∘ c_{t-1}
/// o_t = σ(W_o x_t + U_o h_{t-1} + V_o c_t + b_o)
/// h_t = o_t ∘ tanh(c_t)
/// ```
///
/// `V_o` sees the freshly updated `c_t`. Weights are stored `hidden x input`
/// (`W_*`) and `hidden x hidden` (`U_*`, `V_o`).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub input_size: usize,
    pub hidden_size: usize,
    w_i: ParamId,
    u_i: ParamId,
    b_i: ParamId,
    w_f: ParamId,
    u_f: ParamId,
    b_f: ParamId,
    w_c: ParamId,
    u_c: ParamId,
    b_c: ParamId,
    w_o: ParamId,
    u_o: ParamId,
    v_o: ParamId,
    b_o: ParamId,
}

/// Gate activations of one step, kept for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateActivations {
    pub input: Var,
    pub forget: Var,
    pub output: Var,
    pub candidate: Var,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
    pub gates: Option<GateActivations>,
}

impl LstmState {
    pub fn new(h: Var, c: Var) -> Self {
        LstmState { h, c, gates: None }
    }
}

/// `x W^T + h U^T + b`
pub(crate) fn affine_pair(tape: &mut Tape, x: Var, w: Var, h: Var, u: Var, b: Var) -> Result<Var> {
    let wx = tape.matmul_t(x, w)?;
    let uh = tape.matmul_t(h, u)?;
    let s = tape.add(wx, uh)?;
    tape.add_row(s, b)
}

pub(crate) fn check_cols(tape: &Tape, v: Var, expected: usize, op: &'static str) -> Result<()> {
    let t = tape.value(v);
    if t.cols() != expected {
        return Err(Error::ShapeMismatch {
            op,
            left: t.shape().to_vec(),
            right: alloc::vec![t.rows(), expected],
        });
    }
    Ok(())
}

impl LstmLayer {
    /// Registers the layer's parameters under `prefix`. Forget-gate bias
    /// starts at 1, other biases at 0.
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
        let (w_i, u_i) = (w("w_i", h, n), w("u_i", h, h));
        let (w_f, u_f) = (w("w_f", h, n), w("u_f", h, h));
        let (w_c, u_c) = (w("w_c", h, n), w("u_c", h, h));
        let (w_o, u_o, v_o) = (w("w_o", h, n), w("u_o", h, h), w("v_o", h, h));
        let b_i = store.insert(&format!("{prefix}.b_i"), bias(h, 0.0));
        let b_f = store.insert(&format!("{prefix}.b_f"), bias(h, 1.0));
        let b_c = store.insert(&format!("{prefix}.b_c"), bias(h, 0.0));
        let b_o = store.insert(&format!("{prefix}.b_o"), bias(h, 0.0));
        LstmLayer {
            input_size,
            hidden_size,
            w_i,
            u_i,
            b_i,
            w_f,
            u_f,
            b_f,
            w_c,
            u_c,
            b_c,
            w_o,
            u_o,
            v_o,
            b_o,
        }
    }

    pub fn param_ids(&self) -> [ParamId; 13] {
        [
            self.w_i, self.u_i, self.b_i, self.w_f, self.u_f, self.b_f, self.w_c, self.u_c, self.b_c, self.w_o,
            self.u_o, self.v_o, self.b_o,
        ]
    }

    /// `(h, c) = (0, 0)` for a batch of `batch` rows.
    pub fn zero_state(&self, tape: &mut Tape, batch: usize) -> LstmState {
        let h = tape.constant(Tensor::zeros(&[batch, self.hidden_size]));
        let c = tape.constant(Tensor::zeros(&[batch, self.hidden_size]));
        LstmState::new(h, c)
    }

    pub fn step(&self, tape: &mut Tape, p: &Binding, x: Var, prev: &LstmState) -> Result<LstmState> {
        check_cols(tape, x, self.input_size, "lstm_step")?;
        check_cols(tape, prev.h, self.hidden_size, "lstm_step")?;
        check_cols(tape, prev.c, self.hidden_size, "lstm_step")?;
        let pre_i = affine_pair(tape, x, p[self.w_i], prev.h, p[self.u_i], p[self.b_i])?;
        let input = tape.sigmoid(pre_i)?;
        let pre_c = affine_pair(tape, x, p[self.w_c], prev.h, p[self.u_c], p[self.b_c])?;
        let candidate = tape.tanh(pre_c)?;
        let pre_f = affine_pair(tape, x, p[self.w_f], prev.h, p[self.u_f], p[self.b_f])?;
        let forget = tape.sigmoid(pre_f)?;
        let written = tape.mul(input, candidate)?;
        let kept = tape.mul(forget, prev.c)?;
        let c = tape.add(written, kept)?;
        let pre_o = affine_pair(tape, x, p[self.w_o], prev.h, p[self.u_o], p[self.b_o])?;
        let peep = tape.matmul_t(c, p[self.v_o])?;
        let pre_o = tape.add(pre_o, peep)?;
        let output = tape.sigmoid(pre_o)?;
        let squashed = tape.tanh(c)?;
        let h = tape.mul(output, squashed)?;
        Ok(LstmState {
            h,
            c,
            gates: Some(GateActivations {
                input,
                forget,
                output,
                candidate,
            }),
        })
    }

    /// Runs the recurrence over `xs` (one `B x input` value per step).
    pub fn forward(&self, tape: &mut Tape, p: &Binding, xs: &[Var], init: LstmState) -> Result<Vec<LstmState>> {
        if xs.is_empty() {
            return Err(Error::Empty("lstm_forward"));
        }
        let mut states = Vec::with_capacity(xs.len());
        let mut state = init;
        for &x in xs {
            state = self.step(tape, p, x, &state)?;
            states.push(state);
        }
        Ok(states)
    }
}
