use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::dense::Dense;
use super::lstm::{LstmLayer, LstmState};
use crate::ndmath::{Binding, ParamId, ParamStore, Tape, Var};
use crate::{Error, Result};

/// Two stacked LSTM encoder layers and their mirrored decoder.
///
/// The decoder starts from the encoder's final states (top layer into the
/// first decoder layer, bottom layer into the second), receives the top-layer
/// embedding `h_T` at every step and emits the window in reverse order.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderDecoder {
    pub input_size: usize,
    pub sizes: [usize; 2],
    enc1: LstmLayer,
    enc2: LstmLayer,
    dec1: LstmLayer,
    dec2: LstmLayer,
    proj: Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub layer1_final: LstmState,
    pub layer2_final: LstmState,
    /// Top-layer hidden states `h_1..h_T`.
    pub annotations: Vec<Var>,
}

impl EncoderDecoder {
    pub fn new(store: &mut ParamStore, prefix: &str, input_size: usize, sizes: [usize; 2], rng: &mut impl Rng) -> Self {
        let [s1, s2] = sizes;
        EncoderDecoder {
            input_size,
            sizes,
            enc1: LstmLayer::new(store, &format!("{prefix}.enc1"), input_size, s1, rng),
            enc2: LstmLayer::new(store, &format!("{prefix}.enc2"), s1, s2, rng),
            dec1: LstmLayer::new(store, &format!("{prefix}.dec1"), s2, s2, rng),
            dec2: LstmLayer::new(store, &format!("{prefix}.dec2"), s2, s1, rng),
            proj: Dense::new(store, &format!("{prefix}.proj"), s1, input_size, rng),
        }
    }

    pub fn encoder_params(&self) -> Vec<ParamId> {
        self.enc1.param_ids().into_iter().chain(self.enc2.param_ids()).collect()
    }

    pub fn decoder_params(&self) -> Vec<ParamId> {
        self.dec1
            .param_ids()
            .into_iter()
            .chain(self.dec2.param_ids())
            .chain(self.proj.param_ids())
            .collect()
    }

    pub fn encode(&self, tape: &mut Tape, p: &Binding, xs: &[Var]) -> Result<Encoding> {
        let first = *xs.first().ok_or(Error::Empty("encode"))?;
        let batch = tape.value(first).rows();
        let init1 = self.enc1.zero_state(tape, batch);
        let l1 = self.enc1.forward(tape, p, xs, init1)?;
        let hs1: Vec<Var> = l1.iter().map(|s| s.h).collect();
        let init2 = self.enc2.zero_state(tape, batch);
        let l2 = self.enc2.forward(tape, p, &hs1, init2)?;
        Ok(Encoding {
            layer1_final: *l1.last().expect("non-empty"),
            layer2_final: *l2.last().expect("non-empty"),
            annotations: l2.iter().map(|s| s.h).collect(),
        })
    }

    /// `steps` reconstructions (`B x M` each) in emission order; output `s`
    /// targets input `T - 1 - s`.
    pub fn decode(&self, tape: &mut Tape, p: &Binding, enc: &Encoding, steps: usize) -> Result<Vec<Var>> {
        if steps == 0 {
            return Err(Error::Empty("decode"));
        }
        let embedding = enc.layer2_final.h;
        let mut s1 = LstmState::new(enc.layer2_final.h, enc.layer2_final.c);
        let mut s2 = LstmState::new(enc.layer1_final.h, enc.layer1_final.c);
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            s1 = self.dec1.step(tape, p, embedding, &s1)?;
            s2 = self.dec2.step(tape, p, s1.h, &s2)?;
            out.push(self.proj.forward(tape, p, s2.h)?);
        }
        Ok(out)
    }

    /// Mean squared error between the reversed window and its reconstruction.
    pub fn reconstruction_loss(&self, tape: &mut Tape, p: &Binding, xs: &[Var]) -> Result<Var> {
        let enc = self.encode(tape, p, xs)?;
        let recon = self.decode(tape, p, &enc, xs.len())?;
        let mut total = None;
        for (s, &r) in recon.iter().enumerate() {
            let l = tape.mse(r, xs[xs.len() - 1 - s])?;
            total = Some(match total {
                None => l,
                Some(acc) => tape.add(acc, l)?,
            });
        }
        tape.affine(total.expect("non-empty"), 1.0 / xs.len() as f64, 0.0)
    }
}
