use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::init::{bias, glorot_uniform};
use super::lstm::check_cols;
use crate::ndmath::{Binding, ParamId, ParamStore, Tape, Var};
use crate::{Error, Result};

/// Additive attention over a sequence of annotations `h_1..h_T`:
///
/// ```text
/// e_t = v^T tanh(W_e h_t + U_e d + b)
/// a_t = softmax(e)_t
/// C   = Σ_t a_t h_t
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionLayer {
    pub size: usize,
    w_e: ParamId,
    u_e: ParamId,
    v: ParamId,
    b: ParamId,
}

/// Scores (`B x T`), weights (`B x T`) and context (`B x n`) of one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionState {
    pub scores: Var,
    pub weights: Var,
    pub context: Var,
}

impl AttentionLayer {
    pub fn new(store: &mut ParamStore, prefix: &str, size: usize, rng: &mut impl Rng) -> Self {
        let w_e = store.insert(&format!("{prefix}.w_e"), glorot_uniform(rng, size, size));
        let u_e = store.insert(&format!("{prefix}.u_e"), glorot_uniform(rng, size, size));
        let v = store.insert(&format!("{prefix}.v"), glorot_uniform(rng, 1, size));
        let b = store.insert(&format!("{prefix}.b"), bias(size, 0.0));
        AttentionLayer { size, w_e, u_e, v, b }
    }

    pub fn param_ids(&self) -> [ParamId; 4] {
        [self.w_e, self.u_e, self.v, self.b]
    }

    /// `B x T` matrix of `e_t` for query state `d_prev`.
    pub fn scores(&self, tape: &mut Tape, p: &Binding, annotations: &[Var], d_prev: Var) -> Result<Var> {
        if annotations.is_empty() {
            return Err(Error::Empty("attention_scores"));
        }
        check_cols(tape, d_prev, self.size, "attention_scores")?;
        let query = tape.matmul_t(d_prev, p[self.u_e])?;
        let query = tape.add_row(query, p[self.b])?;
        let mut columns = Vec::with_capacity(annotations.len());
        for &h in annotations {
            check_cols(tape, h, self.size, "attention_scores")?;
            let key = tape.matmul_t(h, p[self.w_e])?;
            let pre = tape.add(key, query)?;
            let act = tape.tanh(pre)?;
            columns.push(tape.matmul_t(act, p[self.v])?);
        }
        tape.concat_cols(&columns)
    }

    pub fn attend(&self, tape: &mut Tape, p: &Binding, annotations: &[Var], d_prev: Var) -> Result<AttentionState> {
        let scores = self.scores(tape, p, annotations, d_prev)?;
        let (weights, context) = attention_context(tape, scores, annotations)?;
        Ok(AttentionState {
            scores,
            weights,
            context,
        })
    }
}

/// Softmax weights of `scores` (`B x T`) and the weighted sum of the annotations.
pub fn attention_context(tape: &mut Tape, scores: Var, annotations: &[Var]) -> Result<(Var, Var)> {
    if annotations.is_empty() {
        return Err(Error::Empty("attention_context"));
    }
    let t = tape.value(scores).cols();
    if t != annotations.len() {
        return Err(Error::ShapeMismatch {
            op: "attention_context",
            left: tape.value(scores).shape().to_vec(),
            right: alloc::vec![annotations.len()],
        });
    }
    let weights = tape.softmax_rows(scores)?;
    let mut context = None;
    for (i, &h) in annotations.iter().enumerate() {
        let a = tape.column(weights, i)?;
        let term = tape.mul_col(h, a)?;
        context = Some(match context {
            None => term,
            Some(acc) => tape.add(acc, term)?,
        });
    }
    Ok((weights, context.expect("non-empty annotations")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn row(tape: &mut Tape, v: &[f64]) -> Var {
        tape.constant(Tensor::matrix(1, v.len(), v.to_vec()).unwrap())
    }

    #[test]
    fn saturated_scores_pick_one_annotation() {
        let mut tape = Tape::new();
        let h = [row(&mut tape, &[1.0, -3.0]), row(&mut tape, &[0.25, 4.0])];
        let e = row(&mut tape, &[0.0, 100.0]);
        let (w, c) = attention_context(&mut tape, e, &h).unwrap();
        let w = tape.value(w).data().to_vec();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (got, want) in tape.value(c).data().iter().zip([0.25, 4.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn equal_scores_average() {
        let mut tape = Tape::new();
        let h = [
            row(&mut tape, &[1.0, 2.0]),
            row(&mut tape, &[3.0, -2.0]),
            row(&mut tape, &[2.0, 3.0]),
        ];
        let e = row(&mut tape, &[0.7, 0.7, 0.7]);
        let (_, c) = attention_context(&mut tape, e, &h).unwrap();
        let c = tape.value(c).data();
        assert!((c[0] - 2.0).abs() < 1e-15 && (c[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_v_and_identical_annotations() {
        let mut store = ParamStore::new();
        let att = AttentionLayer::new(&mut store, "a", 3, &mut ChaCha8Rng::seed_from_u64(2));
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let d = row(&mut tape, &[0.1, 0.2, 0.3]);
        let a = row(&mut tape, &[1.0, -1.0, 0.5]);
        let b = row(&mut tape, &[-0.4, 0.9, 0.0]);
        let e = att.scores(&mut tape, &p, &[a, b, a], d).unwrap();
        let e = tape.value(e).data().to_vec();
        assert_eq!(e[0], e[2]);
        assert_ne!(e[0], e[1]);

        let v = store.find("a.v").unwrap();
        store.get_mut(v).data_mut().fill(0.0);
        let mut tape = Tape::new();
        let p = store.bind(&mut tape);
        let d = row(&mut tape, &[0.1, 0.2, 0.3]);
        let a = row(&mut tape, &[1.0, -1.0, 0.5]);
        let b = row(&mut tape, &[-0.4, 0.9, 0.0]);
        let e = att.scores(&mut tape, &p, &[a, b], d).unwrap();
        assert_eq!(tape.value(e).data(), &[0.0, 0.0]);
    }

    #[test]
    fn errors() {
        let mut tape = Tape::new();
        let e = row(&mut tape, &[0.0, 1.0]);
        assert_eq!(
            attention_context(&mut tape, e, &[]),
            Err(Error::Empty("attention_context"))
        );
        let h = row(&mut tape, &[1.0]);
        assert!(matches!(
            attention_context(&mut tape, e, &[h]),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
