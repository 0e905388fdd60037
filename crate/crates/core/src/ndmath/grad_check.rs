//! Central finite-difference checks against the tape's analytic gradients.

use alloc::string::String;
use alloc::vec::Vec;

use super::params::{Binding, ParamStore};
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::Result;

/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    relative_error_above(analytic, numeric, 1e-8)
}

fn relative_error_above(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / f64::max(floor, analytic.abs() + numeric.abs())
}

/// Denominator floor for a central difference of a loss near `loss`.
///
/// Rounding alone perturbs the estimate by about `EPSILON * |loss| / eps`;
/// gradients below `1e4` times that are compared against the floor instead of
/// their own magnitude. Never below `1e-8`.
pub fn resolution_floor(loss: f64, eps: f64) -> f64 {
    f64::max(1e-8, 1e4 * f64::EPSILON * loss.abs() / eps)
}

/// Maximum relative error between the analytic gradient of the scalar
/// function `f` at `point` and a central difference with step `eps`.
pub fn grad_check<F>(f: F, point: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let x = tape.leaf(point.detached().with_requires_grad(true));
    let loss = f(&mut tape, x)?;
    tape.backward(loss)?;
    let floor = resolution_floor(tape.value(loss).data()[0], eps);
    let analytic: Vec<f64> = match tape.grad(x) {
        Some(g) => g.to_vec(),
        None => alloc::vec![0.0; point.numel()],
    };

    let eval = |p: Tensor| -> Result<f64> {
        let mut tape = Tape::new();
        let x = tape.constant(p);
        let y = f(&mut tape, x)?;
        Ok(tape.value(y).data()[0])
    };
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let mut plus = point.detached();
        plus.data_mut()[i] += eps;
        let mut minus = point.detached();
        minus.data_mut()[i] -= eps;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * eps);
        worst = worst.max(relative_error_above(a, numeric, floor));
    }
    Ok(worst)
}

/// Per-parameter result of [`grad_check_store`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub max_relative_error: f64,
}

/// Runs [`grad_check`]'s comparison for every scalar of every parameter in
/// `store`. `f` builds the scalar loss from a binding of the store.
pub fn grad_check_store<F>(store: &ParamStore, f: F, eps: f64) -> Result<Vec<ParamCheck>>
where
    F: Fn(&mut Tape, &Binding) -> Result<Var>,
{
    let mut tape = Tape::new();
    let binding = store.bind(&mut tape);
    let loss = f(&mut tape, &binding)?;
    tape.backward(loss)?;
    let floor = resolution_floor(tape.value(loss).data()[0], eps);

    let mut probe = store.clone();
    let eval = |probe: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new();
        let b = probe.bind_frozen(&mut tape);
        let y = f(&mut tape, &b)?;
        Ok(tape.value(y).data()[0])
    };
    let mut out = Vec::with_capacity(store.len());
    for id in store.ids() {
        let analytic: Vec<f64> = match tape.grad(binding[id]) {
            Some(g) => g.to_vec(),
            None => alloc::vec![0.0; store.get(id).numel()],
        };
        let mut worst = 0.0f64;
        for (i, &a) in analytic.iter().enumerate() {
            let orig = probe.get(id).data()[i];
            probe.get_mut(id).data_mut()[i] = orig + eps;
            let up = eval(&probe)?;
            probe.get_mut(id).data_mut()[i] = orig - eps;
            let down = eval(&probe)?;
            probe.get_mut(id).data_mut()[i] = orig;
            worst = worst.max(relative_error_above(a, (up - down) / (2.0 * eps), floor));
        }
        out.push(ParamCheck {
            name: store.name(id).into(),
            max_relative_error: worst,
        });
    }
    Ok(out)
}

/// Largest error over all parameters reported by [`grad_check_store`].
pub fn worst(checks: &[ParamCheck]) -> f64 {
    checks.iter().map(|c| c.max_relative_error).fold(0.0, f64::max)
}
