use rand::Rng;

use crate::ndmath::Tensor;

/// `rows x cols` weight drawn uniformly from `±sqrt(6 / (fan_in + fan_out))`
/// with `fan_in = cols`, `fan_out = rows`.
pub fn glorot_uniform(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    let limit = libm::sqrt(6.0 / (rows + cols).max(1) as f64);
    let data = (0..rows * cols).map(|_| rng.random_range(-limit..=limit)).collect();
    Tensor::matrix(rows, cols, data).expect("finite initial weights")
}

pub fn bias(len: usize, value: f64) -> Tensor {
    Tensor::filled(&[len], value)
}
