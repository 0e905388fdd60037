use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::attention::{AttentionLayer, AttentionState};
use super::dense::{Dense, Mlp};
use super::encoder_decoder::{EncoderDecoder, Encoding};
use super::gru::GruLayer;
use super::head::Head;
use super::lstm::LstmLayer;
use crate::datasets::WindowedDataset;
use crate::ndmath::{Binding, ParamId, ParamStore, Tape, Tensor, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Denoised inputs, encoder-decoder embedding, attention predictor.
    WtEdLstmAm,
    EdLstmAm,
    WtEdLstm,
    Lstm,
    Gru,
    Mlp,
    /// Last observed target value.
    Persistence,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::WtEdLstmAm,
        ModelKind::EdLstmAm,
        ModelKind::WtEdLstm,
        ModelKind::Lstm,
        ModelKind::Gru,
        ModelKind::Mlp,
        ModelKind::Persistence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::WtEdLstmAm => "wt-ed-lstm-am",
            ModelKind::EdLstmAm => "ed-lstm-am",
            ModelKind::WtEdLstm => "wt-ed-lstm",
            ModelKind::Lstm => "lstm",
            ModelKind::Gru => "gru",
            ModelKind::Mlp => "mlp",
            ModelKind::Persistence => "persistence",
        }
    }

    pub fn uses_wavelet(self) -> bool {
        matches!(self, ModelKind::WtEdLstmAm | ModelKind::WtEdLstm)
    }

    pub fn uses_attention(self) -> bool {
        matches!(self, ModelKind::WtEdLstmAm | ModelKind::EdLstmAm)
    }

    pub fn has_encoder(self) -> bool {
        matches!(self, ModelKind::WtEdLstmAm | ModelKind::EdLstmAm | ModelKind::WtEdLstm)
    }

    pub fn is_trainable(self) -> bool {
        self != ModelKind::Persistence
    }

    /// Family left after removing the wavelet step and/or attention.
    /// Removing a component a family never had is a no-op; removing both
    /// from the proposed model names no registered family.
    pub fn with_ablation(self, disable_wavelet: bool, disable_attention: bool) -> Result<ModelKind> {
        let kind = match (self, disable_wavelet, disable_attention) {
            (ModelKind::WtEdLstmAm, true, true) | (ModelKind::EdLstmAm, _, true) | (ModelKind::WtEdLstm, true, _) => {
                return Err(Error::InvalidConfig(format!(
                    "{self} cannot drop both the wavelet step and attention"
                )))
            }
            (ModelKind::WtEdLstmAm, true, false) => ModelKind::EdLstmAm,
            (ModelKind::WtEdLstmAm, false, true) => ModelKind::WtEdLstm,
            (kind, _, _) => kind,
        };
        Ok(kind)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model {s:?}")))
    }
}

/// Layer widths of every architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelDims {
    pub encoder: [usize; 2],
    pub predictor: usize,
    pub head: usize,
    pub lstm: usize,
    pub gru: [usize; 2],
    pub mlp: [usize; 2],
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            encoder: [128, 32],
            predictor: 128,
            head: 128,
            lstm: 128,
            gru: [128, 128],
            mlp: [128, 64],
        }
    }
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.encoder[0],
            self.encoder[1],
            self.predictor,
            self.head,
            self.lstm,
            self.gru[0],
            self.gru[1],
            self.mlp[0],
            self.mlp[1],
        ];
        if all.contains(&0) {
            return Err(Error::config("layer widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default)]
    pub dims: ModelDims,
    /// Adds attention over the encoder's top-layer states to the
    /// attention models.
    #[serde(default)]
    pub layerwise_attention: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::new(ModelKind::WtEdLstmAm)
    }
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        ModelConfig {
            kind,
            dims: ModelDims::default(),
            layerwise_attention: false,
        }
    }

    pub fn with_dims(mut self, dims: ModelDims) -> Self {
        self.dims = dims;
        self
    }
}

/// Inputs of one mini-batch in the layouts the architectures consume.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// One `B x M` tensor per time step.
    pub steps: Vec<Tensor>,
    /// `B x (T*M)`
    pub flat: Tensor,
    /// `B x 1`
    pub last_observed: Tensor,
    /// `B x 1`
    pub targets: Tensor,
}

impl Batch {
    pub fn from_dataset(ds: &WindowedDataset, indices: &[usize]) -> Self {
        let last = indices.iter().map(|&i| ds.last_observed()[i]).collect();
        Batch {
            steps: ds.time_major(indices),
            flat: ds.flattened(indices),
            last_observed: Tensor::matrix(indices.len(), 1, last).expect("finite observations"),
            targets: ds.target_column(indices),
        }
    }

    pub fn len(&self) -> usize {
        self.targets.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Encoder-decoder embedding, LSTM predictor over the annotations and an
/// attention head.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionForecaster {
    pub autoencoder: EncoderDecoder,
    predictor: LstmLayer,
    /// `None` uses the final predictor state as the context.
    attention: Option<AttentionLayer>,
    layer_attention: Option<AttentionLayer>,
    head: Head,
}

/// Intermediate values of one attention-forecaster pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub encoding: Encoding,
    pub predictor_states: Vec<Var>,
    pub attention: Option<AttentionState>,
    pub layer_attention: Option<AttentionState>,
    pub prediction: Var,
}

impl AttentionForecaster {
    pub fn forward(&self, tape: &mut Tape, p: &Binding, xs: &[Var]) -> Result<ForwardTrace> {
        let encoding = self.autoencoder.encode(tape, p, xs)?;
        let batch = tape.value(xs[0]).rows();
        let init = self.predictor.zero_state(tape, batch);
        let states = self.predictor.forward(tape, p, &encoding.annotations, init)?;
        let hs: Vec<Var> = states.iter().map(|s| s.h).collect();
        let h_n = *hs.last().expect("non-empty");
        let attention = match &self.attention {
            Some(a) => Some(a.attend(tape, p, &hs, h_n)?),
            None => None,
        };
        let layer_attention = match &self.layer_attention {
            Some(a) => Some(a.attend(tape, p, &encoding.annotations, encoding.layer2_final.h)?),
            None => None,
        };
        let context = attention.map_or(h_n, |a| a.context);
        let prediction = self
            .head
            .forward_layered(tape, p, context, h_n, layer_attention.map(|a| a.context))?;
        Ok(ForwardTrace {
            encoding,
            predictor_states: hs,
            attention,
            layer_attention,
            prediction,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Architecture {
    Attention(AttentionForecaster),
    Lstm { lstm: LstmLayer, out: Dense },
    Gru { layers: [GruLayer; 2], out: Dense },
    Mlp(Mlp),
    Persistence,
}

/// A forecaster together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    n_inputs: usize,
    window: usize,
    arch: Architecture,
    params: ParamStore,
}

impl Model {
    /// Builds the architecture with parameters drawn from `seed`.
    pub fn new(config: ModelConfig, n_inputs: usize, window: usize, seed: u64) -> Result<Self> {
        config.dims.validate()?;
        if n_inputs == 0 || window == 0 {
            return Err(Error::config(
                "model needs at least one input channel and one time step",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let d = &config.dims;
        let arch = match config.kind {
            ModelKind::WtEdLstmAm | ModelKind::EdLstmAm | ModelKind::WtEdLstm => {
                let autoencoder = EncoderDecoder::new(&mut store, "ed", n_inputs, d.encoder, &mut rng);
                let predictor = LstmLayer::new(&mut store, "predictor", d.encoder[1], d.predictor, &mut rng);
                let attention = config
                    .kind
                    .uses_attention()
                    .then(|| AttentionLayer::new(&mut store, "attention", d.predictor, &mut rng));
                let layer_attention = (config.kind.uses_attention() && config.layerwise_attention)
                    .then(|| AttentionLayer::new(&mut store, "layer_attention", d.encoder[1], &mut rng));
                let head = Head::new(
                    &mut store,
                    "head",
                    d.predictor,
                    d.predictor,
                    d.head,
                    layer_attention.as_ref().map(|a| a.size),
                    &mut rng,
                );
                Architecture::Attention(AttentionForecaster {
                    autoencoder,
                    predictor,
                    attention,
                    layer_attention,
                    head,
                })
            }
            ModelKind::Lstm => Architecture::Lstm {
                lstm: LstmLayer::new(&mut store, "lstm", n_inputs, d.lstm, &mut rng),
                out: Dense::new(&mut store, "out", d.lstm, 1, &mut rng),
            },
            ModelKind::Gru => Architecture::Gru {
                layers: [
                    GruLayer::new(&mut store, "gru1", n_inputs, d.gru[0], &mut rng),
                    GruLayer::new(&mut store, "gru2", d.gru[0], d.gru[1], &mut rng),
                ],
                out: Dense::new(&mut store, "out", d.gru[1], 1, &mut rng),
            },
            ModelKind::Mlp => Architecture::Mlp(Mlp::new(
                &mut store,
                "mlp",
                &[window * n_inputs, d.mlp[0], d.mlp[1], 1],
                &mut rng,
            )),
            ModelKind::Persistence => Architecture::Persistence,
        };
        Ok(Model {
            config,
            n_inputs,
            window,
            arch,
            params: store,
        })
    }

    /// Rebuilds the architecture around stored parameters, which must match
    /// the layout (names and shapes) of a freshly built model.
    pub fn with_params(config: ModelConfig, n_inputs: usize, window: usize, params: ParamStore) -> Result<Self> {
        let mut model = Model::new(config, n_inputs, window, 0)?;
        if !model.params.same_layout(&params) {
            return Err(Error::config(format!(
                "stored parameters do not match the {} layout",
                config.kind
            )));
        }
        model.params = params;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn autoencoder(&self) -> Option<&EncoderDecoder> {
        match &self.arch {
            Architecture::Attention(f) => Some(&f.autoencoder),
            _ => None,
        }
    }

    /// Parameters of the encoder layers (empty without an encoder).
    pub fn encoder_params(&self) -> Vec<ParamId> {
        self.autoencoder().map_or_else(Vec::new, EncoderDecoder::encoder_params)
    }

    /// Parameters only the reconstruction objective touches.
    pub fn decoder_params(&self) -> Vec<ParamId> {
        self.autoencoder().map_or_else(Vec::new, EncoderDecoder::decoder_params)
    }

    fn check_batch(&self, batch: &Batch) -> Result<()> {
        let ok = batch.steps.len() == self.window
            && batch
                .steps
                .iter()
                .all(|s| s.cols() == self.n_inputs && s.rows() == batch.len())
            && batch.flat.cols() == self.window * self.n_inputs;
        if !ok {
            let got = batch.steps.first().map_or(0, Tensor::cols);
            return Err(Error::ShapeMismatch {
                op: "model_input",
                left: alloc::vec![batch.steps.len(), got],
                right: alloc::vec![self.window, self.n_inputs],
            });
        }
        Ok(())
    }

    fn record_steps(tape: &mut Tape, batch: &Batch) -> Vec<Var> {
        batch.steps.iter().map(|s| tape.leaf_copy(s, false)).collect()
    }

    /// `B x 1` predictions on normalized scale.
    pub fn predict(&self, tape: &mut Tape, p: &Binding, batch: &Batch) -> Result<Var> {
        self.check_batch(batch)?;
        match &self.arch {
            Architecture::Attention(f) => {
                let xs = Self::record_steps(tape, batch);
                Ok(f.forward(tape, p, &xs)?.prediction)
            }
            Architecture::Lstm { lstm, out } => {
                let xs = Self::record_steps(tape, batch);
                let init = lstm.zero_state(tape, batch.len());
                let states = lstm.forward(tape, p, &xs, init)?;
                out.forward(tape, p, states.last().expect("non-empty").h)
            }
            Architecture::Gru { layers, out } => {
                let xs = Self::record_steps(tape, batch);
                let h0 = tape.constant(Tensor::zeros(&[batch.len(), layers[0].hidden_size]));
                let hs1 = layers[0].forward(tape, p, &xs, h0)?;
                let h0 = tape.constant(Tensor::zeros(&[batch.len(), layers[1].hidden_size]));
                let hs2 = layers[1].forward(tape, p, &hs1, h0)?;
                out.forward(tape, p, *hs2.last().expect("non-empty"))
            }
            Architecture::Mlp(mlp) => {
                let x = tape.leaf_copy(&batch.flat, false);
                mlp.forward(tape, p, x)
            }
            Architecture::Persistence => Ok(tape.constant(batch.last_observed.clone())),
        }
    }

    /// Attention-model intermediates; `None` for the other architectures.
    pub fn trace(&self, tape: &mut Tape, p: &Binding, batch: &Batch) -> Result<Option<ForwardTrace>> {
        self.check_batch(batch)?;
        match &self.arch {
            Architecture::Attention(f) => {
                let xs = Self::record_steps(tape, batch);
                f.forward(tape, p, &xs).map(Some)
            }
            _ => Ok(None),
        }
    }

    /// Scalar training loss of the supervised objective.
    pub fn prediction_loss(&self, tape: &mut Tape, p: &Binding, batch: &Batch) -> Result<Var> {
        let y = self.predict(tape, p, batch)?;
        let t = tape.leaf_copy(&batch.targets, false);
        tape.mse(y, t)
    }

    /// Scalar reconstruction loss; `None` without an encoder.
    pub fn reconstruction_loss(&self, tape: &mut Tape, p: &Binding, batch: &Batch) -> Result<Option<Var>> {
        self.check_batch(batch)?;
        match self.autoencoder() {
            Some(ed) => {
                let xs = Self::record_steps(tape, batch);
                ed.reconstruction_loss(tape, p, &xs).map(Some)
            }
            None => Ok(None),
        }
    }

    /// Predictions for a batch without recording gradients.
    pub fn predict_values(&self, batch: &Batch) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let y = self.predict(&mut tape, &p, batch)?;
        Ok(tape.value(y).data().to_vec())
    }

    pub fn describe(&self) -> String {
        format!(
            "{} ({} parameters in {} tensors)",
            self.config.kind,
            self.params.numel(),
            self.params.len()
        )
    }
}
