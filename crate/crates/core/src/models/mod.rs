//! Recurrent, feed-forward and attention forecasters built on [`crate::ndmath`].
//!
//! Every layer registers its weights in a shared [`ParamStore`] and reads them
//! back through a [`Binding`] on each pass, so one store can be bound as
//! trainable leaves or as constants.
//!
//! [`ParamStore`]: crate::ndmath::ParamStore
//! [`Binding`]: crate::ndmath::Binding

mod attention;
mod dense;
mod encoder_decoder;
mod forecaster;
mod gru;
mod head;
pub mod init;
mod lstm;

pub use attention::{attention_context, AttentionLayer, AttentionState};
pub use dense::{Dense, Mlp};
pub use encoder_decoder::{EncoderDecoder, Encoding};
pub use forecaster::{
    Architecture, AttentionForecaster, Batch, ForwardTrace, Model, ModelConfig, ModelDims, ModelKind,
};
pub use gru::GruLayer;
pub use head::Head;
pub use lstm::{GateActivations, LstmLayer, LstmState};
