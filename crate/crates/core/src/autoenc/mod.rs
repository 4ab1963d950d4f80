//! End-to-end learned wiretap link.

pub mod checkpoint;
pub mod loss;
pub mod model;
pub mod nn;
pub mod train;

pub use checkpoint::{Checkpoint, SystemCheckpoint};
pub use loss::{argmax, loss_e, loss_r, loss_total, SoftOutput, PROB_FLOOR};
pub use model::{
    backward_batch, batch_loss, decode, encode, encode_batch, forward_batch, Architecture,
    ForwardCache, LossParts, NetParams, PowerNorm, Scenario, SnrDraw,
};
pub use nn::{Activation, Adam, LayerSpec, Mlp};
pub use train::{eve_best_response, train, BestResponseConfig, EpochStats, History, TrainConfig};
