//! Training orchestration: subject-disjoint splitting, Adam, the epoch
//! loop with early stopping, and recording-level prediction.

pub mod adam;
pub mod predict;
pub mod split;
pub mod train;

pub use adam::AdamState;
pub use predict::{
    predict_recording, stitch_prediction, PredictConfig, PredictError, RecordingPrediction,
};
pub use split::{split_dataset, SplitError, SplitPlan};
pub use train::{batch_schedule, train, EpochLog, TrainError, TrainOutcome, TRAIN_LOG_HEADER};

// Hyper-parameters live next to the network so checkpoints can embed them;
// they are re-exported here because training owns their meaning.
pub use crate::nn::Hyperparams;
