//! Classifiers: linear SVM solver, one-vs-one wrapper, baselines, grid search and external predictions.

pub mod classifier;
pub mod external;
pub mod grid;
pub mod majority;
pub mod ovo;
pub mod svm;

pub use classifier::{Model, ModelFile, TextClassifier, MODEL_FORMAT_VERSION};
pub use external::{load_external_predictions, PredictionSet};
pub use grid::{cross_validate, grid_search, CvOutcome, GridOutcome, GridSpec};
pub use majority::{train_majority, MajorityModel};
pub use ovo::{balanced_weights, train_ovo, ClassWeight, OvOModel, SvmConfig};
pub use svm::{train_binary_svm, LinearModel, SolverParams, TrainInfo};
