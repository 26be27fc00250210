//! Annotation scheme, rule engine, labeling rounds, label store and the HTTP service.

pub mod api;
pub mod rounds;
pub mod rules;
pub mod service;
pub mod store;
pub mod taxonomy;

pub use rounds::{CategoryKeywords, Round, RoundSpec, Strategy, Targets};
pub use rules::{derive, derive_category, Derivation, DimensionAnnotation, MessageType, Perspective, Person};
pub use service::{Annotator, Resolution, Submission};
pub use store::{LabelRecord, LabelStore};
pub use taxonomy::{FineCategory, Level};
