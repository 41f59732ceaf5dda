//! JSON documents and the random model generator.

pub mod document;
pub mod generator;

pub use document::{parse_model, serialize_model, Certificate, DocumentError, ModelDocument};
pub use generator::{generate, GeneratorConfig, GeneratorMode};
