//! Modified Enflo spaces and the machinery around their non-embeddability
//! into Hilbert space.
//!
//! - [`space`]: spaces, segments, isometries, double simplices.
//! - [`poincare`]: the double-simplex inequality, class means, the averaged
//!   chain and the ratio certificate.
//! - [`embeddings`]: candidate maps and empirical moduli.
//! - [`graphgroup`]: unit-distance graphs, wedges, and the edge-loop group.
//! - [`oracle`]: brute-force references.

pub mod budget;
pub mod embeddings;
pub mod error;
pub mod graphgroup;
pub mod oracle;
pub mod poincare;
pub mod rng;
pub mod space;
pub mod value;

pub use budget::Budget;
pub use embeddings::EmbeddingMap;
pub use error::{Error, Result};
pub use num_rational::BigRational;
pub use space::{DoubleSimplex, Isometry, Point, Segment, SpaceSpec};
pub use value::Value;
