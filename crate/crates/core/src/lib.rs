//! Knot dynamics laboratory: rational tangle algebra, beaded knot
//! embeddings, and self-repulsion evolution with topology-preserving step
//! control.

pub mod tangle;
pub mod curve;
pub mod embedding;
pub mod dynamics;
pub mod experiments;
