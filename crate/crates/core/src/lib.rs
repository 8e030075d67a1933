//! Chain-level Hochschild homology of filtered graded-commutative algebras
//! over prime fields.
//!
//! The pipeline: a finite graded-commutative `F_p`-algebra with a decreasing
//! multiplicative filtration is tensored over a simplicial finite set (the
//! Loday construction), the resulting chain complex is filtered by total
//! weight (the May filtration), and the spectral sequence of that filtration
//! is run to its stable page and reconciled with the homology of the total
//! complex. Everything is exact; there is no floating point anywhere.

pub mod algebra;
pub mod corpus;
pub mod fp;
pub mod loday;
pub mod mayfilt;
pub mod poset;
pub mod series;
pub mod simplicial;
pub mod specseq;
