//! A checker for classical second-order natural deduction with direct rules
//! for the simplest branching quantifier, plus a finite standard-model
//! evaluator used as a semantic oracle and a regression corpus of
//! machine-checked proofs.

pub mod constructions;
pub mod corpus;
pub mod kernel;
pub mod model;
pub mod parse;
pub mod syntax;
