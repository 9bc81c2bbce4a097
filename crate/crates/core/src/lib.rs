//! Compile BIP component models into one-loop programs and sequential
//! circuits, and verify the circuits by bounded model checking and
//! k-induction.

pub mod aig;
pub mod bip;
pub mod expr;
pub mod lockstep;
pub mod olp;
pub mod pipeline;
pub mod semantics;
pub mod syntax;
pub mod translate;
pub mod verify;
