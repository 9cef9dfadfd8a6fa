//! Flexible GMRES and flexible FOM with variable inner preconditioners,
//! a priori/a posteriori residual bounds for them, and constructive
//! worst-case systems on which those bounds hold with equality.

// NaN-rejecting `!(x < y)` checks and index loops in triangular solves are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adversarial;
pub mod bounds;
pub mod harness;
pub mod linalg;
pub mod solver;
