//! Bounded satisfiability, projection and normal forms for guard predicates.

mod dnf;
mod solver;
mod universe;

pub use dnf::{from_dnf, normalize, to_dnf, Clause, DnfError, DEFAULT_DNF_CAP};
pub use solver::{Projection, SatResult, Solver, Witness};
pub use universe::{BoundsError, Universe, DEFAULT_BUDGET};
