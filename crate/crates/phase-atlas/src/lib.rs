//! phase-atlas certifies, by exact rational computation, the geometry a
//! third-order differential system needs in order to continue its solutions
//! through movable poles, and then actually continues them numerically.
//!
//! The subject is the three-parameter system
//!
//! ```text
//! dx/dt = x(t - x - 2z) + a1
//! dy/dt = y(-t + y + 2z) + a2
//! dz/dt = z(t - 2y - z) + a3
//! ```
//!
//! whose phase space is covered by eight polynomial charts U0..U7 glued by
//! birational transformations. The crate
//!
//! - implements exact sparse rational-function algebra with a parser
//!   ([`symcore`]),
//! - pushes vector fields through birational coordinate changes
//!   ([`vfield`]),
//! - builds the eight-chart atlas and replays the blow-up and blow-down
//!   sequence that produces it, with golden intermediate systems
//!   ([`atlas`]),
//! - locates the accessible singular points on the boundary of projective
//!   3-space and computes their local indices ([`singular`]),
//! - verifies the two Backlund symmetries, derives the full symmetric
//!   coefficient family, and checks the decoupling and reduction claims
//!   ([`symmetry`]),
//! - integrates the system numerically with a Dormand-Prince 5(4) pair,
//!   switching charts to cross poles, and estimates pole residues
//!   ([`mero`]).
//!
//! The thin `phase-atlas` binary exposes `verify`, `derive`, `integrate`
//! and `transform` subcommands over the same library calls; the `examples/`
//! directory shows one runnable program per capability.

pub mod atlas;
pub mod cli;
pub mod fixtures;
pub mod mero;
pub mod report;
pub mod singular;
pub mod symcore;
pub mod symmetry;
pub mod vfield;

pub use report::{Check, Report, Status};
