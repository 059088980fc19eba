//! Synthesis of safe, minimally restrictive supervisors for discrete event
//! systems, built on property-directed reachability over a SAT oracle.
//!
//! The pipeline: model a plant as a network of extended finite state machines
//! ([`model`]), encode it propositionally with one-hot locations and unary
//! integers ([`encode`]), run the synthesis engine ([`pdrc`]) to obtain either
//! a supervisor with an inductive safety certificate or an uncontrollability
//! counterexample, and decode the supervisor back into strengthened guards
//! ([`extract`]). A brute-force explicit-state engine ([`oracle`]) provides
//! ground truth at small scale for differential testing.

pub mod bench;
pub mod encode;
pub mod extract;
pub mod files;
pub mod logic;
pub mod model;
pub mod oracle;
pub mod pdrc;
pub mod randsys;
pub mod sat;
pub mod syntax;

pub use logic::{Clause, Cube, Lit, Var};
pub use model::{ExplicitState, GuardExpr, System};
pub use pdrc::{synthesize, Budget, SynthOptions, SynthesisResult};
