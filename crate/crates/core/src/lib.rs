//! Noise-tolerant sequential quadratic programming with relaxations for
//! inequality-constrained problems `min f(x) s.t. c(x) ≤ 0` whose function
//! and derivative values are corrupted by bounded noise.

pub mod corpus;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod problem;
pub mod sqp;
pub mod subproblems;

pub use linalg::Mat;
pub use noise::{derive_eps, NoiseModel, NoisyEvaluation};
pub use problem::{violation, Evaluation, Problem, Provenance, Reference};
pub use sqp::{solve, SolverConfig, SolverReport, SolverStatus};
