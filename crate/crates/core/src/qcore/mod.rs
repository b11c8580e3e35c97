//! Composite Hilbert spaces, operators, states, exact propagation and metrics.
//!
//! Conventions fixed here and used everywhere downstream:
//! * `σy = [[0, −i], [i, 0]]`.
//! * `|e⟩` is computational index 0 and `|g⟩` is index 1, so `σz|e⟩ = +|e⟩`
//!   and `σ+ = |e⟩⟨g| = (X + iY)/2`.
//! * Factor 0 is the leftmost tensor factor (most significant index).

pub mod expm;
pub mod metrics;
pub mod ode;
pub mod ops;
pub mod pauli;
pub mod random;
pub mod schedule;
pub mod space;
pub mod state;

pub use expm::{expm, unitary_exp, HermitianEig};
pub use metrics::{fidelity, fidelity_vec, op_norm, partial_trace, trace_distance, trace_norm};
pub use ode::{dp45, OdeOptions, OdeStats};
pub use ops::{BosonOp, OperatorSum, Prim, QubitOp, Term};
pub use pauli::{pauli_decompose, pauli_decompose_dense, Pauli, PauliString};
pub use schedule::{evolve, propagator, Evolved, Generator, Schedule};
pub use space::{Factor, HilbertSpace, DEFAULT_N_MAX, MAX_DIM};
pub use state::{expectation, expectation_dense, DensityMatrix, PureState, QState};

/// Default integrator tolerance for time-dependent generators.
pub const DEFAULT_TOL: f64 = 1e-10;
