//! Krylov solvers for symmetric linear systems that may be singular,
//! indefinite or inconsistent.
//!
//! The solvers ([`cg_solve`], [`cr_solve`], [`minres_solve`]) and the
//! pseudo-inverse drivers ([`cg_pis_solve`], [`cr_pis_solve`]) only touch the
//! matrix through [`SymmetricOperator`]. The [`oracle`] module holds dense
//! reference computations used to check them.

pub mod diagnostics;
pub mod error;
pub mod linops;
pub mod oracle;
pub mod pis;
pub mod solvers;
pub mod synth;
pub mod vector;

pub use diagnostics::{
    residual_gap, spectral_norm, stability_metrics, IterationRecord, RecordedVectors,
    StabilityReport, Trace,
};
pub use error::{Error, Result};
pub use linops::{
    assemble_poisson_neumann, symmetry_probe, DenseSymmetricOperator, DiagonalOperator, Domain,
    LoadedOperator, PoissonNeumannOperator, SineProblem, SymmetricOperator,
};
pub use oracle::{DenseMatrix, DenseProblem, SpectralData};
pub use pis::{cg_pis_solve, cr_pis_solve, project_out, PisReport};
pub use solvers::{
    cd_init, cg_solve, cr_solve, minres_solve, npc_certificate, solve, CdState, CurvaturePolicy,
    Method, MinresState, SolveReport, SolverOptions, StepEvent, Termination, Truth,
};
pub use synth::{gen_matrix, gen_rhs, Family, SynthSpec};
