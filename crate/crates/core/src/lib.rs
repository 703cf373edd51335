//! Finite-volume solver for the Dirichlet problem of the fractional p-Laplacian with
//! a logistic reaction `lambda u^(q-1) - u^(r-1)`.

pub mod eigen;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod logistic;
pub mod operator;
pub mod params;
pub mod quadrature;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{build_grid, CellBox, DomainSpec, Grid};
pub use kernel::{assemble, assemble_cached, CacheStatus, KernelWeights, WeightCache};
pub use params::{classify_regime, validate_params, ProblemParams, RawParams, Regime};
pub use operator::{apply_operator, gagliardo_energy, lp_norm, mass_dot, mass_norm, signed_power, DiscreteFunction};
pub use eigen::{principal_eigenpair, rayleigh_quotient, EigenOptions, EigenPair};
pub use logistic::{
    brezis_oswald_applicable, energy_phi, grad_phi, reaction, reaction_primitive, truncated_energy,
    truncated_grad, truncated_primitive, truncated_reaction, LogisticParams, TruncatedReaction,
    TruncationKind,
};
pub use solver::{
    detect_threshold, lower_bound_lambda0, minimize, mountain_pass, solve, solve_branch_point, sweep,
    torsion_solve, Branch, BranchPoint, Initial, MountainPassOptions, MountainPassReport, SolveOptions,
    SolveReport, Status, ThresholdOptions, ThresholdReport,
};
pub use verify::{CheckResult, Outcome, SuiteConfig, SuiteGroup};
