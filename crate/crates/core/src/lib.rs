//! Discrete fractional Laplacian on doubly symmetric domains, with solvers for
//! constrained minimizers and checks for the symmetry, sign, monotonicity and
//! maximum-principle properties they are expected to satisfy.

pub mod error;
pub mod geometry;
pub mod kernel;
pub mod operator;
pub mod solve;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{
    build_domain, check_condition_d, halfspace_mask, reflect, symmetrized_set, ConditionDReport, Domain,
    GridSpec, Reflection, RegionMask, Shape,
};
pub use kernel::{
    f_surrogate, four_point_deficit, kernel_difference, normalization_constant, reduced_deficit, KernelParams,
    WeightTable,
};
pub use operator::{
    antisymmetric_reduce, polarize, test_function_v, Field, NonlocalOperator, Parity, ReducedOperator,
    SymmetryTag,
};
pub use solve::{
    antisym_eig, critical_exponent, dirichlet_eig, lambda1_minus, linear_solve, p_minimize, sector_eig, torsion,
    FnNonlinearity, InitialGuess, LinearSolveResult, MinimizerResult, Nonlinearity, PowerNonlinearity, Sector,
    SolverOptions, SpectralResult, StepPolicy,
};
pub use verify::{
    check_f1, check_f2, check_monotonicity, check_sign, check_symmetry, hopf_decay_fit, lemma22_check,
    linearized_coefficient, moving_plane_scan, polarization_identity_check, scaled_family, small_volume_threshold,
    supersolution_check, DecayFitResult, FitWindow, MovingPlaneResult, SmallVolumeResult, VerificationReport,
};
