//! Globally optimal, outlier-robust rigid registration of 3D correspondences.
//!
//! The loss sums per-coordinate absolute residuals, each truncated at the
//! pair's threshold. Its minimization splits into two small searches over
//! the unit sphere, each solved to global optimality by branch and bound
//! with exact one-dimensional inner solvers.
//!
//! ```
//! use nalgebra::Vector3;
//! use tear_core::{register, PointPairSet, SolverConfig};
//!
//! let x: Vec<_> = (0..20)
//!     .map(|i| {
//!         let f = i as f64;
//!         Vector3::new((0.7 * f).sin(), (1.3 * f).cos(), 0.1 * f - 1.0)
//!     })
//!     .collect();
//! let y: Vec<_> = x.iter().map(|p| p + Vector3::new(0.5, -0.2, 0.1)).collect();
//! let pairs = PointPairSet::with_uniform_xi(x, y, 0.05).unwrap();
//! let result = register(&pairs, &SolverConfig::default()).unwrap();
//! assert!((result.pose.translation - Vector3::new(0.5, -0.2, 0.1)).norm() < 1e-6);
//! ```

pub mod bnb;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod scalar;

pub use bnb::{run_bnb, BnBConfig, BnBReport, BranchProblem, Termination, Trace};
pub use error::{Error, Result};
pub use geometry::{
    angles_to_unit, check_rotation, cos_range, procrustes, residual_offset_range, AlphaInterval,
    AngleBox, BoxTrig, OffsetCoeffs, PointPairSet, PoseEstimate, ScalarInterval, UnitVector3,
};
pub use pipeline::{
    beta_of_alpha_range, derive_stage2_thresholds, pose_inliers, register, register_with,
    solve_cm1, solve_first_stage, solve_tear1, solve_tear2, solve_tls1, tear1_lower, tear1_upper,
    FirstStageLoss, RegistrationResult, ScalarStage, SearchStats, SolverConfig, SpherePoint,
    StageSolution,
};
pub use scalar::ScalarSolution;
