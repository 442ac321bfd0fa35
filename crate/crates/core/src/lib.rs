//! Measure-preserving polynomial approximation of invariant densities and
//! Lyapunov exponents of piecewise-monotone interval maps.

pub mod bilinear2d;
pub mod dd;
pub mod density;
pub mod error;
pub mod linalg;
pub mod lyapunov;
pub mod maps;
pub mod polybasis;
pub mod quadrature;
pub mod scalar;
pub mod study;
pub mod transfer;

pub use bilinear2d::{bilinear_basis, reconstruct_bilinear, BilinearPoly};
pub use dd::DoubleDouble;
pub use density::{l1_distance, project_density, Partition, PiecewiseDensity};
pub use error::{Error, Result};
pub use lyapunov::{lyapunov_estimate, lyapunov_estimate_default, lyapunov_reference, LyapunovResult};
pub use maps::{registry, Branch, Direction, MapModel, MapName, Segment};
pub use polybasis::{build_basis, build_basis_via_measure, BasisSet, MeasureInterpolant, Polynomial};
pub use quadrature::{gauss_legendre, integrate_adaptive, AdaptiveIntegrator, QuadratureRule};
pub use scalar::Real;
pub use study::{parse_list, run_study, Precision, StudyConfig, StudyRow, Target};
pub use transfer::{build_transfer_matrix, compute_invariant_density, solve_invariant_masses, MassVector, TransferMatrix};
