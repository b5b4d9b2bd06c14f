//! Brute-force ground truth for small systems.

pub mod ctmc;
pub mod schur;
pub mod table;
pub mod young;

pub use ctmc::{ctmc_height_dist, ctmc_path_dist};
pub use schur::{
    cauchy_residual, height_dist_truncated, schur_measure_prob, schur_poly, schur_process_joint_heights,
    schur_process_prob, skew_schur, weight_cap_for, Specialization,
};
pub use table::DistributionTable;
pub use young::YoungDiagram;
