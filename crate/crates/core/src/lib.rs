//! Speed of the simple random walk on the infinite percolation cluster of a
//! Galton-Watson tree.
//!
//! [`offspring`] holds the offspring laws, [`percolation`] the extinction
//! probability and the backbone/bush decomposition, [`speed`] the analytic
//! speeds and [`simulate`] the Monte Carlo walks that check them.

pub mod cli;
pub mod error;
pub mod offspring;
pub mod percolation;
pub mod simulate;
pub mod speed;

pub use error::{Error, Result};
pub use offspring::{parse_law, Family, OffspringLaw};
pub use percolation::{solve_rho, thinned_pmf, PercolatedModel};
pub use simulate::{estimate_speed, run_walk, simulate_pipes, WalkEstimate};
pub use speed::{
    backbone_speed, check_condition, cluster_speed, eq1_speed, pipes_speed, sweep, SpeedCurvePoint,
};
