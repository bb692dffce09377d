//! Neural motion planning by imitation: grid/A* demonstrations, a
//! from-scratch LSTM waypoint predictor, rollout-based planning with repair
//! and rewiring, and a sampling-based baseline for comparison.

pub mod bench;
pub mod dataset;
pub mod env;
pub mod manifest;
pub mod network;
pub mod rollout;
pub mod rrt_star;
pub mod search;
pub mod svg;
