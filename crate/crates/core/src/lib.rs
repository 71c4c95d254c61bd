//! Optimal and contingency driving policies for a partially observable
//! intersection crossing, and a hierarchical controller that switches
//! between them.
//!
//! - [`env`]: the seedable crossing simulator.
//! - [`replay`]: FIFO experience storage.
//! - [`qlearn`]: action-value networks and double Q-learning.
//! - [`contingency`]: trajectory densities, penalty and concurrent training.
//! - [`planner`]: behaviour belief, rollouts and policy selection.
//! - [`bench`]: experiment config, training runs, evaluation and curve data.

pub mod bench;
pub mod contingency;
pub mod env;
pub mod planner;
pub mod qlearn;
pub mod replay;
