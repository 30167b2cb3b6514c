//! Simulation and learning core for multi-user VR frame offloading over
//! NOMA downlink channels.
//!
//! - [`env`]: channel model, delay/energy model, tolerance dynamics, episodes.
//! - [`nets`]: dense networks with analytic gradients, categorical policies, Adam.
//! - [`agents`]: hybrid-reward PPO, plain PPO, hybrid-reward DQN, and a random baseline.
//! - [`oracle`]: brute-force optimum and objective recomputation for tiny instances.

pub mod env;
pub mod nets;
pub mod agents;
pub mod oracle;
