//! Discrete-time simulator of a slotted optical ring carrying periodic
//! C-RAN fronthaul streams and bursty best-effort traffic, with schedulers
//! that compute collision-free emission offsets.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod policy;
pub mod ring;
pub mod scheduler;
pub mod sim;
pub mod topology;
pub mod traffic;
