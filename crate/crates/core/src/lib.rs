//! Similarity-routed job dispatch across networks of servers, with
//! log-driven failover, a framed byte protocol and a deterministic
//! discrete-event simulator that binds them together.

pub mod catalog;
pub mod cli;
pub mod dispatch;
pub mod failover;
pub mod ids;
pub mod protocol;
pub mod ratio;
pub mod sim;

pub use ids::{ApplicationId, JobId, NetworkId, ServerId, ServerRef, UserId};
pub use ratio::Ratio;
