//! Fixed-time leader-follower consensus for second-order multi-agent systems.
//!
//! A group of double-integrator followers tracks a leader that only a subset
//! of them can measure. The scheme has two stages: a distributed observer
//! that reconstructs the leader state at every follower within a
//! user-predefined time, and a local sliding-mode controller that then drives
//! each follower onto the estimated leader trajectory, again within a
//! predefined time. Both stages exist in an autonomous variant (constant
//! gains, conservative settling-time bound) and a non-autonomous variant
//! (bounded time-varying gains that tighten the bound).
//!
//! The crate is `no_std` + `alloc`; all state is explicit and every
//! evaluation is a pure function, so identical inputs always reproduce
//! identical trajectories.
//!
//! Module map:
//! - [`graph`]: communication topology, Laplacian, leader-augmented matrix
//!   `M = Q + B` and its smallest eigenvalue.
//! - [`fixed_time`]: scalar fixed-time primitives - signed powers, the Gamma
//!   function, the settling-time bound `gamma(rho)` and the controller
//!   constants derived from it.
//! - [`scaling`]: time-varying gain schedules built from an integrable
//!   profile via a time reparametrization.
//! - [`protocols`]: observer / controller right-hand sides and gain-condition
//!   validators.
//! - [`sim`]: deterministic fixed-step integration, settling detection and
//!   Lyapunov monitoring.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod fixed_time;
pub mod graph;
pub mod protocols;
pub mod scaling;
pub mod sim;

pub use fixed_time::{FixedTimeParams, SignMode};
pub use graph::{ConnectionMatrices, Matrix, TopologySpec};
pub use protocols::{
    ControllerParams, ControllerStart, DisturbanceModel, LeaderModel, NonAutoParams,
    ObserverParams, Signal,
};
pub use scaling::{GainProfile, GainSchedule};
pub use sim::{Scenario, SimConfig, Trajectory};
