//! Discrete-event engine: event queue, links and the simulated world.

pub mod event;
pub mod link;
mod world;

pub use event::{EventQueue, SchedulingInPast};
pub use link::{LinkDirection, LinkParams};
pub use world::{run_scenario, RouterStats, RunSummary, World};
