//! Deterministic discrete-event simulator of NDN forwarding under interest
//! flooding, with per-interface detection, local rate limiting and push-back.

pub mod ids;
pub mod message;
pub mod metrics;
pub mod name;
pub mod poseidon;
pub mod router;
pub mod scenario;
mod serde_ms;
pub mod sim;
pub mod time;
pub mod traffic;
pub mod trust;

pub use ids::{IfaceId, NodeId};
pub use message::{AlertMessage, ContentObject, Interest, Message};
pub use metrics::{relative_throughput, relative_throughput_since, MetricsBundle, MetricsRecord};
pub use name::{Name, NameError};
pub use poseidon::{PoseidonConfig, PoseidonIfaceState};
pub use router::{ForwardDecision, Forwarder, Pit, PitEntry};
pub use scenario::{load_scenario, PoseidonMode, Scenario, ScenarioError, Topology};
pub use sim::{run_scenario, RunSummary, World};
pub use time::SimTime;
pub use trust::{verify_signature, TrustRegistry};
