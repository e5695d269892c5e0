//! intent-tc turns natural-language traffic-shaping intents into validated
//! Linux `tc` scripts.
//!
//! The pipeline has four grounded stages:
//!
//! 1. A queueing digital twin ([`queue_twin`]) simulates a two-class
//!    priority queue and freezes its steady-state metrics into a semantic
//!    model of enforceable thresholds.
//! 2. A traffic profile ([`traffic_profile`]) maps intent keywords to the
//!    network classes (subnets, ports, protocols) the intent talks about.
//! 3. A language model ([`lm_gateway`], prompted via [`prompting`]) drafts
//!    first a set of canonical sub-intents ([`subintent`]) and then a `tc`
//!    configuration ([`tc_lang`]).
//! 4. A deterministic rule-based critic ([`critic`]) repairs both drafts
//!    against the semantic model and profile, so the emitted script is
//!    correct even when the model is not.
//!
//! [`eval`] scores outputs against references and generates benchmarks;
//! [`pipeline`] wires the stages together end to end.

pub mod critic;
pub mod eval;
pub mod lm_gateway;
pub mod pipeline;
pub mod prompting;
pub mod queue_twin;
pub mod subintent;
pub mod tc_lang;
pub mod traffic_profile;
pub mod types;

pub use critic::{Critic, CriticReport, Violation};
pub use lm_gateway::{LmGateway, ModelConfig};
pub use prompting::{PromptAssets, PromptStrategy};
pub use queue_twin::{QueueMetrics, QueueParams, SemanticModel};
pub use subintent::{SubIntent, SubIntentSet};
pub use tc_lang::{TcConfig, TcStatement};
pub use traffic_profile::TrafficProfile;
pub use types::{Ipv4Cidr, PortRange, Priority, Protocol, TimeOfDay};
