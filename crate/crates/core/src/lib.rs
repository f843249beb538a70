//! Decentralized contextual linear bandits over a network of nodes.
//!
//! Each node sees a context split into a block shared across the network and
//! a node-specific block. Policies range from fully independent LinUCB to a
//! single centralized model, with two networked learners in between that
//! exchange information about the shared block inside connected components.

pub mod domain;
pub mod environment;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod netlinucb;
pub mod netsgducb;
pub mod policy;
pub mod ridge;
pub mod weights;

pub use domain::{Context, Dimensions, RoundRecord, Topology};
pub use environment::{preset, Environment, InstanceConfig};
pub use error::{Error, Result};
pub use netlinucb::NetLinUcb;
pub use netsgducb::{NetSgdUcb, SgdHyperparams};
pub use policy::{Decision, Policy};
pub use ridge::{DisjointLinUcb, RidgeState, SharedLinUcb};
pub use weights::WeightMatrixSet;
