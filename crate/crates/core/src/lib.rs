pub mod config;
pub mod dse;
pub mod electrical;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod photonic;
pub mod selector;
pub mod sim;
pub mod topology;
pub mod traffic;

pub use error::{Error, Result};
