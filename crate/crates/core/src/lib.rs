//! Exact arbitrage analysis for finite event-tree markets with bid-ask
//! spreads on the stock and different deposit and credit rates on cash.
//!
//! All arithmetic is over arbitrary-precision rationals.

pub mod detector;
pub mod io;
pub mod lp;
pub mod market;
pub mod pricing;
pub mod rational;
pub mod strategy;
pub mod tree;
pub mod verify;

pub use detector::{detect, ArbitrageReport};
pub use market::{MarketModel, ModelError};
pub use pricing::{construct, Construction, MartingaleTriple, PricingSystem};
pub use rational::Rational;
pub use strategy::{Portfolio, TradingStrategy};
pub use tree::{AdaptedProcess, EventTree, NodeId, PredictableProcess};
pub use verify::VerificationReport;
