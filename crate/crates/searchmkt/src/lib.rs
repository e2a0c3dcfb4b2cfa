//! Equilibrium machinery for sequential-search markets where information
//! about match quality is sold by brokers.
//!
//! An agent samples opportunities one per period at a flow cost, never
//! observing quality directly; brokers post priced signals, and the agent
//! decides what to buy and when to stop. The crate computes the stationary
//! objects this market is built from and the equilibrium analysis on top of
//! them:
//!
//! - [`prior`]: quality distributions (uniform, beta, tabulated) with the
//!   partial expectations everything else consumes;
//! - [`signals`]: posterior-mean distributions of common signal families and
//!   their option values;
//! - [`search`]: reservation values for a given information regime and
//!   comparative statics in the search cost;
//! - [`contracts`]: on-path priced disclosures, willingness to pay for a
//!   deviating offer, and the cost thresholds that separate competitive
//!   from extractive market structures;
//! - [`sets`]: feasible and attainable payoff polytopes, welfare images,
//!   and regulator comparisons between monopoly and competition;
//! - [`engine`]: strategy automata, best responses, exact payoffs, Monte
//!   Carlo simulation, and incentive verification;
//! - [`oracle`]: independent brute-force checks of the broker minimax value
//!   and of the attainable set via grid elimination.

pub mod contracts;
pub mod engine;
pub mod error;
pub mod numerics;
pub mod oracle;
pub mod prior;
pub mod profile;
pub mod search;
pub mod sets;
pub mod signals;

pub use error::{Error, Result};
pub use prior::Prior;
pub use profile::PayoffProfile;
pub use signals::Signal;
