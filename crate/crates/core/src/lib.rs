//! Sequential belief-propagation decoding of LDPC codes with cluster
//! schedules learned by tabular Q-learning, plus meta-learned variants that
//! adapt the schedule to the channel SNR.
//!
//! The crate is organised bottom-up:
//!
//! - [`code`]: parity-check matrices, array-based and lifted codes, alist I/O,
//!   Tanner graphs and check-node clustering;
//! - [`channel`]: BPSK over AWGN, LLRs and datasets;
//! - [`bp`]: sum-product message passing with per-cluster flooding steps;
//! - [`mdp`]: rewards, action-value tables, exploration and scheduling;
//! - [`train`]: the single-task, agile-meta and meta training procedures;
//! - [`policy`]: persisted scheduling policies;
//! - [`decode`] and [`campaign`]: frame decoding and Monte Carlo campaigns.

pub mod bp;
pub mod campaign;
pub mod channel;
pub mod code;
pub mod decode;
pub mod error;
pub mod mdp;
pub mod policy;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
