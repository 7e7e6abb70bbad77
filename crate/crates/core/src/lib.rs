//! Risk networks over factoring ledgers.
//!
//! The pipeline turns a ledger of seller/debtor payments into three weighted
//! risk networks (transaction amounts, economic sectors, geographical areas)
//! plus an undirected network of parties sharing an owner or representative.
//! Per-client social-network metrics feed Pearson screening and logistic
//! risk models; shared-owner components drive cluster alerts.
//!
//! Arc orientation in the directed networks is debtor -> seller, so a
//! party's in-degree measures its activity as a seller.

pub mod error;
pub mod export;
pub mod features;
pub mod ledger;
pub mod metrics;
pub mod network;
pub mod pipeline;
pub mod scoring;
pub mod stats;
pub mod synth;
pub mod tables;
pub mod tacit;

pub use error::{Error, ErrorKind, Result};
pub use features::ClientFeatureRow;
pub use ledger::{Amount, HighRisk, Ledger, Party, PartyId, TransactionRecord};
pub use network::{NetworkKind, RiskNetwork};
pub use tables::RiskTables;
