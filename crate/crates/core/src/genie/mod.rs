//! Multicast machinery: distortion-induced orders, nested additive noise chains,
//! genie rate matrices, degraded-message-set rates and rate-loss checks.

mod chain;
mod lemma;
mod optimize;
mod orders;
mod rates;

pub use chain::{build_aux_chain, chain_laws, AuxChain};
pub use lemma::{verify_rate_loss_bounds, RateLossReport, RateLossSlack};
pub use optimize::{optimize_aux_chain, ChainSearch};
pub use orders::{induce_orders, induce_orders_for, OrderSlot, Orders};
pub use rates::{
    aggregate_throughput, dms_rates, genie_rate_matrix, quadratic_genie_rate_matrix, DmsRates,
    GenieRateMatrix,
};
