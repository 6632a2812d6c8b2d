//! Evaluation suite: held-out purchase accuracy, category co-purchase PMI,
//! purchase concentration across scales, token efficiency of fast memory
//! and information spread over topologies.

mod accuracy;
mod concentration;
pub mod export;
mod network;
mod pmi;
mod purchase;
mod tokens;

pub use accuracy::{purchase_accuracy, recount_from_log, AccuracyReport, UserHit};
pub use concentration::{concentration_report, herd_ledger, ranked_counts, shares, ConcentrationReport, HerdConfig, ScaleConcentration};
pub use network::{dissemination_report, welch_greater, NetworkReport, TopologyTrace, WelchTest, COMPARED_TOPOLOGIES};
pub use pmi::{category_map, independent_ledger, pmi_matrix, PmiMatrix, DEFAULT_SMOOTHING};
pub use purchase::{run_purchase_eval, synthetic_histories, PurchaseEvalConfig, PurchaseEvalOutput, UserHistory, STANDARD_SETTINGS};
pub use tokens::{token_efficiency, CategoryTokens, TokenEfficiency};
