//! Community layer: pairing weights, the mutual-row-minimum pairing rule,
//! loss-adjusted settlement, and per-step coordination into a ledger.

mod coordinate;
mod ledger;
mod settle;
mod weights;

use thiserror::Error;

pub use coordinate::{
    coordinate, coordinate_step, coordinate_traced, CoordinationPlan, PairingEvent, StepLedger, TransactionLedger,
};
pub use ledger::{ledger_csv_string, read_ledger_csv, write_ledger_csv, LedgerRow};
pub use settle::{settle_pair, Settlement};
pub use weights::{build_weight_matrix, find_pairing, mask_by_sign, WeightMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommunityError {
    #[error("weight between {a} and {b} is {w}; loss fractions must lie in [0, 1)")]
    InvalidWeight { a: String, b: String, w: f64 },
    #[error("weight matrix is not symmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },
    #[error("expected {expected} microgrids, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("cannot settle {x} ({px} kW) with {y} ({py} kW) at weight {w}")]
    Precondition { x: usize, y: usize, px: f64, py: f64, w: f64 },
}
