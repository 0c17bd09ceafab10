//! Active selection: greedy covering algorithms, uncertainty baselines and
//! the multi-round protocol.

mod greedy;
mod protocol;
mod uncertainty;

pub use greedy::{
    density_aware_greedy, density_aware_greedy_observed, k_center_greedy, k_center_greedy_observed,
    Pick, SelectionState,
};
pub use protocol::{run_rounds, Algorithm, EstimatorConfig, ProtocolConfig, ProtocolRun, RoundResult};
pub use uncertainty::{entropy, filter_candidates, margin_score, top_by_score, uncertainty_select, ScoreMap, Strategy};
