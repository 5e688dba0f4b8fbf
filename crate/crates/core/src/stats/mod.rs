//! Exact binomial inference and aggregation of observed choices.

pub mod beta;
pub mod binomial;
pub mod dataset;
pub mod table;

pub use binomial::{clopper_pearson, lower_tail, upper_tail, ConfidenceInterval};
pub use dataset::{ChoiceDataset, ChoiceRecord, GroupAnnotation, HypotheticalAnswer};
pub use table::{aggregate, dominated_share, format_share, DominatedShareReport, FrequencyTable};
