//! Listening-study statistics: screening, descriptives, signed-rank tests,
//! agreement, ranking permutations and metric correlation.

mod correlation;
mod krippendorff;
mod ranking;
mod ratings;
mod screening;
mod summary;
mod wilcoxon;

pub use correlation::{correlate, correlation_p_value, pearson, Correlation};
pub use krippendorff::krippendorff_alpha;
pub use ranking::{ranking_permutations, PermutationCounts, TIED};
pub use ratings::{
    ExportDocument, ExportRating, ExportResponse, ExportRow, ExportSession, RaterInfo, Rating,
    RatingsTable, ANCHOR, DEMOGRAPHIC_FIELDS, REFERENCE,
};
pub use screening::{mushra_band, screen_raters, Band, Removal, RemovalReason, Screening};
pub use summary::{
    analyze, correlate_metrics, describe, summarize, system_conditions, write_plot_data,
    AgreementUnit, AnalysisOptions, AnalysisReport, ConditionSummary, MetricCorrelation, Pairing,
    PairwiseTest, SubgroupSummary, DEFAULT_THRESHOLD,
};
pub use wilcoxon::{average_ranks, wilcoxon_signed_rank, StatTestResult, TestMethod, EXACT_MAX_N};
