//! Level tables, gap statistics, write-amplitude sensitivity and sub-cell
//! topology search.

mod levels;
mod report;
mod sensitivity;
mod topology;

pub use levels::{
    adjacent_gaps, closest_pairs, count_distinct, enumerate_levels, histogram, level_gaps,
    reference_memristance, Bin, Gap, LevelMode, LevelRow, LevelTable, REFERENCE_LEVELS,
};
pub use report::{write_gaps_csv, write_histogram_csv, write_levels_csv, write_sensitivity_csv};
pub use sensitivity::{sensitivity, Sampling, SensitivityReport, SensitivityRow};
pub use topology::{
    evaluate_wiring, sample_points, topology_search, Candidate, SearchOptions, TopologyReport,
};
