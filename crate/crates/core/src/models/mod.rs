//! Mappings from CO2 components to occupancy components.

mod dtw;
mod motif;
mod poly;
mod zpa;

pub use dtw::{dtw, dtw_similarity, DtwAlignment};
pub use motif::{
    align_motifs, find_repeated_sequence, phase_mean_motif, MotifSearch, SeasonalMap, SeasonalMotif,
};
pub use poly::{aic, correlate_trend, fit_poly_m5, pearson_r, PolyModel, TrendModel, RSS_FLOOR};
pub use zpa::{learn_zpa, local_time_of_day, VacantWindow, SECONDS_PER_DAY};
