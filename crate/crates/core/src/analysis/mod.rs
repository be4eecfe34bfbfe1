//! Feature-space counting, symbolic split expansions, kernel spectra and
//! feature-map diagnostics.

mod fd;
mod features;
mod ntk;
mod poly;
mod sweep;

pub use fd::{finite_difference_gradients, max_relative_error, FD_DEFAULT_STEP, FD_MAX_PARAMS};
pub use features::{
    dump_first_layer_features, fft_peak_count, first_layer_features, magnitude_spectrum, mean_peak_count, tile_mosaic,
    PEAK_FRACTION,
};
pub use ntk::{
    empirical_ntk, output_jacobian, summarize_spectrum, DecadeBucket, NtkReport, NtkSummary, HIGHEST_DECADE,
    LOWEST_DECADE, MAX_NTK_SAMPLES,
};
pub use poly::{
    enumerate_monomials, expand_split_layer, feature_space_dim, optimal_split, split_layer_polynomials, Monomial,
    OptimalSplit, PolynomialMap, EXPANSION_LIMIT,
};
pub use sweep::{split_sweep, SweepBest, SweepReport, SweepRow};
