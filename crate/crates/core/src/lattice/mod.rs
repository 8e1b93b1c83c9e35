//! Nested-lattice implementation of linear-assignment Gel'fand–Pinsker coding
//! over the E8 lattice (`T = 4` complex symbols per block).

pub mod codec;
pub mod e8;
pub mod filters;
pub mod nested;
pub mod sim;
pub mod sphere;

pub use codec::{decode, encode, Decoder};
pub use e8::{e8_closest_point, e8_generator, Mat8, Vec8};
pub use filters::{build_filters, build_filters_from, complex_block, expand, to_real, FilterSet, SIGNAL_SECOND_MOMENT};
pub use nested::{build_nested, build_nested_with, mod_lambda, second_moment_mc, Lattice, NestedPair, CALIBRATION_SAMPLES};
pub use sim::{
    codeword_error_sim, codeword_error_sim_with, design_for_snr, transmit_marginal, wilson_interval, LatticeRow, LatticeScenario, LatticeScheme, T,
};
pub use sphere::SphereDecoder;
