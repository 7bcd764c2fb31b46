//! Dataset construction: synthetic generation, the UCI Air Quality loader,
//! feature standardisation, train/validation/test splitting and a portable
//! text format.

pub mod air_quality;
pub mod portable;
pub mod scaler;
pub mod split;
pub mod synthetic;

pub use air_quality::{load_air_quality, parse_air_quality, AirQuality, LoadReport};
pub use portable::{
    parse_portable, read_portable, to_portable_string, write_portable, PortableDataset,
};
pub use scaler::{apply_scaler, fit_scaler, invert_scaler, ScalerParams};
pub use split::{split, split_sizes, Splits, TaskSplit};
pub use synthetic::{generate_synthetic, SyntheticSpec, SyntheticTruth, TaskSizes};
