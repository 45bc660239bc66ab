//! Images, preprocessing, the partial-scan environment, dihedral
//! augmentation and static baseline paths.

mod dataset;
mod env;
mod paths;
mod preprocess;
mod raster;

pub use dataset::{split_dataset, synth_dataset, ImageDataset};
pub use env::{rasterize_scan, EnvConfig, EpisodeState, PartialScan, ScanHistory};
pub use paths::{resample_polyline, scan_from_positions, spiral_path};
pub use preprocess::{gaussian_kernel, preprocess, ProcessedImage};
pub use raster::{augment_dihedral, dihedral_point, pixel_index, Raster};
