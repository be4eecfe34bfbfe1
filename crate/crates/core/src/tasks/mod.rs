//! Data generation, forward operators and evaluation for the fitting tasks.

mod chamfer;
mod image;
pub mod io;
mod occupancy;
mod phantom;
mod radon;

pub use chamfer::{chamfer_distance, chamfer_distance_brute_force, chamfer_distance_root, PointSet};
pub use image::{bundled_test_image, make_coordinate_grid, ImageFitTask, ImageGrid};
pub use occupancy::{
    extract_boundary_points, lattice_points, sample_occupancy, AnalyticShape, OccupancyField, OccupancyTask, VoxelGrid,
};
pub use phantom::{shepp_logan, shepp_logan_density};
pub use radon::{
    ct_loss, radon_adjoint, radon_forward, radon_transform, CtTask, RadonGeometry, RadonOperator, Sinogram,
};
