//! Polarization-enhanced non-line-of-sight (NLOS) imaging toolkit.
//!
//! Builds light-transport matrices for passive and active NLOS
//! configurations, with and without a camera-side linear polarizer,
//! quantifies the conditioning improvement the polarizer brings, and
//! reconstructs hidden scenes with a TV-regularized ADMM solver.
//!
//! The pipeline stages are exposed both as library modules and through
//! the `polnlos` CLI binary (see the `io` module for file formats).

pub mod brdf;
pub mod conditioning;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod polarization;
pub mod reconstruct;
pub mod registry;
pub mod transport;

pub use error::{Error, Result};

/// 3D position or direction in meters. Directions are unit-length.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Speed of light, exact SI value, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Tool version reported in run manifests and CSV headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Initialize the global rayon pool honoring `POLNLOS_THREADS`.
///
/// Call at most once per process; later calls are no-ops. Matrix
/// assembly is pure per entry, so the thread count never changes
/// results, only wall-clock time.
pub fn init_threads() {
    if let Ok(v) = std::env::var("POLNLOS_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
