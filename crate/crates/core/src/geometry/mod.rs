//! Sphere charts, direction grids, indices and per-window frames.

pub mod frame;
pub mod index;
pub mod sphere;

pub use frame::{adapted_frame, AdaptedFrame, EtaBox, FrameCache, ETA_JACOBIAN};
pub use index::{
    enumerate_indices, support_nonempty, Case, CurveletIndex, FourierKey, IndexConfig, IntRange,
    SectorLabel,
};
pub use sphere::{
    chart, chart_inverse, direction_grid, hemisphere_weights, rotation_to, Direction,
    DirectionLabel, Hemisphere,
};
