//! Task bench: demonstration-matched policies, metrics and reports.

pub mod metrics;

pub use metrics::{
    coverage_ratio, fold_iou, fold_target_mask, fold_target_positions, raster_iou, rasterize,
    FoldTarget, SilhouetteMask, RASTER_RESOLUTION,
};
