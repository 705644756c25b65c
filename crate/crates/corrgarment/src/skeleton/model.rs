//! Learned skeleton extraction (placeholder while the module is built up).

pub struct SkeletonConfig;
pub struct SkeletonModel;

pub fn train_skeleton() {}
pub fn predict_skeleton() {}
pub fn project_skeleton() {}
