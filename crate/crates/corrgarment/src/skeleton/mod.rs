//! Garment skeletons: ordered keypoints plus pairwise edge activations.
//!
//! A skeleton is the cross-object bridge: keypoint `k` of every garment in a
//! category refers to the same semantic landmark, so aligning keypoints by
//! order gives topological correspondence between different garments. The
//! analytic skeleton is read off the generator template; the learned one (see
//! [`crate::skeleton::model`]) is trained from flat observations and anchored
//! to the template ordering on one seed garment.

use serde::{Deserialize, Serialize};

use crate::Vec3;

pub mod model;

pub use model::{
    predict_skeleton, project_skeleton, train_skeleton, SkeletonConfig, SkeletonModel,
};

/// Hard cap on keypoint count, matching the bound the training defaults obey.
pub const MAX_KEYPOINTS: usize = 50;

/// One skeleton keypoint: a 3D position in the flat pose plus the nearest
/// mesh vertex it snaps to (the handle used for projection by tracing).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Keypoint {
    pub position: Vec3,
    pub vertex_id: usize,
}

/// Ordered keypoints with symmetric pairwise edge activations in `[0, 1]`,
/// stored upper-triangular.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Skeleton {
    pub keypoints: Vec<Keypoint>,
    activations: Vec<f64>,
}

impl Skeleton {
    pub fn new(keypoints: Vec<Keypoint>) -> Self {
        assert!(keypoints.len() <= MAX_KEYPOINTS, "skeleton too large");
        let s = keypoints.len();
        Skeleton {
            keypoints,
            activations: vec![0.0; s * (s.saturating_sub(1)) / 2],
        }
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    fn tri_index(&self, i: usize, j: usize) -> usize {
        assert!(i != j, "no self edges");
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let s = self.keypoints.len();
        // row i starts after all shorter rows of the upper triangle
        i * s - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Edge activation for the unordered pair {i, j}.
    pub fn activation(&self, i: usize, j: usize) -> f64 {
        self.activations[self.tri_index(i, j)]
    }

    pub fn set_activation(&mut self, i: usize, j: usize, value: f64) {
        assert!((0.0..=1.0).contains(&value), "activation out of range");
        let idx = self.tri_index(i, j);
        self.activations[idx] = value;
    }

    pub fn vertex_ids(&self) -> Vec<usize> {
        self.keypoints.iter().map(|k| k.vertex_id).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp(x: f64) -> Keypoint {
        Keypoint {
            position: Vec3::new(x, 0.0, 0.0),
            vertex_id: 0,
        }
    }

    #[test]
    fn activation_storage_is_symmetric() {
        let mut s = Skeleton::new(vec![kp(0.0), kp(1.0), kp(2.0), kp(3.0)]);
        s.set_activation(1, 3, 0.75);
        assert_eq!(s.activation(3, 1), 0.75);
        assert_eq!(s.activation(0, 1), 0.0);
    }

    #[test]
    fn tri_index_covers_all_pairs_once() {
        let s = Skeleton::new(vec![kp(0.0); 7].to_vec());
        let mut seen = vec![false; 7 * 6 / 2];
        for i in 0..7 {
            for j in (i + 1)..7 {
                let idx = s.tri_index(i, j);
                assert!(!seen[idx]);
                seen[idx] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));
    }
}
