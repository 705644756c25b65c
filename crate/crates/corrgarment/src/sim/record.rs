//! Episode recording in the UGMC binary layout.
//!
//! Fixed 16-byte header: magic `UGMC`, u32 version, u32 particle count,
//! u32 step count, all little-endian. Episode payloads hold `steps x
//! particles x 3` f32 positions. Observation files reuse the same header with
//! step count 0 (see [`crate::percept`]): points first, then u32 trace ids.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ActionPrimitive, SimState};
use crate::{Error, Result, Vec3};

pub const UGMC_MAGIC: &[u8; 4] = b"UGMC";
pub const UGMC_VERSION: u32 = 1;

pub(crate) fn write_header(out: &mut Vec<u8>, count: u32, steps: u32) {
    out.extend_from_slice(UGMC_MAGIC);
    out.extend_from_slice(&UGMC_VERSION.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&steps.to_le_bytes());
}

pub(crate) fn read_header(bytes: &[u8]) -> Result<(u32, u32)> {
    if bytes.len() < 16 || &bytes[..4] != UGMC_MAGIC {
        return Err(Error::Checkpoint("not a UGMC file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != UGMC_VERSION {
        return Err(Error::Checkpoint(format!("unsupported UGMC version {version}")));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let steps = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
    Ok((count, steps))
}

/// Sidecar manifest naming the garment, seed and action list of an episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeManifest {
    pub mesh_id: u64,
    pub garment_obj: String,
    pub seed: u64,
    pub actions: Vec<ActionPrimitive>,
    pub frames: usize,
    pub episode_file: String,
}

/// Buffers per-step particle positions and writes one UGMC episode file.
pub struct EpisodeRecorder {
    particle_count: usize,
    frames: Vec<Vec<Vec3>>,
}

impl EpisodeRecorder {
    pub fn new(particle_count: usize) -> Self {
        EpisodeRecorder {
            particle_count,
            frames: Vec::new(),
        }
    }

    pub fn record(&mut self, state: &SimState) {
        assert_eq!(state.len(), self.particle_count, "particle count drifted");
        self.frames.push(state.positions.clone());
    }

    pub fn frames(&self) -> usize {
        self.frames.len()
    }

    pub fn finish(self, path: &Path) -> Result<PathBuf> {
        let mut bytes = Vec::with_capacity(16 + self.frames.len() * self.particle_count * 12);
        write_header(
            &mut bytes,
            self.particle_count as u32,
            self.frames.len() as u32,
        );
        for frame in &self.frames {
            for p in frame {
                for c in p.iter() {
                    bytes.extend_from_slice(&(*c as f32).to_le_bytes());
                }
            }
        }
        let mut file = fs::File::create(path)?;
        file.write_all(&bytes)?;
        Ok(path.to_path_buf())
    }
}

/// Reads an episode written by [`EpisodeRecorder`].
pub fn read_episode(path: &Path) -> Result<Vec<Vec<Vec3>>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let (count, steps) = read_header(&bytes)?;
    let expected = 16 + (count as usize) * (steps as usize) * 12;
    if bytes.len() != expected {
        return Err(Error::Checkpoint(format!(
            "episode payload truncated: {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut frames = Vec::with_capacity(steps as usize);
    let mut offset = 16;
    for _ in 0..steps {
        let mut frame = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let mut coords = [0.0f64; 3];
            for c in &mut coords {
                let raw = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
                *c = raw as f64;
                offset += 4;
            }
            frame.push(Vec3::new(coords[0], coords[1], coords[2]));
        }
        frames.push(frame);
    }
    Ok(frames)
}
