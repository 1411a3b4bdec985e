use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{Frame, GaussianMap, Pose};
use crate::image::FlowField;

/// A keyframe's observation and the flow arriving at it from the previous
/// frame, when that flow was available.
#[derive(Debug, Clone)]
pub struct Keyframe {
    pub frame: Frame,
    pub incoming_flow: Option<FlowField>,
}

/// Frame indices of the keyframes taking part in bundle adjustment, oldest
/// first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyframeWindow {
    members: Vec<usize>,
    capacity: usize,
}

impl KeyframeWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            members: Vec::with_capacity(capacity),
            capacity,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.members.len() >= self.capacity
    }

    pub fn newest(&self) -> Option<usize> {
        self.members.last().copied()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    /// Appends `index`, which must exceed every member. The window must have
    /// room.
    pub(crate) fn push(&mut self, index: usize) -> Result<()> {
        if self.is_full() {
            return Err(Error::Precondition("keyframe window is full".into()));
        }
        if self.newest().is_some_and(|n| n >= index) {
            return Err(Error::Precondition(format!(
                "keyframe {index} is not newer than the window"
            )));
        }
        self.members.push(index);
        Ok(())
    }

    /// Removes a member other than the newest.
    pub(crate) fn evict(&mut self, index: usize) -> Result<()> {
        if self.newest() == Some(index) {
            return Err(Error::Precondition("the newest keyframe cannot be evicted".into()));
        }
        let pos = self
            .members
            .binary_search(&index)
            .map_err(|_| Error::Precondition(format!("frame {index} is not in the window")))?;
        self.members.remove(pos);
        Ok(())
    }
}

/// Everything the tracking and mapping loop carries between frames.
#[derive(Debug, Clone)]
pub struct SlamState {
    pub map: GaussianMap,
    pub window: KeyframeWindow,
    /// Camera-to-world pose of every processed frame, indexed by frame.
    pub trajectory: Vec<Pose>,
    pub keyframes: BTreeMap<usize, Keyframe>,
    /// Mean valid depth of the first frame; scales centre learning rates.
    pub scene_extent: f64,
}

impl SlamState {
    pub fn last_keyframe(&self) -> Option<usize> {
        self.keyframes.keys().next_back().copied()
    }

    pub fn is_keyframe(&self, index: usize) -> bool {
        self.keyframes.contains_key(&index)
    }

    pub fn keyframe_indices(&self) -> Vec<usize> {
        self.keyframes.keys().copied().collect()
    }

    /// Pose for the next frame from the motion between the last two.
    pub fn predict_next(&self) -> Pose {
        match self.trajectory.as_slice() {
            [] => Pose::identity(),
            [only] => *only,
            [.., a, b] => b.compose(&a.inverse().compose(b)),
        }
    }
}
