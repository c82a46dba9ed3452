//! Sliding-window framing: 32 ms windows with a 16 ms hop at 16 kHz
//! (512-sample frames, 256-sample hop).

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGrid {
    pub frame_len: usize,
    pub hop: usize,
}

impl FrameGrid {
    pub fn new(frame_len: usize, hop: usize) -> Result<Self> {
        if hop == 0 || frame_len <= hop {
            return Err(Error::Config(format!(
                "frame grid requires frame_len > hop > 0, got frame_len={frame_len} hop={hop}"
            )));
        }
        Ok(FrameGrid { frame_len, hop })
    }

    /// The 32 ms / 16 ms grid at 16 kHz.
    pub fn default_16k() -> Self {
        FrameGrid {
            frame_len: 512,
            hop: 256,
        }
    }

    /// `floor((n_samples - frame_len) / hop) + 1`; errors when the signal is
    /// shorter than one frame.
    pub fn n_frames(&self, n_samples: usize) -> Result<usize> {
        if n_samples < self.frame_len {
            return Err(Error::InputTooShort(format!(
                "{} samples, need at least one full frame of {}",
                n_samples, self.frame_len
            )));
        }
        Ok((n_samples - self.frame_len) / self.hop + 1)
    }
}

/// Cut a channel into overlapping frames; frame `t` spans samples
/// `[t * hop, t * hop + frame_len)`. No padding, trailing remainder dropped.
pub fn frame_signal<S: Scalar>(channel: &[S], grid: &FrameGrid) -> Result<Tensor2<S>> {
    let n_frames = grid.n_frames(channel.len())?;
    let mut out = Tensor2::zeros(n_frames, grid.frame_len);
    for t in 0..n_frames {
        let start = t * grid.hop;
        out.row_mut(t)
            .copy_from_slice(&channel[start..start + grid.frame_len]);
    }
    Ok(out)
}
