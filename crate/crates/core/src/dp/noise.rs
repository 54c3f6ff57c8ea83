use alloc::collections::VecDeque;
use alloc::vec::Vec;

/// Where a mechanism's noise comes from.
///
/// `Calibrated` is the only private mode. The other two exist so that tests
/// can drive mechanisms deterministically.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum NoiseMode {
    #[default]
    Calibrated,
    /// Every noise draw is exactly zero.
    Noiseless,
    /// Noise draws are popped from this queue; an exhausted queue yields zero.
    Injected(VecDeque<f64>),
}

impl NoiseMode {
    pub fn injected(values: impl Into<Vec<f64>>) -> Self {
        NoiseMode::Injected(values.into().into())
    }

    pub fn is_private(&self) -> bool {
        matches!(self, NoiseMode::Calibrated)
    }

    /// Returns `Some(v)` when the draw is overridden, `None` when the caller
    /// must sample from the calibrated distribution.
    pub(crate) fn override_draw(&mut self) -> Option<f64> {
        match self {
            NoiseMode::Calibrated => None,
            NoiseMode::Noiseless => Some(0.0),
            NoiseMode::Injected(q) => Some(q.pop_front().unwrap_or(0.0)),
        }
    }
}
