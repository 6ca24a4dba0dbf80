use std::ops::Range;
use std::sync::Arc;

use super::Dataset;
use crate::error::{Error, Result};

/// Sliding window over an ordered sample stream.
///
/// The active window holds the `min(window, cursor)` most recent samples,
/// i.e. indices `[cursor - window, cursor)` clipped at zero.
#[derive(Debug, Clone)]
pub struct StreamingFeed {
    samples: Arc<Dataset>,
    window: usize,
    stride: usize,
    cursor: usize,
}

impl StreamingFeed {
    pub fn new(samples: Arc<Dataset>, window: usize, stride: usize, cursor: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("window must be positive"));
        }
        if cursor == 0 || cursor > samples.len() {
            return Err(Error::invalid(format!("cursor {cursor} outside [1, {}]", samples.len())));
        }
        Ok(StreamingFeed { samples, window, stride, cursor })
    }

    /// Default inflow of `window / 8` samples per round.
    pub fn default_stride(window: usize) -> usize {
        (window / 8).max(1)
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn window_range(&self) -> Range<usize> {
        self.cursor.saturating_sub(self.window)..self.cursor
    }

    pub fn at_end(&self) -> bool {
        self.cursor == self.samples.len()
    }

    pub fn active(&self) -> Dataset {
        self.samples.slice(self.window_range()).expect("window lies inside the stream")
    }

    /// Move the cursor forward by the stride (stopping at the end of the
    /// stream) and return the new active window.
    pub fn advance_window(&mut self) -> Dataset {
        self.cursor = (self.cursor + self.stride).min(self.samples.len());
        self.active()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream_of(len: usize) -> Arc<Dataset> {
        let feats: Vec<f64> = (0..len).map(|i| i as f64).collect();
        Arc::new(Dataset::new(feats, vec![0; len], 1, 2).unwrap())
    }

    #[test]
    fn window_after_advance() {
        let mut f = StreamingFeed::new(stream_of(2000), 400, 50, 1000).unwrap();
        let w = f.advance_window();
        assert_eq!(f.window_range(), 650..1050);
        assert_eq!(w.len(), 400);
        assert_eq!(w.row(0)[0], 650.0);
    }

    #[test]
    fn warm_up_window() {
        let f = StreamingFeed::new(stream_of(100), 400, 50, 10).unwrap();
        assert_eq!(f.window_range(), 0..10);
        assert_eq!(f.active().len(), 10);
    }

    #[test]
    fn idempotent_at_end() {
        let mut f = StreamingFeed::new(stream_of(120), 40, 50, 100).unwrap();
        let a = f.advance_window();
        assert!(f.at_end());
        let b = f.advance_window();
        assert_eq!(a, b);
        assert_eq!(f.window_range(), 80..120);
    }
}
