use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Finite piece of space-time on which the exclusion process is simulated.
///
/// Sites of interest are `[x_min, x_max]`; the simulated region adds `buffer` sites per
/// side. No arrows cross the outer boundary, so the simulated system is closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: i64,
    pub x_max: i64,
    pub t_max: f64,
    pub buffer: i64,
}

impl Window {
    /// Window with the default buffer `⌈2·t_max⌉ + 20`.
    pub fn new(x_min: i64, x_max: i64, t_max: f64) -> Result<Self> {
        Self::with_buffer(x_min, x_max, t_max, Self::default_buffer(t_max))
    }

    pub fn with_buffer(x_min: i64, x_max: i64, t_max: f64, buffer: i64) -> Result<Self> {
        if x_min >= x_max {
            return invalid(format!("degenerate window: x_min={x_min} >= x_max={x_max}"));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return invalid(format!("horizon must be positive and finite, got {t_max}"));
        }
        if buffer < 0 {
            return invalid(format!("negative buffer {buffer}"));
        }
        Ok(Self { x_min, x_max, t_max, buffer })
    }

    /// A window without buffer: the region of interest is the whole closed system.
    pub fn closed(lo: i64, hi: i64, t_max: f64) -> Result<Self> {
        Self::with_buffer(lo, hi, t_max, 0)
    }

    pub fn default_buffer(t_max: f64) -> i64 {
        (2.0 * t_max).ceil() as i64 + 20
    }

    /// Leftmost simulated site.
    pub fn lo(&self) -> i64 {
        self.x_min - self.buffer
    }

    /// Rightmost simulated site.
    pub fn hi(&self) -> i64 {
        self.x_max + self.buffer
    }

    pub fn n_sites(&self) -> usize {
        (self.hi() - self.lo() + 1) as usize
    }

    pub fn n_edges(&self) -> usize {
        (self.hi() - self.lo()) as usize
    }

    pub fn contains_site(&self, x: i64) -> bool {
        (self.lo()..=self.hi()).contains(&x)
    }

    pub fn in_interest(&self, x: i64) -> bool {
        (self.x_min..=self.x_max).contains(&x)
    }

    pub fn check_site(&self, x: i64, t: f64) -> Result<()> {
        if self.contains_site(x) {
            Ok(())
        } else {
            Err(Error::OutOfWindow { site: x, time: t, lo: self.lo(), hi: self.hi() })
        }
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.t_max).contains(&t) {
            Ok(())
        } else {
            Err(Error::OutOfHorizon { time: t, horizon: self.t_max })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_buffer_and_bounds() {
        let w = Window::new(0, 10, 5.0).unwrap();
        assert_eq!(w.buffer, 30);
        assert_eq!((w.lo(), w.hi()), (-30, 40));
        assert_eq!(w.n_sites(), 71);
        assert_eq!(w.n_edges(), 70);
        assert!(w.in_interest(10) && !w.in_interest(11) && w.contains_site(40));
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Window::new(3, 3, 1.0).is_err());
        assert!(Window::new(0, 3, 0.0).is_err());
        assert!(Window::new(0, 3, f64::NAN).is_err());
        assert!(Window::with_buffer(0, 3, 1.0, -1).is_err());
    }
}
