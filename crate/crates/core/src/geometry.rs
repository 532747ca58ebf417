//! Oriented rectangles and separating-axis overlap tests.

use serde::{Deserialize, Serialize};

/// Vehicle footprint dimensions in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
}

impl Default for Footprint {
    fn default() -> Self {
        Self {
            length: 4.8,
            width: 2.0,
        }
    }
}

impl Footprint {
    pub fn inflated(&self, margin: f64) -> Self {
        Self {
            length: self.length + 2.0 * margin,
            width: self.width + 2.0 * margin,
        }
    }

    pub fn at(&self, x: f64, y: f64, heading: f64) -> OrientedRect {
        OrientedRect::new(x, y, heading, self.length, self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub cx: f64,
    pub cy: f64,
    /// Unit vector along the long axis.
    pub ax: (f64, f64),
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedRect {
    pub fn new(cx: f64, cy: f64, heading: f64, length: f64, width: f64) -> Self {
        let (s, c) = heading.sin_cos();
        Self {
            cx,
            cy,
            ax: (c, s),
            half_length: 0.5 * length,
            half_width: 0.5 * width,
        }
    }

    fn axes(&self) -> [(f64, f64); 2] {
        [self.ax, (-self.ax.1, self.ax.0)]
    }

    /// Half extent of the projection onto the unit axis `a`.
    fn radius_on(&self, a: (f64, f64)) -> f64 {
        let [u, v] = self.axes();
        self.half_length * (u.0 * a.0 + u.1 * a.1).abs() + self.half_width * (v.0 * a.0 + v.1 * a.1).abs()
    }

    /// Closed overlap test: touching edges or corners count as overlap.
    pub fn overlaps(&self, other: &OrientedRect) -> bool {
        let d = (other.cx - self.cx, other.cy - self.cy);
        let reach = self.half_length.hypot(self.half_width) + other.half_length.hypot(other.half_width);
        if d.0 * d.0 + d.1 * d.1 > reach * reach {
            return false;
        }
        for a in self.axes().into_iter().chain(other.axes()) {
            let dist = (d.0 * a.0 + d.1 * a.1).abs();
            if dist > self.radius_on(a) + other.radius_on(a) {
                return false;
            }
        }
        true
    }
}
