//! Axis-aligned box geometry for the detection harness: planar boxes for the
//! image-plane channel and center/extent volumes for the range channel.

use serde::{Deserialize, Serialize};

/// Axis-aligned planar box, `x1 < x2`, `y1 < y2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2 {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl Box2 {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        debug_assert!(x1 < x2 && y1 < y2, "degenerate box");
        Box2 { x1, y1, x2, y2 }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Box2::new(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1) * (self.y2 - self.y1)
    }

    pub fn diagonal(&self) -> f64 {
        ((self.x2 - self.x1).powi(2) + (self.y2 - self.y1).powi(2)).sqrt()
    }

    pub fn iou(&self, other: &Box2) -> f64 {
        let ix = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let iy = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Summed absolute corner-coordinate error against `truth`, normalized by
    /// the truth diagonal and the number of coordinates, clamped to [0, 1].
    pub fn corner_error(&self, truth: &Box2) -> f64 {
        let sum = (self.x1 - truth.x1).abs()
            + (self.y1 - truth.y1).abs()
            + (self.x2 - truth.x2).abs()
            + (self.y2 - truth.y2).abs();
        (sum / (4.0 * truth.diagonal())).min(1.0)
    }

    /// Move this box toward `truth` by fraction `frac` (1 reproduces truth).
    pub fn blend_toward(&self, truth: &Box2, frac: f64) -> Box2 {
        let l = |a: f64, b: f64| a + frac * (b - a);
        Box2 {
            x1: l(self.x1, truth.x1),
            y1: l(self.y1, truth.y1),
            x2: l(self.x2, truth.x2),
            y2: l(self.y2, truth.y2),
        }
    }

    pub fn shift(&self, dx: f64, dy: f64) -> Box2 {
        Box2 {
            x1: self.x1 + dx,
            y1: self.y1 + dy,
            x2: self.x2 + dx,
            y2: self.y2 + dy,
        }
    }
}

/// Axis-aligned volume, `min[k] < max[k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Box3 {
    pub fn from_center(c: [f64; 3], extent: [f64; 3]) -> Self {
        Box3 {
            min: [
                c[0] - 0.5 * extent[0],
                c[1] - 0.5 * extent[1],
                c[2] - 0.5 * extent[2],
            ],
            max: [
                c[0] + 0.5 * extent[0],
                c[1] + 0.5 * extent[1],
                c[2] + 0.5 * extent[2],
            ],
        }
    }

    pub fn volume(&self) -> f64 {
        (0..3)
            .map(|k| (self.max[k] - self.min[k]).max(0.0))
            .product()
    }

    pub fn diagonal(&self) -> f64 {
        (0..3)
            .map(|k| (self.max[k] - self.min[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Volumetric intersection-over-union.
    pub fn iou(&self, other: &Box3) -> f64 {
        let mut inter = 1.0;
        for k in 0..3 {
            let lo = self.min[k].max(other.min[k]);
            let hi = self.max[k].min(other.max[k]);
            if hi <= lo {
                return 0.0;
            }
            inter *= hi - lo;
        }
        let union = self.volume() + other.volume() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Summed absolute corner-coordinate error, normalized like [`Box2::corner_error`].
    pub fn corner_error(&self, truth: &Box3) -> f64 {
        let mut sum = 0.0;
        for k in 0..3 {
            sum += (self.min[k] - truth.min[k]).abs() + (self.max[k] - truth.max[k]).abs();
        }
        (sum / (6.0 * truth.diagonal())).min(1.0)
    }

    pub fn blend_toward(&self, truth: &Box3, frac: f64) -> Box3 {
        let mut out = *self;
        for k in 0..3 {
            out.min[k] += frac * (truth.min[k] - self.min[k]);
            out.max[k] += frac * (truth.max[k] - self.max[k]);
        }
        out
    }

    /// Ground-plane footprint (x, y extents).
    pub fn footprint(&self) -> Box2 {
        Box2 {
            x1: self.min[0],
            y1: self.min[1],
            x2: self.max[0],
            y2: self.max[1],
        }
    }
}
