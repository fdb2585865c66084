//! Axis-aligned pixel rectangles.

use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BoxError {
    #[error("box coordinates must be finite")]
    NonFinite,
    #[error("box [{0}, {1}, {2}, {3}] is empty or inverted")]
    Inverted(f64, f64, f64, f64),
}

/// Axis-aligned rectangle in pixel space, `x_min < x_max` and `y_min < y_max`.
///
/// Boxes are half-open in spirit: two boxes that only share an edge do not
/// overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, BoxError> {
        if !(x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite()) {
            return Err(BoxError::NonFinite);
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(BoxError::Inverted(x_min, y_min, x_max, y_max));
        }
        Ok(Self { x_min, y_min, x_max, y_max })
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self, BoxError> {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Intersection with positive area, if any.
    pub fn intersection(&self, other: &Self) -> Option<Self> {
        let x_min = self.x_min.max(other.x_min);
        let y_min = self.y_min.max(other.y_min);
        let x_max = self.x_max.min(other.x_max);
        let y_max = self.y_max.min(other.y_max);
        (x_min < x_max && y_min < y_max).then_some(Self { x_min, y_min, x_max, y_max })
    }

    /// True when the two boxes share interior area. Edge contact is not overlap.
    #[inline]
    pub fn overlaps(&self, other: &Self) -> bool {
        self.x_min < other.x_max && other.x_min < self.x_max && self.y_min < other.y_max && other.y_min < self.y_max
    }

    #[inline]
    pub fn contains(&self, other: &Self) -> bool {
        self.x_min <= other.x_min && self.y_min <= other.y_min && self.x_max >= other.x_max && self.y_max >= other.y_max
    }

    /// Smallest box containing both.
    pub fn union_hull(&self, other: &Self) -> Self {
        Self {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self { x_min: self.x_min + dx, y_min: self.y_min + dy, x_max: self.x_max + dx, y_max: self.y_max + dy }
    }

    /// Shrinks every side by `margin`; `None` if nothing is left.
    pub fn inset(&self, margin: f64) -> Option<Self> {
        Self::new(self.x_min + margin, self.y_min + margin, self.x_max - margin, self.y_max - margin).ok()
    }

    /// Ordering key used for reproducible output: `(y_min, x_min, y_max, x_max)`.
    pub fn reading_order(&self, other: &Self) -> core::cmp::Ordering {
        self.y_min
            .total_cmp(&other.y_min)
            .then(self.x_min.total_cmp(&other.x_min))
            .then(self.y_max.total_cmp(&other.y_max))
            .then(self.x_max.total_cmp(&other.x_max))
    }
}

impl fmt::Display for BoundingBox {
    /// Prints the compact `[x_min,y_min,x_max,y_max]` form; integral values
    /// are written without a fractional part.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{},{}]", self.x_min, self.y_min, self.x_max, self.y_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    #[test]
    fn rejects_inverted_and_empty() {
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BoundingBox::new(2.0, 0.0, 1.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn edge_contact_is_not_overlap() {
        let a = BoundingBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let b = BoundingBox::new(10.0, 0.0, 20.0, 10.0).unwrap();
        assert!(!a.overlaps(&b));
        assert!(a.intersection(&b).is_none());
        let c = BoundingBox::new(9.0, 9.0, 20.0, 20.0).unwrap();
        assert_eq!(a.intersection(&c).unwrap().area(), 1.0);
    }

    #[test]
    fn display_is_compact() {
        let a = BoundingBox::new(0.0, 0.0, 1200.0, 800.0).unwrap();
        assert_eq!(format!("{a}"), "[0,0,1200,800]");
    }
}
