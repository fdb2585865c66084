//! Geometry, layout reasoning and photovoltaic physics for facade solar
//! assessment.
//!
//! The crate is `no_std` (with `alloc`) and contains no IO: every operation is
//! a pure function of its inputs. File formats, the chat-completion client and
//! the batch pipeline live in the `facade-pv` companion crate.
//!
//! Pixel coordinates follow the image convention used throughout: origin at
//! the top-left corner, x to the right, y downward, boxes written as
//! `[x_min, y_min, x_max, y_max]`.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` style guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bbox;
pub mod facade;
pub mod geom;
pub mod layout;
pub mod metrics;
pub mod region;
pub mod solar;

/// `x` reduced into `[0, m)`.
pub(crate) fn wrap(x: f64, m: f64) -> f64 {
    libm::fmod(libm::fmod(x, m) + m, m)
}

pub use bbox::BoundingBox;
pub use facade::{ComponentClass, FacadeDescription};
pub use geom::{Homography, MetricScale, PixelPoint};
pub use layout::{LayoutConstraints, LayoutResult, Provenance};
