//! Sample box and Halton points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::Point4;

/// Axis-aligned box in the real chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub re_q: [f64; 2],
    pub im_q: [f64; 2],
    pub re_z: [f64; 2],
    pub im_z: [f64; 2],
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox { re_q: [0.6, 2.0], im_q: [-0.4, 0.4], re_z: [0.6, 2.0], im_z: [-0.4, 0.4] }
    }
}

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

// Im q uses base 3 so that y = 0 (the box midpoint) is never hit exactly.
const BASES: [u64; 4] = [2, 3, 5, 7];

impl SampleBox {
    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [("re_q", self.re_q), ("im_q", self.im_q), ("re_z", self.re_z), ("im_z", self.im_z)] {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!("box.{name} must be an increasing finite pair")));
            }
        }
        if self.re_z[0] <= 0.0 {
            return Err(Error::Config("box.re_z lower bound must be positive".into()));
        }
        Ok(())
    }

    pub fn lerp(&self, u: [f64; 4]) -> Point4 {
        let l = |r: [f64; 2], t: f64| r[0] + (r[1] - r[0]) * t;
        Point4::new(
            Complex64::new(l(self.re_q, u[0]), l(self.im_q, u[1])),
            Complex64::new(l(self.re_z, u[2]), l(self.im_z, u[3])),
        )
    }

    /// `n` Halton points starting at index `seed + 1`.
    pub fn halton_points(&self, n: usize, seed: u64) -> Vec<Point4> {
        (0..n as u64)
            .map(|i| {
                let k = seed + 1 + i;
                self.lerp(std::array::from_fn(|d| halton(k, BASES[d])))
            })
            .collect()
    }
}
