//! Consistent biventricular coordinates.
//!
//! Orientation: `tm` is 0 on the epicardium and 1 on the endocardium, `ab` is
//! 0 at the apex and 1 at the base, and `rt` starts at the posterior LV/RV
//! junction and increases counterclockwise when viewed from the base.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Lv,
    Rv,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Lv => "LV",
            Side::Rv => "RV",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "LV" | "lv" => Ok(Side::Lv),
            "RV" | "rv" => Ok(Side::Rv),
            other => Err(format!("unknown chamber `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CobivecoCoord<T> {
    pub tm: T,
    pub ab: T,
    pub rt: T,
    pub side: Side,
}

impl<T: Real> CobivecoCoord<T> {
    pub fn new(tm: T, ab: T, rt: T, side: Side) -> Result<Self> {
        let c = CobivecoCoord { tm, ab, rt, side };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let (zero, one) = (T::zero(), T::one());
        if !(self.tm >= zero && self.tm <= one) {
            return Err(Error::CoordinateRange(format!("tm = {} not in [0,1]", self.tm)));
        }
        if !(self.ab >= zero && self.ab <= one) {
            return Err(Error::CoordinateRange(format!("ab = {} not in [0,1]", self.ab)));
        }
        if !(self.rt >= zero && self.rt < one) {
            return Err(Error::CoordinateRange(format!("rt = {} not in [0,1)", self.rt)));
        }
        Ok(())
    }
}

/// Wraps any value into `[0, 1)`.
pub fn wrap_rt<T: Real>(rt: T) -> T {
    let w = rt - rt.floor();
    if w >= T::one() {
        T::zero()
    } else {
        w
    }
}

/// Circular distance on the unit-period rotational coordinate.
pub fn rt_distance<T: Real>(a: T, b: T) -> T {
    let d = (a - b).abs();
    let d = d - d.floor();
    d.min(T::one() - d)
}

/// Circular mean of rotational coordinates.
pub fn rt_mean<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let tau = T::c(std::f64::consts::TAU);
    let (mut s, mut c) = (T::zero(), T::zero());
    for v in values {
        s = s + (v * tau).sin();
        c = c + (v * tau).cos();
    }
    wrap_rt(s.atan2(c) / tau)
}
