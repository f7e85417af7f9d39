//! AHA 17-segment lookup on left-ventricular coordinates.
//!
//! Rings are split on `ab` and sectors on `rt`. With `rt = 0` at the posterior
//! junction and increasing counterclockwise from the base, the first basal
//! sector is the inferior wall. A coordinate lying exactly on a boundary is
//! assigned to the lower-numbered of the two adjacent segments.

use crate::error::{Error, Result};
use crate::mesh::coords::{CobivecoCoord, Side};
use crate::num::Real;

/// `ab` below which a coordinate belongs to the apex cap (segment 17).
pub const APEX_CAP_AB: f64 = 0.1;
/// Lower `ab` edge of the mid ring.
pub const MID_RING_AB: f64 = 0.4;
/// Lower `ab` edge of the basal ring.
pub const BASAL_RING_AB: f64 = 0.7;

/// Basal segment ids for the six `rt` sectors of width 1/6, starting at `rt = 0`:
/// inferior, inferolateral, anterolateral, anterior, anteroseptal, inferoseptal.
pub const BASAL_SECTORS: [u8; 6] = [4, 5, 6, 1, 2, 3];
/// Mid-ring ids, same sector order as the basal ring.
pub const MID_SECTORS: [u8; 6] = [10, 11, 12, 7, 8, 9];
/// Apical ids for the four sectors of width 1/4: inferior, lateral, anterior, septal.
pub const APICAL_SECTORS: [u8; 4] = [15, 16, 13, 14];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AhaSegmentId(u8);

impl AhaSegmentId {
    pub fn new(id: u8) -> Option<Self> {
        (1..=17).contains(&id).then_some(AhaSegmentId(id))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

fn sector_id<T: Real>(rt: T, table: &[u8]) -> u8 {
    let n = table.len();
    let scaled = rt * T::c(n as f64);
    let k = scaled.floor().to_usize().unwrap_or(0).min(n - 1);
    if scaled == scaled.floor() {
        let prev = (k + n - 1) % n;
        table[k].min(table[prev])
    } else {
        table[k]
    }
}

pub fn aha_segment<T: Real>(c: &CobivecoCoord<T>) -> Result<AhaSegmentId> {
    if c.side != Side::Lv {
        return Err(Error::UnsupportedChamber);
    }
    c.validate()?;
    let ab = c.ab;
    let id = if ab < T::c(APEX_CAP_AB) {
        17
    } else if ab < T::c(MID_RING_AB) {
        sector_id(c.rt, &APICAL_SECTORS)
    } else if ab < T::c(BASAL_RING_AB) {
        sector_id(c.rt, &MID_SECTORS)
    } else {
        sector_id(c.rt, &BASAL_SECTORS)
    };
    Ok(AhaSegmentId(id))
}
