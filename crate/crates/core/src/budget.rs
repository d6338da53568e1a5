use crate::error::{Error, Result};

/// Resource caps for constructions and dense evaluation.
///
/// `max_cells` bounds both the number of cells a recursive construction may
/// have to cover with blocks and the number of pieces a materialized set may
/// hold. `dense_cap` bounds the length of any dense array (full-resolution
/// step functions and transforms). Operations that would exceed a cap fail
/// with [`Error::Budget`] instead of degrading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_cells: u64,
    pub dense_cap: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_cells: 1 << 24,
            dense_cap: 1 << 22,
        }
    }
}

impl Budget {
    pub fn new(max_cells: u64, dense_cap: u64) -> Self {
        Budget {
            max_cells,
            dense_cap,
        }
    }

    /// Check that a construction-scale estimate (cells to cover, pieces to
    /// store) fits.
    pub fn check_cells(&self, what: &str, needed: u128) -> Result<()> {
        if needed > self.max_cells as u128 {
            return Err(Error::budget(what, needed, self.max_cells as u128));
        }
        Ok(())
    }

    /// Check that a dense array of `2^scale` entries fits.
    pub fn check_dense_scale(&self, what: &str, scale: u32) -> Result<()> {
        if scale >= 64 {
            return Err(Error::budget(what, u128::MAX, self.dense_cap as u128));
        }
        let needed = 1u128 << scale;
        if needed > self.dense_cap as u128 {
            return Err(Error::budget(what, needed, self.dense_cap as u128));
        }
        Ok(())
    }
}
