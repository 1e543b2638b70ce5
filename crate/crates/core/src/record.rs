use crate::{Error, Result};

/// One 10-minute observation: block-average wind speed `v` (m/s), block
/// standard deviation of wind speed `s` (m/s), and block-maximum load `y`
/// (MN-m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TenMinRecord {
    pub v: f64,
    pub s: f64,
    pub y: f64,
}

impl TenMinRecord {
    pub fn new(v: f64, s: f64, y: f64) -> Result<Self> {
        if !(v.is_finite() && s.is_finite() && y.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "record fields must be finite, got v={v}, s={s}, y={y}"
            )));
        }
        if s < 0.0 {
            return Err(Error::invalid_argument(format!(
                "wind-speed standard deviation must be nonnegative, got {s}"
            )));
        }
        Ok(TenMinRecord { v, s, y })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_s_and_non_finite() {
        assert!(TenMinRecord::new(8.0, -0.1, 1.0).is_err());
        assert!(TenMinRecord::new(f64::NAN, 0.1, 1.0).is_err());
        assert!(TenMinRecord::new(8.0, 0.1, f64::INFINITY).is_err());
        assert!(TenMinRecord::new(8.0, 0.0, 1.0).is_ok());
    }
}
