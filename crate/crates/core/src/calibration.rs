//! Perspective model for a fixed camera, derived from two user-supplied
//! point pairs.
//!
//! The model is deliberately one-dimensional: the expected pixel extent of
//! an object at image row `y` grows linearly with `y` (rows increase
//! towards the camera). The smoothing stage uses `sigma_u(y) = c1*y + c2`
//! and `sigma_v(y) = c3*y + c2`, and the clustering stage reuses `c2` to
//! weight pixel distances by their distance from the horizon.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    /// The two pairs do not pin down the perspective offset: equal rows,
    /// equal pixel separations, or a negative solution.
    #[error("degenerate calibration: {0}")]
    DegenerateCalibration(String),
    #[error("invalid point pair: {0}")]
    InvalidPointPair(String),
}

/// Two pixel points at the same image row (i.e. the same distance from the
/// camera), a known world distance apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPair {
    pub a: (f64, f64),
    pub b: (f64, f64),
    /// World separation of `a` and `b`; only its equality across the two
    /// pairs matters, not its unit.
    pub world_separation: f64,
}

impl PointPair {
    pub fn new(a: (f64, f64), b: (f64, f64), world_separation: f64) -> Result<Self, CalibrationError> {
        if a.1 != b.1 {
            return Err(CalibrationError::InvalidPointPair(format!(
                "points must lie on one image row (got y={} and y={})",
                a.1, b.1
            )));
        }
        if a == b {
            return Err(CalibrationError::InvalidPointPair(
                "points of a pair must be distinct".into(),
            ));
        }
        if world_separation <= 0.0 {
            return Err(CalibrationError::InvalidPointPair(
                "world separation must be positive".into(),
            ));
        }
        Ok(Self { a, b, world_separation })
    }

    pub fn row(&self) -> f64 {
        self.a.1
    }

    pub fn pixel_separation(&self) -> f64 {
        (self.a.0 - self.b.0).abs()
    }
}

/// Perspective constants. Immutable after construction; shareable across
/// threads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneCalibration {
    c1: f64,
    c2: f64,
    c3: f64,
}

impl SceneCalibration {
    /// Default slope of `sigma_u(y)`.
    pub const DEFAULT_C1: f64 = 0.045;
    /// Default slope of `sigma_v(y)`.
    pub const DEFAULT_C3: f64 = 0.25;

    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self, CalibrationError> {
        if !(c1 > 0.0) || !(c3 > 0.0) {
            return Err(CalibrationError::DegenerateCalibration(format!(
                "slopes must be positive (c1={c1}, c3={c3})"
            )));
        }
        if !(c2 >= 0.0) {
            return Err(CalibrationError::DegenerateCalibration(format!(
                "offset must be non-negative (c2={c2})"
            )));
        }
        Ok(Self { c1, c2, c3 })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn c3(&self) -> f64 {
        self.c3
    }

    /// Horizontal smoothing scale at row `y`.
    pub fn sigma_u(&self, y: f64) -> f64 {
        self.c1 * y + self.c2
    }

    /// Vertical smoothing scale at row `y`.
    pub fn sigma_v(&self, y: f64) -> f64 {
        self.c3 * y + self.c2
    }

    /// True when both scales are strictly positive over rows `0..height`.
    /// Both are affine with positive slope, so checking row 0 suffices.
    pub fn positive_over(&self, height: usize) -> bool {
        height > 0 && self.sigma_u(0.0) > 0.0 && self.sigma_v(0.0) > 0.0
    }
}

/// Solve for the perspective offset `c2` from two point pairs at different
/// rows, assuming the pixel separation of a pair at row `y` is proportional
/// to `y + c2`.
///
/// With separations `s1`, `s2` at rows `y1`, `y2` the proportionality gives
/// `s1/(y1 + c2) = s2/(y2 + c2)`, hence
/// `c2 = (s1*y2 - s2*y1) / (s2 - s1)`.
/// Slopes `c1`, `c3` pass through unchanged.
pub fn calibrate(
    pair_near: PointPair,
    pair_far: PointPair,
    c1: f64,
    c3: f64,
) -> Result<SceneCalibration, CalibrationError> {
    if pair_near.row() == pair_far.row() {
        return Err(CalibrationError::DegenerateCalibration(
            "pairs lie at the same row".into(),
        ));
    }
    if pair_near.world_separation != pair_far.world_separation {
        return Err(CalibrationError::InvalidPointPair(
            "pairs must share one world separation".into(),
        ));
    }
    let (s1, y1) = (pair_near.pixel_separation(), pair_near.row());
    let (s2, y2) = (pair_far.pixel_separation(), pair_far.row());
    if s1 == s2 {
        return Err(CalibrationError::DegenerateCalibration(
            "equal pixel separations leave the linear system singular".into(),
        ));
    }
    let c2 = (s1 * y2 - s2 * y1) / (s2 - s1);
    if !c2.is_finite() || c2 < 0.0 {
        return Err(CalibrationError::DegenerateCalibration(format!(
            "solved offset is not usable (c2={c2})"
        )));
    }
    SceneCalibration::new(c1, c2, c3)
}
