//! Motion detection: frame differencing, perspective-adaptive Gaussian
//! smoothing, thresholding and connected-component extraction.
//!
//! The smoothing kernel is axis-aligned with row-dependent scales
//! `sigma_u(y)`, `sigma_v(y)` (variances, in px^2) from the calibration
//! module, truncated at three standard deviations and renormalized to unit
//! mass. The absolute value of the smoothed difference is taken before
//! thresholding so motion of either sign counts.

use crate::calibration::SceneCalibration;
use crate::FrameIndex;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MotionError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("frame indices not increasing: current={0}, past={1}")]
    NonPositiveGap(FrameIndex, FrameIndex),
    #[error("calibration not positive over frame height {0}")]
    InvalidCalibration(usize),
}

/// One grayscale frame, intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffer {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    pub index: FrameIndex,
}

impl FrameBuffer {
    /// Panics if the pixel count does not match or any intensity leaves
    /// `[0, 1]`; those are programming errors, not runtime conditions.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>, index: FrameIndex) -> Self {
        assert!(width > 0 && height > 0, "frame dimensions must be positive");
        assert_eq!(pixels.len(), width * height, "pixel count must be W*H");
        assert!(
            pixels.iter().all(|&v| (0.0..=1.0).contains(&v)),
            "intensities must lie in [0,1]"
        );
        Self { width, height, pixels, index }
    }

    pub fn from_fn(width: usize, height: usize, index: FrameIndex, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels, index)
    }

    /// 8-bit ingest; grayscale levels map to `v / 255`.
    pub fn from_u8(width: usize, height: usize, data: &[u8], index: FrameIndex) -> Self {
        let pixels = data.iter().map(|&v| v as f64 / 255.0).collect();
        Self::new(width, height, pixels, index)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Bilinear sample with replicated borders.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let cx = x.clamp(0.0, (self.width - 1) as f64);
        let cy = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = cx.floor() as usize;
        let y0 = cy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = cx - x0 as f64;
        let fy = cy - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bot = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bot * fy
    }
}

/// Signed pixel-wise difference of two frames `gap` steps apart.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub base_index: FrameIndex,
    pub gap: FrameIndex,
}

impl DifferenceImage {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Non-negative smoothed motion response.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedResponse {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl SmoothedResponse {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Region ordinal within one frame's labeling, assigned in scan order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId(pub u32);

impl std::fmt::Display for RegionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bbox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl Bbox {
    pub fn width(&self) -> u32 {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min + 1
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min as f64 && x <= self.x_max as f64 && y >= self.y_min as f64 && y <= self.y_max as f64
    }

    pub fn intersects(&self, other: &Bbox) -> bool {
        self.x_min <= other.x_max
            && other.x_min <= self.x_max
            && self.y_min <= other.y_max
            && other.y_min <= self.y_max
    }
}

/// An 8-connected set of above-threshold pixels in one frame.
///
/// The mask is sorted by `(y, x)`; `bbox` is tight and `area == mask.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionRegion {
    pub id: RegionId,
    pub frame_index: FrameIndex,
    pub mask: Vec<(u32, u32)>,
    pub bbox: Bbox,
    pub area: usize,
}

impl MotionRegion {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        self.mask.binary_search(&(y, x)).is_ok()
    }

    /// True when some mask pixel lies within Euclidean distance `radius`
    /// of `(x, y)` — i.e. the point falls inside the mask dilated by a
    /// disk of that radius.
    pub fn contains_within(&self, x: f64, y: f64, radius: f64) -> bool {
        if x < self.bbox.x_min as f64 - radius
            || x > self.bbox.x_max as f64 + radius
            || y < self.bbox.y_min as f64 - radius
            || y > self.bbox.y_max as f64 + radius
        {
            return false;
        }
        let r2 = radius * radius;
        let y_lo = (y - radius).floor().max(0.0) as u32;
        let y_hi = (y + radius).ceil().max(0.0) as u32;
        let start = self.mask.partition_point(|&(my, _)| my < y_lo);
        for &(my, mx) in &self.mask[start..] {
            if my > y_hi {
                break;
            }
            let dx = mx as f64 - x;
            let dy = my as f64 - y;
            if dx * dx + dy * dy <= r2 {
                return true;
            }
        }
        false
    }

    /// True when the two masks share at least one pixel.
    pub fn intersects(&self, other: &MotionRegion) -> bool {
        if !self.bbox.intersects(&other.bbox) {
            return false;
        }
        let (mut i, mut j) = (0, 0);
        while i < self.mask.len() && j < other.mask.len() {
            match self.mask[i].cmp(&other.mask[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

/// Exact pixel-wise subtraction `current - past`.
pub fn frame_difference(current: &FrameBuffer, past: &FrameBuffer) -> Result<DifferenceImage, MotionError> {
    if current.width != past.width || current.height != past.height {
        return Err(MotionError::DimensionMismatch(
            current.width,
            current.height,
            past.width,
            past.height,
        ));
    }
    let gap = current.index - past.index;
    if gap < 1 {
        return Err(MotionError::NonPositiveGap(current.index, past.index));
    }
    let values = current
        .pixels
        .iter()
        .zip(&past.pixels)
        .map(|(c, p)| c - p)
        .collect();
    Ok(DifferenceImage {
        width: current.width,
        height: current.height,
        values,
        base_index: current.index,
        gap,
    })
}

/// 1-D Gaussian taps for scale `sigma` (a variance, px^2), truncated at
/// three standard deviations and normalized to unit sum. The exponential
/// uses `exp(-0.5 * d^2 / sigma)`; the constant prefactor cancels in the
/// normalization.
pub(crate) fn gaussian_taps(sigma: f64) -> Vec<f64> {
    debug_assert!(sigma > 0.0);
    let radius = (3.0 * sigma.sqrt()).ceil() as i64;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|d| (-0.5 * (d * d) as f64 / sigma).exp())
        .collect();
    let mass: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= mass;
    }
    taps
}

/// Smooth a difference image with the row-adaptive Gaussian and take the
/// absolute value. Out-of-frame taps are treated as zero.
pub fn adaptive_smooth(diff: &DifferenceImage, cal: &SceneCalibration) -> Result<SmoothedResponse, MotionError> {
    if !cal.positive_over(diff.height) {
        return Err(MotionError::InvalidCalibration(diff.height));
    }
    let (w, h) = (diff.width, diff.height);
    let values: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let gu = gaussian_taps(cal.sigma_u(y as f64));
            let gv = gaussian_taps(cal.sigma_v(y as f64));
            let ru = (gu.len() / 2) as i64;
            let rv = (gv.len() / 2) as i64;
            let mut row = Vec::with_capacity(w);
            for x in 0..w {
                let mut acc = 0.0;
                for (vi, gvv) in gv.iter().enumerate() {
                    let sy = y as i64 + vi as i64 - rv;
                    if sy < 0 || sy >= h as i64 {
                        continue;
                    }
                    let mut racc = 0.0;
                    for (ui, guu) in gu.iter().enumerate() {
                        let sx = x as i64 + ui as i64 - ru;
                        if sx < 0 || sx >= w as i64 {
                            continue;
                        }
                        racc += diff.values[sy as usize * w + sx as usize] * guu;
                    }
                    acc += racc * gvv;
                }
                row.push(acc.abs());
            }
            row
        })
        .collect();
    Ok(SmoothedResponse { width: w, height: h, values })
}

/// Extract maximal 8-connected components of `{(x,y) : resp > threshold}`
/// with at least `min_area` pixels. Two-pass union-find labeling; regions
/// come out sorted by their first pixel in scan order.
pub fn threshold_and_label(resp: &SmoothedResponse, threshold: f64, min_area: usize) -> Vec<MotionRegion> {
    label_regions(resp, threshold, min_area, 0)
}

pub(crate) fn label_regions(
    resp: &SmoothedResponse,
    threshold: f64,
    min_area: usize,
    frame_index: FrameIndex,
) -> Vec<MotionRegion> {
    let (w, h) = (resp.width, resp.height);
    let mut labels = vec![0u32; w * h]; // 0 = background
    let mut parent: Vec<u32> = vec![0]; // parent[0] unused
    let mut next = 1u32;

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }

    for y in 0..h {
        for x in 0..w {
            if resp.values[y * w + x] <= threshold {
                continue;
            }
            // Previously scanned 8-neighbours: W, NW, N, NE.
            let mut best = 0u32;
            let mut neigh = [0u32; 4];
            let mut n = 0;
            if x > 0 && labels[y * w + x - 1] != 0 {
                neigh[n] = labels[y * w + x - 1];
                n += 1;
            }
            if y > 0 {
                if x > 0 && labels[(y - 1) * w + x - 1] != 0 {
                    neigh[n] = labels[(y - 1) * w + x - 1];
                    n += 1;
                }
                if labels[(y - 1) * w + x] != 0 {
                    neigh[n] = labels[(y - 1) * w + x];
                    n += 1;
                }
                if x + 1 < w && labels[(y - 1) * w + x + 1] != 0 {
                    neigh[n] = labels[(y - 1) * w + x + 1];
                    n += 1;
                }
            }
            for &l in &neigh[..n] {
                let r = find(&mut parent, l);
                if best == 0 || r < best {
                    best = r;
                }
            }
            if best == 0 {
                parent.push(next);
                labels[y * w + x] = next;
                next += 1;
            } else {
                labels[y * w + x] = best;
                for &l in &neigh[..n] {
                    let r = find(&mut parent, l);
                    parent[r as usize] = best;
                }
            }
        }
    }

    // Collect pixels per root in scan order; roots appear in first-pixel order.
    let mut root_order: Vec<u32> = Vec::new();
    let mut root_slot: std::collections::HashMap<u32, usize> = std::collections::HashMap::new();
    let mut masks: Vec<Vec<(u32, u32)>> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == 0 {
                continue;
            }
            let r = find(&mut parent, l);
            let slot = *root_slot.entry(r).or_insert_with(|| {
                root_order.push(r);
                masks.push(Vec::new());
                masks.len() - 1
            });
            masks[slot].push((y as u32, x as u32));
        }
    }

    let mut regions = Vec::new();
    for mask in masks {
        if mask.len() < min_area {
            continue;
        }
        let x_min = mask.iter().map(|&(_, x)| x).min().unwrap();
        let x_max = mask.iter().map(|&(_, x)| x).max().unwrap();
        let y_min = mask[0].0;
        let y_max = mask[mask.len() - 1].0;
        let area = mask.len();
        regions.push(MotionRegion {
            id: RegionId(regions.len() as u32),
            frame_index,
            mask,
            bbox: Bbox { x_min, y_min, x_max, y_max },
            area,
        });
    }
    regions
}

#[derive(Debug, Clone, Copy)]
pub struct MotionParams {
    pub threshold: f64,
    pub min_area: usize,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self { threshold: 0.05, min_area: 25 }
    }
}

/// Difference, smooth, threshold and label in one call. Regions carry the
/// current frame's index.
pub fn detect_motion_regions(
    current: &FrameBuffer,
    past: &FrameBuffer,
    cal: &SceneCalibration,
    params: &MotionParams,
) -> Result<Vec<MotionRegion>, MotionError> {
    let diff = frame_difference(current, past)?;
    let resp = adaptive_smooth(&diff, cal)?;
    Ok(label_regions(&resp, params.threshold, params.min_area, current.index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat(width: usize, height: usize, v: f64, index: FrameIndex) -> FrameBuffer {
        FrameBuffer::from_fn(width, height, index, |_, _| v)
    }

    fn resp_from(values: Vec<f64>, width: usize, height: usize) -> SmoothedResponse {
        SmoothedResponse { width, height, values }
    }

    #[test]
    fn difference_of_identical_frames_is_zero() {
        let a = flat(8, 6, 0.5, 2);
        let b = flat(8, 6, 0.5, 0);
        let d = frame_difference(&a, &b).unwrap();
        assert!(d.values.iter().all(|&v| v == 0.0));
        assert_eq!(d.gap, 2);
    }

    #[test]
    fn difference_of_constant_fields() {
        let a = flat(4, 4, 1.0, 1);
        let b = flat(4, 4, 0.25, 0);
        let d = frame_difference(&a, &b).unwrap();
        assert!(d.values.iter().all(|&v| v == 0.75));
    }

    #[test]
    fn difference_of_moved_block() {
        // 2x2 block at (1,1) moves to (3,1) in a 5x5 frame.
        let past = FrameBuffer::from_fn(5, 5, 0, |x, y| {
            if (1..3).contains(&x) && (1..3).contains(&y) {
                1.0
            } else {
                0.0
            }
        });
        let current = FrameBuffer::from_fn(5, 5, 1, |x, y| {
            if (3..5).contains(&x) && (1..3).contains(&y) {
                1.0
            } else {
                0.0
            }
        });
        let d = frame_difference(&current, &past).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                let expect = if (3..5).contains(&x) && (1..3).contains(&y) {
                    1.0 // newly occupied
                } else if (1..3).contains(&x) && (1..3).contains(&y) {
                    -1.0 // vacated
                } else {
                    0.0
                };
                assert_eq!(d.get(x, y), expect, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn difference_rejects_dimension_mismatch() {
        let a = flat(4, 4, 0.0, 1);
        let b = flat(5, 4, 0.0, 0);
        assert!(matches!(
            frame_difference(&a, &b),
            Err(MotionError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn smooth_zero_stays_zero() {
        let cal = SceneCalibration::new(0.045, 5.0, 0.25).unwrap();
        let diff = DifferenceImage {
            width: 16,
            height: 16,
            values: vec![0.0; 256],
            base_index: 2,
            gap: 2,
        };
        let resp = adaptive_smooth(&diff, &cal).unwrap();
        assert!(resp.values.iter().all(|&v| v == 0.0));
    }

    /// Direct Eq.-style kernel evaluation, independent of the separable path:
    /// full 2-D exponential with the 1/(2*pi*su*sv) prefactor, truncated at
    /// three standard deviations per axis, renormalized over the grid.
    fn oracle_smooth(diff: &DifferenceImage, cal: &SceneCalibration) -> Vec<f64> {
        let (w, h) = (diff.width, diff.height);
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            let su = cal.sigma_u(y as f64);
            let sv = cal.sigma_v(y as f64);
            let ru = (3.0 * su.sqrt()).ceil() as i64;
            let rv = (3.0 * sv.sqrt()).ceil() as i64;
            let pref = 1.0 / (2.0 * std::f64::consts::PI * su * sv);
            let mut kernel = Vec::new();
            let mut mass = 0.0;
            for v in -rv..=rv {
                for u in -ru..=ru {
                    let g = pref * (-0.5 * (u * u) as f64 / su - 0.5 * (v * v) as f64 / sv).exp();
                    kernel.push((u, v, g));
                    mass += g;
                }
            }
            for x in 0..w {
                let mut acc = 0.0;
                for &(u, v, g) in &kernel {
                    let sx = x as i64 + u;
                    let sy = y as i64 + v;
                    if sx < 0 || sx >= w as i64 || sy < 0 || sy >= h as i64 {
                        continue;
                    }
                    acc += diff.values[sy as usize * w + sx as usize] * g / mass;
                }
                out[y * w + x] = acc.abs();
            }
        }
        out
    }

    #[test]
    fn impulse_response_matches_kernel_oracle() {
        // sigma_u == sigma_v == 1 at row y0; raw kernel peak is 1/(2*pi).
        let c2 = 1.0;
        let y0 = 8usize;
        let cal = SceneCalibration::new(1e-9, c2 - 1e-9 * y0 as f64, 1e-9).unwrap();
        assert!((cal.sigma_u(y0 as f64) - 1.0).abs() < 1e-6);
        let raw_peak = 1.0 / (2.0 * std::f64::consts::PI);
        assert!((raw_peak - 0.15915494309189535).abs() < 1e-15);

        let mut values = vec![0.0; 24 * 24];
        values[y0 * 24 + 12] = 1.0;
        let diff = DifferenceImage { width: 24, height: 24, values, base_index: 1, gap: 1 };
        let resp = adaptive_smooth(&diff, &cal).unwrap();
        let oracle = oracle_smooth(&diff, &cal);
        for (a, b) in resp.values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9);
        }
        // Peak sits at the impulse and equals raw_peak / truncated mass.
        let peak = resp.get(12, y0);
        assert!(peak > raw_peak * 0.99 && peak < raw_peak * 1.05);
        for (i, v) in resp.values.iter().enumerate() {
            assert!(*v <= peak + 1e-15, "pixel {i} above peak");
        }
    }

    #[test]
    fn support_grows_with_row() {
        // Impulses at a small and a large row; the response at the larger
        // row must have strictly larger support above any fixed iso-level.
        let cal = SceneCalibration::new(0.045, 2.0, 0.25).unwrap();
        let (w, h) = (64, 64);
        let count_above = |y0: usize| {
            let mut values = vec![0.0; w * h];
            values[y0 * w + 32] = 1.0;
            let diff = DifferenceImage { width: w, height: h, values, base_index: 1, gap: 1 };
            let resp = adaptive_smooth(&diff, &cal).unwrap();
            let peak_small = resp
                .values
                .iter()
                .cloned()
                .fold(0.0, f64::max);
            let level = peak_small * 1e-3;
            resp.values.iter().filter(|&&v| v > level).count()
        };
        assert!(count_above(50) > count_above(10));
    }

    #[test]
    fn kernel_taps_sum_to_one() {
        let cal = SceneCalibration::new(0.045, 3.0, 0.25).unwrap();
        for y in 0..576 {
            let su: f64 = gaussian_taps(cal.sigma_u(y as f64)).iter().sum();
            let sv: f64 = gaussian_taps(cal.sigma_v(y as f64)).iter().sum();
            assert!((su - 1.0).abs() < 1e-6);
            assert!((sv - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn label_empty_response() {
        let resp = resp_from(vec![0.0; 100], 10, 10);
        assert!(threshold_and_label(&resp, 0.5, 1).is_empty());
    }

    #[test]
    fn label_two_blobs() {
        // Two above-threshold blobs separated by a below-threshold gap.
        let mut values = vec![0.0; 100];
        for y in 2..5 {
            for x in 1..4 {
                values[y * 10 + x] = 1.0;
            }
            for x in 6..9 {
                values[y * 10 + x] = 1.0;
            }
        }
        let resp = resp_from(values, 10, 10);
        let regions = threshold_and_label(&resp, 0.5, 1);
        assert_eq!(regions.len(), 2);
        assert_eq!(regions[0].area, 9);
        assert_eq!(regions[1].area, 9);
        assert!(!regions[0].intersects(&regions[1]));
    }

    #[test]
    fn label_min_area_filter() {
        let mut values = vec![0.0; 100];
        values[0] = 1.0;
        values[1] = 1.0;
        values[2] = 1.0;
        let resp = resp_from(values, 10, 10);
        assert!(threshold_and_label(&resp, 0.5, 5).is_empty());
        assert_eq!(threshold_and_label(&resp, 0.5, 3).len(), 1);
    }

    #[test]
    fn label_diagonal_connectivity() {
        let mut values = vec![0.0; 16];
        values[0] = 1.0; // (0,0)
        values[5] = 1.0; // (1,1)
        values[10] = 1.0; // (2,2)
        let resp = resp_from(values, 4, 4);
        let regions = threshold_and_label(&resp, 0.5, 1);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].area, 3);
    }

    /// BFS flood fill over the thresholded grid; the independent labeling
    /// oracle.
    pub(crate) fn flood_fill_partition(resp: &SmoothedResponse, threshold: f64) -> Vec<Vec<(u32, u32)>> {
        let (w, h) = (resp.width, resp.height);
        let mut seen = vec![false; w * h];
        let mut parts = Vec::new();
        for sy in 0..h {
            for sx in 0..w {
                if seen[sy * w + sx] || resp.values[sy * w + sx] <= threshold {
                    continue;
                }
                let mut comp = Vec::new();
                let mut queue = vec![(sx, sy)];
                seen[sy * w + sx] = true;
                while let Some((x, y)) = queue.pop() {
                    comp.push((y as u32, x as u32));
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            if dx == 0 && dy == 0 {
                                continue;
                            }
                            let nx = x as i64 + dx;
                            let ny = y as i64 + dy;
                            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                                continue;
                            }
                            let (nx, ny) = (nx as usize, ny as usize);
                            if !seen[ny * w + nx] && resp.values[ny * w + nx] > threshold {
                                seen[ny * w + nx] = true;
                                queue.push((nx, ny));
                            }
                        }
                    }
                }
                comp.sort_unstable();
                parts.push(comp);
            }
        }
        parts.sort_unstable();
        parts
    }

    #[test]
    fn labeling_matches_flood_fill_on_random_grids() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let values: Vec<f64> = (0..32 * 32).map(|_| rng.gen::<f64>()).collect();
            let resp = resp_from(values, 32, 32);
            let regions = threshold_and_label(&resp, 0.6, 1);
            let mut ours: Vec<Vec<(u32, u32)>> = regions.into_iter().map(|r| r.mask).collect();
            ours.sort_unstable();
            let oracle = flood_fill_partition(&resp, 0.6);
            assert_eq!(ours, oracle);
        }
    }

    #[test]
    fn contains_within_uses_euclidean_disk() {
        let resp = resp_from(
            {
                let mut v = vec![0.0; 64];
                v[3 * 8 + 3] = 1.0;
                v
            },
            8,
            8,
        );
        let region = &threshold_and_label(&resp, 0.5, 1)[0];
        assert!(region.contains_within(3.0, 3.0, 0.1));
        assert!(region.contains_within(5.0, 3.0, 2.0));
        assert!(!region.contains_within(5.1, 3.0, 2.0));
        assert!(!region.contains_within(5.0, 5.0, 2.0));
    }

    proptest! {
        #[test]
        fn difference_is_linear(scale in 0.05f64..1.0, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..64).map(|_| rng.gen::<f64>()).collect();
            let b: Vec<f64> = (0..64).map(|_| rng.gen::<f64>()).collect();
            let fa = FrameBuffer::new(8, 8, a.clone(), 1);
            let fb = FrameBuffer::new(8, 8, b.clone(), 0);
            let sa = FrameBuffer::new(8, 8, a.iter().map(|v| v * scale).collect(), 1);
            let sb = FrameBuffer::new(8, 8, b.iter().map(|v| v * scale).collect(), 0);
            let d = frame_difference(&fa, &fb).unwrap();
            let ds = frame_difference(&sa, &sb).unwrap();
            for (v, vs) in d.values.iter().zip(&ds.values) {
                prop_assert!((v * scale - vs).abs() < 1e-12);
            }
        }

        #[test]
        fn raising_threshold_never_gains_pixels(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..256).map(|_| rng.gen::<f64>()).collect();
            let resp = resp_from(values, 16, 16);
            let count = |t: f64| -> usize {
                threshold_and_label(&resp, t, 1).iter().map(|r| r.area).sum()
            };
            prop_assert!(count(0.3) >= count(0.5));
            prop_assert!(count(0.5) >= count(0.8));
        }
    }
}
