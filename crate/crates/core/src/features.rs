//! Interest points and local appearance descriptors.
//!
//! Detection finds strict 3x3x3 extrema of a difference-of-Gaussians
//! pyramid, built only over crops around motion regions so the per-frame
//! work stays proportional to the moving part of the scene. Each point is
//! described by a 128-value gradient-orientation histogram (4x4 spatial
//! cells x 8 orientations, trilinearly binned, clipped at 0.2 and
//! renormalized). The descriptor is upright: the camera is fixed, so no
//! orientation assignment is done.

use crate::motion::{FrameBuffer, MotionRegion, RegionId};
use crate::FrameIndex;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DescriptorError {
    /// Gradient energy under the support window is negligible.
    #[error("flat patch: no usable gradient energy")]
    FlatPatch,
}

pub const DESCRIPTOR_LEN: usize = 128;
const SPATIAL_CELLS: usize = 4;
const ORIENTATION_BINS: usize = 8;
const SAMPLES_PER_SIDE: usize = 16;
const CLIP: f64 = 0.2;
const FLAT_EPS: f64 = 1e-12;

/// A scale-space extremum inside (the dilation of) a motion region.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestPoint {
    pub position: (f64, f64),
    pub scale: f64,
    pub frame_index: FrameIndex,
    pub region_id: RegionId,
}

impl InterestPoint {
    /// Deterministic ordering key used everywhere points are sorted.
    pub fn order_key(&self) -> (f64, f64, f64) {
        (self.position.1, self.position.0, self.scale)
    }
}

pub(crate) fn cmp_order_key(a: (f64, f64, f64), b: (f64, f64, f64)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
}

/// 128 non-negative values with unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    values: Vec<f64>,
}

impl Descriptor {
    /// Normalizes, clips at 0.2 and renormalizes. Errors on negligible
    /// energy.
    pub fn from_histogram(mut values: Vec<f64>) -> Result<Self, DescriptorError> {
        assert_eq!(values.len(), DESCRIPTOR_LEN);
        let norm2: f64 = values.iter().map(|v| v * v).sum();
        if norm2 < FLAT_EPS {
            return Err(DescriptorError::FlatPatch);
        }
        let norm = norm2.sqrt();
        for v in &mut values {
            *v = (*v / norm).min(CLIP);
        }
        let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < FLAT_EPS {
            return Err(DescriptorError::FlatPatch);
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine of the angle between two descriptors, in `[0, 1]` since the
/// components are non-negative.
pub fn similarity(d1: &Descriptor, d2: &Descriptor) -> f64 {
    let dot: f64 = d1.values.iter().zip(&d2.values).map(|(a, b)| a * b).sum();
    (dot / (d1.norm() * d2.norm())).min(1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct FeatureParams {
    /// Minimum |DoG| response, in units of the [0,1] dynamic range.
    pub contrast_threshold: f64,
    pub octaves: usize,
    pub scales_per_octave: usize,
    pub base_sigma: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            contrast_threshold: 0.02,
            octaves: 3,
            scales_per_octave: 2,
            base_sigma: 1.6,
        }
    }
}

impl FeatureParams {
    fn scale_step(&self) -> f64 {
        2f64.powf(1.0 / self.scales_per_octave as f64)
    }

    /// Largest detection scale; bounds the region-mask dilation radius.
    pub fn max_scale(&self) -> f64 {
        self.base_sigma
            * 2f64.powi(self.octaves as i32 - 1)
            * self.scale_step().powi(self.scales_per_octave as i32)
    }

    /// Padding added around region bounding boxes before pyramid work: the
    /// largest gating dilation plus the extremum border of the deepest
    /// octave. Blur context beyond that is sacrificed at crop edges
    /// (replicated borders); only fringe-scale points are affected and the
    /// gating contract is unchanged.
    fn crop_pad(&self) -> u32 {
        self.max_scale().ceil() as u32 + (1 << (self.octaves.saturating_sub(1))) + 1
    }
}

/// Work accounting for the region-confinement guarantee: how many distinct
/// source-frame pixels the detector read this frame.
#[derive(Debug, Clone, Copy, Default)]
pub struct DetectStats {
    pub pixels_visited: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct Rect {
    x0: u32,
    y0: u32,
    x1: u32, // exclusive
    y1: u32, // exclusive
}

impl Rect {
    fn area(&self) -> usize {
        ((self.x1 - self.x0) as usize) * ((self.y1 - self.y0) as usize)
    }

    fn overlaps(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }

    fn merge(&self, o: &Rect) -> Rect {
        Rect {
            x0: self.x0.min(o.x0),
            y0: self.y0.min(o.y0),
            x1: self.x1.max(o.x1),
            y1: self.y1.max(o.y1),
        }
    }
}

/// Merge overlapping crop rectangles until pairwise disjoint so shared
/// pixels are processed (and counted) once.
fn merged_crops(regions: &[MotionRegion], pad: u32, width: usize, height: usize) -> Vec<Rect> {
    let mut rects: Vec<Rect> = regions
        .iter()
        .map(|r| Rect {
            x0: r.bbox.x_min.saturating_sub(pad),
            y0: r.bbox.y_min.saturating_sub(pad),
            x1: (r.bbox.x_max + 1 + pad).min(width as u32),
            y1: (r.bbox.y_max + 1 + pad).min(height as u32),
        })
        .collect();
    loop {
        let mut merged = false;
        'outer: for i in 0..rects.len() {
            for j in (i + 1)..rects.len() {
                if rects[i].overlaps(&rects[j]) {
                    let m = rects[i].merge(&rects[j]);
                    rects[i] = m;
                    rects.remove(j);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break rects;
        }
    }
}

struct Image2 {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Image2 {
    #[inline]
    fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.w + x]
    }
}

/// Separable Gaussian blur with replicated borders; `sigma` is a standard
/// deviation here (pyramid convention), radius 3 sigma.
fn blur(img: &Image2, sigma: f64) -> Image2 {
    if sigma <= 0.0 {
        return Image2 { w: img.w, h: img.h, data: img.data.clone() };
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = {
        let mut t: Vec<f64> = (-radius..=radius)
            .map(|d| (-0.5 * (d * d) as f64 / (sigma * sigma)).exp())
            .collect();
        let mass: f64 = t.iter().sum();
        t.iter_mut().for_each(|v| *v /= mass);
        t
    };
    let (w, h) = (img.w, img.h);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                let sx = (x as i64 + i as i64 - radius).clamp(0, w as i64 - 1) as usize;
                acc += img.get(sx, y) * t;
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                let sy = (y as i64 + i as i64 - radius).clamp(0, h as i64 - 1) as usize;
                acc += tmp[sy * w + x] * t;
            }
            out[y * w + x] = acc;
        }
    }
    Image2 { w, h, data: out }
}

fn downsample(img: &Image2) -> Image2 {
    let w = (img.w / 2).max(1);
    let h = (img.h / 2).max(1);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            data.push(img.get(x * 2, y * 2));
        }
    }
    Image2 { w, h, data }
}

/// Candidate extremum in crop coordinates, before gating.
struct Candidate {
    x_full: f64,
    y_full: f64,
    scale: f64,
}

fn scan_crop(frame: &FrameBuffer, rect: Rect, params: &FeatureParams) -> Vec<Candidate> {
    let w = (rect.x1 - rect.x0) as usize;
    let h = (rect.y1 - rect.y0) as usize;
    let mut data = Vec::with_capacity(w * h);
    for y in rect.y0..rect.y1 {
        for x in rect.x0..rect.x1 {
            data.push(frame.get(x as usize, y as usize));
        }
    }
    let mut base = Image2 { w, h, data };

    // Assume the source carries a nominal 0.5 blur; lift it to base_sigma.
    let initial = (params.base_sigma * params.base_sigma - 0.25).max(0.0).sqrt();
    base = blur(&base, initial);

    let k = params.scale_step();
    let levels = params.scales_per_octave + 3;
    let mut out = Vec::new();

    for octave in 0..params.octaves {
        if base.w < 8 || base.h < 8 {
            break;
        }
        let mut gauss = Vec::with_capacity(levels);
        gauss.push(Image2 { w: base.w, h: base.h, data: base.data.clone() });
        for l in 1..levels {
            let prev_sigma = params.base_sigma * k.powi(l as i32 - 1);
            let inc = prev_sigma * (k * k - 1.0).sqrt();
            gauss.push(blur(&gauss[l - 1], inc));
        }
        let dog: Vec<Image2> = (0..levels - 1)
            .map(|l| Image2 {
                w: gauss[l].w,
                h: gauss[l].h,
                data: gauss[l + 1]
                    .data
                    .iter()
                    .zip(&gauss[l].data)
                    .map(|(a, b)| a - b)
                    .collect(),
            })
            .collect();

        let step = 1u32 << octave;
        for l in 1..dog.len() - 1 {
            let scale = params.base_sigma * k.powi(l as i32) * (1u32 << octave) as f64;
            let (cw, ch) = (dog[l].w, dog[l].h);
            for y in 1..ch - 1 {
                for x in 1..cw - 1 {
                    let v = dog[l].get(x, y);
                    if v.abs() < params.contrast_threshold {
                        continue;
                    }
                    let mut is_max = true;
                    let mut is_min = true;
                    'nb: for dl in 0..3usize {
                        let layer = &dog[l + dl - 1];
                        for dy in 0..3usize {
                            for dx in 0..3usize {
                                if dl == 1 && dy == 1 && dx == 1 {
                                    continue;
                                }
                                let n = layer.get(x + dx - 1, y + dy - 1);
                                if n >= v {
                                    is_max = false;
                                }
                                if n <= v {
                                    is_min = false;
                                }
                                if !is_max && !is_min {
                                    break 'nb;
                                }
                            }
                        }
                    }
                    if is_max || is_min {
                        out.push(Candidate {
                            x_full: rect.x0 as f64 + (x as u32 * step) as f64,
                            y_full: rect.y0 as f64 + (y as u32 * step) as f64,
                            scale,
                        });
                    }
                }
            }
        }
        // Seed the next octave from the level carrying 2*base_sigma.
        base = downsample(&gauss[params.scales_per_octave]);
    }
    out
}

/// Detect interest points within the given motion regions and report how
/// many source pixels were read. Results are sorted by `(y, x, scale)`.
pub fn detect_with_stats(
    frame: &FrameBuffer,
    regions: &[MotionRegion],
    params: &FeatureParams,
) -> (Vec<InterestPoint>, DetectStats) {
    let mut stats = DetectStats::default();
    if regions.is_empty() {
        return (Vec::new(), stats);
    }
    let crops = merged_crops(regions, params.crop_pad(), frame.width(), frame.height());
    stats.pixels_visited = crops.iter().map(Rect::area).sum();

    let mut points = Vec::new();
    for rect in crops {
        for cand in scan_crop(frame, rect, params) {
            // Gate to the union of region masks dilated by the point's
            // detection scale; attach the nearest admitting region.
            let mut best: Option<(f64, RegionId)> = None;
            for region in regions {
                if region.contains_within(cand.x_full, cand.y_full, cand.scale) {
                    let d = region_distance(region, cand.x_full, cand.y_full);
                    if best.map_or(true, |(bd, bid)| d < bd || (d == bd && region.id < bid)) {
                        best = Some((d, region.id));
                    }
                }
            }
            if let Some((_, region_id)) = best {
                points.push(InterestPoint {
                    position: (cand.x_full, cand.y_full),
                    scale: cand.scale,
                    frame_index: frame.index,
                    region_id,
                });
            }
        }
    }
    points.sort_by(|a, b| cmp_order_key(a.order_key(), b.order_key()));
    points.dedup_by(|a, b| a.position == b.position && a.scale == b.scale);
    (points, stats)
}

fn region_distance(region: &MotionRegion, x: f64, y: f64) -> f64 {
    let mut best = f64::INFINITY;
    for &(my, mx) in &region.mask {
        let dx = mx as f64 - x;
        let dy = my as f64 - y;
        best = best.min(dx * dx + dy * dy);
    }
    best.sqrt()
}

/// Detect interest points within motion regions.
pub fn detect(frame: &FrameBuffer, regions: &[MotionRegion], params: &FeatureParams) -> Vec<InterestPoint> {
    detect_with_stats(frame, regions, params).0
}

/// Compute the 4x4x8 gradient-orientation descriptor around a point.
///
/// The support window is 16x16 samples spaced `scale / base_sigma` pixels
/// apart (4x4 cells of 4x4 samples; cells are 4 px wide at the base
/// detection scale). Gradients come from central differences of bilinear
/// samples; magnitudes are weighted by a Gaussian over the window.
pub fn describe(frame: &FrameBuffer, point: &InterestPoint) -> Result<Descriptor, DescriptorError> {
    describe_at(frame, point.position.0, point.position.1, point.scale)
}

pub fn describe_at(frame: &FrameBuffer, x: f64, y: f64, scale: f64) -> Result<Descriptor, DescriptorError> {
    let spacing = scale / FeatureParams::default().base_sigma;
    let half = SAMPLES_PER_SIDE as f64 / 2.0;
    let window_sigma = half; // Gaussian weight over the sample grid
    let mut hist = vec![0.0; DESCRIPTOR_LEN];

    for j in 0..SAMPLES_PER_SIDE {
        for i in 0..SAMPLES_PER_SIDE {
            let si = i as f64 + 0.5 - half; // sample offset in grid units
            let sj = j as f64 + 0.5 - half;
            let px = x + si * spacing;
            let py = y + sj * spacing;
            if px < -spacing || px > frame.width() as f64 - 1.0 + spacing {
                continue;
            }
            if py < -spacing || py > frame.height() as f64 - 1.0 + spacing {
                continue;
            }
            let gx = frame.sample(px + spacing, py) - frame.sample(px - spacing, py);
            let gy = frame.sample(px, py + spacing) - frame.sample(px, py - spacing);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let weight = (-(si * si + sj * sj) / (2.0 * window_sigma * window_sigma)).exp();
            let theta = gy.atan2(gx); // (-pi, pi]
            let obin = (theta + std::f64::consts::PI) / (2.0 * std::f64::consts::PI)
                * ORIENTATION_BINS as f64;

            // Continuous cell coordinates; each sample spreads over the two
            // nearest cells per axis and the two nearest orientation bins.
            let cx = (i as f64 + 0.5) / 4.0 - 0.5;
            let cy = (j as f64 + 0.5) / 4.0 - 0.5;
            let x0 = cx.floor();
            let y0 = cy.floor();
            let o0 = obin.floor();
            let fx = cx - x0;
            let fy = cy - y0;
            let fo = obin - o0;
            for (dx, wx) in [(0i64, 1.0 - fx), (1, fx)] {
                let cxi = x0 as i64 + dx;
                if cxi < 0 || cxi >= SPATIAL_CELLS as i64 {
                    continue;
                }
                for (dy, wy) in [(0i64, 1.0 - fy), (1, fy)] {
                    let cyi = y0 as i64 + dy;
                    if cyi < 0 || cyi >= SPATIAL_CELLS as i64 {
                        continue;
                    }
                    for (do_, wo) in [(0i64, 1.0 - fo), (1, fo)] {
                        let obi = (o0 as i64 + do_).rem_euclid(ORIENTATION_BINS as i64);
                        let idx = (cyi as usize * SPATIAL_CELLS + cxi as usize) * ORIENTATION_BINS
                            + obi as usize;
                        hist[idx] += mag * weight * wx * wy * wo;
                    }
                }
            }
        }
    }
    Descriptor::from_histogram(hist)
}
