//! Synthetic scenes with scripted sprites and exact ground truth.
//!
//! Rendering is pure integer arithmetic (u8 canvas, integer interpolation
//! of paths and sizes, seeded block textures) so identical (scenario, seed)
//! inputs produce bit-identical frames on every platform. Ground truth —
//! per-frame bounding boxes and visibility fractions — follows from the
//! geometry alone.
//!
//! Scenarios can be authored in a small text format:
//!
//! ```text
//! # comment
//! scene <width> <height> <frames>
//! background flat <value>
//! background noise <seed>
//! background tiles <seed> <tile>
//! sprite <id> <rect|ellipse> <w> <h> depth <d> texture <seed> [block <px>]
//! size <id> linear <w0> <h0> <w1> <h1>
//! path <id> <frame>:<x>,<y> [<frame>:<x>,<y> ...]
//! ```
//!
//! Waypoint frames are ascending; positions between waypoints interpolate
//! linearly with round-to-nearest integer arithmetic. A single waypoint
//! holds the sprite still.

use crate::motion::{Bbox, FrameBuffer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenario parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    Flat(u8),
    Noise { seed: u64 },
    Tiles { seed: u64, tile: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpriteShape {
    Rect,
    Ellipse,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SizeTrack {
    Fixed(u32, u32),
    Linear { from: (u32, u32), to: (u32, u32) },
}

impl SizeTrack {
    fn at(&self, t: usize, len: usize) -> (u32, u32) {
        match *self {
            SizeTrack::Fixed(w, h) => (w, h),
            SizeTrack::Linear { from, to } => {
                let den = (len as i64 - 1).max(1);
                let w = lerp_round(from.0 as i64, to.0 as i64, t as i64, den);
                let h = lerp_round(from.1 as i64, to.1 as i64, t as i64, den);
                (w.max(1) as u32, h.max(1) as u32)
            }
        }
    }
}

/// Integer linear interpolation `a + (b-a) * num/den`, rounded to nearest.
fn lerp_round(a: i64, b: i64, num: i64, den: i64) -> i64 {
    let diff = (b - a) * num;
    let twice = 2 * diff + if diff >= 0 { den } else { -den };
    a + twice / (2 * den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpriteScript {
    pub id: String,
    pub shape: SpriteShape,
    pub size: SizeTrack,
    pub texture_seed: u64,
    /// Texture block edge, px; smaller blocks mean more interest points.
    pub texture_block: u32,
    /// Draw order; larger depth is nearer the camera and drawn on top.
    pub depth: i32,
    /// Waypoints `(frame, x, y)`, ascending frames.
    pub waypoints: Vec<(usize, i32, i32)>,
}

impl SpriteScript {
    pub fn center_at(&self, t: usize) -> (i32, i32) {
        let wps = &self.waypoints;
        if t <= wps[0].0 {
            return (wps[0].1, wps[0].2);
        }
        for pair in wps.windows(2) {
            let (f0, x0, y0) = pair[0];
            let (f1, x1, y1) = pair[1];
            if t <= f1 {
                let den = (f1 - f0) as i64;
                let num = (t - f0) as i64;
                return (
                    lerp_round(x0 as i64, x1 as i64, num, den) as i32,
                    lerp_round(y0 as i64, y1 as i64, num, den) as i32,
                );
            }
        }
        let last = wps[wps.len() - 1];
        (last.1, last.2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub length: usize,
    pub background: Background,
    pub sprites: Vec<SpriteScript>,
}

/// Per-frame, per-sprite truth: the on-frame bounding box (None when fully
/// off frame) and the exactly computed visible fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpriteTruth {
    pub sprite_id: String,
    pub bbox: Option<Bbox>,
    pub visibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `frames[t]` holds one entry per sprite, in scenario order.
    pub frames: Vec<Vec<SpriteTruth>>,
}

fn validate(scenario: &Scenario) -> Result<(), SynthError> {
    if scenario.length < 2 {
        return Err(SynthError::InvalidScenario("length must be at least 2".into()));
    }
    if scenario.width == 0 || scenario.height == 0 {
        return Err(SynthError::InvalidScenario("frame dimensions must be positive".into()));
    }
    let mut depths = std::collections::BTreeSet::new();
    for s in &scenario.sprites {
        if s.waypoints.is_empty() {
            return Err(SynthError::InvalidScenario(format!("sprite {} has no waypoints", s.id)));
        }
        if s.waypoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(SynthError::InvalidScenario(format!(
                "sprite {} waypoint frames must increase",
                s.id
            )));
        }
        if !depths.insert(s.depth) {
            return Err(SynthError::InvalidScenario(format!(
                "sprite depths must be unique (depth {} repeats)",
                s.depth
            )));
        }
        if s.texture_block == 0 {
            return Err(SynthError::InvalidScenario(format!("sprite {} block must be positive", s.id)));
        }
    }
    Ok(())
}

/// High-contrast seeded block texture: each block alternates between a dark
/// and a bright band by parity, with per-block jitter.
fn texture_patch(seed: u64, w: u32, h: u32, block: u32) -> Vec<u8> {
    let bw = w.div_ceil(block);
    let bh = h.div_ceil(block);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<u8> = (0..bw as usize * bh as usize)
        .map(|i| {
            let (bx, by) = (i % bw as usize, i / bw as usize);
            if (bx + by) % 2 == 0 {
                40 + rng.gen_range(0..40)
            } else {
                180 + rng.gen_range(0..56)
            }
        })
        .collect();
    let mut out = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h {
        for x in 0..w {
            let b = (y / block) as usize * bw as usize + (x / block) as usize;
            out.push(blocks[b]);
        }
    }
    out
}

struct Raster {
    /// On-frame pixels `(y, x)` with their texture values.
    pixels: Vec<(u32, u32, u8)>,
    /// Total shape pixels including off-frame ones.
    total: usize,
}

fn rasterize(
    sprite: &SpriteScript,
    t: usize,
    length: usize,
    width: u32,
    height: u32,
    base_size: (u32, u32),
    base_texture: &[u8],
) -> Raster {
    let (w, h) = sprite.size.at(t, length);
    let (cx, cy) = sprite.center_at(t);
    let left = cx - (w as i32) / 2;
    let top = cy - (h as i32) / 2;
    let mut pixels = Vec::new();
    let mut total = 0usize;
    // Ellipse test in integer arithmetic on doubled coordinates, so even
    // sizes keep an exact center.
    let (a2, b2) = (w as i64, h as i64);
    for sy in 0..h as i32 {
        for sx in 0..w as i32 {
            if sprite.shape == SpriteShape::Ellipse {
                let dx = (2 * sx + 1) as i64 - a2;
                let dy = (2 * sy + 1) as i64 - b2;
                if dx * dx * b2 * b2 + dy * dy * a2 * a2 > a2 * a2 * b2 * b2 {
                    continue;
                }
            }
            total += 1;
            let px = left + sx;
            let py = top + sy;
            if px < 0 || py < 0 || px >= width as i32 || py >= height as i32 {
                continue;
            }
            // Nearest-neighbour sample of the base texture.
            let tx = (sx as i64 * base_size.0 as i64 / w as i64).min(base_size.0 as i64 - 1);
            let ty = (sy as i64 * base_size.1 as i64 / h as i64).min(base_size.1 as i64 - 1);
            let texel = base_texture[ty as usize * base_size.0 as usize + tx as usize];
            pixels.push((py as u32, px as u32, texel));
        }
    }
    Raster { pixels, total }
}

fn base_size(sprite: &SpriteScript) -> (u32, u32) {
    match sprite.size {
        SizeTrack::Fixed(w, h) => (w, h),
        SizeTrack::Linear { from, to } => (from.0.max(to.0), from.1.max(to.1)),
    }
}

/// Render a scenario deterministically. The run `seed` perturbs texture and
/// background seeds so one scenario can be instantiated many ways.
pub fn render(scenario: &Scenario, seed: u64) -> Result<(Vec<FrameBuffer>, GroundTruth), SynthError> {
    validate(scenario)?;
    let (w, h) = (scenario.width as usize, scenario.height as usize);

    let background: Vec<u8> = match scenario.background {
        Background::Flat(v) => vec![v; w * h],
        Background::Noise { seed: bseed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(bseed ^ seed.wrapping_mul(0x9e37_79b9));
            (0..w * h).map(|_| rng.gen_range(30..226)).collect()
        }
        Background::Tiles { seed: bseed, tile } => {
            let patch = texture_patch(bseed ^ seed.wrapping_mul(0x9e37_79b9), scenario.width, scenario.height, tile);
            patch
        }
    };

    // Sprites sorted by depth: deepest first, nearest drawn last.
    let mut order: Vec<usize> = (0..scenario.sprites.len()).collect();
    order.sort_by_key(|&i| scenario.sprites[i].depth);

    let textures: Vec<(Vec<u8>, (u32, u32))> = scenario
        .sprites
        .iter()
        .map(|s| {
            let bs = base_size(s);
            (texture_patch(s.texture_seed ^ seed.wrapping_mul(0x85eb_ca6b), bs.0, bs.1, s.texture_block), bs)
        })
        .collect();

    let mut frames = Vec::with_capacity(scenario.length);
    let mut truth = Vec::with_capacity(scenario.length);
    for t in 0..scenario.length {
        let rasters: Vec<Raster> = scenario
            .sprites
            .iter()
            .enumerate()
            .map(|(i, s)| rasterize(s, t, scenario.length, scenario.width, scenario.height, textures[i].1, &textures[i].0))
            .collect();

        let mut canvas = background.clone();
        // Nearest-on-top painting and per-pixel nearest-owner map.
        let mut owner: Vec<i32> = vec![i32::MIN; w * h];
        for &i in &order {
            for &(py, px, texel) in &rasters[i].pixels {
                canvas[py as usize * w + px as usize] = texel;
                owner[py as usize * w + px as usize] = scenario.sprites[i].depth;
            }
        }

        let mut per_sprite = Vec::with_capacity(scenario.sprites.len());
        for (i, sprite) in scenario.sprites.iter().enumerate() {
            let raster = &rasters[i];
            let mut visible = 0usize;
            let mut bbox: Option<Bbox> = None;
            for &(py, px, _) in &raster.pixels {
                bbox = Some(match bbox {
                    None => Bbox { x_min: px, y_min: py, x_max: px, y_max: py },
                    Some(b) => Bbox {
                        x_min: b.x_min.min(px),
                        y_min: b.y_min.min(py),
                        x_max: b.x_max.max(px),
                        y_max: b.y_max.max(py),
                    },
                });
                if owner[py as usize * w + px as usize] <= sprite.depth {
                    visible += 1;
                }
            }
            let visibility = if raster.total == 0 {
                0.0
            } else {
                visible as f64 / raster.total as f64
            };
            per_sprite.push(SpriteTruth {
                sprite_id: sprite.id.clone(),
                bbox,
                visibility,
            });
        }

        frames.push(FrameBuffer::from_u8(w, h, &canvas, t as i64));
        truth.push(per_sprite);
    }
    Ok((frames, GroundTruth { frames: truth }))
}

fn sprite(
    id: &str,
    shape: SpriteShape,
    size: SizeTrack,
    depth: i32,
    texture_seed: u64,
    block: u32,
    waypoints: &[(usize, i32, i32)],
) -> SpriteScript {
    SpriteScript {
        id: id.into(),
        shape,
        size,
        texture_seed,
        texture_block: block,
        depth,
        waypoints: waypoints.to_vec(),
    }
}

/// The named scenarios used by the test harness, one per key tracking
/// situation plus a scale-change and a cluttered-background run.
pub fn scenario_library() -> Vec<Scenario> {
    let mut out = Vec::new();

    out.push(Scenario {
        name: "lone_walker".into(),
        width: 160,
        height: 120,
        length: 100,
        background: Background::Flat(120),
        sprites: vec![sprite(
            "walker",
            SpriteShape::Rect,
            SizeTrack::Fixed(14, 14),
            1,
            11,
            2,
            &[(0, 18, 62), (99, 142, 62)],
        )],
    });

    out.push(Scenario {
        name: "pair_separates".into(),
        width: 160,
        height: 120,
        length: 80,
        background: Background::Flat(120),
        sprites: vec![
            sprite(
                "upper",
                SpriteShape::Rect,
                SizeTrack::Fixed(14, 14),
                1,
                21,
                2,
                &[(0, 30, 52), (40, 80, 52), (52, 80, 16), (79, 130, 16)],
            ),
            sprite(
                "lower",
                SpriteShape::Rect,
                SizeTrack::Fixed(14, 14),
                2,
                22,
                2,
                &[(0, 30, 66), (40, 80, 66), (52, 80, 102), (79, 130, 102)],
            ),
        ],
    });

    out.push(Scenario {
        name: "pair_joins".into(),
        width: 160,
        height: 120,
        length: 80,
        background: Background::Flat(120),
        sprites: vec![
            sprite(
                "north",
                SpriteShape::Rect,
                SizeTrack::Fixed(14, 14),
                1,
                31,
                2,
                &[(0, 30, 20), (40, 80, 52), (79, 130, 52)],
            ),
            sprite(
                "south",
                SpriteShape::Rect,
                SizeTrack::Fixed(14, 14),
                2,
                32,
                2,
                &[(0, 30, 98), (40, 80, 66), (79, 130, 66)],
            ),
        ],
    });

    out.push(Scenario {
        name: "partial_occlusion".into(),
        width: 160,
        height: 120,
        length: 100,
        background: Background::Flat(120),
        sprites: vec![
            sprite(
                "walker",
                SpriteShape::Rect,
                SizeTrack::Fixed(14, 14),
                1,
                41,
                2,
                &[(0, 18, 60), (99, 142, 60)],
            ),
            // Static pillar in the walker's way, nearer the camera.
            sprite(
                "pillar",
                SpriteShape::Rect,
                SizeTrack::Fixed(8, 40),
                5,
                42,
                2,
                &[(0, 80, 60)],
            ),
        ],
    });

    out.push(Scenario {
        name: "full_occlusion_cross".into(),
        width: 160,
        height: 120,
        length: 100,
        background: Background::Flat(120),
        sprites: vec![
            sprite(
                "east",
                SpriteShape::Rect,
                SizeTrack::Fixed(12, 12),
                1,
                51,
                2,
                &[(0, 30, 60), (99, 130, 60)],
            ),
            sprite(
                "west",
                SpriteShape::Rect,
                SizeTrack::Fixed(20, 20),
                5,
                52,
                2,
                &[(0, 130, 60), (99, 30, 60)],
            ),
        ],
    });

    out.push(Scenario {
        name: "scale_change".into(),
        width: 160,
        height: 120,
        length: 100,
        background: Background::Flat(120),
        sprites: vec![sprite(
            "walker",
            SpriteShape::Rect,
            SizeTrack::Linear { from: (24, 24), to: (12, 12) },
            1,
            61,
            2,
            &[(0, 25, 60), (99, 135, 60)],
        )],
    });

    out.push(Scenario {
        name: "cluttered_background".into(),
        width: 160,
        height: 120,
        length: 100,
        background: Background::Tiles { seed: 71, tile: 3 },
        sprites: vec![sprite(
            "walker",
            SpriteShape::Rect,
            SizeTrack::Fixed(14, 14),
            1,
            72,
            2,
            &[(0, 18, 62), (99, 142, 62)],
        )],
    });

    out
}

pub fn scenario_by_name(name: &str) -> Option<Scenario> {
    scenario_library().into_iter().find(|s| s.name == name)
}

/// Parse the plain-text scenario format described in the module docs.
pub fn parse_scenario(name: &str, text: &str) -> Result<Scenario, SynthError> {
    let mut width = None;
    let mut background = Background::Flat(120);
    let mut sprites: Vec<SpriteScript> = Vec::new();

    let err = |line: usize, msg: &str| SynthError::ParseError { line, msg: msg.into() };

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = stripped.split_whitespace().collect();
        match tokens[0] {
            "scene" => {
                if tokens.len() != 4 {
                    return Err(err(line, "scene takes <width> <height> <frames>"));
                }
                let w: u32 = tokens[1].parse().map_err(|_| err(line, "bad width"))?;
                let h: u32 = tokens[2].parse().map_err(|_| err(line, "bad height"))?;
                let f: usize = tokens[3].parse().map_err(|_| err(line, "bad frame count"))?;
                width = Some((w, h, f));
            }
            "background" => match tokens.get(1).copied() {
                Some("flat") => {
                    let v: u8 = tokens
                        .get(2)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(line, "background flat takes a 0-255 value"))?;
                    background = Background::Flat(v);
                }
                Some("noise") => {
                    let s: u64 = tokens
                        .get(2)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(line, "background noise takes a seed"))?;
                    background = Background::Noise { seed: s };
                }
                Some("tiles") => {
                    let s: u64 = tokens
                        .get(2)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(line, "background tiles takes <seed> <tile>"))?;
                    let tile: u32 = tokens
                        .get(3)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(line, "background tiles takes <seed> <tile>"))?;
                    background = Background::Tiles { seed: s, tile };
                }
                _ => return Err(err(line, "background kind must be flat, noise or tiles")),
            },
            "sprite" => {
                if tokens.len() < 9 {
                    return Err(err(
                        line,
                        "sprite takes <id> <rect|ellipse> <w> <h> depth <d> texture <seed> [block <px>]",
                    ));
                }
                let id = tokens[1].to_string();
                let shape = match tokens[2] {
                    "rect" => SpriteShape::Rect,
                    "ellipse" => SpriteShape::Ellipse,
                    other => return Err(err(line, &format!("unknown shape {other}"))),
                };
                let w: u32 = tokens[3].parse().map_err(|_| err(line, "bad sprite width"))?;
                let h: u32 = tokens[4].parse().map_err(|_| err(line, "bad sprite height"))?;
                if tokens[5] != "depth" {
                    return Err(err(line, "expected `depth`"));
                }
                let depth: i32 = tokens[6].parse().map_err(|_| err(line, "bad depth"))?;
                if tokens[7] != "texture" {
                    return Err(err(line, "expected `texture`"));
                }
                let seed: u64 = tokens[8].parse().map_err(|_| err(line, "bad texture seed"))?;
                let block = match tokens.get(9).copied() {
                    Some("block") => tokens
                        .get(10)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(line, "block takes a pixel size"))?,
                    None => 2,
                    Some(other) => return Err(err(line, &format!("unexpected token {other}"))),
                };
                sprites.push(SpriteScript {
                    id,
                    shape,
                    size: SizeTrack::Fixed(w, h),
                    texture_seed: seed,
                    texture_block: block,
                    depth,
                    waypoints: Vec::new(),
                });
            }
            "size" => {
                if tokens.len() != 7 || tokens[2] != "linear" {
                    return Err(err(line, "size takes <id> linear <w0> <h0> <w1> <h1>"));
                }
                let target = sprites
                    .iter_mut()
                    .find(|s| s.id == tokens[1])
                    .ok_or_else(|| err(line, "size names an unknown sprite"))?;
                let vals: Result<Vec<u32>, _> = tokens[3..7].iter().map(|t| t.parse()).collect();
                let v = vals.map_err(|_| err(line, "bad size values"))?;
                target.size = SizeTrack::Linear { from: (v[0], v[1]), to: (v[2], v[3]) };
            }
            "path" => {
                if tokens.len() < 3 {
                    return Err(err(line, "path takes <id> <frame>:<x>,<y> ..."));
                }
                let target = sprites
                    .iter_mut()
                    .find(|s| s.id == tokens[1])
                    .ok_or_else(|| err(line, "path names an unknown sprite"))?;
                let mut wps = Vec::new();
                for tok in &tokens[2..] {
                    let (f, xy) = tok
                        .split_once(':')
                        .ok_or_else(|| err(line, "waypoint must be <frame>:<x>,<y>"))?;
                    let (x, y) = xy
                        .split_once(',')
                        .ok_or_else(|| err(line, "waypoint must be <frame>:<x>,<y>"))?;
                    wps.push((
                        f.parse().map_err(|_| err(line, "bad waypoint frame"))?,
                        x.parse().map_err(|_| err(line, "bad waypoint x"))?,
                        y.parse().map_err(|_| err(line, "bad waypoint y"))?,
                    ));
                }
                target.waypoints = wps;
            }
            other => return Err(err(line, &format!("unknown directive {other}"))),
        }
    }

    let (w, h, f) = width.ok_or_else(|| SynthError::InvalidScenario("missing scene line".into()))?;
    let scenario = Scenario {
        name: name.into(),
        width: w,
        height: h,
        length: f,
        background,
        sprites,
    };
    validate(&scenario)?;
    Ok(scenario)
}

/// Render a scenario back into its text form so generated outputs carry
/// their own provenance.
pub fn format_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    out.push_str(&format!("scene {} {} {}\n", s.width, s.height, s.length));
    match s.background {
        Background::Flat(v) => out.push_str(&format!("background flat {v}\n")),
        Background::Noise { seed } => out.push_str(&format!("background noise {seed}\n")),
        Background::Tiles { seed, tile } => out.push_str(&format!("background tiles {seed} {tile}\n")),
    }
    for sp in &s.sprites {
        let shape = match sp.shape {
            SpriteShape::Rect => "rect",
            SpriteShape::Ellipse => "ellipse",
        };
        let (w, h) = base_size(sp);
        out.push_str(&format!(
            "sprite {} {shape} {w} {h} depth {} texture {} block {}\n",
            sp.id, sp.depth, sp.texture_seed, sp.texture_block
        ));
        if let SizeTrack::Linear { from, to } = sp.size {
            out.push_str(&format!("size {} linear {} {} {} {}\n", sp.id, from.0, from.1, to.0, to.1));
        }
        let wps: Vec<String> = sp
            .waypoints
            .iter()
            .map(|(f, x, y)| format!("{f}:{x},{y}"))
            .collect();
        out.push_str(&format!("path {} {}\n", sp.id, wps.join(" ")));
    }
    out
}
