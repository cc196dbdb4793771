//! Spatio-kinetic clustering of interest points.
//!
//! Points inside one motion region are linked when they are spatial
//! neighbours (K nearest) and their trajectories move coherently: the
//! variance of the perspective-weighted inter-point distance over the
//! common time support stays under `t_coherence`. Points already committed
//! to different clusters are never merged.

use crate::calibration::SceneCalibration;
use crate::features::{cmp_order_key, InterestPoint};
use crate::tracking::TrackId;
use crate::FrameIndex;
use std::collections::BTreeSet;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CoherenceError {
    /// Fewer than two common frames between the two trajectories.
    #[error("insufficient trajectory overlap")]
    InsufficientOverlap,
    /// A perspective denominator fell under the guard epsilon; the camera
    /// height assumption does not hold for this pair.
    #[error("perspective denominator too small")]
    NotComparable,
}

/// Gap-free, time-indexed positions over `[start, start + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    start: FrameIndex,
    points: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn new(start: FrameIndex, points: Vec<(f64, f64)>) -> Self {
        assert!(!points.is_empty(), "trajectory must hold at least one position");
        Self { start, points }
    }

    pub fn start(&self) -> FrameIndex {
        self.start
    }

    pub fn end(&self) -> FrameIndex {
        self.start + self.points.len() as FrameIndex - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn at(&self, t: FrameIndex) -> Option<(f64, f64)> {
        if t < self.start || t > self.end() {
            return None;
        }
        Some(self.points[(t - self.start) as usize])
    }
}

/// Stable identifier of a cluster across the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClusterId(pub u64);

impl std::fmt::Display for ClusterId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An object hypothesis: a persistent set of feature tracks plus the motion
/// region it currently sits in (kept, flagged stale, through occlusion).
#[derive(Debug, Clone)]
pub struct Cluster {
    pub id: ClusterId,
    pub members: BTreeSet<TrackId>,
    pub region: Option<Arc<crate::motion::MotionRegion>>,
    pub created_at: FrameIndex,
}

/// Perspective-weighted motion incoherence of two trajectories: the
/// variance of `w_t = |p_t - q_t| / ((y_t + y'_t)/2 + c2)` over the common
/// support, which must span at least two frames.
pub fn coherence(
    a: &Trajectory,
    b: &Trajectory,
    cal: &SceneCalibration,
    epsilon_den: f64,
) -> Result<f64, CoherenceError> {
    let t0 = a.start().max(b.start());
    let t1 = a.end().min(b.end());
    if t1 - t0 + 1 < 2 {
        return Err(CoherenceError::InsufficientOverlap);
    }
    let n = (t1 - t0 + 1) as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for t in t0..=t1 {
        let (xa, ya) = a.at(t).unwrap();
        let (xb, yb) = b.at(t).unwrap();
        let den = (ya + yb) / 2.0 + cal.c2();
        if den < epsilon_den {
            return Err(CoherenceError::NotComparable);
        }
        let dx = xa - xb;
        let dy = ya - yb;
        let w = (dx * dx + dy * dy).sqrt() / den;
        sum += w;
        sum_sq += w * w;
    }
    let mean = sum / n;
    Ok((sum_sq / n - mean * mean).max(0.0))
}

/// The up-to-K candidates nearest to `point` by image distance, nearest
/// first; ties broken by `(y, x, scale)`. The point itself is excluded by
/// exact position-and-scale equality.
pub fn neighbors<'a>(
    point: &InterestPoint,
    candidates: &'a [InterestPoint],
    k: usize,
) -> Vec<&'a InterestPoint> {
    let mut scored: Vec<(f64, &InterestPoint)> = candidates
        .iter()
        .filter(|c| !(c.position == point.position && c.scale == point.scale))
        .map(|c| {
            let dx = c.position.0 - point.position.0;
            let dy = c.position.1 - point.position.1;
            (dx * dx + dy * dy, c)
        })
        .collect();
    scored.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| cmp_order_key(a.1.order_key(), b.1.order_key()))
    });
    scored.into_iter().take(k).map(|(_, c)| c).collect()
}

/// One point of a region with its trajectory and any existing cluster
/// assignment, as fed to the agglomerative pass.
#[derive(Debug, Clone)]
pub struct ClusterCandidate {
    pub key: TrackId,
    pub point: InterestPoint,
    pub trajectory: Trajectory,
    pub current: Option<ClusterId>,
}

#[derive(Debug, Clone, Copy)]
pub struct ClusterParams {
    pub k_neighbors: usize,
    pub t_coherence: f64,
    pub epsilon_den: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            k_neighbors: 6,
            t_coherence: 1e-4,
            epsilon_den: 1.0,
        }
    }
}

/// Outcome of the pass for the region's points: additions to existing
/// clusters, newly formed groups, and points left alone.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionGroup {
    Existing { id: ClusterId, added: Vec<TrackId> },
    New { members: Vec<TrackId> },
    Singleton { member: TrackId },
}

/// Agglomerative pass over one region's points.
///
/// Points are processed in `(y, x, scale)` order. An unassigned point first
/// tries to join the cluster of its nearest coherent *assigned* neighbour;
/// only when no assigned neighbour is coherent does it found a new cluster
/// with its nearest coherent *unassigned* neighbour. Trying assigned
/// neighbours first keeps the cluster count monotone in `t_coherence`.
/// Points in different clusters are never merged.
pub fn partition_region(
    items: &[ClusterCandidate],
    cal: &SceneCalibration,
    params: &ClusterParams,
) -> Vec<PartitionGroup> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| cmp_order_key(items[a].point.order_key(), items[b].point.order_key()));

    // assignment[i]: either a pre-existing cluster id or a new group index.
    #[derive(Clone, Copy, PartialEq)]
    enum Slot {
        Unassigned,
        Existing(ClusterId),
        Group(usize),
    }
    let mut slot: Vec<Slot> = items
        .iter()
        .map(|it| it.current.map_or(Slot::Unassigned, Slot::Existing))
        .collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();

    let points: Vec<InterestPoint> = items.iter().map(|it| it.point.clone()).collect();
    let coherent = |i: usize, j: usize| -> bool {
        matches!(
            coherence(&items[i].trajectory, &items[j].trajectory, cal, params.epsilon_den),
            Ok(v) if v < params.t_coherence
        )
    };

    // K nearest neighbour indices of point i, nearest first, same ordering
    // rules as `neighbors`.
    let knn = |i: usize| -> Vec<usize> {
        let p = &points[i];
        let mut scored: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|(j, c)| *j != i && !(c.position == p.position && c.scale == p.scale))
            .map(|(j, c)| {
                let dx = c.position.0 - p.position.0;
                let dy = c.position.1 - p.position.1;
                (dx * dx + dy * dy, j)
            })
            .collect();
        scored.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| cmp_order_key(points[a.1].order_key(), points[b.1].order_key()))
        });
        scored.into_iter().take(params.k_neighbors).map(|(_, j)| j).collect()
    };

    for &i in &order {
        if slot[i] != Slot::Unassigned {
            continue;
        }
        let nbr_indices = knn(i);

        let joined = nbr_indices.iter().find_map(|&j| match slot[j] {
            Slot::Unassigned => None,
            s => coherent(i, j).then_some(s),
        });
        if let Some(target) = joined {
            slot[i] = target;
            if let Slot::Group(g) = target {
                groups[g].push(i);
            }
            continue;
        }
        let mate = nbr_indices
            .iter()
            .find(|&&j| slot[j] == Slot::Unassigned && coherent(i, j))
            .copied();
        if let Some(j) = mate {
            let g = groups.len();
            groups.push(vec![i, j]);
            slot[i] = Slot::Group(g);
            slot[j] = Slot::Group(g);
        }
    }

    let mut out = Vec::new();
    let mut existing: Vec<(ClusterId, Vec<TrackId>)> = Vec::new();
    for (i, s) in slot.iter().enumerate() {
        if let Slot::Existing(id) = s {
            let entry = match existing.iter_mut().find(|(eid, _)| eid == id) {
                Some(e) => e,
                None => {
                    existing.push((*id, Vec::new()));
                    existing.last_mut().unwrap()
                }
            };
            if items[i].current != Some(*id) {
                entry.1.push(items[i].key);
            }
        }
    }
    existing.sort_by_key(|(id, _)| *id);
    for (id, added) in existing {
        out.push(PartitionGroup::Existing { id, added });
    }
    for members in &groups {
        out.push(PartitionGroup::New {
            members: members.iter().map(|&i| items[i].key).collect(),
        });
    }
    for (i, s) in slot.iter().enumerate() {
        if *s == Slot::Unassigned {
            out.push(PartitionGroup::Singleton { member: items[i].key });
        }
    }
    out
}

/// Full clustering of one region's points: every point ends in exactly one
/// cluster (singletons allowed), existing assignments are kept and extended,
/// and new ids are drawn from `next_id`.
pub fn cluster_region(
    items: &[ClusterCandidate],
    cal: &SceneCalibration,
    params: &ClusterParams,
    existing: &[Cluster],
    next_id: &mut u64,
    frame: FrameIndex,
) -> Vec<Cluster> {
    let groups = partition_region(items, cal, params);
    let mut out: Vec<Cluster> = Vec::new();
    for g in groups {
        match g {
            PartitionGroup::Existing { id, added } => {
                let base = existing.iter().find(|c| c.id == id);
                let mut members: BTreeSet<TrackId> =
                    base.map(|c| c.members.clone()).unwrap_or_default();
                members.extend(items.iter().filter(|it| it.current == Some(id)).map(|it| it.key));
                members.extend(added);
                out.push(Cluster {
                    id,
                    members,
                    region: base.and_then(|c| c.region.clone()),
                    created_at: base.map_or(frame, |c| c.created_at),
                });
            }
            PartitionGroup::New { members } => {
                let id = ClusterId(*next_id);
                *next_id += 1;
                out.push(Cluster {
                    id,
                    members: members.into_iter().collect(),
                    region: None,
                    created_at: frame,
                });
            }
            PartitionGroup::Singleton { member } => {
                let id = ClusterId(*next_id);
                *next_id += 1;
                out.push(Cluster {
                    id,
                    members: std::iter::once(member).collect(),
                    region: None,
                    created_at: frame,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::RegionId;

    fn cal(c2: f64) -> SceneCalibration {
        SceneCalibration::new(0.045, c2, 0.25).unwrap()
    }

    fn traj(start: FrameIndex, pts: &[(f64, f64)]) -> Trajectory {
        Trajectory::new(start, pts.to_vec())
    }

    #[test]
    fn identical_trajectories_are_perfectly_coherent() {
        let a = traj(0, &[(100.0, 100.0), (103.0, 100.0), (106.0, 100.0)]);
        let c = coherence(&a, &a.clone(), &cal(10.0), 1.0).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn constant_offset_is_perfectly_coherent() {
        let a = traj(0, &[(100.0, 100.0), (103.0, 100.0), (106.0, 100.0)]);
        let b = traj(0, &[(108.0, 100.0), (111.0, 100.0), (114.0, 100.0)]);
        let c = coherence(&a, &b, &cal(10.0), 1.0).unwrap();
        assert!(c.abs() < 1e-12);
    }

    #[test]
    fn diverging_pair_matches_hand_variance() {
        // a parked at (100,100); b walks (100,100) -> (110,100) in 3 steps.
        // w = {0, 5/110, 10/110} with c2 = 10; var = 50 / (3 * 110^2).
        let a = traj(0, &[(100.0, 100.0); 3]);
        let b = traj(0, &[(100.0, 100.0), (105.0, 100.0), (110.0, 100.0)]);
        let c = coherence(&a, &b, &cal(10.0), 1.0).unwrap();
        let expected = 50.0 / (3.0 * 110.0 * 110.0);
        assert!((c - expected).abs() < 1e-12, "got {c}, want {expected}");
    }

    #[test]
    fn single_common_frame_is_insufficient() {
        let a = traj(0, &[(0.0, 50.0), (1.0, 50.0)]);
        let b = traj(1, &[(5.0, 50.0), (6.0, 50.0)]);
        // Overlap is exactly frame 1: one common frame.
        assert_eq!(
            coherence(&a, &b, &cal(10.0), 1.0),
            Err(CoherenceError::InsufficientOverlap)
        );
    }

    #[test]
    fn tiny_denominator_is_not_comparable() {
        let a = traj(0, &[(10.0, 0.2), (11.0, 0.2)]);
        let b = traj(0, &[(12.0, 0.2), (13.0, 0.2)]);
        let c = SceneCalibration::new(0.045, 0.1, 0.25).unwrap();
        assert_eq!(coherence(&a, &b, &c, 1.0), Err(CoherenceError::NotComparable));
    }

    #[test]
    fn coherence_is_symmetric() {
        let a = traj(0, &[(10.0, 40.0), (12.0, 41.0), (15.0, 42.0), (19.0, 44.0)]);
        let b = traj(0, &[(20.0, 50.0), (21.0, 50.0), (22.0, 51.0), (22.0, 52.0)]);
        let c = cal(7.0);
        assert_eq!(coherence(&a, &b, &c, 1.0), coherence(&b, &a, &c, 1.0));
    }

    #[test]
    fn coherence_ignores_common_x_shift() {
        let a = traj(0, &[(10.0, 40.0), (12.0, 41.0), (15.0, 42.0)]);
        let b = traj(0, &[(20.0, 50.0), (21.0, 50.0), (22.0, 51.0)]);
        let shift = 37.5;
        let sa = traj(0, &[(10.0 + shift, 40.0), (12.0 + shift, 41.0), (15.0 + shift, 42.0)]);
        let sb = traj(0, &[(20.0 + shift, 50.0), (21.0 + shift, 50.0), (22.0 + shift, 51.0)]);
        let c = cal(7.0);
        assert_eq!(coherence(&a, &b, &c, 1.0), coherence(&sa, &sb, &c, 1.0));
    }

    #[test]
    fn perspective_weighting_scales_out() {
        // Doubling the pixel offsets while doubling (mean row + c2) leaves
        // the weights, and hence the variance, unchanged.
        let c = cal(10.0);
        let a = traj(0, &[(0.0, 40.0), (0.0, 40.0), (0.0, 40.0)]);
        let b = traj(0, &[(4.0, 40.0), (6.0, 40.0), (9.0, 40.0)]);
        let base = coherence(&a, &b, &c, 1.0).unwrap();
        // mean row + c2 = 50; doubled = 100 -> row 90 with same c2.
        let a2 = traj(0, &[(0.0, 90.0), (0.0, 90.0), (0.0, 90.0)]);
        let b2 = traj(0, &[(8.0, 90.0), (12.0, 90.0), (18.0, 90.0)]);
        let doubled = coherence(&a2, &b2, &c, 1.0).unwrap();
        assert!((base - doubled).abs() < 1e-15);

        // Raising the mean row with fixed offsets strictly lowers the value.
        let b3 = traj(0, &[(4.0, 90.0), (6.0, 90.0), (9.0, 90.0)]);
        let nearer = coherence(&a2, &b3, &c, 1.0).unwrap();
        assert!(nearer < base);
        assert!(base > 0.0);
    }

    fn point(x: f64, y: f64, scale: f64) -> InterestPoint {
        InterestPoint {
            position: (x, y),
            scale,
            frame_index: 0,
            region_id: RegionId(0),
        }
    }

    #[test]
    fn neighbors_of_empty_candidates() {
        let p = point(5.0, 5.0, 1.0);
        assert!(neighbors(&p, &[], 4).is_empty());
    }

    #[test]
    fn neighbors_returns_all_when_fewer_than_k() {
        let p = point(0.0, 0.0, 1.0);
        let cands = vec![point(3.0, 0.0, 1.0), point(1.0, 0.0, 1.0), point(2.0, 0.0, 1.0)];
        let ns = neighbors(&p, &cands, 5);
        assert_eq!(ns.len(), 3);
        assert_eq!(ns[0].position.0, 1.0);
        assert_eq!(ns[1].position.0, 2.0);
        assert_eq!(ns[2].position.0, 3.0);
    }

    #[test]
    fn neighbors_breaks_ties_deterministically() {
        let p = point(0.0, 0.0, 1.0);
        // Equidistant pair; (y, x, scale) order decides.
        let cands = vec![point(0.0, 2.0, 1.0), point(2.0, 0.0, 1.0)];
        let ns = neighbors(&p, &cands, 1);
        assert_eq!(ns[0].position, (2.0, 0.0));
    }

    #[test]
    fn neighbors_excludes_self() {
        let p = point(1.0, 1.0, 2.0);
        let cands = vec![p.clone(), point(2.0, 1.0, 2.0)];
        let ns = neighbors(&p, &cands, 5);
        assert_eq!(ns.len(), 1);
        assert_eq!(ns[0].position, (2.0, 1.0));
    }

    fn rigid_group(
        origin: (f64, f64),
        velocity: (f64, f64),
        jitter: &[(f64, f64)],
        first_key: u64,
    ) -> Vec<ClusterCandidate> {
        jitter
            .iter()
            .enumerate()
            .map(|(i, &(jx, jy))| {
                let base = (origin.0 + jx, origin.1 + jy);
                let pts: Vec<(f64, f64)> = (0..5)
                    .map(|t| (base.0 + velocity.0 * t as f64, base.1 + velocity.1 * t as f64))
                    .collect();
                ClusterCandidate {
                    key: TrackId(first_key + i as u64),
                    point: point(pts[4].0, pts[4].1, 1.6),
                    trajectory: Trajectory::new(0, pts),
                    current: None,
                }
            })
            .collect()
    }

    fn grid_jitter(nx: usize, ny: usize, step: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                out.push((i as f64 * step, j as f64 * step));
            }
        }
        out
    }

    #[test]
    fn two_rigid_groups_form_two_clusters() {
        let jit = grid_jitter(5, 4, 6.0);
        let mut items = rigid_group((20.0, 60.0), (2.0, 0.0), &jit, 0);
        items.extend(rigid_group((110.0, 60.0), (-2.0, 0.0), &jit, 100));
        let mut next = 1;
        let clusters = cluster_region(&items, &cal(10.0), &ClusterParams::default(), &[], &mut next, 4);
        assert_eq!(clusters.len(), 2);
        let g1: BTreeSet<TrackId> = (0..20).map(TrackId).collect();
        let g2: BTreeSet<TrackId> = (100..120).map(TrackId).collect();
        assert!(clusters.iter().any(|c| c.members == g1));
        assert!(clusters.iter().any(|c| c.members == g2));
    }

    #[test]
    fn single_point_becomes_singleton_cluster() {
        let items = rigid_group((50.0, 50.0), (1.0, 0.0), &[(0.0, 0.0)], 7);
        let mut next = 1;
        let clusters = cluster_region(&items, &cal(10.0), &ClusterParams::default(), &[], &mut next, 4);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].members.len(), 1);
        assert!(clusters[0].members.contains(&TrackId(7)));
    }

    #[test]
    fn static_points_share_one_cluster() {
        let jit = grid_jitter(3, 3, 4.0);
        let items = rigid_group((40.0, 40.0), (0.0, 0.0), &jit, 0);
        let mut next = 1;
        let clusters = cluster_region(&items, &cal(10.0), &ClusterParams::default(), &[], &mut next, 4);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].members.len(), 9);
    }

    #[test]
    fn partition_covers_all_points_disjointly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let items: Vec<ClusterCandidate> = (0..30)
                .map(|i| {
                    let base = (rng.gen::<f64>() * 100.0, rng.gen::<f64>() * 60.0 + 20.0);
                    let v = (rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 2.0 - 1.0);
                    let pts: Vec<(f64, f64)> = (0..4)
                        .map(|t| (base.0 + v.0 * t as f64, base.1 + v.1 * t as f64))
                        .collect();
                    ClusterCandidate {
                        key: TrackId(i),
                        point: point(pts[3].0, pts[3].1, 1.6),
                        trajectory: Trajectory::new(0, pts),
                        current: None,
                    }
                })
                .collect();
            let mut next = 1;
            let clusters =
                cluster_region(&items, &cal(10.0), &ClusterParams::default(), &[], &mut next, 3);
            let mut seen = BTreeSet::new();
            for c in &clusters {
                for m in &c.members {
                    assert!(seen.insert(*m), "track {m:?} in two clusters");
                }
            }
            assert_eq!(seen.len(), items.len(), "partition must cover all points");
        }
    }

    #[test]
    fn preassigned_points_never_merge() {
        // Two coherent points already in different clusters stay separate,
        // regardless of coherence.
        let jit = [(0.0, 0.0), (5.0, 0.0)];
        let mut items = rigid_group((40.0, 40.0), (1.0, 0.0), &jit, 0);
        items[0].current = Some(ClusterId(1));
        items[1].current = Some(ClusterId(2));
        let groups = partition_region(&items, &cal(10.0), &ClusterParams::default());
        assert!(groups
            .iter()
            .all(|g| !matches!(g, PartitionGroup::New { .. } | PartitionGroup::Singleton { .. })));
        // And an unassigned coherent third point joins exactly one of them.
        let mut items = rigid_group((40.0, 40.0), (1.0, 0.0), &[(0.0, 0.0), (5.0, 0.0), (2.5, 2.0)], 0);
        items[0].current = Some(ClusterId(1));
        items[1].current = Some(ClusterId(2));
        let groups = partition_region(&items, &cal(10.0), &ClusterParams::default());
        let added: Vec<_> = groups
            .iter()
            .filter_map(|g| match g {
                PartitionGroup::Existing { id, added } if !added.is_empty() => Some((*id, added.clone())),
                _ => None,
            })
            .collect();
        assert_eq!(added.len(), 1);
        assert_eq!(added[0].1, vec![TrackId(2)]);
    }

    #[test]
    fn cluster_count_monotone_in_threshold() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..40 {
            let items: Vec<ClusterCandidate> = (0..24)
                .map(|i| {
                    let base = (rng.gen::<f64>() * 80.0, rng.gen::<f64>() * 40.0 + 30.0);
                    let v = (rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0);
                    let pts: Vec<(f64, f64)> = (0..5)
                        .map(|t| (base.0 + v.0 * t as f64, base.1 + v.1 * t as f64))
                        .collect();
                    ClusterCandidate {
                        key: TrackId(i),
                        point: point(pts[4].0, pts[4].1, 1.6),
                        trajectory: Trajectory::new(0, pts),
                        current: None,
                    }
                })
                .collect();
            let count = |t: f64| {
                let mut next = 1;
                let params = ClusterParams { t_coherence: t, ..Default::default() };
                cluster_region(&items, &cal(10.0), &params, &[], &mut next, 4).len()
            };
            let thresholds = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2];
            for w in thresholds.windows(2) {
                assert!(
                    count(w[0]) >= count(w[1]),
                    "raising t_coherence from {} to {} increased the cluster count",
                    w[0],
                    w[1]
                );
            }
        }
    }
}
