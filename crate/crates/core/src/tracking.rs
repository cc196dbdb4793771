//! Frame-to-frame propagation of feature tracks and appearance clusters.
//!
//! Each step matches live tracks against the new frame's features inside
//! region-intersection search areas, spawns tracks for unmatched features,
//! clusters new tracks into appearance models, re-attaches clusters to the
//! region holding the majority of their matched features, splits clusters
//! whose features persistently land in disjoint regions, and keeps fully
//! occluded clusters alive against their last region's footprint.
//!
//! Appearance histories are append-only. Clusters are never merged; the
//! count only drops through explicit retirement, and an audit log verifies
//! both properties after every step.

use crate::calibration::SceneCalibration;
use crate::clustering::{
    partition_region, Cluster, ClusterCandidate, ClusterId, ClusterParams, PartitionGroup,
    Trajectory,
};
use crate::features::{cmp_order_key, similarity, Descriptor, InterestPoint};
use crate::motion::{MotionRegion, RegionId};
use crate::FrameIndex;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// Stable identifier of a feature track across the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrackId(pub u64);

impl std::fmt::Display for TrackId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One observation of a track: where and how it looked at one frame.
#[derive(Debug, Clone)]
pub struct Appearance {
    pub frame: FrameIndex,
    pub position: (f64, f64),
    pub scale: f64,
    pub descriptor: Descriptor,
    pub region_id: RegionId,
}

/// A feature's appearance history. Frames are strictly increasing; gaps are
/// allowed — a track survives disappearance and is never truncated.
#[derive(Debug, Clone)]
pub struct FeatureTrack {
    pub id: TrackId,
    appearances: Vec<Appearance>,
    pub cluster: Option<ClusterId>,
    region: Arc<MotionRegion>,
    pub born: FrameIndex,
}

impl FeatureTrack {
    fn new(id: TrackId, first: Appearance, region: Arc<MotionRegion>) -> Self {
        let born = first.frame;
        Self { id, appearances: vec![first], cluster: None, region, born }
    }

    pub fn appearances(&self) -> &[Appearance] {
        &self.appearances
    }

    pub fn latest(&self) -> &Appearance {
        self.appearances.last().expect("appearances are never empty")
    }

    pub fn last_seen(&self) -> FrameIndex {
        self.latest().frame
    }

    /// Frames of observed lifetime, first to last appearance inclusive.
    pub fn lifetime(&self) -> i64 {
        self.last_seen() - self.born + 1
    }

    fn push(&mut self, a: Appearance) {
        debug_assert!(a.frame > self.last_seen());
        self.appearances.push(a);
    }

    /// Gap-free tail of recent positions clipped to `[now - n, now]`.
    fn recent_trajectory(&self, now: FrameIndex, n: i64) -> Trajectory {
        let mut end = self.appearances.len();
        let mut start = end - 1;
        while start > 0
            && self.appearances[start - 1].frame == self.appearances[start].frame - 1
            && self.appearances[start - 1].frame >= now - n
        {
            start -= 1;
        }
        while end > start && self.appearances[end - 1].frame > now {
            end -= 1;
        }
        let pts: Vec<(f64, f64)> = self.appearances[start..end].iter().map(|a| a.position).collect();
        Trajectory::new(self.appearances[start].frame, pts)
    }
}

/// The matching domain for a region's tracks in the next frame: the prior
/// region's footprint united with every next-frame region intersecting it.
#[derive(Debug, Clone)]
pub struct SearchArea {
    pub frame_index: FrameIndex,
    prior: Arc<MotionRegion>,
    region_ids: BTreeSet<RegionId>,
    pixels: Vec<(u32, u32)>,
}

impl SearchArea {
    pub fn pixels(&self) -> &[(u32, u32)] {
        &self.pixels
    }

    pub fn region_ids(&self) -> &BTreeSet<RegionId> {
        &self.region_ids
    }

    /// A candidate belongs to the search area when it was detected in one
    /// of the intersecting next-frame regions, or when it sits within the
    /// prior footprint dilated by its own detection scale (the same slack
    /// detection gating uses).
    pub fn admits(&self, point: &InterestPoint) -> bool {
        self.region_ids.contains(&point.region_id)
            || self
                .prior
                .contains_within(point.position.0, point.position.1, point.scale)
    }
}

/// Union of the prior region's mask with the masks of all next-frame
/// regions intersecting it.
pub fn build_search_area(prior: &Arc<MotionRegion>, next_regions: &[Arc<MotionRegion>]) -> SearchArea {
    let mut region_ids = BTreeSet::new();
    let mut pixels: BTreeSet<(u32, u32)> = prior.mask.iter().copied().collect();
    let mut frame_index = prior.frame_index + 1;
    for region in next_regions {
        frame_index = region.frame_index;
        if region.intersects(prior) {
            region_ids.insert(region.id);
            pixels.extend(region.mask.iter().copied());
        }
    }
    SearchArea {
        frame_index,
        prior: prior.clone(),
        region_ids,
        pixels: pixels.into_iter().collect(),
    }
}

/// Best candidate for one track: highest cosine similarity to the track's
/// latest descriptor, accepted only at or above `t_feature`. Ties break by
/// smaller displacement from the track's last position, then `(y, x)`.
pub fn match_feature(
    track: &FeatureTrack,
    candidates: &[(InterestPoint, Descriptor)],
    t_feature: f64,
) -> Option<FeatureMatch> {
    let last = track.latest();
    let mut best: Option<(f64, f64, (f64, f64, f64), usize)> = None;
    for (idx, (point, desc)) in candidates.iter().enumerate() {
        let sim = similarity(&last.descriptor, desc);
        let dx = point.position.0 - last.position.0;
        let dy = point.position.1 - last.position.1;
        let disp = (dx * dx + dy * dy).sqrt();
        let key = (sim, disp, point.order_key(), idx);
        let better = match &best {
            None => true,
            Some((bs, bd, bk, _)) => {
                sim > *bs
                    || (sim == *bs
                        && (disp < *bd
                            || (disp == *bd && cmp_order_key(point.order_key(), *bk).is_lt())))
            }
        };
        if better {
            best = Some((key.0, key.1, key.2, key.3));
        }
    }
    best.filter(|(sim, ..)| *sim >= t_feature)
        .map(|(sim, _, _, idx)| FeatureMatch { candidate_index: idx, similarity: sim })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureMatch {
    pub candidate_index: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TrackerParams {
    pub cluster: ClusterParams,
    /// Trajectory context window N, frames.
    pub context_frames: i64,
    /// Minimum descriptor similarity for a frame-to-frame match.
    pub t_feature: f64,
    /// Frames of silence before a track stops generating match work.
    pub track_retirement: i64,
    /// Minimum matched features per region for split evidence.
    pub split_min_features: usize,
    /// Consecutive frames of split evidence before a split commits.
    pub split_confirm_frames: u32,
    /// Frames of staleness (with every track retired) before a cluster is
    /// written out and dropped.
    pub cluster_retirement: i64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            cluster: ClusterParams::default(),
            context_frames: 5,
            t_feature: 0.75,
            track_retirement: 50,
            split_min_features: 3,
            split_confirm_frames: 3,
            cluster_retirement: 250,
        }
    }
}

#[derive(Debug, Clone)]
struct ClusterState {
    cluster: Cluster,
    stale_since: Option<FrameIndex>,
    split_evidence: u32,
    parent: Option<ClusterId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterSummary {
    pub id: u64,
    pub created_at: FrameIndex,
    pub retired_at: Option<FrameIndex>,
    pub reason: String,
    pub member_count: usize,
    pub split_parent: Option<u64>,
    pub split_children: Vec<u64>,
}

/// Append-only/no-merge verification, updated after every step.
#[derive(Debug, Default)]
pub struct Audit {
    track_state: BTreeMap<TrackId, (usize, u64)>,
    cluster_count: usize,
    violations: Vec<String>,
}

fn mix(h: &mut u64, v: u64) {
    *h ^= v;
    *h = h.wrapping_mul(0x100_0000_01b3);
}

fn hash_appearances(apps: &[Appearance]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for a in apps {
        mix(&mut h, a.frame as u64);
        mix(&mut h, a.position.0.to_bits());
        mix(&mut h, a.position.1.to_bits());
        mix(&mut h, a.scale.to_bits());
        mix(&mut h, a.region_id.0 as u64);
        for v in a.descriptor.values() {
            mix(&mut h, v.to_bits());
        }
    }
    h
}

impl Audit {
    fn check_step(
        &mut self,
        frame: FrameIndex,
        tracks: &BTreeMap<TrackId, FeatureTrack>,
        clusters: &BTreeMap<ClusterId, ClusterState>,
        created: usize,
        retired: usize,
    ) {
        for (id, track) in tracks {
            if let Some(&(old_len, old_hash)) = self.track_state.get(id) {
                if track.appearances.len() < old_len {
                    self.violations
                        .push(format!("frame {frame}: track {id} lost appearance records"));
                } else if hash_appearances(&track.appearances[..old_len]) != old_hash {
                    self.violations
                        .push(format!("frame {frame}: track {id} mutated an old appearance"));
                }
            }
            self.track_state.insert(
                *id,
                (track.appearances.len(), hash_appearances(&track.appearances)),
            );
        }

        let mut owned: BTreeMap<TrackId, ClusterId> = BTreeMap::new();
        for (cid, state) in clusters {
            for tid in &state.cluster.members {
                if let Some(other) = owned.insert(*tid, *cid) {
                    self.violations
                        .push(format!("frame {frame}: track {tid} owned by {other} and {cid}"));
                }
                match tracks.get(tid) {
                    Some(t) if t.cluster == Some(*cid) => {}
                    _ => self
                        .violations
                        .push(format!("frame {frame}: membership of {tid} in {cid} not mirrored")),
                }
            }
        }

        let expected = self.cluster_count + created - retired;
        if clusters.len() != expected {
            self.violations.push(format!(
                "frame {frame}: cluster count {} != {} + {created} created - {retired} retired",
                clusters.len(),
                self.cluster_count
            ));
        }
        self.cluster_count = clusters.len();
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }
}

/// Per-frame view of one live track, for emission.
#[derive(Debug, Clone)]
pub struct TrackRow {
    pub track_id: TrackId,
    pub cluster_id: Option<ClusterId>,
    pub position: (f64, f64),
    pub matched: bool,
}

pub struct Tracker {
    params: TrackerParams,
    cal: SceneCalibration,
    now: FrameIndex,
    tracks: BTreeMap<TrackId, FeatureTrack>,
    clusters: BTreeMap<ClusterId, ClusterState>,
    next_track: u64,
    next_cluster: u64,
    retired: Vec<ClusterSummary>,
    audit: Audit,
}

impl Tracker {
    pub fn new(cal: SceneCalibration, params: TrackerParams) -> Self {
        Self {
            params,
            cal,
            now: -1,
            tracks: BTreeMap::new(),
            clusters: BTreeMap::new(),
            next_track: 1,
            next_cluster: 1,
            retired: Vec::new(),
            audit: Audit::default(),
        }
    }

    pub fn now(&self) -> FrameIndex {
        self.now
    }

    pub fn tracks(&self) -> &BTreeMap<TrackId, FeatureTrack> {
        &self.tracks
    }

    pub fn audit(&self) -> &Audit {
        &self.audit
    }

    pub fn active_cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn active_cluster_ids(&self) -> Vec<ClusterId> {
        self.clusters.keys().copied().collect()
    }

    fn is_track_live(&self, track: &FeatureTrack, now: FrameIndex) -> bool {
        now - track.last_seen() <= self.params.track_retirement
    }

    /// Rows for every live track at the current frame.
    pub fn live_rows(&self) -> Vec<TrackRow> {
        self.tracks
            .values()
            .filter(|t| self.is_track_live(t, self.now))
            .map(|t| TrackRow {
                track_id: t.id,
                cluster_id: t.cluster,
                position: t.latest().position,
                matched: t.last_seen() == self.now,
            })
            .collect()
    }

    /// Summaries for retired clusters plus, in id order, the still-active
    /// ones.
    pub fn summaries(&self) -> Vec<ClusterSummary> {
        let mut out = self.retired.clone();
        for (id, state) in &self.clusters {
            out.push(ClusterSummary {
                id: id.0,
                created_at: state.cluster.created_at,
                retired_at: None,
                reason: "active_at_end".into(),
                member_count: state.cluster.members.len(),
                split_parent: state.parent.map(|p| p.0),
                split_children: Vec::new(),
            });
        }
        out.sort_by_key(|s| s.id);
        out
    }

    /// Advance the tracker into the given frame.
    pub fn step(
        &mut self,
        frame_index: FrameIndex,
        regions_next: Vec<MotionRegion>,
        features_next: &[(InterestPoint, Descriptor)],
    ) {
        assert!(frame_index > self.now, "steps must advance in time");
        let now = frame_index;
        let regions: Vec<Arc<MotionRegion>> = regions_next.into_iter().map(Arc::new).collect();
        let mut created = 0usize;
        let mut retired_count = 0usize;

        // Search areas, one per distinct prior region.
        let mut areas: BTreeMap<(FrameIndex, RegionId), Arc<SearchArea>> = BTreeMap::new();
        let mut area_for = |prior: &Arc<MotionRegion>| -> Arc<SearchArea> {
            areas
                .entry((prior.frame_index, prior.id))
                .or_insert_with(|| Arc::new(build_search_area(prior, &regions)))
                .clone()
        };

        // Match proposals: every live track against every admitted candidate
        // at or above the similarity threshold.
        struct Proposal {
            sim: f64,
            disp: f64,
            cand_key: (f64, f64, f64),
            cand: usize,
            track: TrackId,
        }
        let mut proposals: Vec<Proposal> = Vec::new();
        for track in self.tracks.values() {
            if !self.is_track_live(track, now) {
                continue;
            }
            let prior = match track.cluster.and_then(|cid| self.clusters.get(&cid)) {
                Some(state) => state.cluster.region.clone().unwrap_or_else(|| track.region.clone()),
                None => track.region.clone(),
            };
            let area = area_for(&prior);
            let last = track.latest();
            for (idx, (point, desc)) in features_next.iter().enumerate() {
                if !area.admits(point) {
                    continue;
                }
                let sim = similarity(&last.descriptor, desc);
                if sim < self.params.t_feature {
                    continue;
                }
                let dx = point.position.0 - last.position.0;
                let dy = point.position.1 - last.position.1;
                proposals.push(Proposal {
                    sim,
                    disp: (dx * dx + dy * dy).sqrt(),
                    cand_key: point.order_key(),
                    cand: idx,
                    track: track.id,
                });
            }
        }
        // Highest similarity wins a contested candidate; remaining keys make
        // the order total and the outcome deterministic.
        proposals.sort_by(|a, b| {
            b.sim
                .total_cmp(&a.sim)
                .then_with(|| a.disp.total_cmp(&b.disp))
                .then_with(|| cmp_order_key(a.cand_key, b.cand_key))
                .then_with(|| a.track.cmp(&b.track))
        });
        let mut cand_taken = vec![false; features_next.len()];
        let mut track_taken: BTreeSet<TrackId> = BTreeSet::new();
        let mut matches: Vec<(TrackId, usize)> = Vec::new();
        for p in proposals {
            if cand_taken[p.cand] || track_taken.contains(&p.track) {
                continue;
            }
            cand_taken[p.cand] = true;
            track_taken.insert(p.track);
            matches.push((p.track, p.cand));
        }

        let region_by_id = |rid: RegionId| -> Option<Arc<MotionRegion>> {
            regions.iter().find(|r| r.id == rid).cloned()
        };

        for (tid, cand) in &matches {
            let (point, desc) = &features_next[*cand];
            let track = self.tracks.get_mut(tid).expect("matched track exists");
            track.push(Appearance {
                frame: now,
                position: point.position,
                scale: point.scale,
                descriptor: desc.clone(),
                region_id: point.region_id,
            });
            if let Some(region) = region_by_id(point.region_id) {
                track.region = region;
            }
        }

        // Unmatched candidates spawn new (pending) tracks, in point order.
        let mut birth_order: Vec<usize> = (0..features_next.len())
            .filter(|i| !cand_taken[*i])
            .collect();
        birth_order.sort_by(|&a, &b| {
            cmp_order_key(features_next[a].0.order_key(), features_next[b].0.order_key())
        });
        for idx in birth_order {
            let (point, desc) = &features_next[idx];
            let region = match region_by_id(point.region_id) {
                Some(r) => r,
                None => continue,
            };
            let id = TrackId(self.next_track);
            self.next_track += 1;
            self.tracks.insert(
                id,
                FeatureTrack::new(
                    id,
                    Appearance {
                        frame: now,
                        position: point.position,
                        scale: point.scale,
                        descriptor: desc.clone(),
                        region_id: point.region_id,
                    },
                    region,
                ),
            );
        }

        // Per-region clustering of this frame's points. Assigned tracks act
        // as join targets; unassigned tracks may join a cluster or found a
        // new one. Singleton groups are not committed: a lone feature stays
        // pending until coherent company shows up.
        for region in &regions {
            let mut items: Vec<ClusterCandidate> = self
                .tracks
                .values()
                .filter(|t| t.last_seen() == now && t.latest().region_id == region.id)
                .map(|t| ClusterCandidate {
                    key: t.id,
                    point: InterestPoint {
                        position: t.latest().position,
                        scale: t.latest().scale,
                        frame_index: now,
                        region_id: region.id,
                    },
                    trajectory: t.recent_trajectory(now, self.params.context_frames),
                    current: t.cluster,
                })
                .collect();
            items.sort_by(|a, b| a.key.cmp(&b.key));
            if items.is_empty() {
                continue;
            }
            for group in partition_region(&items, &self.cal, &self.params.cluster) {
                match group {
                    PartitionGroup::Existing { id, added } => {
                        if let Some(state) = self.clusters.get_mut(&id) {
                            for tid in added {
                                state.cluster.members.insert(tid);
                                self.tracks.get_mut(&tid).unwrap().cluster = Some(id);
                            }
                        }
                    }
                    PartitionGroup::New { members } => {
                        let id = ClusterId(self.next_cluster);
                        self.next_cluster += 1;
                        created += 1;
                        for tid in &members {
                            self.tracks.get_mut(tid).unwrap().cluster = Some(id);
                        }
                        self.clusters.insert(
                            id,
                            ClusterState {
                                cluster: Cluster {
                                    id,
                                    members: members.into_iter().collect(),
                                    region: Some(region.clone()),
                                    created_at: now,
                                },
                                stale_since: None,
                                split_evidence: 0,
                                parent: None,
                            },
                        );
                    }
                    PartitionGroup::Singleton { .. } => {}
                }
            }
        }

        // Region reassignment, staleness, and split evidence.
        let mut splits: Vec<(ClusterId, Vec<(RegionId, Vec<TrackId>)>)> = Vec::new();
        for (cid, state) in self.clusters.iter_mut() {
            let mut by_region: BTreeMap<RegionId, Vec<TrackId>> = BTreeMap::new();
            for tid in &state.cluster.members {
                let track = &self.tracks[tid];
                if track.last_seen() == now {
                    by_region.entry(track.latest().region_id).or_default().push(*tid);
                }
            }
            if by_region.is_empty() {
                state.stale_since.get_or_insert(now);
                state.split_evidence = 0;
                continue;
            }
            let prior = state.cluster.region.clone();
            let overlap = |rid: RegionId| -> usize {
                match (&prior, region_by_id(rid)) {
                    (Some(p), Some(r)) => mask_intersection(p, &r),
                    _ => 0,
                }
            };
            let best = by_region
                .iter()
                .map(|(rid, tids)| (tids.len(), overlap(*rid), *rid))
                .max_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(b.2.cmp(&a.2)))
                .map(|(_, _, rid)| rid)
                .unwrap();
            if let Some(region) = region_by_id(best) {
                state.cluster.region = Some(region);
            }
            state.stale_since = None;

            let qualifying: Vec<(RegionId, Vec<TrackId>)> = by_region
                .iter()
                .filter(|(_, tids)| tids.len() >= self.params.split_min_features)
                .map(|(rid, tids)| (*rid, tids.clone()))
                .collect();
            if qualifying.len() >= 2 {
                state.split_evidence += 1;
                if state.split_evidence >= self.params.split_confirm_frames {
                    splits.push((*cid, qualifying));
                }
            } else {
                state.split_evidence = 0;
            }
        }

        // Execute confirmed splits: one child per qualifying region; every
        // other member follows the largest child. Children share the
        // parent's history through the recorded parentage.
        for (parent_id, mut groups) in splits {
            let parent = self.clusters.remove(&parent_id).expect("split parent exists");
            retired_count += 1;
            groups.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
            let mut child_ids = Vec::new();
            let mut remaining: BTreeSet<TrackId> = parent.cluster.members.clone();
            let mut first_child: Option<ClusterId> = None;
            for (rid, tids) in &groups {
                let id = ClusterId(self.next_cluster);
                self.next_cluster += 1;
                created += 1;
                child_ids.push(id.0);
                first_child.get_or_insert(id);
                let members: BTreeSet<TrackId> = tids.iter().copied().collect();
                for tid in &members {
                    remaining.remove(tid);
                    self.tracks.get_mut(tid).unwrap().cluster = Some(id);
                }
                self.clusters.insert(
                    id,
                    ClusterState {
                        cluster: Cluster {
                            id,
                            members,
                            region: region_by_id(*rid),
                            created_at: now,
                        },
                        stale_since: None,
                        split_evidence: 0,
                        parent: Some(parent_id),
                    },
                );
            }
            let sink = first_child.expect("split produces at least two children");
            let sink_state = self.clusters.get_mut(&sink).unwrap();
            for tid in remaining {
                sink_state.cluster.members.insert(tid);
                self.tracks.get_mut(&tid).unwrap().cluster = Some(sink);
            }
            self.retired.push(ClusterSummary {
                id: parent_id.0,
                created_at: parent.cluster.created_at,
                retired_at: Some(now),
                reason: "split".into(),
                member_count: parent.cluster.members.len(),
                split_parent: parent.parent.map(|p| p.0),
                split_children: child_ids,
            });
        }

        // Retire clusters whose every track is retired and whose region
        // association has been stale long enough.
        let to_retire: Vec<ClusterId> = self
            .clusters
            .iter()
            .filter(|(_, state)| {
                let stale_long = state
                    .stale_since
                    .is_some_and(|s| now - s >= self.params.cluster_retirement);
                stale_long
                    && state
                        .cluster
                        .members
                        .iter()
                        .all(|tid| !self.is_track_live(&self.tracks[tid], now))
            })
            .map(|(cid, _)| *cid)
            .collect();
        for cid in to_retire {
            let state = self.clusters.remove(&cid).unwrap();
            retired_count += 1;
            for tid in &state.cluster.members {
                self.tracks.get_mut(tid).unwrap().cluster = None;
            }
            self.retired.push(ClusterSummary {
                id: cid.0,
                created_at: state.cluster.created_at,
                retired_at: Some(now),
                reason: "stale".into(),
                member_count: state.cluster.members.len(),
                split_parent: state.parent.map(|p| p.0),
                split_children: Vec::new(),
            });
        }

        self.now = now;
        self.audit
            .check_step(now, &self.tracks, &self.clusters, created, retired_count);
    }
}

fn mask_intersection(a: &MotionRegion, b: &MotionRegion) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.mask.len() && j < b.mask.len() {
        match a.mask[i].cmp(&b.mask[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
