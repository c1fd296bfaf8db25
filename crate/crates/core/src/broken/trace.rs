use nalgebra::DVector;

use super::{first_hit, reflect, Arc, BreakEvent, BrokenPath, EventKind};
use crate::arrangement::{MemberId, SubspaceLattice};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceConfig {
    pub max_length: f64,
    /// Number of non-straight breaks allowed along a path.
    pub max_breaks: usize,
    /// Size of the sampled outgoing set at faces of codimension two or more.
    pub normal_samples: usize,
}

impl TraceConfig {
    pub fn new(max_length: f64, max_breaks: usize, normal_samples: usize) -> Self {
        Self { max_length, max_breaks, normal_samples }
    }
}

const S_FLOOR: f64 = 1e-12;
const END_SLACK: f64 = 1e-12;

#[derive(Clone)]
struct State {
    segments: Vec<Arc>,
    events: Vec<BreakEvent>,
    open: Arc,
    remaining: f64,
    breaks: usize,
    truncated: bool,
}

impl State {
    fn finish(mut self) -> BrokenPath {
        self.segments.push(self.open);
        BrokenPath { segments: self.segments, events: self.events, truncated: self.truncated }
    }
}

/// All broken geodesics of length `max_length` from `(p, u)`, explored depth
/// first with the straight continuation before the other branches. Straight
/// continuations are not recorded as events and do not use the break budget;
/// once the budget is spent only the straight branch is followed and the
/// path is flagged as truncated.
pub fn trace_broken(lattice: &SubspaceLattice, p: &DVector<f64>, u: &DVector<f64>, cfg: &TraceConfig) -> Result<Vec<BrokenPath>> {
    let n = lattice.ambient_dim();
    if p.len() != n || u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: if p.len() != n { p.len() } else { u.len() } });
    }
    if (p.norm() - 1.0).abs() > 1e-10 || (u.norm() - 1.0).abs() > 1e-10 || p.dot(u).abs() > 1e-10 {
        return Err(Error::Invalid("start must be a unit point with a unit tangent direction".into()));
    }
    let state = State {
        segments: Vec::new(),
        events: Vec::new(),
        open: Arc { start: p.clone(), direction: u.clone(), length: 0.0 },
        remaining: cfg.max_length,
        breaks: 0,
        truncated: false,
    };
    let mut out = Vec::new();
    explore(lattice, cfg, state, p.clone(), u.clone(), &mut out)?;
    Ok(out)
}

fn explore(lattice: &SubspaceLattice, cfg: &TraceConfig, mut st: State, mut p: DVector<f64>, mut u: DVector<f64>, out: &mut Vec<BrokenPath>) -> Result<()> {
    loop {
        let hit = match first_hit(lattice, &p, &u, S_FLOOR, st.remaining) {
            Ok(h) => h,
            Err(Error::AmbiguousHit { face, s, distance, .. }) => {
                let mut prefix = st.clone();
                prefix.open.length += s;
                let prefix_events = prefix.events.len();
                return Err(Error::AmbiguousHit { face, s, distance, prefix_events, prefix: Box::new(prefix.finish()) });
            }
            Err(e) => return Err(e),
        };
        let Some(hit) = hit else {
            st.open.length += st.remaining;
            out.push(st.finish());
            return Ok(());
        };
        st.open.length += hit.s;
        st.remaining -= hit.s;
        if st.remaining <= END_SLACK {
            out.push(st.finish());
            return Ok(());
        }
        let branches = reflect(lattice, hit.face, &hit.point, &hit.direction, cfg.normal_samples)?;
        if branches.len() == 1 {
            // Grazing contact: continue along the face.
            p = hit.point;
            u = branches.into_iter().next().unwrap();
            if (&u - &hit.direction).norm() > 0.0 {
                let closed = std::mem::replace(&mut st.open, Arc { start: p.clone(), direction: u.clone(), length: 0.0 });
                st.segments.push(closed);
            }
            continue;
        }
        let exhausted = st.breaks >= cfg.max_breaks;
        for (j, w) in branches.iter().enumerate() {
            if j == 0 {
                let mut next = st.clone();
                next.truncated |= exhausted;
                explore(lattice, cfg, next, hit.point.clone(), hit.direction.clone(), out)?;
            } else if !exhausted {
                let mut next = st.clone();
                let closed = std::mem::replace(&mut next.open, Arc { start: hit.point.clone(), direction: w.clone(), length: 0.0 });
                next.segments.push(closed);
                next.events.push(BreakEvent {
                    s: cfg.max_length - st.remaining,
                    point: hit.point.clone(),
                    face: hit.face,
                    u_in: hit.direction.clone(),
                    u_out: w.clone(),
                    kind: EventKind::Transversal,
                });
                next.breaks += 1;
                explore(lattice, cfg, next, hit.point.clone(), w.clone(), out)?;
            }
        }
        return Ok(());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationTarget {
    pub point: DVector<f64>,
    pub direction: DVector<f64>,
    pub signature: Vec<MemberId>,
    pub length: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub source_point: DVector<f64>,
    pub source_direction: DVector<f64>,
    pub targets: Vec<RelationTarget>,
}

const DEDUP_TOL: f64 = 1e-8;

/// Endpoints of the broken geodesics of length `pi` from `(p, u)`, i.e. the
/// relation between the two ends of the generalized broken bicharacteristics
/// through `(p, u)`. Targets are deduplicated on endpoint and signature and
/// sorted by signature, then by endpoint.
pub fn time_pi_relation(lattice: &SubspaceLattice, p: &DVector<f64>, u: &DVector<f64>, max_breaks: usize, normal_samples: usize) -> Result<Relation> {
    let cfg = TraceConfig::new(std::f64::consts::PI, max_breaks, normal_samples);
    let paths = trace_broken(lattice, p, u, &cfg)?;
    let mut targets: Vec<RelationTarget> = Vec::new();
    for path in paths {
        let t = RelationTarget {
            point: path.end(),
            direction: path.end_direction(),
            signature: path.signature(),
            length: path.total_length(),
            truncated: path.truncated,
        };
        if !targets.iter().any(|q| q.signature == t.signature && (&q.point - &t.point).norm() <= DEDUP_TOL) {
            targets.push(t);
        }
    }
    targets.sort_by(|a, b| {
        a.signature.cmp(&b.signature).then_with(|| {
            a.point
                .iter()
                .zip(b.point.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(Relation { source_point: p.clone(), source_direction: u.clone(), targets })
}
