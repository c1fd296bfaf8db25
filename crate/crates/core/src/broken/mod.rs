//! Broken geodesics on the unit sphere of an arrangement: great-circle arcs
//! that may change direction where they meet a face, provided the component
//! of the direction tangent to the face is kept and the normal component
//! keeps its length.

mod closure;
mod hit;
mod holder;
mod reflect;
mod trace;

pub use closure::{limit_closure_check, ClosureTolerance, ClosureVerdict, LimitEvent};
pub use hit::{first_hit, Hit};
pub use holder::{holder_check, holder_check_samples, HolderReport, HolderSide, HolderSpec};
pub use reflect::reflect;
pub use trace::{time_pi_relation, trace_broken, Relation, RelationTarget, TraceConfig};

use nalgebra::DVector;

use crate::arrangement::{MemberId, SubspaceLattice};
use crate::flow::FlowSample;
use crate::phasespace::ScCovector;

/// A unit-speed great-circle arc.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub start: DVector<f64>,
    /// Unit tangent at `start`.
    pub direction: DVector<f64>,
    pub length: f64,
}

impl Arc {
    pub fn point_at(&self, s: f64) -> DVector<f64> {
        &self.start * s.cos() + &self.direction * s.sin()
    }

    pub fn direction_at(&self, s: f64) -> DVector<f64> {
        &self.direction * s.cos() - &self.start * s.sin()
    }

    pub fn end(&self) -> DVector<f64> {
        self.point_at(self.length)
    }
}

/// Moves `(p, u)` a distance `s` along the great circle, re-orthonormalizing.
pub(crate) fn advance(p: &DVector<f64>, u: &DVector<f64>, s: f64) -> (DVector<f64>, DVector<f64>) {
    let q = (p * s.cos() + u * s.sin()).normalize();
    let w = u * s.cos() - p * s.sin();
    let w = (&w - &q * q.dot(&w)).normalize();
    (q, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EventKind {
    /// The path meets the face with a nonzero normal component.
    Transversal,
    /// Grazing contact: the normal component vanishes.
    Tangential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakEvent {
    /// Arc-length position of the break.
    pub s: f64,
    pub point: DVector<f64>,
    pub face: MemberId,
    pub u_in: DVector<f64>,
    pub u_out: DVector<f64>,
    pub kind: EventKind,
}

/// Tangential and normal defects of the reflection law at `face`:
/// `|P_T (u_out - u_in)|` and `| |P_N u_out| - |P_N u_in| |`.
pub fn law_margins(lattice: &SubspaceLattice, face: MemberId, u_in: &DVector<f64>, u_out: &DVector<f64>) -> (f64, f64) {
    let x = lattice.member(face);
    let tangential = x.project(&(u_out - u_in)).norm();
    let normal = (x.reject(u_out).norm() - x.reject(u_in).norm()).abs();
    (tangential, normal)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrokenPath {
    pub segments: Vec<Arc>,
    pub events: Vec<BreakEvent>,
    /// The break budget ran out and further branching was suppressed.
    pub truncated: bool,
}

/// Geometric consistency of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathReport {
    /// Largest deviation of arc data from unit, orthogonal `(start, direction)`.
    pub geodesy: f64,
    /// Largest gap between the end of an arc and the start of the next.
    pub continuity: f64,
    /// Largest tangential reflection-law defect.
    pub tangential_law: f64,
    /// Largest normal-length reflection-law defect.
    pub normal_law: f64,
    /// Largest distance of a break point from its face.
    pub on_face: f64,
}

impl PathReport {
    pub fn worst(&self) -> f64 {
        self.geodesy.max(self.continuity).max(self.tangential_law).max(self.normal_law).max(self.on_face)
    }
}

impl BrokenPath {
    /// Assembles a path without checking the reflection law.
    pub fn from_parts_unchecked(segments: Vec<Arc>, events: Vec<BreakEvent>, truncated: bool) -> Self {
        Self { segments, events, truncated }
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|a| a.length).sum()
    }

    pub fn start(&self) -> &DVector<f64> {
        &self.segments[0].start
    }

    pub fn start_direction(&self) -> &DVector<f64> {
        &self.segments[0].direction
    }

    pub fn end(&self) -> DVector<f64> {
        self.segments.last().unwrap().end()
    }

    pub fn end_direction(&self) -> DVector<f64> {
        let a = self.segments.last().unwrap();
        a.direction_at(a.length)
    }

    /// Faces of the break events in order.
    pub fn signature(&self) -> Vec<MemberId> {
        self.events.iter().map(|e| e.face).collect()
    }

    fn locate_arc(&self, s: f64, left: bool) -> (usize, f64) {
        let mut acc = 0.0;
        let last = self.segments.len() - 1;
        for (i, a) in self.segments.iter().enumerate() {
            let end = acc + a.length;
            let inside = if left { s <= end } else { s < end };
            if inside || i == last {
                return (i, s - acc);
            }
            acc = end;
        }
        (last, s - acc)
    }

    /// Position at arc length `s`.
    pub fn point_at(&self, s: f64) -> DVector<f64> {
        let (i, r) = self.locate_arc(s, false);
        self.segments[i].point_at(r)
    }

    /// Direction at arc length `s`; at a break, the outgoing direction unless
    /// `left` is set.
    pub fn direction_at(&self, s: f64, left: bool) -> DVector<f64> {
        let (i, r) = self.locate_arc(s, left);
        self.segments[i].direction_at(r)
    }

    pub fn validate(&self, lattice: &SubspaceLattice) -> PathReport {
        let mut rep = PathReport { geodesy: 0.0, continuity: 0.0, tangential_law: 0.0, normal_law: 0.0, on_face: 0.0 };
        for a in &self.segments {
            let d = (a.start.norm() - 1.0).abs().max((a.direction.norm() - 1.0).abs()).max(a.start.dot(&a.direction).abs());
            rep.geodesy = rep.geodesy.max(d);
        }
        for w in self.segments.windows(2) {
            rep.continuity = rep.continuity.max((w[0].end() - &w[1].start).norm());
        }
        for e in &self.events {
            let (t, n) = law_margins(lattice, e.face, &e.u_in, &e.u_out);
            rep.tangential_law = rep.tangential_law.max(t);
            rep.normal_law = rep.normal_law.max(n);
            rep.on_face = rep.on_face.max(lattice.distance(e.face, &e.point));
        }
        rep
    }

    /// The generalized broken bicharacteristic over this path at energy
    /// `lambda`, in the parametrization with `tau = sqrt(lambda) cos s`.
    /// Defined for `0 < s < pi`.
    pub fn bichar_state(&self, s: f64, lambda: f64, left: bool) -> ScCovector {
        let k = lambda.sqrt();
        let omega = self.point_at(s);
        let dir = self.direction_at(s, left);
        ScCovector::projected(omega, k * s.cos(), dir * (k * s.sin()))
    }

    /// Samples of the bicharacteristic at the given times, with `t = 0` at
    /// `s = pi/2`.
    pub fn bichar_samples(&self, lambda: f64, times: &[f64]) -> Vec<FlowSample> {
        times
            .iter()
            .map(|&t| {
                let s = bichar_s_of_t(t, lambda);
                FlowSample { t, s, xi: self.bichar_state(s, lambda, false) }
            })
            .collect()
    }
}

/// Arc length along the path as a function of bicharacteristic time.
pub fn bichar_s_of_t(t: f64, lambda: f64) -> f64 {
    let x = 2.0 * lambda.sqrt() * t;
    (1.0 / x.cosh()).atan2(-x.tanh())
}

/// Inverse of [`bichar_s_of_t`].
pub fn bichar_t_of_s(s: f64, lambda: f64) -> f64 {
    (-s.cos()).atanh() / (2.0 * lambda.sqrt())
}
