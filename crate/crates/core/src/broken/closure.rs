use nalgebra::DVector;

use super::{BrokenPath, EventKind};
use crate::arrangement::{MemberId, SubspaceLattice};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureTolerance {
    /// Largest admissible sup distance between the last two members.
    pub convergence: f64,
    /// Events of the finest member closer than this in arc length are merged.
    pub merge_gap: f64,
    /// Distance within which a merged break point is assigned to a face.
    pub face: f64,
    /// Largest admissible reflection-law and geodesy defect of the limit.
    pub law: f64,
    /// Number of arc-length grid points for the sup distances.
    pub grid: usize,
}

impl Default for ClosureTolerance {
    fn default() -> Self {
        Self { convergence: 1e-6, merge_gap: 1e-5, face: 1e-6, law: 1e-6, grid: 2001 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitEvent {
    pub s: f64,
    pub point: DVector<f64>,
    pub face: MemberId,
    /// Codimension of the face in the ambient space; at least two for a corner.
    pub codim: usize,
    pub kind: EventKind,
    pub tangential_margin: f64,
    pub normal_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureVerdict {
    pub pass: bool,
    /// Sup distance between consecutive members.
    pub sup_gaps: Vec<f64>,
    pub events: Vec<LimitEvent>,
    /// Geodesy and continuity defect of the limit's arcs.
    pub geodesy: f64,
    pub worst_margin: f64,
}

/// Checks that a sequence of broken geodesics converges uniformly and that
/// the limit, with nearly coincident breaks merged, is again a broken
/// geodesic. The finest member stands in for the limit.
pub fn limit_closure_check(lattice: &SubspaceLattice, family: &[BrokenPath], tol: &ClosureTolerance) -> Result<ClosureVerdict> {
    if family.len() < 2 {
        return Err(Error::InsufficientResolution("a family needs at least two members".into()));
    }
    let length = family.iter().map(|p| p.total_length()).fold(f64::INFINITY, f64::min);
    let n = tol.grid.max(2);
    let grid: Vec<f64> = (0..n).map(|i| length * i as f64 / (n - 1) as f64).collect();
    let sup_gaps: Vec<f64> = family
        .windows(2)
        .map(|w| grid.iter().map(|&s| (w[0].point_at(s) - w[1].point_at(s)).norm()).fold(0.0, f64::max))
        .collect();
    let last_gap = *sup_gaps.last().unwrap();
    let settling = sup_gaps.len() < 2 || last_gap <= sup_gaps[sup_gaps.len() - 2] * (1.0 + 1e-9) + 1e-15;
    if last_gap > tol.convergence || !settling {
        return Err(Error::NoUniformLimit { gaps: sup_gaps });
    }

    let limit = family.last().unwrap();
    let mut events = Vec::new();
    let mut i = 0;
    while i < limit.events.len() {
        let mut j = i;
        while j + 1 < limit.events.len() && limit.events[j + 1].s - limit.events[j].s <= tol.merge_gap {
            j += 1;
        }
        let (first, last) = (&limit.events[i], &limit.events[j]);
        let point = &first.point;
        let face = lattice
            .faces()
            .filter(|&f| lattice.distance(f, point) <= tol.face)
            .min_by_key(|&f| lattice.member(f).dim())
            .unwrap_or(lattice.ambient());
        let x = lattice.member(face);
        let tangent = |v: &DVector<f64>| {
            let t = x.project(v);
            &t - point * point.dot(&t)
        };
        let tangential_margin = (tangent(&last.u_out) - tangent(&first.u_in)).norm();
        let (nin, nout) = (x.reject(&first.u_in).norm(), x.reject(&last.u_out).norm());
        let normal_margin = (nout - nin).abs();
        let codim = lattice.ambient_dim() - x.dim();
        let kind = if nin.max(nout) <= tol.face {
            EventKind::Tangential
        } else {
            EventKind::Transversal
        };
        events.push(LimitEvent { s: first.s, point: point.clone(), face, codim, kind, tangential_margin, normal_margin });
        i = j + 1;
    }

    let report = limit.validate(lattice);
    let geodesy = report.geodesy.max(report.continuity);
    let worst_margin = events.iter().map(|e| e.tangential_margin.max(e.normal_margin)).fold(geodesy, f64::max);
    Ok(ClosureVerdict { pass: worst_margin <= tol.law, sup_gaps, events, geodesy, worst_margin })
}
