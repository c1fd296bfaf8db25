//! Hand-built broken paths for the closure and regularity tests.

use brokenflow::arrangement::MemberId;
use brokenflow::broken::{Arc, BreakEvent, BrokenPath, EventKind};
use nalgebra::DVector;

/// A hyperplane face given by its unit normal.
#[derive(Clone)]
pub struct Mirror {
    pub face: MemberId,
    pub normal: DVector<f64>,
}

fn root(n: &DVector<f64>, p: &DVector<f64>, u: &DVector<f64>, floor: f64) -> Option<f64> {
    let (a, b) = (n.dot(p), n.dot(u));
    if a.hypot(b) < 1e-14 {
        return None;
    }
    let base = (b.atan2(a) + std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::PI);
    Some(if base > floor { base } else { base + std::f64::consts::PI })
}

/// The broken geodesic of length `length` from `(p, u)` that reflects off
/// every mirror it crosses.
pub fn reflecting_path(p: &DVector<f64>, u: &DVector<f64>, length: f64, mirrors: &[Mirror]) -> BrokenPath {
    let (mut p, mut u) = (p.clone(), u.clone());
    let mut remaining = length;
    let mut segments = Vec::new();
    let mut events = Vec::new();
    loop {
        let next = mirrors
            .iter()
            .filter_map(|m| root(&m.normal, &p, &u, 1e-12).map(|s| (s, m)))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match next {
            Some((s, m)) if s < remaining => {
                let arc = Arc { start: p.clone(), direction: u.clone(), length: s };
                let q = arc.end().normalize();
                let w_in = arc.direction_at(s);
                let w_in = (&w_in - &q * q.dot(&w_in)).normalize();
                let w_out = &w_in - &m.normal * (2.0 * w_in.dot(&m.normal));
                events.push(BreakEvent {
                    s: length - remaining + s,
                    point: q.clone(),
                    face: m.face,
                    u_in: w_in,
                    u_out: w_out.clone(),
                    kind: EventKind::Transversal,
                });
                segments.push(arc);
                remaining -= s;
                p = q;
                u = w_out;
            }
            _ => {
                segments.push(Arc { start: p, direction: u, length: remaining });
                return BrokenPath::from_parts_unchecked(segments, events, false);
            }
        }
    }
}

/// A path that turns by `angle` (rotation towards `axis`) at arc length `s0`,
/// recorded as a break on `face` regardless of where it happens.
pub fn kinked_path(p: &DVector<f64>, u: &DVector<f64>, s0: f64, length: f64, axis: &DVector<f64>, angle: f64, face: MemberId) -> BrokenPath {
    let first = Arc { start: p.clone(), direction: u.clone(), length: s0 };
    let q = first.end();
    let w_in = first.direction_at(s0);
    let perp = axis - &q * q.dot(axis) - &w_in * w_in.dot(axis);
    let perp = perp.normalize();
    let w_out = &w_in * angle.cos() + &perp * angle.sin();
    let ev = BreakEvent { s: s0, point: q.clone(), face, u_in: w_in, u_out: w_out.clone(), kind: EventKind::Transversal };
    let second = Arc { start: q, direction: w_out, length: length - s0 };
    BrokenPath::from_parts_unchecked(vec![first, second], vec![ev], false)
}
