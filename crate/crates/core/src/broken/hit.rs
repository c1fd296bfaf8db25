use nalgebra::DVector;

use crate::arrangement::{MemberId, SubspaceLattice};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub s: f64,
    /// Smallest face containing the hit point.
    pub face: MemberId,
    pub point: DVector<f64>,
    /// Direction of the geodesic on arrival.
    pub direction: DVector<f64>,
}

/// First `s` in `(s_floor, s_max]` at which the great circle
/// `p cos s + u sin s` meets a proper face. Faces containing the whole circle
/// are not counted. A near miss inside the ambiguity band is an error.
pub fn first_hit(lattice: &SubspaceLattice, p: &DVector<f64>, u: &DVector<f64>, s_floor: f64, s_max: f64) -> Result<Option<Hit>> {
    let tol = lattice.tolerance();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut best: Option<(f64, MemberId)> = None;
    for b in lattice.faces() {
        if b == lattice.ambient() {
            continue;
        }
        let x = lattice.member(b);
        let a_vec = x.reject(p);
        let b_vec = x.reject(u);
        let (na, nb) = (a_vec.norm(), b_vec.norm());
        let (s0, dist) = if na <= tol.inside {
            if nb <= tol.inside {
                continue;
            }
            (0.0, na)
        } else {
            // Minimize |cos s A + sin s B| over s: smallest eigenvector of the Gram matrix.
            let (ga, gb, gc) = (na * na, nb * nb, a_vec.dot(&b_vec));
            let major = 0.5 * (2.0 * gc).atan2(ga - gb);
            let s_min = major + 0.5 * std::f64::consts::PI;
            let d = (&a_vec * s_min.cos() + &b_vec * s_min.sin()).norm();
            (s_min.rem_euclid(std::f64::consts::PI), d)
        };
        if dist >= tol.outside {
            continue;
        }
        let root = [s0, s0 + std::f64::consts::PI, s0 + two_pi]
            .into_iter()
            .find(|&s| s > s_floor && s <= s_max);
        let Some(root) = root else { continue };
        if dist > tol.inside {
            return Err(Error::AmbiguousHit {
                face: lattice.name(b).to_string(),
                s: root,
                distance: dist,
                prefix_events: 0,
                prefix: Box::new(super::BrokenPath::from_parts_unchecked(Vec::new(), Vec::new(), false)),
            });
        }
        if best.is_none_or(|(s, _)| root < s) {
            best = Some((root, b));
        }
    }
    let Some((s, b)) = best else { return Ok(None) };
    let (point, direction) = super::advance(p, u, s);
    let face = match lattice.locate(&point) {
        Ok(loc) => loc.face,
        Err(Error::AmbiguousLocation { face, distance }) => {
            return Err(Error::AmbiguousHit {
                face,
                s,
                distance,
                prefix_events: 0,
                prefix: Box::new(super::BrokenPath::from_parts_unchecked(Vec::new(), Vec::new(), false)),
            })
        }
        Err(e) => return Err(e),
    };
    debug_assert!(lattice.leq(face, b));
    Ok(Some(Hit { s, face, point, direction }))
}
