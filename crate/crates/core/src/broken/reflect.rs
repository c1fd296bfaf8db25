use nalgebra::DVector;

use crate::arrangement::{MemberId, SubspaceLattice};
use crate::error::{Error, Result};

/// Normal components below this are treated as tangential.
pub(crate) const TANGENTIAL_TOL: f64 = 1e-10;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// Admissible outgoing directions at the regular point `p` of `C_face` for the
/// incoming unit direction `u_in`. The first entry is always the straight
/// continuation. In codimension one the set is exact; in codimension two it is
/// `m` equally spaced normal directions anchored at the incoming one; in higher
/// codimension it is the straight branch plus `m - 1` Halton directions.
pub fn reflect(lattice: &SubspaceLattice, face: MemberId, p: &DVector<f64>, u_in: &DVector<f64>, m: usize) -> Result<Vec<DVector<f64>>> {
    let x = lattice.member(face);
    let d = x.distance(p);
    if d > lattice.tolerance().inside {
        return Err(Error::NotOnFace { face: lattice.name(face).to_string(), distance: d });
    }
    if let Some(smaller) = lattice.faces().find(|&b| lattice.lt(b, face) && lattice.distance(b, p) <= lattice.tolerance().inside) {
        return Err(Error::SingularBasePoint { smaller: lattice.name(smaller).to_string() });
    }
    let ut = x.project(u_in);
    let un = x.reject(u_in);
    let rho = un.norm();
    if rho <= TANGENTIAL_TOL {
        let n = ut.norm();
        return Ok(vec![if n > 0.0 { ut / n } else { u_in.clone() }]);
    }
    let normal = x.complement_basis();
    let k = normal.ncols();
    let mut out = vec![u_in.clone()];
    match k {
        1 => out.push(&ut - &un),
        2 => {
            let (n1, n2) = (normal.column(0).into_owned(), normal.column(1).into_owned());
            let theta = n2.dot(&un).atan2(n1.dot(&un));
            for j in 1..m {
                let a = theta + 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                out.push(&ut + (&n1 * a.cos() + &n2 * a.sin()) * rho);
            }
        }
        _ => {
            let mut i = 1u64;
            while out.len() < m.max(1) && i < 100_000 {
                let c: Vec<f64> = (0..k).map(|j| 2.0 * radical_inverse(i, PRIMES[j % PRIMES.len()]) - 1.0).collect();
                i += 1;
                let r = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(1e-3..=1.0).contains(&r) {
                    continue;
                }
                let nv = &normal * DVector::from_vec(c) / r;
                out.push(&ut + nv * rho);
            }
        }
    }
    let mut dedup: Vec<DVector<f64>> = Vec::with_capacity(out.len());
    for w in out {
        let w = w.normalize();
        if !dedup.iter().any(|q| (q - &w).norm() <= TANGENTIAL_TOL) {
            dedup.push(w);
        }
    }
    Ok(dedup)
}
