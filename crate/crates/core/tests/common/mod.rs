//! Fixtures shared by the integration tests, including an independent
//! enumerator of broken geodesics on S^2 for the two-circle configuration.
#![allow(dead_code)]

pub mod paths;

use brokenflow::arrangement::{LatticeTolerance, SubspaceLattice};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn e(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

pub fn span(n: usize, axes: &[usize]) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = axes.iter().map(|&i| e(n, i)).collect();
    DMatrix::from_columns(&cols)
}

pub fn lattice(n: usize, inputs: &[(&str, &[usize])]) -> SubspaceLattice {
    let inputs: Vec<(String, DMatrix<f64>)> = inputs.iter().map(|(name, axes)| (name.to_string(), span(n, axes))).collect();
    SubspaceLattice::close(n, &inputs, LatticeTolerance::default()).unwrap()
}

pub fn empty_lattice(n: usize) -> SubspaceLattice {
    SubspaceLattice::close(n, &[], LatticeTolerance::default()).unwrap()
}

/// S^2 with the great circles `C_xz` and `C_yz`, meeting at `+-e3`.
pub fn two_circles() -> SubspaceLattice {
    lattice(3, &[("xz", &[0, 2]), ("yz", &[1, 2])])
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    gaussian(rng, n).normalize()
}

/// A unit tangent vector at the unit vector `p`.
pub fn random_tangent(rng: &mut ChaCha8Rng, p: &DVector<f64>) -> DVector<f64> {
    let g = gaussian(rng, p.len());
    (&g - p * p.dot(&g)).normalize()
}

/// A random point of S^{n-1} with a unit tangent direction.
pub fn random_start(rng: &mut ChaCha8Rng, n: usize) -> (DVector<f64>, DVector<f64>) {
    let p = random_unit(rng, n);
    let u = random_tangent(rng, &p);
    (p, u)
}

#[derive(Debug, Clone)]
pub struct OracleTarget {
    pub point: Vector3<f64>,
    pub direction: Vector3<f64>,
    pub signature: Vec<&'static str>,
    pub truncated: bool,
}

const ROOT_FLOOR: f64 = 1e-9;
const CORNER_GAP: f64 = 1e-9;

/// Smallest `s > ROOT_FLOOR` with `n . (p cos s + u sin s) = 0`, if the
/// circle is not contained in the plane `n^perp`.
pub fn plane_root(n: &Vector3<f64>, p: &Vector3<f64>, u: &Vector3<f64>) -> Option<f64> {
    let (a, b) = (n.dot(p), n.dot(u));
    let r = a.hypot(b);
    if r < 1e-14 {
        return None;
    }
    // a cos s + b sin s = r cos(s - phi) vanishes at phi + pi/2 + j pi.
    let phi = b.atan2(a);
    let base = (phi + std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::PI);
    let s = if base > ROOT_FLOOR { base } else { base + std::f64::consts::PI };
    Some(s)
}

fn rotate(p: &Vector3<f64>, u: &Vector3<f64>, a: f64) -> Vector3<f64> {
    u * a.cos() + p.cross(u) * a.sin()
}

/// Brute-force enumeration of the broken geodesics of length `pi` on S^2 for
/// [`two_circles`]. A circle crossing reflects by the Householder map of its
/// plane; at a corner `+-e3` the outgoing directions are the incoming one
/// rotated about the corner by multiples of `2 pi / m`. The straight
/// continuation is explored first and is free; other branches use the budget.
pub fn oracle_relation(p: &Vector3<f64>, u: &Vector3<f64>, max_breaks: usize, m: usize) -> Vec<OracleTarget> {
    let mut out = Vec::new();
    walk(*p, *u, std::f64::consts::PI, Vec::new(), 0, false, max_breaks, m, &mut out);
    let mut uniq: Vec<OracleTarget> = Vec::new();
    for t in out {
        if !uniq.iter().any(|q| q.signature == t.signature && (q.point - t.point).norm() <= 1e-8) {
            uniq.push(t);
        }
    }
    uniq
}

#[allow(clippy::too_many_arguments)]
fn walk(
    p: Vector3<f64>,
    u: Vector3<f64>,
    remaining: f64,
    sig: Vec<&'static str>,
    breaks: usize,
    truncated: bool,
    max_breaks: usize,
    m: usize,
    out: &mut Vec<OracleTarget>,
) {
    let nx = Vector3::new(0.0, 1.0, 0.0);
    let ny = Vector3::new(1.0, 0.0, 0.0);
    let rx = plane_root(&nx, &p, &u);
    let ry = plane_root(&ny, &p, &u);
    let s = match (rx, ry) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => f64::INFINITY,
    };
    if s >= remaining - 1e-12 {
        out.push(OracleTarget {
            point: p * remaining.cos() + u * remaining.sin(),
            direction: u * remaining.cos() - p * remaining.sin(),
            signature: sig,
            truncated,
        });
        return;
    }
    let q = p * s.cos() + u * s.sin();
    let w = u * s.cos() - p * s.sin();
    let corner = matches!((rx, ry), (Some(a), Some(b)) if (a - b).abs() < CORNER_GAP);
    let (face, outgoing): (&'static str, Vec<Vector3<f64>>) = if corner {
        ("xz&yz", (1..m).map(|j| rotate(&q, &w, 2.0 * std::f64::consts::PI * j as f64 / m as f64)).collect())
    } else if rx == Some(s) {
        ("xz", vec![w - nx * (2.0 * w.dot(&nx))])
    } else {
        ("yz", vec![w - ny * (2.0 * w.dot(&ny))])
    };
    let exhausted = breaks >= max_breaks;
    walk(q, w, remaining - s, sig.clone(), breaks, truncated || exhausted, max_breaks, m, out);
    if exhausted {
        return;
    }
    for o in outgoing {
        let mut next = sig.clone();
        next.push(face);
        walk(q, o, remaining - s, next, breaks + 1, truncated, max_breaks, m, out);
    }
}

pub fn v3(v: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

/// Compares the library relation with the oracle: same number of targets and
/// a one-to-one match on signature, endpoint and end direction within `tol`.
/// Returns the largest endpoint discrepancy, or a description of the mismatch.
pub fn compare_with_oracle(lattice: &SubspaceLattice, p: &DVector<f64>, u: &DVector<f64>, k: usize, m: usize, tol: f64) -> Result<f64, String> {
    let rel = brokenflow::broken::time_pi_relation(lattice, p, u, k, m).map_err(|e| e.to_string())?;
    let oracle = oracle_relation(&v3(p), &v3(u), k, m);
    if rel.targets.len() != oracle.len() {
        return Err(format!("{} targets vs {} from the oracle", rel.targets.len(), oracle.len()));
    }
    let mut used = vec![false; oracle.len()];
    let mut worst: f64 = 0.0;
    for t in &rel.targets {
        let names: Vec<&str> = t.signature.iter().map(|&f| lattice.name(f)).collect();
        let hit = oracle.iter().enumerate().find(|(i, o)| {
            !used[*i] && o.signature == names && (o.point - v3(&t.point)).norm() <= tol && (o.direction - v3(&t.direction)).norm() <= tol
        });
        match hit {
            Some((i, o)) => {
                if o.truncated != t.truncated {
                    return Err(format!("truncation flag differs for signature {names:?}"));
                }
                used[i] = true;
                worst = worst.max((o.point - v3(&t.point)).norm());
            }
            None => return Err(format!("no oracle target for signature {names:?} at {:?}", t.point.as_slice())),
        }
    }
    Ok(worst)
}

/// A start whose great circle passes through the corner `e3`.
pub fn corner_aimed(rng: &mut ChaCha8Rng) -> (DVector<f64>, DVector<f64>) {
    loop {
        let p = random_unit(rng, 3);
        if p[2].abs() > 0.95 || p[0].abs() < 0.05 || p[1].abs() < 0.05 {
            continue;
        }
        let e3 = e(3, 2);
        let u = (&e3 - &p * p.dot(&e3)).normalize();
        return (p, u);
    }
}
