//! The cutoffs `chi0(t) = exp(-1/t)` (zero for `t <= 0`) and the smooth step
//! `chi1(t) = int_0^t psi / int_0^1 psi` with `psi(s) = exp(-1/(s(1-s)))` on
//! `(0, 1)`.

use std::sync::OnceLock;

use crate::ad::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffValues {
    pub chi0: f64,
    pub dchi0: f64,
    pub chi1: f64,
    pub dchi1: f64,
}

pub fn cutoffs(t: f64) -> CutoffValues {
    let (chi0, dchi0) = chi0_pair(t);
    let (chi1, dchi1) = chi1_pair(t);
    CutoffValues { chi0, dchi0, chi1, dchi1 }
}

fn chi0_pair(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    let v = (-1.0 / t).exp();
    (v, v / (t * t))
}

fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

const PANELS: usize = 2048;
const GL_X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
const GL_W: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

fn gauss(a: f64, b: f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    GL_X.iter().zip(GL_W).map(|(x, w)| w * bump(m + r * x)).sum::<f64>() * r
}

/// Cumulative integrals of `psi` at the panel nodes `i / PANELS`.
fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = 1.0 / PANELS as f64;
        let mut acc = vec![0.0; PANELS + 1];
        for i in 0..PANELS {
            acc[i + 1] = acc[i] + gauss(i as f64 * h, (i + 1) as f64 * h);
        }
        acc
    })
}

fn chi1_pair(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let tab = table();
    let total = tab[PANELS];
    let h = 1.0 / PANELS as f64;
    let i = ((t / h) as usize).min(PANELS - 1);
    let partial = tab[i] + gauss(i as f64 * h, t);
    ((partial / total).clamp(0.0, 1.0), bump(t) / total)
}

/// Lifts a scalar function with known derivative to first-order duals.
fn lift<D: Real>(t: D, (v, dv): (f64, f64)) -> D {
    (t - D::cst(t.val())) * dv + v
}

pub fn chi0<D: Real>(t: D) -> D {
    lift(t, chi0_pair(t.val()))
}

pub fn dchi0<D: Real>(t: D) -> D {
    let x = t.val();
    let d2 = if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() * (1.0 - 2.0 * x) / x.powi(4) };
    lift(t, (chi0_pair(x).1, d2))
}

pub fn chi1<D: Real>(t: D) -> D {
    lift(t, chi1_pair(t.val()))
}

pub fn dchi1<D: Real>(t: D) -> D {
    let x = t.val();
    let (_, d) = chi1_pair(x);
    let d2 = if x <= 0.0 || x >= 1.0 { 0.0 } else { d * (1.0 - 2.0 * x) / (x * (1.0 - x)).powi(2) };
    lift(t, (d, d2))
}
