//! Sampling engine shared by the three families: constant measurement,
//! rejection sampling of the certified region, per-sample checks and the
//! finite-difference cross-check of `scHg phi`.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coarse::CoarseFamily;
use super::cutoffs::{chi0, chi1, dchi0, dchi1};
use super::fine::FineFamily;
use super::sampling::chunk_rng;
use super::tangential::TangentialFamily;
use super::{field_flat, FamilyKind, Layout, SymbolContext};
use crate::ad::{Dual64, Real};
use crate::error::{Error, Result};
use crate::flow::flow_analytic;
use crate::phasespace::{ChartPoint, ScCovector};

/// Multiplier applied to every measured supremum.
pub(crate) const SAFETY: f64 = 1.25;

const CHUNK: usize = 512;
const FD_REL_TOL: f64 = 1e-6;
const FD_FAIL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantSource {
    Measured,
    Supplied,
    Policy,
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub source: ConstantSource,
}

impl Constant {
    pub(crate) fn new(name: &str, value: f64, source: ConstantSource) -> Self {
        Self { name: name.to_string(), value, source }
    }
}

/// Constants of a family measured on the working chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredConstants {
    pub family: FamilyKind,
    pub constants: Vec<Constant>,
    pub threshold: f64,
    /// Largest admissible `delta` (strict bound).
    pub delta0: f64,
}

impl MeasuredConstants {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub samples: usize,
    pub seed: u64,
    /// Accepted points used for each measured supremum.
    pub measure_samples: usize,
    /// Samples (besides the witnesses) cross-checked by finite differences.
    pub fd_samples: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { samples: 100_000, seed: 0, measure_samples: 20_000, fd_samples: 2_000 }
    }
}

impl CertifyOptions {
    pub fn with_samples(mut self, n: usize) -> Self {
        self.samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Largest violation measure seen; the check passes when it is at most
    /// `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub evaluated: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Chart coordinates `(y, z, tau, mu, nu)`.
    pub point: Vec<f64>,
    pub covector: ScCovector,
    pub value: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub family: FamilyKind,
    pub params: BTreeMap<String, f64>,
    pub constants: Vec<Constant>,
    pub region: String,
    pub seed: u64,
    pub samples: usize,
    pub proposals: usize,
    /// Minimum of `scHg phi` over the samples.
    pub min_value: f64,
    pub min_margin: f64,
    pub threshold: f64,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
    pub checks: Vec<CheckResult>,
}

impl Certificate {
    pub fn checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Interface implemented by the three families. `args` returns
/// `(phi, arg0, arg1)` so that `q = chi0(arg0) chi1(arg1)`.
pub(crate) trait Family: Sync {
    fn ctx(&self) -> &SymbolContext;
    fn kind(&self) -> FamilyKind;
    fn omega<D: Real>(&self, x: &[D]) -> D;
    fn args<D: Real>(&self, x: &[D]) -> (D, D, D);
    fn threshold(&self) -> f64;
    fn in_band(&self, x: &[f64]) -> bool;
    fn propose(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>>;
    /// Positive when a point of `supp q` leaves the expected box.
    fn supp_q_excess(&self, x: &[f64]) -> f64;
    /// Positive when a point of `supp e` leaves the expected box.
    fn supp_e_excess(&self, x: &[f64]) -> f64;
    fn extra_checks(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
    fn extra_values(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }
    fn constants(&self) -> Vec<Constant>;
    fn params(&self) -> BTreeMap<String, f64>;
    fn region(&self) -> String;

    /// Cheap sufficient test for `q = 0`.
    fn surely_outside(&self, _x: &[f64]) -> bool {
        false
    }

    fn in_region(&self, x: &[f64]) -> bool {
        if !self.in_band(x) || self.surely_outside(x) {
            return false;
        }
        let (_, a0, a1) = self.args(x);
        a0 > 0.0 && a1 > 0.0
    }
}

pub(crate) fn seed_along(x: &[f64], dir: &[f64]) -> Vec<Dual64> {
    x.iter().zip(dir).map(|(&a, &b)| Dual64::new(a, b)).collect()
}

/// Value and derivative of `f` along the chart field at `x`.
pub(crate) fn along_field(ctx: &SymbolContext, x: &[f64], f: impl Fn(&[Dual64]) -> Dual64) -> (f64, f64) {
    let d = f(&seed_along(x, &field_flat(ctx, x)));
    (d.re, d.eps)
}

pub(crate) fn gradient(x: &[f64], f: impl Fn(&[Dual64]) -> Dual64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let xd: Vec<Dual64> = x.iter().enumerate().map(|(j, &a)| Dual64::new(a, if i == j { 1.0 } else { 0.0 })).collect();
            f(&xd).eps
        })
        .collect()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn chart_domain(ctx: &SymbolContext, x: &[f64]) -> Result<()> {
    let l = Layout::of(ctx);
    let r = norm(l.w(x));
    if r >= ctx.chart.max_radius() {
        return Err(Error::ChartDomain { radius: r });
    }
    Ok(())
}

/// `(q, b^2, btilde^2, e, scHg q)` together with `scHg phi`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Evaluation {
    pub phi: f64,
    pub hphi: f64,
    pub a0: f64,
    pub q: f64,
    pub b2: f64,
    pub b2_tilde: f64,
    pub e: f64,
    pub hq: f64,
}

pub(crate) fn evaluate<F: Family>(fam: &F, x: &[f64]) -> Evaluation {
    let ctx = fam.ctx();
    let xd = seed_along(x, &field_flat(ctx, x));
    let (phi, a0, a1) = fam.args(&xd);
    let (c0, c1) = (chi0(a0.re), chi1(a1.re));
    let d0 = dchi0(a0.re);
    let qd = chi0(a0) * chi1(a1);
    Evaluation {
        phi: phi.re,
        hphi: phi.eps,
        a0: a0.re,
        q: c0 * c1,
        b2: fam.threshold() / (ctx.a0 * ctx.delta) * d0 * c1,
        b2_tilde: -d0 * a0.eps * c1,
        e: c0 * dchi1(a1.re) * a1.eps,
        hq: qd.eps,
    }
}

/// Runs `draw` on deterministic chunks until `n` values are accepted or the
/// per-chunk proposal budget is spent. Returns the accepted values in chunk
/// order and the number of proposals.
pub(crate) fn sample_parallel<T, F>(seed: u64, stream_base: u64, n: usize, draw: F) -> (Vec<T>, usize)
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Option<Option<T>> + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let results: Vec<(Vec<T>, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let quota = CHUNK.min(n - c * CHUNK);
            let budget = (quota * 400).max(50_000);
            let mut rng = chunk_rng(seed, stream_base + c as u64);
            let mut out = Vec::with_capacity(quota);
            let mut tried = 0;
            while out.len() < quota && tried < budget {
                tried += 1;
                match draw(&mut rng) {
                    Some(Some(v)) => out.push(v),
                    Some(None) | None => {}
                }
            }
            (out, tried)
        })
        .collect();
    let mut all = Vec::with_capacity(n);
    let mut proposals = 0;
    for (v, t) in results {
        all.extend(v);
        proposals += t;
    }
    (all, proposals)
}

/// Draws `n` points of the family's region.
pub(crate) fn region_points<F: Family>(fam: &F, seed: u64, stream_base: u64, n: usize) -> Result<Vec<Vec<f64>>> {
    let (pts, proposals) = sample_parallel(seed, stream_base, n, |rng| {
        let x = fam.propose(rng)?;
        Some(fam.in_region(&x).then_some(x))
    });
    if pts.is_empty() {
        return Err(Error::EmptyRegion { proposals });
    }
    Ok(pts)
}

/// Supremum of `ratio` over `pts`, times the safety factor.
pub(crate) fn measured_sup(pts: &[Vec<f64>], ratio: impl Fn(&[f64]) -> Option<f64> + Sync) -> f64 {
    let sup = pts.par_iter().filter_map(|x| ratio(x)).filter(|r| r.is_finite()).reduce(|| 0.0, f64::max);
    sup * SAFETY
}

/// Measured `C` of `|d omega| <= C omega^(1/2)` on an independent sample of
/// the family's region.
pub(crate) fn measure_domega<F: Family>(fam: &F, seed: u64, n: usize) -> Result<f64> {
    let pts = region_points(fam, seed, 3 << 40, n)?;
    Ok(measured_sup(&pts, |x| {
        let w = fam.omega(x);
        (w > 1e-300).then(|| norm(&gradient(x, |d| fam.omega(d))) / w.sqrt())
    }))
}

#[derive(Debug, Clone)]
struct SampleRecord {
    x: Vec<f64>,
    value: f64,
    q: f64,
    checks: Vec<Option<f64>>,
}

const BASE_CHECKS: [(&str, f64); 6] = [
    ("b2_lower_bound", 1e-12),
    ("supp_q", 1e-9),
    ("supp_e", 1e-9),
    ("chi0_identity", 1e-12),
    ("domega_bound", 1e-9),
    ("scHg_q_decomposition", 1e-9),
];

fn sample_record<F: Family>(fam: &F, x: Vec<f64>, c_domega: f64) -> SampleRecord {
    let ctx = fam.ctx();
    let ev = evaluate(fam, &x);
    let lower = fam.threshold() * ctx.a0 / 16.0 * ev.q;
    let b2_check = if ev.b2 > 0.0 { lower / ev.b2 - 1.0 } else if lower > 0.0 { f64::INFINITY } else { 0.0 };
    let supp_e = (ev.e != 0.0).then(|| fam.supp_e_excess(&x));
    let c0 = chi0(ev.a0);
    let chi0_check = (c0 > 0.0).then(|| (dchi0(ev.a0) * ev.a0 * ev.a0 - c0).abs() / c0);
    let w = fam.omega(x.as_slice());
    let dw = norm(&gradient(&x, |d| fam.omega(d)));
    let domega = if w > 0.0 { dw / (c_domega * w.sqrt()) - 1.0 } else { dw };
    let scale = ev.b2_tilde.abs() + ev.e.abs();
    // Below the floor the products are subnormal and carry no relative precision.
    let ident = (ev.hq - (ev.e - ev.b2_tilde)).abs() / scale.max(1e-250);
    let mut checks = vec![Some(b2_check), Some(fam.supp_q_excess(&x)), supp_e, chi0_check, Some(domega), Some(ident)];
    checks.extend(fam.extra_values(&x).into_iter().map(Some));
    SampleRecord { value: ev.hphi, q: ev.q, x, checks }
}

fn fd_along_flow<F: Family>(fam: &F, x: &[f64]) -> Result<f64> {
    let ctx = fam.ctx();
    let l = Layout::of(ctx);
    let xi = ctx.chart.covector(&ChartPoint::from_slice(l.k, l.m, x))?;
    let h = 0.02 * ctx.delta;
    let phi_at = |t: f64| -> Result<f64> {
        let (xt, _) = flow_analytic(&xi, t);
        let pt = ctx.chart.coords(&xt)?;
        Ok(fam.args(pt.to_vec().as_slice()).0)
    };
    let (p2, p1, m1, m2) = (phi_at(2.0 * h)?, phi_at(h)?, phi_at(-h)?, phi_at(-2.0 * h)?);
    Ok((-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h))
}

pub(crate) fn run<F: Family>(fam: &F, opts: &CertifyOptions, c_domega: f64) -> Result<Certificate> {
    let ctx = fam.ctx();
    let (records, proposals) = sample_parallel(opts.seed, 1, opts.samples.max(1), |rng| {
        let x = fam.propose(rng)?;
        Some(fam.in_region(&x).then(|| sample_record(fam, x, c_domega)))
    });
    if records.is_empty() {
        return Err(Error::EmptyRegion { proposals });
    }

    let names: Vec<(&str, f64)> = BASE_CHECKS.iter().copied().chain(fam.extra_checks()).collect();
    let mut checks: Vec<CheckResult> = names
        .iter()
        .map(|&(name, tolerance)| CheckResult { name: name.to_string(), worst: f64::NEG_INFINITY, tolerance, evaluated: 0, pass: true })
        .collect();
    for r in &records {
        for (c, v) in checks.iter_mut().zip(&r.checks) {
            if let Some(v) = v {
                c.evaluated += 1;
                c.worst = if v.is_nan() { f64::INFINITY } else { c.worst.max(*v) };
            }
        }
    }

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].value.total_cmp(&records[b].value).then(a.cmp(&b)));
    let min_value = records[order[0]].value;
    let witness_ids: Vec<usize> = order.iter().copied().take(5).collect();

    let mut fd_ids: Vec<usize> = (0..records.len().min(opts.fd_samples)).collect();
    fd_ids.extend(witness_ids.iter().copied().filter(|&i| i >= opts.fd_samples));
    let fd: Vec<(f64, f64)> = fd_ids
        .par_iter()
        .map(|&i| fd_along_flow(fam, &records[i].x).map(|n| (records[i].value, n)))
        .collect::<Result<_>>()?;
    let mut fd_check = CheckResult { name: "derivative_fd".into(), worst: 0.0, tolerance: FD_REL_TOL, evaluated: 0, pass: true };
    let mut worst_pair = (0.0, 0.0);
    for &(a, n) in &fd {
        if a.abs() < 1e-6 {
            continue;
        }
        fd_check.evaluated += 1;
        let rel = (a - n).abs() / a.abs();
        if !(rel <= fd_check.worst) {
            fd_check.worst = if rel.is_nan() { f64::INFINITY } else { rel };
            worst_pair = (a, n);
        }
    }
    if fd_check.worst > FD_FAIL {
        return Err(Error::DerivativeMismatch { analytic: worst_pair.0, numeric: worst_pair.1 });
    }
    checks.push(fd_check);
    for c in &mut checks {
        if c.evaluated == 0 {
            c.worst = 0.0;
        }
        c.pass = c.worst <= c.tolerance;
    }

    let l = Layout::of(ctx);
    let witnesses = witness_ids
        .iter()
        .map(|&i| {
            let r = &records[i];
            Ok(Witness {
                covector: ctx.chart.covector(&ChartPoint::from_slice(l.k, l.m, &r.x))?,
                point: r.x.clone(),
                value: r.value,
                q: r.q,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let threshold = fam.threshold();
    let mut constants = fam.constants();
    constants.push(Constant::new("C_domega", c_domega, ConstantSource::Measured));
    Ok(Certificate {
        family: fam.kind(),
        params: fam.params(),
        constants,
        region: fam.region(),
        seed: opts.seed,
        samples: records.len(),
        proposals,
        min_value,
        min_margin: min_value - threshold,
        threshold,
        pass: min_value >= threshold,
        witnesses,
        checks,
    })
}

/// Common parameters recorded in every certificate.
pub(crate) fn base_params(ctx: &SymbolContext) -> BTreeMap<String, f64> {
    let mut p = BTreeMap::new();
    p.insert("lambda".into(), ctx.lambda);
    p.insert("tau0".into(), ctx.tau0);
    p.insert("eps".into(), ctx.eps);
    p.insert("delta".into(), ctx.delta);
    p.insert("A0".into(), ctx.a0);
    p.insert("t".into(), ctx.t_shrink);
    for (i, v) in ctx.nu0.iter().enumerate() {
        p.insert(format!("nu0_{}", i + 1), *v);
    }
    p
}

/// Measures the constants of a family at the given context. The value of
/// `delta` in `ctx` is ignored.
pub fn measure_constants(kind: FamilyKind, ctx: &SymbolContext, opts: &CertifyOptions) -> Result<MeasuredConstants> {
    match kind {
        FamilyKind::Coarse => CoarseFamily::measure(ctx, opts),
        FamilyKind::Fine => FineFamily::measure(ctx, opts),
        FamilyKind::Tangential => TangentialFamily::measure(ctx, opts),
    }
}

/// Samples the family's region and certifies `scHg phi >= threshold`.
/// Parameters outside the family's constraint set are refused with
/// `ConstraintViolation` before any certification sample is drawn.
pub fn certify_positivity(kind: FamilyKind, ctx: &SymbolContext, opts: &CertifyOptions) -> Result<Certificate> {
    ctx.check_common()?;
    match kind {
        FamilyKind::Coarse => {
            let fam = CoarseFamily::build(ctx, opts)?;
            let c = measure_domega(&fam, opts.seed, opts.measure_samples)?;
            run(&fam, opts, c)
        }
        FamilyKind::Fine => {
            let fam = FineFamily::build(ctx, opts)?;
            let c = measure_domega(&fam, opts.seed, opts.measure_samples)?;
            run(&fam, opts, c)
        }
        FamilyKind::Tangential => {
            let fam = TangentialFamily::build(ctx, opts)?;
            let c = measure_domega(&fam, opts.seed, opts.measure_samples)?;
            run(&fam, opts, c)
        }
    }
}

