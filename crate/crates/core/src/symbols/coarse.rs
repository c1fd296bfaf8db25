//! The coarse normal family `phi = y.mu + (beta/delta) omega`, with
//! `omega = |y|^2 + |z|^2 + (tau - tau0)^2 + |nu - nu0|^2`.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use super::certify::{base_params, chart_domain, evaluate, gradient, measured_sup, norm, sample_parallel, along_field, CertifyOptions, Constant, ConstantSource, Family, MeasuredConstants};
use super::sampling::{ball, reject, sphere, uniform};
use super::{dist2, dot, g_flat, FamilyKind, Layout, SymbolContext, SymbolTriple};
use crate::ad::Real;
use crate::error::{Error, Result};
use crate::phasespace::{ChartPoint, SigmaClass};

/// Radius of the neighbourhood on which the coarse constants are measured.
const RHO: f64 = 0.2;

#[derive(Debug, Clone)]
pub(crate) struct CoarseFamily {
    ctx: SymbolContext,
    l: Layout,
    c0: f64,
    beta: f64,
    band: f64,
    constants: Vec<Constant>,
}

fn require_normal(ctx: &SymbolContext) -> Result<f64> {
    match ctx.center_class() {
        SigmaClass::SigmaN => Ok(ctx.normal_energy()),
        other => Err(Error::WrongStratum { expected: SigmaClass::SigmaN.label().into(), found: other.label().into() }),
    }
}

impl CoarseFamily {
    /// Family with a given `beta` and no measured constants; used for plain
    /// symbol evaluation.
    fn with_beta(ctx: &SymbolContext, beta: f64) -> Result<Self> {
        let c0 = require_normal(ctx)?;
        Ok(Self { ctx: ctx.clone(), l: Layout::of(ctx), c0, beta, band: RHO, constants: Vec::new() })
    }

    fn resolved(ctx: &SymbolContext) -> Result<Self> {
        let beta = match ctx.beta {
            Some(b) => b,
            None => Self::measure(ctx, &CertifyOptions::default())?.get("beta").unwrap_or(0.0),
        };
        Self::with_beta(ctx, beta)
    }

    fn measure_point(ctx: &SymbolContext, l: Layout, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let v = ball(rng, l.k + 2 * l.m + 1, RHO);
        let mu_hat = sphere(rng, l.k);
        let tau = ctx.tau0 + v[l.k + l.m];
        let nu: Vec<f64> = (0..l.m).map(|i| ctx.nu0[i] + v[l.k + l.m + 1 + i]).collect();
        let m2 = ctx.lambda + uniform(rng, RHO) - tau * tau - nu.iter().map(|x| x * x).sum::<f64>();
        if m2 <= 0.0 {
            return None;
        }
        let mut x = v[..l.k + l.m].to_vec();
        x.push(tau);
        x.extend(mu_hat.iter().map(|u| u * m2.sqrt()));
        x.extend(nu);
        Some(x)
    }

    pub(crate) fn measure(ctx: &SymbolContext, opts: &CertifyOptions) -> Result<MeasuredConstants> {
        let c0 = require_normal(ctx)?;
        let probe = Self::with_beta(ctx, 1.0)?;
        let l = probe.l;
        let (pts, proposals) = sample_parallel(opts.seed, 2 << 40, opts.measure_samples, |rng| {
            Some(Self::measure_point(ctx, l, rng).filter(|x| probe.omega(x.as_slice()) > 1e-14))
        });
        if pts.is_empty() {
            return Err(Error::EmptyRegion { proposals });
        }
        let c1 = measured_sup(&pts, |x| {
            let (w, hw) = along_field(ctx, x, |d| probe.omega(d));
            Some(hw.abs() / w.sqrt())
        });
        let c1p = measured_sup(&pts, |x| {
            let w: f64 = probe.omega(x);
            Some(norm(&gradient(x, |d| probe.omega(d))) / w.sqrt())
        });
        let c4 = measured_sup(&pts, |x| {
            let (_, he) = along_field(ctx, x, |d| dot(l.y(d), l.mu(d)));
            let w: f64 = probe.omega(x);
            Some((he - 2.0 * c0).abs() / ((ctx.lambda - g_flat(l, x)).abs() + w.sqrt()))
        });
        let beta_max = c0 * c0 / (64.0 * c1 * c1);
        let (beta, beta_src) = match ctx.beta {
            Some(b) => (b, ConstantSource::Supplied),
            None => (beta_max, ConstantSource::Derived),
        };
        let delta0 = (c0 * beta.sqrt() / (8.0 * c4)).min(RHO * beta.sqrt() / 2.0);
        let band = (c0 / (4.0 * c4)).min(RHO);
        Ok(MeasuredConstants {
            family: FamilyKind::Coarse,
            constants: vec![
                Constant::new("c0", c0, ConstantSource::Derived),
                Constant::new("C1", c1, ConstantSource::Measured),
                Constant::new("C1_prime", c1p, ConstantSource::Measured),
                Constant::new("C4", c4, ConstantSource::Measured),
                Constant::new("beta_max", beta_max, ConstantSource::Derived),
                Constant::new("beta", beta, beta_src),
                Constant::new("delta0", delta0, ConstantSource::Derived),
                Constant::new("band", band, ConstantSource::Derived),
                Constant::new("rho", RHO, ConstantSource::Policy),
            ],
            threshold: c0,
            delta0,
        })
    }

    pub(crate) fn build(ctx: &SymbolContext, opts: &CertifyOptions) -> Result<Self> {
        let m = Self::measure(ctx, opts)?;
        let get = |n: &str| m.get(n).unwrap_or(f64::NAN);
        let (beta, beta_max) = (get("beta"), get("beta_max"));
        if !(beta > 0.0 && beta <= beta_max * (1.0 + 1e-12)) {
            return Err(Error::ConstraintViolation(format!("beta = {beta} must lie in (0, c0^2/(8 C1)^2 = {beta_max}]")));
        }
        if !(ctx.delta < m.delta0) {
            return Err(Error::ConstraintViolation(format!("delta = {} must be below delta0 = {}", ctx.delta, m.delta0)));
        }
        let mut fam = Self::with_beta(ctx, beta)?;
        fam.band = get("band");
        fam.constants = m.constants;
        Ok(fam)
    }
}

impl Family for CoarseFamily {
    fn ctx(&self) -> &SymbolContext {
        &self.ctx
    }

    fn kind(&self) -> FamilyKind {
        FamilyKind::Coarse
    }

    fn omega<D: Real>(&self, x: &[D]) -> D {
        let l = self.l;
        let dt = l.tau(x) - self.ctx.tau0;
        crate::ad::norm2(l.y(x)) + crate::ad::norm2(l.z(x)) + dt * dt + dist2(l.nu(x), self.ctx.nu0.as_slice())
    }

    fn args<D: Real>(&self, x: &[D]) -> (D, D, D) {
        let l = self.l;
        let delta = self.ctx.delta;
        let eta = dot(l.y(x), l.mu(x));
        let phi = eta + self.omega(x) * (self.beta / delta);
        let a0 = (D::cst(2.0) - phi / delta) / self.ctx.a0;
        let a1 = eta / delta + 2.0;
        (phi, a0, a1)
    }

    fn threshold(&self) -> f64 {
        self.c0
    }

    fn in_band(&self, x: &[f64]) -> bool {
        (g_flat(self.l, x) - self.ctx.lambda).abs() < self.band
    }

    fn propose(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let (l, ctx) = (self.l, &self.ctx);
        let r = 2.0 * ctx.delta / self.beta.sqrt() * 1.02;
        let v = ball(rng, l.k + 2 * l.m + 1, r);
        let mu_hat = sphere(rng, l.k);
        let eta = uniform(rng, 2.0 * ctx.delta);
        let d = uniform(rng, self.band);
        let tau = ctx.tau0 + v[l.k + l.m];
        let nu: Vec<f64> = (0..l.m).map(|i| ctx.nu0[i] + v[l.k + l.m + 1 + i]).collect();
        let m2 = ctx.lambda + d - tau * tau - nu.iter().map(|x| x * x).sum::<f64>();
        if m2 <= 0.0 {
            return None;
        }
        let mut y = v[..l.k].to_vec();
        reject(&mut y, &mu_hat);
        let mut x: Vec<f64> = y.iter().zip(&mu_hat).map(|(a, u)| a + eta / m2.sqrt() * u).collect();
        x.extend_from_slice(&v[l.k..l.k + l.m]);
        x.push(tau);
        x.extend(mu_hat.iter().map(|u| u * m2.sqrt()));
        x.extend(nu);
        Some(x)
    }

    fn supp_q_excess(&self, x: &[f64]) -> f64 {
        let delta = self.ctx.delta;
        let eta = dot(self.l.y(x), self.l.mu(x));
        let w: f64 = self.omega(x);
        (eta.abs() / (2.0 * delta) - 1.0).max(w * self.beta / (4.0 * delta * delta) - 1.0)
    }

    fn supp_e_excess(&self, x: &[f64]) -> f64 {
        let delta = self.ctx.delta;
        let eta = dot(self.l.y(x), self.l.mu(x));
        ((-2.0 * delta - eta) / delta).max((eta + delta) / delta)
    }

    fn constants(&self) -> Vec<Constant> {
        self.constants.clone()
    }

    fn params(&self) -> BTreeMap<String, f64> {
        let mut p = base_params(&self.ctx);
        p.insert("beta".into(), self.beta);
        p
    }

    fn region(&self) -> String {
        format!("coarse: q > 0 and |g - lambda| < {:.6e} in the chart at face {}", self.band, self.ctx.chart.face().0)
    }
}

/// `omega = |y|^2 + |z|^2 + (tau - tau0)^2 + |nu - nu0|^2`.
pub fn omega_coarse(pt: &ChartPoint, ctx: &SymbolContext) -> Result<f64> {
    let x = pt.to_vec();
    chart_domain(ctx, &x)?;
    let fam = CoarseFamily::with_beta(ctx, ctx.beta.unwrap_or(1.0))?;
    Ok(fam.omega(x.as_slice()))
}

/// `phi = y.mu + (beta/delta) omega`. When `ctx.beta` is unset, `beta` is
/// measured with the default options (seed 0).
pub fn phi_coarse(pt: &ChartPoint, ctx: &SymbolContext) -> Result<f64> {
    let x = pt.to_vec();
    chart_domain(ctx, &x)?;
    Ok(CoarseFamily::resolved(ctx)?.args(x.as_slice()).0)
}

/// `(q, b^2, e)` with `b^2 = c0 A0^-1 delta^-1 chi0' chi1`.
pub fn q_b2_e_coarse(pt: &ChartPoint, ctx: &SymbolContext) -> Result<SymbolTriple> {
    let x = pt.to_vec();
    chart_domain(ctx, &x)?;
    let ev = evaluate(&CoarseFamily::resolved(ctx)?, &x);
    Ok(SymbolTriple { q: ev.q, b2: ev.b2, e: ev.e })
}
