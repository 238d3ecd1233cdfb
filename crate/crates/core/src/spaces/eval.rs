//! Recursive norm evaluation with gradients.
//!
//! Every node returns its value at a nonnegative vector together with a
//! (super)gradient with respect to that vector. Composite nodes combine
//! child gradients by the chain rule; optimizer-backed nodes use the
//! envelope theorem (products) and Danskin's theorem (duals).

use alloc::vec;
use alloc::vec::Vec;

use super::optimize::{minimize, Limits};
use super::{umd_transform, Layout, NormMethod, NormReport, SolverConfig, SpaceExpr};
use crate::error::{check_len, Error, Result};
use crate::lattice::MeasurePoints;
use crate::math::{conjugate, exp, ln, powf};
use crate::rng;

#[derive(Clone, Copy, Debug)]
struct Stats {
    method: NormMethod,
    tol: f64,
    iters: usize,
    converged: bool,
}

impl Stats {
    fn closed() -> Self {
        Stats { method: NormMethod::ClosedForm, tol: 0.0, iters: 0, converged: true }
    }

    fn absorb(&mut self, other: &Stats) {
        self.tol = self.tol.max(other.tol);
        self.iters += other.iters;
        self.converged &= other.converged;
    }
}

struct Out {
    value: f64,
    grad: Vec<f64>,
    stats: Stats,
}

pub(super) fn evaluate(x: &SpaceExpr, points: &MeasurePoints, xi: &[f64], cfg: &SolverConfig) -> Result<NormReport> {
    let layout = x.validate(points.len())?;
    check_len(layout.dim(), xi.len())?;
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("norm argument must be finite"));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::domain("solver tolerance must be positive"));
    }
    let abs: Vec<f64> = xi.iter().map(|v| v.abs()).collect();
    let max = abs.iter().fold(0.0f64, |m, &v| m.max(v));
    if max == 0.0 {
        return Ok(NormReport { value: 0.0, method: NormMethod::ClosedForm, tolerance: 0.0, iterations: 0, converged: true });
    }
    // Power-of-two rescaling is exact, so homogeneity under such factors is exact.
    let (_, e) = libm::frexp(max);
    let scaled: Vec<f64> = abs.iter().map(|&v| libm::ldexp(v, -e)).collect();
    let ev = Evaluator { mu: points.masses(), cfg };
    let out = ev.node(x, &scaled, false)?;
    Ok(NormReport {
        value: libm::ldexp(out.value, e),
        method: out.stats.method,
        tolerance: out.stats.tol,
        iterations: out.stats.iters,
        converged: out.stats.converged,
    })
}

fn layout_of(e: &SpaceExpr, m: usize) -> Layout {
    match e {
        SpaceExpr::Bochner { weight, .. } => Layout { cells: weight.len(), points: m },
        SpaceExpr::Concavify { child, .. } | SpaceExpr::Dual { child } | SpaceExpr::Umd { child, .. } => {
            layout_of(child, m)
        }
        SpaceExpr::Product { children, .. } => layout_of(&children[0], m),
        _ => Layout { cells: 1, points: m },
    }
}

/// Leaf reached through concavifications, with the exponents rescaled.
enum Peeled<'a> {
    Lebesgue(f64, Option<&'a [f64]>),
    Lorentz(f64, f64),
}

fn peel(e: &SpaceExpr) -> Option<Peeled<'_>> {
    match e {
        SpaceExpr::Lebesgue { p, weight } => Some(Peeled::Lebesgue(*p, weight.as_deref())),
        SpaceExpr::Lorentz { p, q } => Some(Peeled::Lorentz(*p, *q)),
        SpaceExpr::Concavify { child, p: a } => match peel(child)? {
            Peeled::Lebesgue(p, w) => Some(Peeled::Lebesgue(p / a, w)),
            Peeled::Lorentz(p, q) => Some(Peeled::Lorentz(p / a, q / a)),
        },
        _ => None,
    }
}

fn support(x: &[f64]) -> Vec<usize> {
    (0..x.len()).filter(|&i| x[i] > 0.0).collect()
}

fn max_of(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, &v| m.max(v))
}

/// Indices of `x` sorted by decreasing value, ties by index.
fn decreasing_order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    idx
}

/// `T_k^{q/p} − T_{k−1}^{q/p}` along `order`.
fn lorentz_increments(order: &[usize], masses: &[f64], p: f64, q: f64) -> Vec<f64> {
    let r = q / p;
    let mut prev = 0.0;
    let mut t = 0.0;
    order
        .iter()
        .map(|&i| {
            t += masses[i];
            let cur = powf(t, r);
            let d = cur - prev;
            prev = cur;
            d
        })
        .collect()
}

/// State carried by an ascent iterate.
struct Ascent {
    ratio: f64,
    gap: f64,
    log_rho: Vec<f64>,
    eta: Vec<f64>,
    stats: Stats,
}

/// Exponent `e` of the starting point `η = ξ^e` for a dual of a space with
/// nominal exponent `p` (exact for Lebesgue spaces: `e = p' − 1`).
fn ascent_exponent(p: f64) -> f64 {
    if p <= 1.0 {
        20.0
    } else if p.is_infinite() {
        0.0
    } else {
        (1.0 / (p - 1.0)).clamp(0.0, 20.0)
    }
}

/// Flattens products and concavifications of products into factors
/// `(X_j, a_j)` with `‖·‖_{X_j^{a_j}}`, using `(Π X_j)^a = Π X_j^a`.
fn collect_factors<'a>(e: &'a SpaceExpr, a: f64, out: &mut Vec<(&'a SpaceExpr, f64)>) {
    match e {
        SpaceExpr::Product { children, exponents } => {
            for (j, c) in children.iter().enumerate() {
                collect_factors(c, a * exponents.as_ref().map_or(1.0, |t| t[j]), out);
            }
        }
        SpaceExpr::Concavify { child, p } if matches!(**child, SpaceExpr::Product { .. } | SpaceExpr::Concavify { .. }) => {
            collect_factors(child, a * p, out);
        }
        _ => out.push((e, a)),
    }
}

/// Hölder split `θ_j ∝ a_j / p_j` from the nominal exponents.
fn holder_split(factors: &[(&SpaceExpr, f64)]) -> Vec<f64> {
    let inv: Vec<f64> = factors.iter().map(|(c, a)| a / c.nominal_exponent()).collect();
    let total: f64 = inv.iter().sum();
    if total > 0.0 && total.is_finite() {
        inv.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / factors.len() as f64; factors.len()]
    }
}

struct Evaluator<'a> {
    mu: &'a [f64],
    cfg: &'a SolverConfig,
}

impl Evaluator<'_> {
    fn node(&self, e: &SpaceExpr, x: &[f64], grad: bool) -> Result<Out> {
        if x.iter().all(|&v| v == 0.0) {
            return Ok(Out { value: 0.0, grad: vec![0.0; x.len()], stats: Stats::closed() });
        }
        match e {
            SpaceExpr::Lebesgue { p, weight } => Ok(self.lebesgue(*p, weight.as_deref(), x, grad)),
            SpaceExpr::Lorentz { p, q } => Ok(self.lorentz(*p, *q, x, grad)),
            SpaceExpr::Orlicz { family } => Ok(self.orlicz(family, x, grad)),
            SpaceExpr::Concavify { child, p } => self.power(child, *p, x, grad),
            SpaceExpr::Product { children, exponents } => {
                let factors: Vec<(&SpaceExpr, f64)> = children
                    .iter()
                    .enumerate()
                    .map(|(j, c)| (c, exponents.as_ref().map_or(1.0, |t| t[j])))
                    .collect();
                self.product(&factors, x, grad)
            }
            SpaceExpr::Dual { child } => self.dual(child, x),
            SpaceExpr::Bochner { r, weight, inner } => self.bochner(*r, weight, inner, x, grad),
            SpaceExpr::Umd { child, p_minus, p_plus } => {
                let rewritten = umd_transform(child, *p_minus, *p_plus)?;
                self.node(&rewritten, x, grad)
            }
        }
    }

    fn lebesgue(&self, p: f64, weight: Option<&[f64]>, x: &[f64], grad: bool) -> Out {
        let n = x.len();
        let s = max_of(x);
        if p.is_infinite() {
            let mut g = vec![0.0; n];
            if grad {
                let ties: Vec<usize> = (0..n).filter(|&i| x[i] == s).collect();
                let share = 1.0 / ties.len() as f64;
                ties.iter().for_each(|&i| g[i] = share);
            }
            return Out { value: s, grad: g, stats: Stats::closed() };
        }
        let c = |i: usize| self.mu[i] * weight.map_or(1.0, |w| w[i]);
        let sum: f64 = (0..n).map(|i| c(i) * powf(x[i] / s, p)).sum();
        let value = s * powf(sum, 1.0 / p);
        let mut g = Vec::new();
        if grad {
            let scale = powf(value / s, 1.0 - p);
            g = (0..n)
                .map(|i| if x[i] > 0.0 { c(i) * powf(x[i] / s, p - 1.0) * scale } else { 0.0 })
                .collect();
        }
        Out { value, grad: g, stats: Stats::closed() }
    }

    fn lorentz(&self, p: f64, q: f64, x: &[f64], grad: bool) -> Out {
        let s = max_of(x);
        let order = decreasing_order(x);
        let d = lorentz_increments(&order, self.mu, p, q);
        let sum: f64 = order.iter().zip(&d).map(|(&i, dk)| powf(x[i] / s, q) * dk).sum();
        let value = s * powf(sum, 1.0 / q);
        let mut g = Vec::new();
        if grad {
            g = vec![0.0; x.len()];
            let scale = powf(value / s, 1.0 - q);
            for (&i, dk) in order.iter().zip(&d) {
                if x[i] > 0.0 {
                    g[i] = dk * powf(x[i] / s, q - 1.0) * scale;
                }
            }
        }
        Out { value, grad: g, stats: Stats::closed() }
    }

    fn orlicz(&self, family: &super::OrliczFamily, x: &[f64], grad: bool) -> Out {
        let p = family.exponent();
        let modular = |lambda: f64| -> f64 { x.iter().zip(self.mu).map(|(&v, &m)| family.phi(v / lambda) * m).sum() };
        // Φ(t) ≥ t^p, so the L^p(μ) norm is a lower bracket.
        let mut lo = self.lebesgue(p, None, x, false).value;
        let mut hi = lo;
        let mut doublings = 0;
        while modular(hi) > 1.0 && doublings < 2000 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
        }
        let mut iters = 0;
        while iters < 200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if modular(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iters += 1;
        }
        let lambda = hi;
        let mut g = Vec::new();
        if grad {
            let t: Vec<f64> = x.iter().map(|&v| v / lambda).collect();
            let den: f64 = t.iter().zip(self.mu).map(|(&ti, &m)| family.dphi(ti) * ti * m).sum();
            g = t.iter().zip(self.mu).map(|(&ti, &m)| family.dphi(ti) * m / den).collect();
        }
        let stats = Stats { method: NormMethod::Bisection, tol: (hi - lo) / hi, iters, converged: iters < 200 };
        Out { value: lambda, grad: g, stats }
    }

    /// `‖ξ‖_{X^a} = ‖ξ^{1/a}‖_X^a`.
    fn power(&self, child: &SpaceExpr, a: f64, x: &[f64], grad: bool) -> Result<Out> {
        if a == 1.0 {
            return self.node(child, x, grad);
        }
        let y: Vec<f64> = x.iter().map(|&v| powf(v, 1.0 / a)).collect();
        let c = self.node(child, &y, grad)?;
        let value = powf(c.value, a);
        let mut g = Vec::new();
        if grad {
            let scale = powf(c.value, a - 1.0);
            g = (0..x.len())
                .map(|i| if x[i] > 0.0 { scale * c.grad[i] * y[i] / x[i] } else { 0.0 })
                .collect();
        }
        Ok(Out { value, grad: g, stats: c.stats })
    }

    fn bochner(&self, r: f64, weight: &[f64], inner: &SpaceExpr, x: &[f64], grad: bool) -> Result<Out> {
        let cells = weight.len();
        let m = self.mu.len();
        let mut stats = Stats::closed();
        let mut norms = Vec::with_capacity(cells);
        let mut grads = Vec::with_capacity(if grad { cells } else { 0 });
        for c in 0..cells {
            let out = self.node(inner, &x[c * m..(c + 1) * m], grad)?;
            if out.stats.method != NormMethod::ClosedForm {
                stats.method = out.stats.method;
            }
            stats.absorb(&out.stats);
            norms.push(out.value);
            if grad {
                grads.push(out.grad);
            }
        }
        let s = max_of(&norms);
        let inv = 1.0 / cells as f64;
        let sum: f64 = norms.iter().zip(weight).map(|(&y, &w)| w * inv * powf(y / s, r)).sum();
        let value = s * powf(sum, 1.0 / r);
        let mut g = Vec::new();
        if grad {
            g = vec![0.0; x.len()];
            let scale = powf(value / s, 1.0 - r);
            for c in 0..cells {
                if norms[c] > 0.0 {
                    let factor = weight[c] * inv * powf(norms[c] / s, r - 1.0) * scale;
                    for (k, gk) in grads[c].iter().enumerate() {
                        g[c * m + k] = factor * gk;
                    }
                }
            }
        }
        Ok(Out { value, grad: g, stats })
    }

    fn dual(&self, child: &SpaceExpr, x: &[f64]) -> Result<Out> {
        let masses = layout_of(child, self.mu.len()).masses(self.mu);
        if self.cfg.closed_form_duals {
            match peel(child) {
                Some(Peeled::Lebesgue(p, w)) => return Ok(self.lebesgue_dual(p, w, &masses, x)),
                Some(Peeled::Lorentz(p, q)) if q >= 1.0 && masses.iter().all(|&m| m == masses[0]) => {
                    return Ok(lorentz_dual(p, q, masses[0], x));
                }
                _ => {}
            }
        }
        self.dual_ascent(child, &masses, x)
    }

    fn lebesgue_dual(&self, p: f64, weight: Option<&[f64]>, masses: &[f64], x: &[f64]) -> Out {
        let n = x.len();
        let w = |i: usize| weight.map_or(1.0, |w| w[i]);
        let mut g = vec![0.0; n];
        if p.is_infinite() {
            let value = (0..n).map(|i| x[i] * masses[i]).sum();
            g.copy_from_slice(masses);
            return Out { value, grad: g, stats: Stats::closed() };
        }
        if p <= 1.0 {
            // Extreme points of the unit ball are multiples of unit vectors.
            let coef: Vec<f64> = (0..n).map(|i| powf(masses[i], 1.0 - 1.0 / p) * powf(w(i), -1.0 / p)).collect();
            let mut best = 0;
            for i in 1..n {
                if x[i] * coef[i] > x[best] * coef[best] {
                    best = i;
                }
            }
            g[best] = coef[best];
            return Out { value: x[best] * coef[best], grad: g, stats: Stats::closed() };
        }
        let pc = conjugate(p);
        let s = max_of(x);
        let c: Vec<f64> = (0..n).map(|i| masses[i] * powf(w(i), 1.0 - pc)).collect();
        let sum: f64 = (0..n).map(|i| c[i] * powf(x[i] / s, pc)).sum();
        let value = s * powf(sum, 1.0 / pc);
        let scale = powf(value / s, 1.0 - pc);
        for i in 0..n {
            if x[i] > 0.0 {
                g[i] = c[i] * powf(x[i] / s, pc - 1.0) * scale;
            }
        }
        Out { value, grad: g, stats: Stats::closed() }
    }

    /// Maximizes `⟨ξ, η⟩_μ / ‖η‖` over `η > 0` on the support of `ξ`, in
    /// logarithmic coordinates `η = e^u` (a multiplicative ascent). The ratio
    /// `max_i ρ_i`, `ρ_i = ξ_i μ_i ‖η‖ / (⟨ξ, η⟩_μ ∂_i‖η‖)`, bounds the true
    /// dual norm from above by `value · max ρ` whenever the child is a norm.
    fn dual_ascent(&self, child: &SpaceExpr, masses: &[f64], x: &[f64]) -> Result<Out> {
        let mut factors = Vec::new();
        collect_factors(child, 1.0, &mut factors);
        if factors.len() >= 2 {
            return self.dual_of_product(child, &factors, masses, x);
        }
        let n = x.len();
        let supp = support(x);
        let c: Vec<f64> = x.iter().zip(masses).map(|(a, b)| a * b).collect();
        let e0 = ascent_exponent(child.nominal_exponent());
        let base: Vec<f64> = supp.iter().map(|&i| e0 * ln(x[i])).collect();

        let objective = |u: &[f64]| -> Result<(f64, Vec<f64>, Ascent)> {
            let top = u.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let mut eta = vec![0.0; n];
            for (k, &i) in supp.iter().enumerate() {
                eta[i] = exp(u[k] - top);
            }
            let out = self.node(child, &eta, true)?;
            let norm = out.value;
            let pairing: f64 = supp.iter().map(|&i| c[i] * eta[i]).sum();
            let mut gap = 0.0f64;
            let mut grad = Vec::with_capacity(supp.len());
            let mut log_rho = Vec::with_capacity(supp.len());
            for &i in &supp {
                let gi = out.grad[i];
                grad.push(eta[i] * gi / norm - c[i] * eta[i] / pairing);
                let rho = if gi > 0.0 { (c[i] / pairing) / (gi / norm) } else { f64::INFINITY };
                gap = gap.max(rho - 1.0);
                log_rho.push(ln(rho).min(30.0));
            }
            let f = ln(norm) - ln(pairing);
            eta.iter_mut().for_each(|v| *v /= norm);
            Ok((f, grad, Ascent { ratio: pairing / norm, gap, log_rho, eta, stats: out.stats }))
        };
        self.ascent_driver(base, e0, child.is_banach(), objective, masses)
    }

    /// Dual of a product, maximized jointly over the factors:
    /// `sup ⟨ξ, Π η_j⟩_μ / Π ‖η_j‖_{X_j}`, which avoids nesting the product
    /// descent inside the ascent. Stationarity means `ρ_{j,i} = 1` for the
    /// per-factor ratios `ρ_{j,i} = (ξ_i η_i μ_i / ⟨ξ, η⟩) / (η_{j,i} ∂_i‖η_j‖ / ‖η_j‖)`.
    fn dual_of_product(
        &self,
        child: &SpaceExpr,
        factors: &[(&SpaceExpr, f64)],
        masses: &[f64],
        x: &[f64],
    ) -> Result<Out> {
        let n = x.len();
        let m = factors.len();
        let supp = support(x);
        let np = supp.len();
        let c: Vec<f64> = x.iter().zip(masses).map(|(a, b)| a * b).collect();
        let e0 = ascent_exponent(child.nominal_exponent());
        let theta = holder_split(factors);
        let mut base = Vec::with_capacity(m * np);
        for t in &theta {
            base.extend(supp.iter().map(|&i| t * e0 * ln(x[i])));
        }

        let objective = |v: &[f64]| -> Result<(f64, Vec<f64>, Ascent)> {
            let mut eta = vec![1.0; n];
            let mut shares: Vec<Vec<f64>> = Vec::with_capacity(m);
            let mut log_norms = 0.0;
            let mut stats = Stats::closed();
            for (j, &(fac, a)) in factors.iter().enumerate() {
                let vj = &v[j * np..(j + 1) * np];
                let top = vj.iter().fold(f64::NEG_INFINITY, |acc, &t| acc.max(t));
                let mut ej = vec![0.0; n];
                for (k, &i) in supp.iter().enumerate() {
                    ej[i] = exp(vj[k] - top);
                }
                let out = self.power(fac, a, &ej, true)?;
                stats.absorb(&out.stats);
                log_norms += ln(out.value);
                shares.push(supp.iter().map(|&i| out.grad[i] * ej[i] / out.value).collect());
                for i in 0..n {
                    eta[i] *= ej[i];
                }
            }
            let pairing: f64 = supp.iter().map(|&i| c[i] * eta[i]).sum();
            let b: Vec<f64> = supp.iter().map(|&i| c[i] * eta[i] / pairing).collect();
            let mut grad = Vec::with_capacity(m * np);
            let mut log_rho = Vec::with_capacity(m * np);
            let mut gap = 0.0f64;
            for sj in &shares {
                for (k, &a) in sj.iter().enumerate() {
                    grad.push(a - b[k]);
                    let rho = if a > 0.0 { b[k] / a } else { f64::INFINITY };
                    gap = gap.max(rho - 1.0);
                    log_rho.push(ln(rho).min(30.0));
                }
            }
            let total = exp(log_norms);
            eta.iter_mut().for_each(|e| *e /= total);
            let f = log_norms - ln(pairing);
            Ok((f, grad, Ascent { ratio: exp(-f), gap, log_rho, eta, stats }))
        };
        self.ascent_driver(base, e0, child.is_banach(), objective, masses)
    }

    /// Restarted quasi-Newton ascent followed by a fixed-point polish
    /// `u ← u + β log ρ` that is accepted only when the gap shrinks.
    fn ascent_driver(
        &self,
        base: Vec<f64>,
        e0: f64,
        banach: bool,
        objective: impl Fn(&[f64]) -> Result<(f64, Vec<f64>, Ascent)>,
        masses: &[f64],
    ) -> Result<Out> {
        let tol = self.cfg.tol;
        let mut best: Option<Ascent> = None;
        let mut stats = Stats { method: NormMethod::Ascent, tol: 0.0, iters: 0, converged: true };
        let mut child_stats = Stats::closed();
        let mut stale = 0;
        for k in 0..self.cfg.restarts.max(1) {
            let start: Vec<f64> = if k == 0 {
                base.clone()
            } else {
                let mut r = rng::stream(self.cfg.seed, rng::mix(k as u64, 0xD0A1));
                base.iter().map(|&b| b + rng::uniform(&mut r, -2.0, 2.0)).collect()
            };
            let limits = Limits { max_iter: self.cfg.max_iter, gtol: if banach { 0.0 } else { 1e-3 * tol } };
            let outcome = minimize(start, &objective, limits, |pt| banach && pt.payload.gap <= tol)?;
            stats.iters += outcome.iters;
            stats.converged &= outcome.converged;
            let mut point = outcome.best;
            if banach && point.payload.gap > tol {
                let mut beta = e0.clamp(0.05, 4.0);
                let mut fails = 0;
                let budget = stats.iters + self.cfg.max_iter;
                while point.payload.gap > tol && fails < 30 && stats.iters < budget {
                    let trial: Vec<f64> =
                        point.x.iter().zip(&point.payload.log_rho).map(|(u, lr)| u + beta * lr).collect();
                    let (f, g, payload) = objective(&trial)?;
                    stats.iters += 1;
                    if payload.gap < point.payload.gap && payload.ratio >= point.payload.ratio * (1.0 - 1e-15) {
                        point = super::optimize::Point { x: trial, f, g, payload };
                        fails = 0;
                    } else {
                        beta *= 0.5;
                        fails += 1;
                    }
                }
            }
            let cand = point.payload;
            child_stats.absorb(&cand.stats);
            let significant = best.as_ref().map_or(true, |b| cand.ratio > b.ratio * (1.0 + tol));
            if best.as_ref().map_or(true, |b| cand.ratio > b.ratio) {
                best = Some(cand);
            }
            let b = best.as_ref().expect("set above");
            if banach && b.gap <= tol {
                break;
            }
            stale = if significant { 0 } else { stale + 1 };
            if banach && stale >= 3 {
                break;
            }
        }
        let b = best.expect("at least one restart");
        stats.tol = if banach { b.gap.max(child_stats.tol) } else { f64::INFINITY };
        stats.converged &= child_stats.converged;
        stats.iters += child_stats.iters;
        let grad: Vec<f64> = b.eta.iter().zip(masses).map(|(e, m)| e * m).collect();
        Ok(Out { value: b.ratio, grad, stats })
    }

    /// Infimum of `Π ‖ξ_j‖_{X_j^{a_j}}` over factorizations `ξ = Π ξ_j`,
    /// minimized in logarithmic coordinates from the Hölder split
    /// `ξ_j = ξ^{θ_j}`, `θ_j ∝ 1 / p_j` for the nominal exponents `p_j`.
    fn product(&self, factors: &[(&SpaceExpr, f64)], x: &[f64], grad: bool) -> Result<Out> {
        let m = factors.len();
        if m == 1 {
            return self.power(factors[0].0, factors[0].1, x, grad);
        }
        let n = x.len();
        let supp = support(x);
        let np = supp.len();
        let ell: Vec<f64> = supp.iter().map(|&i| ln(x[i])).collect();
        let theta = holder_split(factors);
        let mut start = Vec::with_capacity((m - 1) * np);
        for t in &theta[..m - 1] {
            start.extend(ell.iter().map(|l| t * l));
        }

        struct Payload {
            share: Vec<f64>,
            stats: Stats,
        }

        let objective = |u: &[f64]| -> Result<(f64, Vec<f64>, Payload)> {
            let mut last = ell.clone();
            let mut f = 0.0;
            let mut shares: Vec<Vec<f64>> = Vec::with_capacity(m);
            let mut stats = Stats::closed();
            for j in 0..m {
                let logs: &[f64] = if j + 1 < m {
                    let uj = &u[j * np..(j + 1) * np];
                    last.iter_mut().zip(uj).for_each(|(l, v)| *l -= v);
                    uj
                } else {
                    &last
                };
                let mut fj = vec![0.0; n];
                for (k, &i) in supp.iter().enumerate() {
                    fj[i] = exp(logs[k]);
                }
                let (child, a) = factors[j];
                let out = self.power(child, a, &fj, true)?;
                stats.absorb(&out.stats);
                f += ln(out.value);
                shares.push(supp.iter().map(|&i| out.grad[i] * fj[i] / out.value).collect());
            }
            let mut g = Vec::with_capacity((m - 1) * np);
            for sj in &shares[..m - 1] {
                g.extend(sj.iter().zip(&shares[m - 1]).map(|(a, b)| a - b));
            }
            let share: Vec<f64> = (0..np).map(|k| shares.iter().map(|s| s[k]).sum::<f64>() / m as f64).collect();
            Ok((f, g, Payload { share, stats }))
        };

        let gtol = libm::sqrt(1e-2 * self.cfg.tol);
        let outcome = minimize(start, &objective, Limits { max_iter: self.cfg.max_iter, gtol }, |_| false)?;
        let best = outcome.best;
        let value = exp(best.f);
        let mut g = Vec::new();
        if grad {
            g = vec![0.0; n];
            for (k, &i) in supp.iter().enumerate() {
                g[i] = value * best.payload.share[k] / x[i];
            }
        }
        let mut stats = Stats {
            method: NormMethod::Descent,
            tol: best.g.iter().fold(0.0f64, |acc, v| acc.max(v.abs())),
            iters: outcome.iters,
            converged: outcome.converged,
        };
        stats.absorb(&best.payload.stats);
        Ok(Out { value, grad: g, stats })
    }
}

/// Dual of the discrete Lorentz norm on `n` points of equal mass `mu0`.
///
/// The optimal `η` is decreasing along the decreasing rearrangement of `ξ`;
/// with that constraint the problem separates into blocks given by the
/// decreasing isotonic regression of `ξ_k μ / d_k` (weights `d_k`), computed
/// by pool-adjacent-violators.
fn lorentz_dual(p: f64, q: f64, mu0: f64, x: &[f64]) -> Out {
    let n = x.len();
    let order = decreasing_order(x);
    let masses = vec![mu0; n];
    let d = lorentz_increments(&order, &masses, p, q);
    // Blocks as (sum a, sum d, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        blocks.push((x[i] * mu0, d[k], 1));
        while blocks.len() >= 2 {
            let (a2, d2, l2) = blocks[blocks.len() - 1];
            let (a1, d1, l1) = blocks[blocks.len() - 2];
            if a1 * d2 < a2 * d1 {
                blocks.pop();
                let last = blocks.len() - 1;
                blocks[last] = (a1 + a2, d1 + d2, l1 + l2);
            } else {
                break;
            }
        }
    }
    let r1 = blocks[0].0 / blocks[0].1;
    let mut g = vec![0.0; n];
    if q == 1.0 {
        let eta = 1.0 / blocks[0].1;
        for &i in &order[..blocks[0].2] {
            g[i] = eta * mu0;
        }
        return Out { value: r1, grad: g, stats: Stats::closed() };
    }
    let qc = conjugate(q);
    let s: f64 = blocks.iter().map(|&(a, dd, _)| dd * powf(a / dd / r1, qc)).sum();
    let value = r1 * powf(s, 1.0 / qc);
    let t = powf(s, -1.0 / q);
    let mut k = 0;
    for &(a, dd, len) in &blocks {
        let eta = t * powf(a / dd / r1, qc - 1.0);
        for &i in &order[k..k + len] {
            g[i] = eta * mu0;
        }
        k += len;
    }
    Out { value, grad: g, stats: Stats::closed() }
}
