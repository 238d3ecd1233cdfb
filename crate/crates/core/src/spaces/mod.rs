//! Finite-dimensional function space norms.
//!
//! A [`SpaceExpr`] is a tree of constructors over a finite measure space
//! `(S, μ)`: Lebesgue, Lorentz and Orlicz leaves, concavification,
//! Calderón–Lozanovskii products, Köthe duals, weighted Bochner spaces over
//! the dyadic grid and the UMD-type transform. Norms depend only on `|ξ|`.
//!
//! Leaves, concavification and Bochner nodes evaluate in closed form. Duals of
//! Lebesgue leaves (and of Lorentz leaves on uniform masses) are closed form
//! as well; every other dual is computed by multiplicative ascent and every
//! product by descent over factorizations, both with deterministic restarts.
//!
//! Functions on the grid are laid out row-major over `(cell, point)`, the
//! same layout as [`crate::LatticeFunction`]. A node whose subtree contains a
//! Bochner node lives on `N·M` coordinates with pairing masses `μ_s / N`.

mod checks;
mod eval;
mod optimize;

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{LatticeFunction, MeasurePoints};
use crate::math::{conjugate, INF};

pub use checks::{
    check_convexity, check_identity, probe_vector, ConvexityMode, ConvexityReport, IdentityReport,
};

/// Young functions supported by [`SpaceExpr::Orlicz`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum OrliczFamily {
    /// `Φ(t) = t^p`.
    Power { p: f64 },
    /// `Φ(t) = t^p log(e + t)^a`.
    PowerLog { p: f64, a: f64 },
}

impl OrliczFamily {
    pub fn exponent(&self) -> f64 {
        match *self {
            OrliczFamily::Power { p } | OrliczFamily::PowerLog { p, .. } => p,
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        match *self {
            OrliczFamily::Power { p } => crate::math::powf(t, p),
            OrliczFamily::PowerLog { p, a } => {
                crate::math::powf(t, p) * crate::math::powf(crate::math::ln(core::f64::consts::E + t), a)
            }
        }
    }

    pub fn dphi(&self, t: f64) -> f64 {
        use crate::math::{ln, powf};
        match *self {
            OrliczFamily::Power { p } => p * powf(t, p - 1.0),
            OrliczFamily::PowerLog { p, a } => {
                let l = ln(core::f64::consts::E + t);
                p * powf(t, p - 1.0) * powf(l, a) + a * powf(t, p) * powf(l, a - 1.0) / (core::f64::consts::E + t)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            OrliczFamily::Power { p } => p > 0.0 && p.is_finite(),
            OrliczFamily::PowerLog { p, a } => p > 0.0 && p.is_finite() && a >= 0.0 && a.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain("Orlicz parameters need 0 < p < inf and 0 <= a < inf"))
        }
    }
}

/// Expression tree of function spaces.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum SpaceExpr {
    /// `L^p(v·μ)` with an optional weight `v` on the points; `p = ∞` ignores the weight.
    Lebesgue {
        #[cfg_attr(feature = "serde", serde(with = "exponent"))]
        p: f64,
        #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
        weight: Option<Vec<f64>>,
    },
    /// Discrete `L^{p,q}(μ)` through the decreasing rearrangement.
    Lorentz { p: f64, q: f64 },
    /// Luxemburg norm of a Young function.
    Orlicz { family: OrliczFamily },
    /// `X^p` normed by `‖|ξ|^{1/p}‖_X^p`.
    Concavify { child: Box<SpaceExpr>, p: f64 },
    /// `X_1 ⋯ X_m`, or `X_1^{θ_1} ⋯ X_m^{θ_m}` when exponents are given.
    Product {
        children: Vec<SpaceExpr>,
        #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
        exponents: Option<Vec<f64>>,
    },
    /// Köthe dual under the pairing `Σ ξ η μ`.
    Dual { child: Box<SpaceExpr> },
    /// `L^r(w; Y)` over the dyadic grid with `w` given per cell.
    Bochner { r: f64, weight: Vec<f64>, inner: Box<SpaceExpr> },
    /// `((X^{p_-})^*)^{(p_+/p_-)'}`.
    Umd {
        child: Box<SpaceExpr>,
        p_minus: f64,
        #[cfg_attr(feature = "serde", serde(with = "exponent"))]
        p_plus: f64,
    },
}

#[cfg(feature = "serde")]
mod exponent {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() && *p > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr<'a> {
        Num(f64),
        Str(&'a str),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str("inf") => Ok(f64::INFINITY),
            Repr::Str(other) => Err(serde::de::Error::custom(alloc::format!("bad exponent {other:?}"))),
        }
    }
}

impl SpaceExpr {
    pub fn lebesgue(p: f64) -> Self {
        SpaceExpr::Lebesgue { p, weight: None }
    }

    pub fn weighted_lebesgue(p: f64, weight: Vec<f64>) -> Self {
        SpaceExpr::Lebesgue { p, weight: Some(weight) }
    }

    pub fn lorentz(p: f64, q: f64) -> Self {
        SpaceExpr::Lorentz { p, q }
    }

    pub fn orlicz(family: OrliczFamily) -> Self {
        SpaceExpr::Orlicz { family }
    }

    pub fn concavify(self, p: f64) -> Self {
        SpaceExpr::Concavify { child: Box::new(self), p }
    }

    pub fn dual(self) -> Self {
        SpaceExpr::Dual { child: Box::new(self) }
    }

    pub fn product(children: Vec<SpaceExpr>) -> Self {
        SpaceExpr::Product { children, exponents: None }
    }

    pub fn calderon(children: Vec<SpaceExpr>, exponents: Vec<f64>) -> Self {
        SpaceExpr::Product { children, exponents: Some(exponents) }
    }

    pub fn bochner(r: f64, weight: Vec<f64>, inner: SpaceExpr) -> Self {
        SpaceExpr::Bochner { r, weight, inner: Box::new(inner) }
    }

    pub fn umd(self, p_minus: f64, p_plus: f64) -> Self {
        SpaceExpr::Umd { child: Box::new(self), p_minus, p_plus }
    }

    /// Checks exponent ranges and dimensions against `m` measure points and
    /// returns the coordinate layout.
    pub fn validate(&self, m: usize) -> Result<Layout> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        match self {
            SpaceExpr::Lebesgue { p, weight } => {
                if !(*p > 0.0) {
                    return Err(Error::domain("Lebesgue exponent must be positive"));
                }
                if let Some(w) = weight {
                    crate::error::check_len(m, w.len())?;
                    if !w.iter().all(|&v| positive(v)) {
                        return Err(Error::domain("point weights must be positive and finite"));
                    }
                }
                Ok(Layout { cells: 1, points: m })
            }
            SpaceExpr::Lorentz { p, q } => {
                if !(positive(*p) && positive(*q)) {
                    return Err(Error::domain("Lorentz exponents must satisfy 0 < p, q < inf"));
                }
                Ok(Layout { cells: 1, points: m })
            }
            SpaceExpr::Orlicz { family } => {
                family.validate()?;
                Ok(Layout { cells: 1, points: m })
            }
            SpaceExpr::Concavify { child, p } => {
                if !positive(*p) {
                    return Err(Error::domain("concavification exponent must satisfy 0 < p < inf"));
                }
                child.validate(m)
            }
            SpaceExpr::Product { children, exponents } => {
                let first = children.first().ok_or_else(|| Error::domain("product needs a factor"))?;
                let layout = first.validate(m)?;
                for c in &children[1..] {
                    if c.validate(m)? != layout {
                        return Err(Error::domain("product factors live on different layouts"));
                    }
                }
                if let Some(t) = exponents {
                    crate::error::check_len(children.len(), t.len())?;
                    let sum: f64 = t.iter().sum();
                    if !t.iter().all(|&v| positive(v)) || (sum - 1.0).abs() > 1e-9 {
                        return Err(Error::domain("product exponents must be positive and sum to 1"));
                    }
                }
                Ok(layout)
            }
            SpaceExpr::Dual { child } => child.validate(m),
            SpaceExpr::Bochner { r, weight, inner } => {
                if !positive(*r) {
                    return Err(Error::domain("Bochner exponent must satisfy 0 < r < inf"));
                }
                if weight.is_empty() || !weight.len().is_power_of_two() {
                    return Err(Error::domain("Bochner weight length must be a power of two"));
                }
                if !weight.iter().all(|&v| positive(v)) {
                    return Err(Error::domain("grid weights must be positive and finite"));
                }
                if inner.validate(m)?.cells != 1 {
                    return Err(Error::domain("Bochner spaces cannot be nested"));
                }
                Ok(Layout { cells: weight.len(), points: m })
            }
            SpaceExpr::Umd { child, p_minus, p_plus } => {
                umd_transform(child, *p_minus, *p_plus)?;
                child.validate(m)
            }
        }
    }

    /// Exponent used for Hölder-style starting points of the optimizers:
    /// `p` for `L^p`, `L^{p,q}` and `t^p`-type Orlicz spaces, propagated through
    /// the constructors by exponent algebra.
    pub fn nominal_exponent(&self) -> f64 {
        match self {
            SpaceExpr::Lebesgue { p, .. } | SpaceExpr::Lorentz { p, .. } => *p,
            SpaceExpr::Orlicz { family } => family.exponent(),
            SpaceExpr::Concavify { child, p } => child.nominal_exponent() / p,
            SpaceExpr::Dual { child } => {
                let p = child.nominal_exponent();
                if p <= 1.0 {
                    INF
                } else {
                    conjugate(p)
                }
            }
            SpaceExpr::Product { children, exponents } => {
                let inv: f64 = children
                    .iter()
                    .enumerate()
                    .map(|(j, c)| exponents.as_ref().map_or(1.0, |t| t[j]) / c.nominal_exponent())
                    .sum();
                1.0 / inv
            }
            SpaceExpr::Bochner { inner, .. } => inner.nominal_exponent(),
            SpaceExpr::Umd { child, p_minus, p_plus } => match umd_transform(child, *p_minus, *p_plus) {
                Ok(e) => e.nominal_exponent(),
                Err(_) => 1.0,
            },
        }
    }

    /// Largest `p` for which the norm functional is known to be exactly
    /// `p`-convex (convexity constant 1), or `None` when no such `p ≥` the
    /// structural bound is known. The functional is a norm iff the index is `≥ 1`.
    pub fn convexity_index(&self) -> Option<f64> {
        match self {
            SpaceExpr::Lebesgue { p, .. } => Some(*p),
            SpaceExpr::Lorentz { p, q } => (q <= p).then_some(*q),
            SpaceExpr::Orlicz { family } => match *family {
                OrliczFamily::Power { p } => Some(p),
                OrliczFamily::PowerLog { p, .. } => (p >= 1.0).then_some(1.0),
            },
            SpaceExpr::Concavify { child, p } => child.convexity_index().map(|c| c / p),
            SpaceExpr::Dual { .. } => Some(1.0),
            SpaceExpr::Product { children, exponents } => {
                let mut inv = 0.0;
                for (j, c) in children.iter().enumerate() {
                    let t = exponents.as_ref().map_or(1.0, |t| t[j]);
                    inv += t / c.convexity_index()?;
                }
                Some(1.0 / inv)
            }
            SpaceExpr::Bochner { r, inner, .. } => inner.convexity_index().map(|c| c.min(*r)),
            SpaceExpr::Umd { child, p_minus, p_plus } => {
                umd_transform(child, *p_minus, *p_plus).ok()?.convexity_index()
            }
        }
    }

    /// Whether the functional is known to be a norm (1-convex).
    pub fn is_banach(&self) -> bool {
        self.convexity_index().is_some_and(|c| c >= 1.0 - 1e-12)
    }
}

/// Coordinate layout of a space: `cells × points`, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub cells: usize,
    pub points: usize,
}

impl Layout {
    pub fn dim(&self) -> usize {
        self.cells * self.points
    }

    /// Pairing masses `μ_s / N` per coordinate.
    pub fn masses(&self, mu: &[f64]) -> Vec<f64> {
        let inv = 1.0 / self.cells as f64;
        (0..self.cells).flat_map(|_| mu.iter().map(move |&m| m * inv)).collect()
    }
}

/// `((X^{p_-})^*)^{(p_+/p_-)'}`, dropping concavifications with exponent 1.
pub fn umd_transform(x: &SpaceExpr, p_minus: f64, p_plus: f64) -> Result<SpaceExpr> {
    if !(p_minus > 0.0 && p_minus.is_finite() && p_plus > p_minus) {
        return Err(Error::domain("need 0 < p_- < p_+ <= inf"));
    }
    let inner = if p_minus == 1.0 { x.clone() } else { x.clone().concavify(p_minus) };
    let outer = if p_plus.is_infinite() { 1.0 } else { conjugate(p_plus / p_minus) };
    let dual = inner.dual();
    Ok(if outer == 1.0 { dual } else { dual.concavify(outer) })
}

/// Which algorithm produced the value at the root of an evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum NormMethod {
    ClosedForm,
    Bisection,
    Ascent,
    Descent,
}

/// Result of [`eval_norm`].
///
/// `tolerance` is the largest achieved tolerance in the tree: relative
/// bracket width for bisection, the certified relative duality gap for
/// ascent (infinite when no certificate is available) and the final
/// stationarity measure for descent.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormReport {
    pub value: f64,
    pub method: NormMethod,
    pub tolerance: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Optimizer settings shared by every node of an evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Use exact formulas for duals of Lebesgue and uniform-mass Lorentz leaves.
    pub closed_form_duals: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-8, max_iter: 2000, restarts: 20, seed: 0, closed_form_duals: true }
    }
}

/// `‖ξ‖_X` for `ξ` given on the layout of `x` over `points`.
pub fn eval_norm(x: &SpaceExpr, points: &MeasurePoints, xi: &[f64], cfg: &SolverConfig) -> Result<NormReport> {
    eval::evaluate(x, points, xi, cfg)
}

/// Norm of a lattice function. Bochner spaces see the `(cell, point)` layout
/// directly; any other space is evaluated on the product measure space
/// `grid × S` with masses `μ_s / N` in row-major order `x·M + s`, so that a
/// weighted Lebesgue space there carries one weight per `(cell, point)`.
pub fn eval_norm_lattice(x: &SpaceExpr, f: &LatticeFunction, cfg: &SolverConfig) -> Result<NormReport> {
    let n = f.grid().cells();
    let layout = x.validate(f.points().len())?;
    if layout.cells == n && layout.cells > 1 {
        return eval::evaluate(x, f.points(), f.values(), cfg);
    }
    let inv = 1.0 / n as f64;
    let mut masses = Vec::with_capacity(f.values().len());
    for _ in 0..n {
        masses.extend(f.points().masses().iter().map(|m| m * inv));
    }
    eval::evaluate(x, &MeasurePoints::new(masses)?, f.values(), cfg)
}
