//! Weights on the dyadic grid and their Muckenhoupt / reverse-Hölder characteristics.
//!
//! Characteristics are suprema over a finite [`CubeFamily`], so every
//! quantity here is family-relative. Lemma checks always compare values
//! computed over the same family.

use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::lattice::{scan_cubes, CubeFamily, DyadicGrid, Interval};
use crate::math::{conjugate, exp, powf, rel_diff};
use crate::rng;

/// Strictly positive, finite value per grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    grid: DyadicGrid,
    values: Vec<f64>,
}

impl Weight {
    pub fn new(grid: DyadicGrid, values: Vec<f64>) -> Result<Self> {
        check_len(grid.cells(), values.len())?;
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::domain("weight values must be positive and finite"));
        }
        Ok(Weight { grid, values })
    }

    pub fn constant(grid: DyadicGrid, c: f64) -> Result<Self> {
        Self::new(grid, alloc::vec![c; grid.cells()])
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `w^e`, cellwise.
    pub fn pow(&self, e: f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| powf(v, e)).collect())
    }

    /// Cellwise product of two weights on the same grid.
    pub fn product(&self, other: &Weight) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::domain("weights live on different grids"));
        }
        Self::new(self.grid, self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CharacteristicKind {
    Ap,
    Rh,
}

/// Value of a characteristic together with the cube attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CharacteristicReport {
    pub family: CubeFamily,
    pub kind: CharacteristicKind,
    pub exponent: f64,
    pub value: f64,
    pub maximizer: Interval,
}

struct ArgMax {
    value: f64,
    cube: Option<Interval>,
}

impl ArgMax {
    fn new() -> Self {
        ArgMax { value: f64::NEG_INFINITY, cube: None }
    }

    fn offer(&mut self, q: Interval, v: f64) {
        let better = match self.cube {
            None => true,
            Some(cur) => v > self.value || (v == self.value && q.canonical_key() < cur.canonical_key()),
        };
        if better {
            self.value = v;
            self.cube = Some(q);
        }
    }
}

/// Per-cube A_p quantity `⟨w⟩_Q ⟨w^{1-p'}⟩_Q^{p-1}` (or `⟨w⟩_Q / min_Q w` for
/// `p = 1`), passed to `visit` for every cube of the family.
pub fn ap_cube_values(w: &Weight, p: f64, family: CubeFamily, mut visit: impl FnMut(Interval, f64)) -> Result<()> {
    if !(p >= 1.0) || p.is_nan() {
        return Err(Error::domain("A_p requires p >= 1"));
    }
    if p == 1.0 {
        scan_cubes([w.values()], family, |q, [s], min| {
            let avg = s / q.len() as f64;
            visit(q, (avg / min).max(1.0));
        });
        return Ok(());
    }
    let sigma: Vec<f64> = if p.is_infinite() {
        return Err(Error::domain("A_p requires finite p"));
    } else {
        let e = 1.0 - conjugate(p);
        w.values().iter().map(|&v| powf(v, e)).collect()
    };
    scan_cubes([w.values(), &sigma], family, |q, [sw, ss], _| {
        let len = q.len() as f64;
        // Jensen puts every cube at >= 1; the clamp only absorbs rounding.
        visit(q, (sw / len * powf(ss / len, p - 1.0)).max(1.0));
    });
    Ok(())
}

/// Per-cube RH_s quantity `⟨w^s⟩_Q^{1/s} / ⟨w⟩_Q`.
pub fn rh_cube_values(w: &Weight, s: f64, family: CubeFamily, mut visit: impl FnMut(Interval, f64)) -> Result<()> {
    if !(s >= 1.0) || s.is_infinite() {
        return Err(Error::domain("RH_s requires finite s >= 1"));
    }
    let ws: Vec<f64> = w.values().iter().map(|&v| powf(v, s)).collect();
    scan_cubes([w.values(), &ws], family, |q, [sw, sws], _| {
        let len = q.len() as f64;
        let v = if s == 1.0 { 1.0 } else { (powf(sws / len, 1.0 / s) / (sw / len)).max(1.0) };
        visit(q, v);
    });
    Ok(())
}

/// `[w]_{A_p}` over `family`.
pub fn ap_constant(w: &Weight, p: f64, family: CubeFamily) -> Result<CharacteristicReport> {
    let mut best = ArgMax::new();
    ap_cube_values(w, p, family, |q, v| best.offer(q, v))?;
    Ok(CharacteristicReport {
        family,
        kind: CharacteristicKind::Ap,
        exponent: p,
        value: best.value,
        maximizer: best.cube.expect("a grid has at least one cube"),
    })
}

/// `[w]_{RH_s}` over `family`; exactly 1 when `s = 1`.
pub fn rh_constant(w: &Weight, s: f64, family: CubeFamily) -> Result<CharacteristicReport> {
    let mut best = ArgMax::new();
    rh_cube_values(w, s, family, |q, v| best.offer(q, v))?;
    Ok(CharacteristicReport {
        family,
        kind: CharacteristicKind::Rh,
        exponent: s,
        value: best.value,
        maximizer: best.cube.expect("a grid has at least one cube"),
    })
}

/// Outcome of [`check_weight_lemmas`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightLemmaReport {
    pub p: f64,
    pub r: f64,
    pub s: f64,
    /// `(q, [w]_{A_q})` for the sampled `q >= p`.
    pub monotonicity: Vec<(f64, f64)>,
    pub monotonicity_holds: bool,
    /// `[w]_{A_p}^{1/p}` and `[w^{1-p'}]_{A_{p'}}^{1/p'}`.
    pub duality: (f64, f64),
    pub duality_rel_err: f64,
    pub duality_holds: bool,
    pub rh_s_pow: f64,
    pub ar_s_pow: f64,
    /// `[w^s]_{A_{s(r-1)+1}}`.
    pub ws_ap: f64,
    pub sandwich_upper: f64,
    pub sandwich_holds: bool,
    /// Both `[w]_{A_r}` and `[w]_{RH_s}` finite iff `[w^s]_{A_p}` finite.
    pub equivalence_finite: (bool, bool),
    /// `(ε, [w]_{A_{p-ε}})` on a grid of `ε < p - 1`.
    pub self_improvement: Vec<(f64, f64)>,
}

impl WeightLemmaReport {
    pub fn all_hold(&self) -> bool {
        self.monotonicity_holds
            && self.duality_holds
            && self.sandwich_holds
            && self.equivalence_finite.0 == self.equivalence_finite.1
    }
}

/// Relative tolerance for the duality identity.
pub const DUALITY_TOL: f64 = 1e-9;
/// Arithmetic slack allowed in the reverse-Hölder sandwich.
pub const SANDWICH_SLACK: f64 = 1e-12;

/// Checks monotonicity in `p`, the duality identity and the reverse-Hölder
/// sandwich over one cube family. `q_samples` lists the `q >= p` to compare;
/// pass an empty slice for the default `{p, p + 1/2, 2p}`.
pub fn check_weight_lemmas(
    w: &Weight,
    p: f64,
    r: f64,
    s: f64,
    q_samples: &[f64],
    family: CubeFamily,
) -> Result<WeightLemmaReport> {
    if !(p > 1.0 && p.is_finite()) || !(r > 1.0 && r.is_finite()) || !(s >= 1.0 && s.is_finite()) {
        return Err(Error::domain("need p > 1, r > 1, s >= 1"));
    }
    let ap = ap_constant(w, p, family)?.value;

    let defaults = [p, p + 0.5, 2.0 * p];
    let qs: &[f64] = if q_samples.is_empty() { &defaults } else { q_samples };
    let mut monotonicity = Vec::with_capacity(qs.len());
    let mut monotonicity_holds = true;
    for &q in qs {
        if q < p {
            return Err(Error::domain("monotonicity samples must satisfy q >= p"));
        }
        let aq = ap_constant(w, q, family)?.value;
        monotonicity_holds &= aq <= ap;
        monotonicity.push((q, aq));
    }

    let pc = conjugate(p);
    let sigma = w.pow(1.0 - pc)?;
    let lhs = powf(ap, 1.0 / p);
    let rhs = powf(ap_constant(&sigma, pc, family)?.value, 1.0 / pc);
    let duality_rel_err = rel_diff(lhs, rhs);

    let pr = s * (r - 1.0) + 1.0;
    let rh = rh_constant(w, s, family)?.value;
    let ar = ap_constant(w, r, family)?.value;
    let ws_ap = ap_constant(&w.pow(s)?, pr, family)?.value;
    let rh_s_pow = powf(rh, s);
    let ar_s_pow = powf(ar, s);
    let sandwich_upper = powf(ar * rh, s);
    let lower = rh_s_pow.max(ar_s_pow);
    let sandwich_holds =
        lower <= ws_ap * (1.0 + SANDWICH_SLACK) && ws_ap <= sandwich_upper * (1.0 + SANDWICH_SLACK);

    let mut self_improvement = Vec::new();
    for k in 1..=8 {
        let eps = (p - 1.0) * k as f64 / 9.0;
        self_improvement.push((eps, ap_constant(w, p - eps, family)?.value));
    }

    Ok(WeightLemmaReport {
        p,
        r,
        s,
        monotonicity,
        monotonicity_holds,
        duality: (lhs, rhs),
        duality_rel_err,
        duality_holds: duality_rel_err <= DUALITY_TOL,
        rh_s_pow,
        ar_s_pow,
        ws_ap,
        sandwich_upper,
        sandwich_holds,
        equivalence_finite: (ar.is_finite() && rh.is_finite(), ws_ap.is_finite()),
        self_improvement,
    })
}

/// Recipes for synthetic weights.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum WeightGenerator {
    Constant { c: f64 },
    /// `left` on `[0, 1/2)`, `right` on `[1/2, 1)`.
    TwoValue { left: f64, right: f64 },
    /// `exp(σ U)` with `U` uniform on `[-1, 1]`, cell by cell.
    LogUniform { sigma: f64 },
    /// Multiplicative cascade: on every dyadic interval a fair coin `ε = ±1`
    /// scales the left child by `1 + εβ` and the right child by `1 - εβ`.
    DyadicMartingale { beta: f64 },
}

/// Deterministic weight for `(generator, seed)`.
pub fn generate_weight(grid: DyadicGrid, generator: WeightGenerator, seed: u64) -> Result<Weight> {
    let n = grid.cells();
    let mut rng = rng::stream(seed, 0x5745_4947);
    let values = match generator {
        WeightGenerator::Constant { c } => {
            if !(c > 0.0) {
                return Err(Error::domain("constant weight must be positive"));
            }
            alloc::vec![c; n]
        }
        WeightGenerator::TwoValue { left, right } => {
            if !(left > 0.0 && right > 0.0) {
                return Err(Error::domain("two-value weight needs positive values"));
            }
            if n < 2 {
                return Err(Error::domain("two-value weight needs at least two cells"));
            }
            (0..n).map(|x| if x < n / 2 { left } else { right }).collect()
        }
        WeightGenerator::LogUniform { sigma } => {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::domain("log-uniform spread must be finite and nonnegative"));
            }
            if sigma == 0.0 {
                alloc::vec![1.0; n]
            } else {
                (0..n).map(|_| exp(sigma * rng::uniform(&mut rng, -1.0, 1.0))).collect()
            }
        }
        WeightGenerator::DyadicMartingale { beta } => {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::domain("martingale step must satisfy 0 <= beta < 1"));
            }
            let mut values = alloc::vec![1.0; n];
            for level in 0..grid.level() {
                let len = n >> level;
                for j in 0..(1usize << level) {
                    let eps = if rand::Rng::gen::<bool>(&mut rng) { 1.0 } else { -1.0 };
                    let (lo, mid, hi) = (j * len, j * len + len / 2, (j + 1) * len);
                    values[lo..mid].iter_mut().for_each(|v| *v *= 1.0 + eps * beta);
                    values[mid..hi].iter_mut().for_each(|v| *v *= 1.0 - eps * beta);
                }
            }
            values
        }
    };
    Weight::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_cell() -> Weight {
        Weight::new(DyadicGrid::new(1).unwrap(), vec![2.0, 1.0]).unwrap()
    }

    #[test]
    fn ap_examples() {
        let g = DyadicGrid::new(3).unwrap();
        let one = Weight::constant(g, 1.0).unwrap();
        assert_eq!(ap_constant(&one, 2.0, CubeFamily::Dyadic).unwrap().value, 1.0);
        let w = two_cell();
        let a2 = ap_constant(&w, 2.0, CubeFamily::Dyadic).unwrap();
        assert!((a2.value - 9.0 / 8.0).abs() < 1e-15);
        assert_eq!(a2.maximizer, Interval::new(0, 2).unwrap());
        let a1 = ap_constant(&w, 1.0, CubeFamily::Dyadic).unwrap();
        assert!((a1.value - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rh_examples() {
        let w = two_cell();
        assert_eq!(rh_constant(&w, 1.0, CubeFamily::Dyadic).unwrap().value, 1.0);
        let r2 = rh_constant(&w, 2.0, CubeFamily::Dyadic).unwrap().value;
        assert!((r2 - libm::sqrt(2.5) / 1.5).abs() < 1e-15);
        let five = Weight::constant(DyadicGrid::new(2).unwrap(), 5.0).unwrap();
        assert!((rh_constant(&five, 3.0, CubeFamily::Dyadic).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exponent_domain_errors() {
        let w = two_cell();
        assert!(ap_constant(&w, 0.5, CubeFamily::Dyadic).is_err());
        assert!(rh_constant(&w, 0.9, CubeFamily::Dyadic).is_err());
        assert!(check_weight_lemmas(&w, 1.0, 2.0, 2.0, &[], CubeFamily::Dyadic).is_err());
    }

    #[test]
    fn lemma_checks_on_constant_weight_are_equalities() {
        let w = Weight::constant(DyadicGrid::new(4).unwrap(), 1.0).unwrap();
        let rep = check_weight_lemmas(&w, 2.0, 2.0, 2.0, &[], CubeFamily::Dyadic).unwrap();
        assert!(rep.all_hold());
        assert_eq!(rep.ws_ap, 1.0);
        assert_eq!(rep.sandwich_upper, 1.0);
        assert!(rep.monotonicity.iter().all(|&(_, a)| a == 1.0));
    }

    #[test]
    fn duality_on_two_cell_weight() {
        let rep = check_weight_lemmas(&two_cell(), 2.0, 2.0, 2.0, &[], CubeFamily::Dyadic).unwrap();
        let expected = libm::sqrt(9.0 / 8.0);
        assert!((rep.duality.0 - expected).abs() < 1e-14);
        assert!((rep.duality.1 - expected).abs() < 1e-14);
    }

    #[test]
    fn generators() {
        let g = DyadicGrid::new(1).unwrap();
        let w = generate_weight(g, WeightGenerator::TwoValue { left: 2.0, right: 1.0 }, 0).unwrap();
        assert!((ap_constant(&w, 2.0, CubeFamily::Dyadic).unwrap().value - 1.125).abs() < 1e-15);
        let g5 = DyadicGrid::new(5).unwrap();
        let flat = generate_weight(g5, WeightGenerator::LogUniform { sigma: 0.0 }, 9).unwrap();
        assert!(flat.values().iter().all(|&v| v == 1.0));
        assert!(generate_weight(g5, WeightGenerator::DyadicMartingale { beta: 1.0 }, 0).is_err());
        let a = generate_weight(g5, WeightGenerator::DyadicMartingale { beta: 0.4 }, 7).unwrap();
        let b = generate_weight(g5, WeightGenerator::DyadicMartingale { beta: 0.4 }, 7).unwrap();
        assert_eq!(a, b);
        // The cascade preserves the mean on every dyadic interval.
        let mean: f64 = a.values().iter().sum::<f64>() / 32.0;
        assert!((mean - 1.0).abs() < 1e-12);
    }
}
