//! Discrete operators on lattice functions: maximal functions, the Hilbert
//! transform, Fourier multipliers, bilinear singular integrals, `V^q`
//! variation norms and empirical operator-norm estimates.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::fft;
use crate::lattice::{scan_cubes, CubeFamily, DyadicGrid, LatticeFunction, MeasurePoints};
use crate::math::{cos, exp, powf};
use crate::rng;
use crate::spaces::{eval_norm_lattice, SolverConfig, SpaceExpr};

/// How the maximal operator treats the measure points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum MaximalMode {
    /// The scalar maximal function applied to each point separately.
    #[default]
    Scalar,
    /// Supremum in the lattice order. At finite resolution this is the
    /// pointwise supremum over the points, so it agrees with `Scalar`.
    Lattice,
}

/// Maximal function of `|f|` over the cubes of `family`, per measure point.
pub fn maximal(f: &LatticeFunction, mode: MaximalMode, family: CubeFamily) -> LatticeFunction {
    let _ = mode;
    f.map_slices(|s| Ok(maximal_slice(s, family))).expect("slices keep their shape")
}

/// Maximal function of `|f|` for a scalar function on the grid.
pub fn maximal_slice(f: &[f64], family: CubeFamily) -> Vec<f64> {
    let n = f.len();
    let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let mut out = vec![0.0f64; n];
    scan_cubes([&abs], CubeFamily::Dyadic, |q, [sum], _| {
        let avg = sum / q.len() as f64;
        out[q.start..q.end].iter_mut().for_each(|o| *o = o.max(avg));
    });
    if family == CubeFamily::AllAligned {
        // For each left end, the best average over intervals reaching past x is a
        // suffix maximum over right ends.
        let mut best = vec![0.0f64; n + 1];
        for start in 0..n {
            let mut acc = 0.0;
            for end in start + 1..=n {
                acc += abs[end - 1];
                best[end] = acc / (end - start) as f64;
            }
            let mut run = 0.0f64;
            for x in (start..n).rev() {
                run = run.max(best[x + 1]);
                out[x] = out[x].max(run);
            }
        }
    }
    out
}

/// Complex symbol samples at the frequencies `−N/2, …, N/2 − 1`, in that order.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymbolSamples {
    values: Vec<Complex64>,
}

impl SymbolSamples {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_power_of_two() {
            return Err(Error::domain("symbol length must be a power of two"));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::domain("symbol values must be finite"));
        }
        Ok(SymbolSamples { values })
    }

    /// Symbol `k ↦ m(k)` sampled at every frequency of an `n`-cell grid.
    pub fn from_fn(n: usize, m: impl Fn(i64) -> Complex64) -> Result<Self> {
        let half = (n / 2) as i64;
        Self::new((0..n as i64).map(|j| m(j - half)).collect())
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, |_| Complex64::new(1.0, 0.0))
    }

    /// `−i sgn(k)`, zero at `k = 0` and at the Nyquist frequency `−N/2`.
    pub fn hilbert(n: usize) -> Result<Self> {
        let nyquist = -((n / 2) as i64);
        Self::from_fn(n, |k| {
            if k == 0 || k == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -(k.signum() as f64))
            }
        })
    }

    /// `(1 − |ξ|²)_+^δ` with `ξ = k / (N/2) ∈ [−1, 1)`. For `δ = 0` the power of
    /// a positive base is 1 and of zero is 0, giving the sharp cutoff `|ξ| < 1`.
    pub fn bochner_riesz(n: usize, delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::domain("Bochner-Riesz exponent must be finite and nonnegative"));
        }
        let half = (n / 2).max(1) as f64;
        Self::from_fn(n, |k| {
            let xi = k as f64 / half;
            let base = 1.0 - xi * xi;
            let v = if base > 0.0 { powf(base, delta) } else { 0.0 };
            Complex64::new(v, 0.0)
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Samples in frequency order `−N/2, …, N/2 − 1`.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `m(k)` for `−N/2 ≤ k < N/2`.
    pub fn at(&self, k: i64) -> Complex64 {
        self.values[(k + (self.values.len() / 2) as i64) as usize]
    }
}

/// Frequency of DFT bin `b` on `n` cells, in `−n/2..n/2`.
fn bin_frequency(b: usize, n: usize) -> i64 {
    if b < n.div_ceil(2) {
        b as i64
    } else {
        b as i64 - n as i64
    }
}

/// `T_m f` for a scalar function; returns the real part.
pub fn apply_multiplier_slice(m: &SymbolSamples, f: &[f64]) -> Result<Vec<f64>> {
    let n = f.len();
    check_len(m.len(), n)?;
    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(&mut buf);
    for (b, z) in buf.iter_mut().enumerate() {
        *z *= m.at(bin_frequency(b, n));
    }
    fft::inverse(&mut buf);
    Ok(buf.iter().map(|z| z.re).collect())
}

/// `F(T_m f) = m F f`, per measure point.
pub fn apply_multiplier(m: &SymbolSamples, f: &LatticeFunction) -> Result<LatticeFunction> {
    check_len(f.grid().cells(), m.len())?;
    f.map_slices(|s| apply_multiplier_slice(m, s))
}

/// Discrete Hilbert transform, per measure point.
pub fn hilbert(f: &LatticeFunction) -> LatticeFunction {
    let m = SymbolSamples::hilbert(f.grid().cells()).expect("grid sizes are powers of two");
    apply_multiplier(&m, f).expect("symbol matches grid")
}

/// Named odd kernel profiles for the smooth bilinear operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CzProfile {
    /// `k(x) = x / (x² + h²) · cos²(πx)` on `[−1/2, 1/2)` with `h = 1/N`:
    /// odd, decays like `1/x` above scale `h`, and its periodization is `C¹`
    /// because the taper vanishes to second order at `±1/2`.
    #[default]
    TaperedCauchy,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum BilinearKernel {
    /// Periodized `1/t` with `k(0) = k(1/2) = 0`.
    #[default]
    BhtTruncated,
    SmoothCz { profile: CzProfile },
}

impl BilinearKernel {
    /// Kernel samples `k(τ/N)` at signed offsets `τ`, indexed by `τ mod N`.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|t| {
                let tau = bin_frequency(t, n);
                if tau == 0 || (n % 2 == 0 && 2 * t == n) {
                    return 0.0;
                }
                let x = tau as f64 / n as f64;
                match self {
                    BilinearKernel::BhtTruncated => 1.0 / x,
                    BilinearKernel::SmoothCz { profile: CzProfile::TaperedCauchy } => {
                        let h = 1.0 / n as f64;
                        let c = cos(PI * x);
                        x / (x * x + h * h) * c * c
                    }
                }
            })
            .collect()
    }
}

/// `B(f, g)(x) = (1/N) Σ_t f(x − t) g(x + t) k(t)` for scalar functions.
pub fn bilinear_slice(f: &[f64], g: &[f64], kernel: BilinearKernel) -> Result<Vec<f64>> {
    let n = f.len();
    check_len(n, g.len())?;
    let k = kernel.samples(n);
    let inv = 1.0 / n as f64;
    // Offsets ±t are paired so that odd symmetry cancels exactly, e.g. B(c, d) = 0.
    Ok((0..n)
        .map(|x| {
            let mut acc = 0.0;
            for (t, &kt) in k.iter().enumerate().take(n.div_ceil(2)).skip(1) {
                let (lo, hi) = ((x + n - t) % n, (x + t) % n);
                acc += (f[lo] * g[hi] - f[hi] * g[lo]) * kt;
            }
            acc * inv
        })
        .collect())
}

/// Bilinear operator applied pointwise in the measure points.
pub fn bilinear(f: &LatticeFunction, g: &LatticeFunction, kernel: BilinearKernel) -> Result<LatticeFunction> {
    if !f.same_shape(g) {
        return Err(Error::domain("bilinear inputs live on different grids"));
    }
    let gs = g.slices();
    let mut s = 0;
    f.map_slices(|fs| {
        let out = bilinear_slice(fs, &gs[s], kernel);
        s += 1;
        out
    })
}

/// `‖m‖_∞ + sup (Σ_j |m(t_{j+1}) − m(t_j)|^q)^{1/q}` over increasing chains of
/// sample indices, by dynamic programming. The best chain ending at `j`
/// extends a best chain ending at some `i < j`, and its sum is accumulated
/// left to right, so it equals a direct evaluation of that chain bit for bit.
pub fn vq_norm(m: &[f64], q: f64) -> Result<f64> {
    if m.is_empty() {
        return Err(Error::domain("variation norm needs at least one sample"));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::domain("variation exponent must satisfy 1 <= q < inf"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("samples must be finite"));
    }
    let sup = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut best = vec![0.0f64; m.len()];
    for j in 1..m.len() {
        for i in 0..j {
            let cand = best[i] + powf((m[j] - m[i]).abs(), q);
            if cand > best[j] {
                best[j] = cand;
            }
        }
    }
    let var = best.iter().fold(0.0f64, |a, &v| a.max(v));
    Ok(sup + powf(var, 1.0 / q))
}

/// `V^q` norm of a symbol restricted to one dyadic frequency block.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DyadicBlockNorm {
    /// Frequencies `lo..=hi`.
    pub lo: i64,
    pub hi: i64,
    pub norm: f64,
}

/// Per-block `V^q` norms of real symbol samples (frequency order
/// `−N/2..N/2−1`) over `{0}`, `[2^j, 2^{j+1})` and `(−2^{j+1}, −2^j]`, plus their supremum.
pub fn vq_dyadic_blocks(m: &[f64], q: f64) -> Result<(Vec<DyadicBlockNorm>, f64)> {
    let n = m.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::domain("symbol length must be a power of two"));
    }
    let half = (n / 2) as i64;
    let at = |k: i64| m[(k + half) as usize];
    let mut blocks = Vec::new();
    let mut push = |lo: i64, hi: i64| -> Result<()> {
        let samples: Vec<f64> = (lo..=hi).map(at).collect();
        blocks.push(DyadicBlockNorm { lo, hi, norm: vq_norm(&samples, q)? });
        Ok(())
    };
    push(0, 0)?;
    let mut j = 1i64;
    while j <= half {
        if j < half {
            push(j, (2 * j - 1).min(half - 1))?;
        }
        push(-(2 * j - 1).min(half), -j)?;
        j *= 2;
    }
    let sup = blocks.iter().fold(0.0f64, |a, b| a.max(b.norm));
    Ok((blocks, sup))
}

/// An operator acting on lattice functions of one or two variables.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum Operator {
    Identity,
    Maximal {
        #[cfg_attr(feature = "serde", serde(default))]
        family: CubeFamily,
    },
    LatticeMaximal {
        #[cfg_attr(feature = "serde", serde(default))]
        family: CubeFamily,
    },
    Hilbert,
    Bilinear { kernel: BilinearKernel },
    Multiplier { symbol: SymbolSamples },
}

impl Operator {
    pub fn arity(&self) -> usize {
        match self {
            Operator::Bilinear { .. } => 2,
            _ => 1,
        }
    }

    /// Whether `T(λf) = λT(f)` for real `λ` (otherwise only for `λ ≥ 0`).
    pub fn is_linear(&self) -> bool {
        !matches!(self, Operator::Maximal { .. } | Operator::LatticeMaximal { .. })
    }

    /// Checks that the operator's samples fit `grid`.
    pub fn check_grid(&self, grid: DyadicGrid) -> Result<()> {
        match self {
            Operator::Multiplier { symbol } => check_len(grid.cells(), symbol.len()),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, inputs: &[&LatticeFunction]) -> Result<LatticeFunction> {
        check_len(self.arity(), inputs.len())?;
        let f = inputs[0];
        self.check_grid(f.grid())?;
        match self {
            Operator::Identity => Ok(f.clone()),
            Operator::Maximal { family } => Ok(maximal(f, MaximalMode::Scalar, *family)),
            Operator::LatticeMaximal { family } => Ok(maximal(f, MaximalMode::Lattice, *family)),
            Operator::Hilbert => Ok(hilbert(f)),
            Operator::Bilinear { kernel } => bilinear(f, inputs[1], *kernel),
            Operator::Multiplier { symbol } => apply_multiplier(symbol, f),
        }
    }

    /// Applies the operator to scalar functions on the grid.
    pub fn apply_slices(&self, inputs: &[&[f64]]) -> Result<Vec<f64>> {
        check_len(self.arity(), inputs.len())?;
        let grid = DyadicGrid::from_cells(inputs[0].len())?;
        let lifted: Result<Vec<LatticeFunction>> =
            inputs.iter().map(|s| LatticeFunction::scalar(grid, s.to_vec())).collect();
        let lifted = lifted?;
        let refs: Vec<&LatticeFunction> = lifted.iter().collect();
        Ok(self.apply(&refs)?.into_values())
    }
}

/// Settings for [`empirical_norm`].
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalSettings {
    pub n_probes: usize,
    pub n_ascent: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for EmpiricalSettings {
    fn default() -> Self {
        EmpiricalSettings { n_probes: 32, n_ascent: 8, seed: 0, solver: SolverConfig::default() }
    }
}

/// Seeded probe `k` for slot `slot`. The first probes are structured
/// (constant, then the indicator of the left half); later ones alternate
/// between signed and nonnegative log-normal-like samples.
pub fn operator_probe(grid: DyadicGrid, points: &MeasurePoints, seed: u64, k: u64, slot: usize) -> LatticeFunction {
    let n = grid.cells();
    let m = points.len();
    let values: Vec<f64> = match k {
        0 => vec![1.0; n * m],
        1 => (0..n * m).map(|i| if i / m < n.div_ceil(2) { 1.0 } else { 0.0 }).collect(),
        _ => {
            let mut r = rng::stream(seed, rng::mix(k, 0x0B5E + slot as u64));
            let signed = k % 2 == 0;
            (0..n * m)
                .map(|_| {
                    let mag = exp(rng::uniform(&mut r, -2.0, 2.0));
                    let sign = if signed && rng::uniform(&mut r, 0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
                    sign * mag
                })
                .collect()
        }
    };
    LatticeFunction::new(grid, points.clone(), values).expect("probe has grid shape")
}

/// Outcome of [`empirical_norm`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalNorm {
    /// Largest observed ratio `‖T(f)‖ / Π‖f_j‖`; a lower bound for the norm.
    pub value: f64,
    /// Probe index and ascent step attaining it.
    pub probe: usize,
    pub step: usize,
    /// Every norm evaluation met its stopping rule.
    pub converged: bool,
}

/// Ratio attained by probe `k` and its power-type ascent: `(ratio, step, converged)`.
pub fn empirical_probe(
    op: &Operator,
    domains: &[SpaceExpr],
    codomain: &SpaceExpr,
    grid: DyadicGrid,
    points: &MeasurePoints,
    k: usize,
    settings: &EmpiricalSettings,
) -> Result<(f64, usize, bool)> {
    let start: Vec<LatticeFunction> =
        (0..op.arity()).map(|j| operator_probe(grid, points, settings.seed, k as u64, j)).collect();
    empirical_ascent(op, domains, codomain, start, settings.n_ascent, &settings.solver)
}

/// Best ratio `‖T(f)‖ / Π‖f_j‖` along the power-type ascent from `start`:
/// `(ratio, step, converged)`. Each step replaces a slot by the normalized
/// output `T(f)` and the best ratio seen is kept, so extra steps can only
/// raise the result. For a bilinear operator the slots are updated in turn.
pub fn empirical_ascent(
    op: &Operator,
    domains: &[SpaceExpr],
    codomain: &SpaceExpr,
    start: Vec<LatticeFunction>,
    n_ascent: usize,
    cfg: &SolverConfig,
) -> Result<(f64, usize, bool)> {
    check_len(op.arity(), domains.len())?;
    check_len(op.arity(), start.len())?;
    op.check_grid(start[0].grid())?;
    let mut slots = start;
    let mut best = (0.0f64, 0usize);
    let mut converged = true;
    for step in 0..=n_ascent {
        let mut denom = 1.0;
        for (f, x) in slots.iter().zip(domains) {
            let r = eval_norm_lattice(x, f, cfg)?;
            converged &= r.converged;
            denom *= r.value;
        }
        if denom == 0.0 {
            break;
        }
        let refs: Vec<&LatticeFunction> = slots.iter().collect();
        let out = op.apply(&refs)?;
        let r = eval_norm_lattice(codomain, &out, cfg)?;
        converged &= r.converged;
        let ratio = r.value / denom;
        if ratio > best.0 {
            best = (ratio, step);
        }
        if r.value == 0.0 {
            break;
        }
        let scale = 1.0 / r.value;
        slots[step % op.arity()] = out.map(|v| v * scale);
    }
    Ok((best.0, best.1, converged))
}

/// Lower estimate of `‖T‖_{X_1 × … → Y}`: the best ratio over `n_probes`
/// seeded probes, each refined by `n_ascent` ascent steps. Returns 0 when
/// there are no probes.
pub fn empirical_norm(
    op: &Operator,
    domains: &[SpaceExpr],
    codomain: &SpaceExpr,
    grid: DyadicGrid,
    points: &MeasurePoints,
    settings: &EmpiricalSettings,
) -> Result<EmpiricalNorm> {
    let mut best = EmpiricalNorm { value: 0.0, probe: 0, step: 0, converged: true };
    for k in 0..settings.n_probes {
        let (ratio, step, conv) = empirical_probe(op, domains, codomain, grid, points, k, settings)?;
        best.converged &= conv;
        if ratio > best.value {
            best.value = ratio;
            best.probe = k;
            best.step = step;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sin;

    fn grid(n: usize) -> DyadicGrid {
        DyadicGrid::from_cells(n).unwrap()
    }

    #[test]
    fn maximal_examples() {
        assert_eq!(maximal_slice(&[1.0, 0.0], CubeFamily::Dyadic), vec![1.0, 0.5]);
        assert_eq!(maximal_slice(&[3.0; 8], CubeFamily::AllAligned), vec![3.0; 8]);
        let f = [0.0, 4.0, 0.0, 0.0];
        assert_eq!(maximal_slice(&f, CubeFamily::Dyadic), vec![2.0, 4.0, 1.0, 1.0]);
        // [1,3) has average 2 and is not dyadic.
        assert_eq!(maximal_slice(&f, CubeFamily::AllAligned), vec![2.0, 4.0, 2.0, 4.0 / 3.0]);
    }

    #[test]
    fn hilbert_maps_cos_to_sin() {
        let n = 32;
        let c: Vec<f64> = (0..n).map(|j| cos(2.0 * PI * j as f64 / n as f64)).collect();
        let f = LatticeFunction::scalar(grid(n), c).unwrap();
        let h = hilbert(&f);
        for (j, v) in h.values().iter().enumerate() {
            assert!((v - sin(2.0 * PI * j as f64 / n as f64)).abs() < 1e-12);
        }
        let one = LatticeFunction::scalar(grid(n), vec![1.0; n]).unwrap();
        assert!(hilbert(&one).values().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn bilinear_examples() {
        for kernel in [BilinearKernel::BhtTruncated, BilinearKernel::SmoothCz { profile: CzProfile::TaperedCauchy }] {
            let out = bilinear_slice(&[1.0; 8], &[1.0; 8], kernel).unwrap();
            assert!(out.iter().all(|v| v.abs() < 1e-15), "{out:?}");
            let k = kernel.samples(16);
            for t in 1..16 {
                assert_eq!(k[t], -k[16 - t]);
            }
        }
        let delta = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(bilinear_slice(&delta, &delta, BilinearKernel::BhtTruncated).unwrap(), vec![0.0; 4]);
        assert!(bilinear_slice(&[1.0; 4], &[1.0; 2], BilinearKernel::BhtTruncated).is_err());
    }

    #[test]
    fn multiplier_examples() {
        let n = 16;
        let f: Vec<f64> = (0..n).map(|j| sin(j as f64 * 1.3) + 0.2 * j as f64).collect();
        let id = apply_multiplier_slice(&SymbolSamples::identity(n).unwrap(), &f).unwrap();
        assert!(id.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-12));
        let p = SymbolSamples::bochner_riesz(n, 0.0).unwrap();
        let once = apply_multiplier_slice(&p, &f).unwrap();
        let twice = apply_multiplier_slice(&p, &once).unwrap();
        assert!(once.iter().zip(&twice).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(p.at(-8), Complex64::new(0.0, 0.0));
        assert_eq!(p.at(7), Complex64::new(1.0, 0.0));
        assert!(apply_multiplier_slice(&p, &f[..8]).is_err());
    }

    #[test]
    fn vq_examples() {
        assert_eq!(vq_norm(&[1.0; 5], 2.0).unwrap(), 1.0);
        assert_eq!(vq_norm(&[0.0, 0.0, 1.0, 1.0], 1.5).unwrap(), 2.0);
        let ramp: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        for q in [1.0, 2.0, 7.5] {
            assert!((vq_norm(&ramp, q).unwrap() - 2.0).abs() < 1e-15);
        }
        assert!(vq_norm(&[], 2.0).is_err());
        let (blocks, sup) = vq_dyadic_blocks(&[0.0; 8], 2.0).unwrap();
        assert_eq!(sup, 0.0);
        let mut covered: Vec<i64> = blocks.iter().flat_map(|b| b.lo..=b.hi).collect();
        covered.sort();
        assert_eq!(covered, (-4..4).collect::<Vec<_>>());
    }

    #[test]
    fn empirical_norm_examples() {
        let g = grid(16);
        let pts = MeasurePoints::counting(1).unwrap();
        let settings = EmpiricalSettings { n_probes: 6, n_ascent: 3, ..Default::default() };
        let l2 = SpaceExpr::lebesgue(2.0);
        let id = empirical_norm(&Operator::Identity, &[l2.clone()], &l2, g, &pts, &settings).unwrap();
        assert!((id.value - 1.0).abs() < 1e-9);
        let h = empirical_norm(&Operator::Hilbert, &[l2.clone()], &l2, g, &pts, &settings).unwrap();
        assert!((h.value - 1.0).abs() < 1e-6, "{h:?}");
        let linf = SpaceExpr::lebesgue(f64::INFINITY);
        let m = Operator::Maximal { family: CubeFamily::Dyadic };
        let mx = empirical_norm(&m, &[linf.clone()], &linf, g, &pts, &settings).unwrap();
        assert!((mx.value - 1.0).abs() < 1e-9);
        let none = EmpiricalSettings { n_probes: 0, ..settings };
        assert_eq!(empirical_norm(&m, &[linf.clone()], &linf, g, &pts, &none).unwrap().value, 0.0);
    }
}
