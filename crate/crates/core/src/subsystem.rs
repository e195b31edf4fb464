//! Linearized dynamics of a single class: the chain ODE
//! `ω̇_n = Γ A(p, k_{n-1}) ω_{n-1} + Γ̄ A(−p, k_{n+1}) ω_{n+1}`
//! on a finite window, its Hamiltonian and quadratic invariant, and the
//! energy-type stability bounds.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{self, canonical_label, min_norm_sq, ClassLabel, LatticeError, WaveVector};
use crate::rk4;

/// Slack on the enstrophy bound, relative.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubsystemError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("window [{n_min}, {n_max}] must contain 0")]
    BadWindow { n_min: i64, n_max: i64 },
    #[error("state does not match the subsystem window")]
    WindowMismatch,
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("class is not covered by the uniform bound ({0:?})")]
    NotUdtStable(StabilityKind),
    #[error("enstrophy ratio {ratio} exceeds bound σ = {sigma} at t = {t}")]
    BoundViolated { ratio: f64, sigma: f64, t: f64 },
    #[error("need at least 3 samples to fit a growth rate")]
    TooFewSamples,
}

/// Finite window of one class with its chain coefficients precomputed.
#[derive(Debug, Clone)]
pub struct SubsystemSpec {
    pub khat: WaveVector,
    pub p: WaveVector,
    pub gamma: Complex64,
    pub n_min: i64,
    pub n_max: i64,
    hole: Option<i64>,
    indices: Vec<i64>,
    rho: Vec<f64>,
    /// Coefficient of `ω_{n-1}` in row `n`; zero when `n-1` is absent.
    lower: Vec<Complex64>,
    /// Coefficient of `ω_{n+1}` in row `n`; zero when `n+1` is absent.
    upper: Vec<Complex64>,
    /// `det(p, k̂) = p1 k̂2 − p2 k̂1`.
    det: f64,
}

impl SubsystemSpec {
    pub fn new(
        khat: WaveVector,
        p: WaveVector,
        gamma: Complex64,
        n_min: i64,
        n_max: i64,
    ) -> Result<Self, SubsystemError> {
        if n_min > 0 || n_max < 0 {
            return Err(SubsystemError::BadWindow { n_min, n_max });
        }
        if khat.is_zero() || p.is_zero() {
            return Err(LatticeError::ZeroWaveVector.into());
        }
        let window = lattice::class_members(khat, p, n_min, n_max)?;
        let hole = window.excluded;
        let indices: Vec<i64> = window.members.iter().map(|&(n, _)| n).collect();
        let present = |n: i64| n >= n_min && n <= n_max && Some(n) != hole;
        let mut rho = Vec::with_capacity(indices.len());
        let mut lower = Vec::with_capacity(indices.len());
        let mut upper = Vec::with_capacity(indices.len());
        for &n in &indices {
            rho.push(lattice::rho(khat, p, n)?);
            lower.push(if present(n - 1) {
                gamma * lattice::triad_coeff(p, khat + (n - 1) * p)?
            } else {
                Complex64::new(0.0, 0.0)
            });
            upper.push(if present(n + 1) {
                gamma.conj() * lattice::triad_coeff(-p, khat + (n + 1) * p)?
            } else {
                Complex64::new(0.0, 0.0)
            });
        }
        Ok(Self {
            khat,
            p,
            gamma,
            n_min,
            n_max,
            hole,
            indices,
            rho,
            lower,
            upper,
            det: p.cross(khat) as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn hole(&self) -> Option<i64> {
        self.hole
    }

    pub fn zeros(&self) -> ComplexSeq {
        ComplexSeq {
            n_min: self.n_min,
            n_max: self.n_max,
            hole: self.hole,
            values: vec![Complex64::new(0.0, 0.0); self.len()],
        }
    }

    pub fn from_fn(&self, f: impl Fn(i64) -> Complex64) -> ComplexSeq {
        let mut s = self.zeros();
        for (v, &n) in s.values.iter_mut().zip(&self.indices) {
            *v = f(n);
        }
        s
    }

    /// Deterministic random state with entries uniform in the square of
    /// half-side `amplitude`.
    pub fn random_state(&self, seed: u64, amplitude: f64) -> ComplexSeq {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = self.zeros();
        for v in &mut s.values {
            *v = Complex64::new(
                rng.random_range(-amplitude..=amplitude),
                rng.random_range(-amplitude..=amplitude),
            );
        }
        s
    }

    fn check(&self, w: &ComplexSeq) -> Result<(), SubsystemError> {
        if w.n_min != self.n_min || w.n_max != self.n_max || w.hole != self.hole {
            return Err(SubsystemError::WindowMismatch);
        }
        debug_assert_eq!(w.values.len(), self.len());
        Ok(())
    }

    fn rhs_into(&self, w: &[Complex64], out: &mut [Complex64]) {
        let m = w.len();
        for i in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            if i > 0 {
                acc += self.lower[i] * w[i - 1];
            }
            if i + 1 < m {
                acc += self.upper[i] * w[i + 1];
            }
            out[i] = acc;
        }
    }

    fn hamiltonian_raw(&self, w: &[Complex64]) -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 1..w.len() {
            if self.indices[i] - self.indices[i - 1] != 1 {
                continue;
            }
            s += self.gamma * (self.rho[i] * self.rho[i - 1]) * w[i - 1] * w[i].conj();
        }
        -self.det * s.im
    }

    /// Positive reference scale for relative drift of `H`.
    fn hamiltonian_scale(&self, w: &[Complex64]) -> f64 {
        let mut s = 0.0;
        for i in 1..w.len() {
            s += (self.rho[i] * self.rho[i - 1]).abs() * w[i - 1].norm() * w[i].norm();
        }
        self.det.abs() * self.gamma.norm() * s
    }

    fn invariant_raw(&self, w: &[Complex64]) -> f64 {
        self.rho.iter().zip(w).map(|(r, v)| r * v.norm_sqr()).sum()
    }

    fn invariant_scale(&self, w: &[Complex64]) -> f64 {
        self.rho.iter().zip(w).map(|(r, v)| r.abs() * v.norm_sqr()).sum()
    }
}

/// Values `ω_n` on a window `[n_min, n_max]` with the hole (if any) removed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexSeq {
    pub n_min: i64,
    pub n_max: i64,
    pub hole: Option<i64>,
    pub values: Vec<Complex64>,
}

impl ComplexSeq {
    fn position(&self, n: i64) -> Option<usize> {
        if n < self.n_min || n > self.n_max || Some(n) == self.hole {
            return None;
        }
        let shift = matches!(self.hole, Some(h) if h < n) as i64;
        Some((n - self.n_min - shift) as usize)
    }

    pub fn get(&self, n: i64) -> Option<Complex64> {
        self.position(n).map(|i| self.values[i])
    }

    pub fn set(&mut self, n: i64, v: Complex64) -> bool {
        match self.position(n) {
            Some(i) => {
                self.values[i] = v;
                true
            }
            None => false,
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        (self.n_min..=self.n_max).filter(move |&n| Some(n) != self.hole)
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

pub fn cle_rhs(spec: &SubsystemSpec, w: &ComplexSeq) -> Result<ComplexSeq, SubsystemError> {
    spec.check(w)?;
    let mut out = spec.zeros();
    spec.rhs_into(&w.values, &mut out.values);
    Ok(out)
}

/// `H = −det(p, k̂) · Im Σ_n Γ ρ_n ρ_{n−1} ω_{n−1} ω̄_n`.
pub fn hamiltonian(spec: &SubsystemSpec, w: &ComplexSeq) -> Result<f64, SubsystemError> {
    spec.check(w)?;
    Ok(spec.hamiltonian_raw(&w.values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Invariant {
    pub total: f64,
    /// `(Σ_{n≥1}, Σ_{n≤−1})` of `ρ_n |ω_n|²` when `|k̂| = |p|`.
    pub halves: Option<(f64, f64)>,
}

/// `I = Σ ρ_n |ω_n|²`.
pub fn invariant_i(spec: &SubsystemSpec, w: &ComplexSeq) -> Result<Invariant, SubsystemError> {
    spec.check(w)?;
    let total = spec.invariant_raw(&w.values);
    let halves = (spec.khat.norm_sq() == spec.p.norm_sq()).then(|| {
        let mut up = 0.0;
        let mut down = 0.0;
        for ((&n, r), v) in spec.indices.iter().zip(&spec.rho).zip(&w.values) {
            if n >= 1 {
                up += r * v.norm_sqr();
            } else if n <= -1 {
                down += r * v.norm_sqr();
            }
        }
        (up, down)
    });
    Ok(Invariant { total, halves })
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<ComplexSeq>,
    pub hamiltonian: Vec<f64>,
    pub invariant: Vec<f64>,
    /// Max over samples of `|H(t) − H(0)|`, relative (see [`relative_drift`]).
    pub h_drift: f64,
    pub i_drift: f64,
}

impl Trajectory {
    pub fn enstrophy(&self) -> Vec<f64> {
        self.states.iter().map(ComplexSeq::norm_sq).collect()
    }
}

/// `max |x(t) − x(0)|` divided by `|x(0)|`, or by `scale` when `|x(0)|` is
/// below `1e-3 · scale` (a conserved quantity that starts near zero).
pub fn relative_drift(series: &[f64], scale: f64) -> f64 {
    let x0 = series[0];
    let denom = if x0.abs() > 1e-3 * scale { x0.abs() } else { scale };
    let max = series.iter().map(|x| (x - x0).abs()).fold(0.0, f64::max);
    if denom > 0.0 {
        max / denom
    } else {
        max
    }
}

/// RK4 with fixed step, recording every step.
pub fn integrate(
    spec: &SubsystemSpec,
    state0: &ComplexSeq,
    dt: f64,
    steps: usize,
) -> Result<Trajectory, SubsystemError> {
    integrate_sampled(spec, state0, dt, steps, 1)
}

/// RK4 with fixed step, recording every `every`-th step and the last one.
pub fn integrate_sampled(
    spec: &SubsystemSpec,
    state0: &ComplexSeq,
    dt: f64,
    steps: usize,
    every: usize,
) -> Result<Trajectory, SubsystemError> {
    spec.check(state0)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SubsystemError::BadStep(dt));
    }
    let every = every.max(1);
    let f = |y: &[Complex64], out: &mut [Complex64]| spec.rhs_into(y, out);
    let mut y = state0.values.clone();
    let mut scratch = rk4::Scratch::default();
    let mut traj = Trajectory {
        dt,
        times: vec![0.0],
        states: vec![state0.clone()],
        hamiltonian: vec![spec.hamiltonian_raw(&y)],
        invariant: vec![spec.invariant_raw(&y)],
        h_drift: 0.0,
        i_drift: 0.0,
    };
    for s in 1..=steps {
        rk4::step(&f, &mut y, dt, &mut scratch);
        if s % every == 0 || s == steps {
            let t = s as f64 * dt;
            if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(SubsystemError::NonFinite { t });
            }
            traj.times.push(t);
            traj.hamiltonian.push(spec.hamiltonian_raw(&y));
            traj.invariant.push(spec.invariant_raw(&y));
            let mut st = state0.clone();
            st.values.copy_from_slice(&y);
            traj.states.push(st);
        }
    }
    traj.h_drift = relative_drift(&traj.hamiltonian, spec.hamiltonian_scale(&state0.values));
    traj.i_drift = relative_drift(&traj.invariant, spec.invariant_scale(&state0.values));
    Ok(traj)
}

/// Least-squares slope of `ln Σ|ω_n|²` over the final third of the samples.
pub fn growth_rate(traj: &Trajectory) -> Result<f64, SubsystemError> {
    let e = traj.enstrophy();
    fit_log_slope(&traj.times, &e)
}

pub(crate) fn fit_log_slope(t: &[f64], y: &[f64]) -> Result<f64, SubsystemError> {
    let n = t.len();
    if n < 3 {
        return Err(SubsystemError::TooFewSamples);
    }
    let start = n - n / 3;
    let (ts, ys): (Vec<f64>, Vec<f64>) = t[start..]
        .iter()
        .zip(&y[start..])
        .map(|(&t, &y)| (t, y.ln()))
        .unzip();
    let m = ts.len() as f64;
    let tbar = ts.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let num: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tbar) * (y - ybar)).sum();
    let den: f64 = ts.iter().map(|t| (t - tbar).powi(2)).sum();
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StabilityKind {
    ParallelTrivial,
    StableUDT,
    StableHalfClassBoth,
    StableHalfClassOne,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub kind: StabilityKind,
    /// Bound on `J(t)/J(0)`; for a single stable half it applies to that half.
    pub sigma: Option<f64>,
    pub detail: String,
}

fn sigma_from_min(pp: i64, min_sq: i64) -> f64 {
    let sup = 1.0 / pp as f64;
    let inf = sup - 1.0 / min_sq as f64;
    sup / inf
}

/// Energy-method stability verdict for the class of `label.khat`.
pub fn classify_stability(label: &ClassLabel) -> Result<StabilityVerdict, SubsystemError> {
    let l = canonical_label(label.khat, label.p)?;
    let pp = l.p.norm_sq();
    if l.parallel {
        return Ok(StabilityVerdict {
            kind: StabilityKind::ParallelTrivial,
            sigma: None,
            detail: "class is parallel to p; all couplings vanish".into(),
        });
    }
    let m = min_norm_sq(l.khat, l.p, None, None);
    if m > pp {
        return Ok(StabilityVerdict {
            kind: StabilityKind::StableUDT,
            sigma: Some(sigma_from_min(pp, m)),
            detail: format!("min |k|² = {m} > |p|² = {pp}"),
        });
    }
    if m < pp || !l.is_half_class() {
        return Ok(StabilityVerdict {
            kind: StabilityKind::Undetermined,
            sigma: None,
            detail: format!("class meets the open disk: min |k|² = {m} < |p|² = {pp}"),
        });
    }
    let up = min_norm_sq(l.khat, l.p, Some(1), None);
    let down = min_norm_sq(l.khat, l.p, None, Some(-1));
    let up_ok = up > pp;
    let down_ok = down > pp;
    let s_up = sigma_from_min(pp, up);
    let s_down = sigma_from_min(pp, down);
    Ok(match (up_ok, down_ok) {
        (true, true) => StabilityVerdict {
            kind: StabilityKind::StableHalfClassBoth,
            sigma: Some(s_up.max(s_down)),
            detail: format!("half class; σ₊ = {s_up}, σ₋ = {s_down}"),
        },
        (true, false) => StabilityVerdict {
            kind: StabilityKind::StableHalfClassOne,
            sigma: Some(s_up),
            detail: "half class; upper half (n ≥ 1) stable".into(),
        },
        (false, true) => StabilityVerdict {
            kind: StabilityKind::StableHalfClassOne,
            sigma: Some(s_down),
            detail: "half class; lower half (n ≤ −1) stable".into(),
        },
        (false, false) => StabilityVerdict {
            kind: StabilityKind::Undetermined,
            sigma: None,
            detail: "half class with both neighbours in the disk".into(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub sigma: f64,
    pub max_ratio: f64,
}

/// Checks `J(t) ≤ σ J(0)` along a trajectory of a class avoiding the disk.
pub fn udt_bound_check(
    spec: &SubsystemSpec,
    traj: &Trajectory,
) -> Result<BoundReport, SubsystemError> {
    let label = canonical_label(spec.khat, spec.p)?;
    let verdict = classify_stability(&label)?;
    let sigma = match (verdict.kind, verdict.sigma) {
        (StabilityKind::StableUDT, Some(s)) => s,
        (k, _) => return Err(SubsystemError::NotUdtStable(k)),
    };
    let e = traj.enstrophy();
    let j0 = e[0];
    let mut max_ratio: f64 = 1.0;
    for (&t, &j) in traj.times.iter().zip(&e) {
        let ratio = if j0 > 0.0 { j / j0 } else { 1.0 };
        if ratio > sigma * (1.0 + BOUND_SLACK) {
            return Err(SubsystemError::BoundViolated { ratio, sigma, t });
        }
        max_ratio = max_ratio.max(ratio);
    }
    Ok(BoundReport { sigma, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wv(a: i64, b: i64) -> WaveVector {
        WaveVector::new(a, b)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn golden(n: i64) -> SubsystemSpec {
        SubsystemSpec::new(wv(1, 0), wv(1, 1), c(1.0, 0.0), -n, n).unwrap()
    }

    #[test]
    fn rhs_unit_mass() {
        let s = golden(3);
        let mut w = s.zeros();
        w.set(0, c(1.0, 0.0));
        let r = cle_rhs(&s, &w).unwrap();
        // ω̇_1 = Γ̄ A(−p, k̂) ω_0 and ω̇_{-1} = Γ A(p, k̂) ω_0.
        assert!((r.get(1).unwrap() - c(-0.25, 0.0)).norm() < 1e-15);
        assert!((r.get(-1).unwrap() - c(0.25, 0.0)).norm() < 1e-15);
        assert_eq!(r.get(0).unwrap(), c(0.0, 0.0));
        assert_eq!(r.get(2).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn hamiltonian_example() {
        let s = golden(3);
        let mut w = s.zeros();
        w.set(0, c(1.0, 0.0));
        w.set(1, c(0.0, 1.0));
        let h = hamiltonian(&s, &w).unwrap();
        let rho0 = lattice::rho(wv(1, 0), wv(1, 1), 0).unwrap();
        let rho1 = lattice::rho(wv(1, 0), wv(1, 1), 1).unwrap();
        assert!((h + rho1 * rho0).abs() < 1e-15);
        assert!((h - 0.15).abs() < 1e-15);
    }

    #[test]
    fn half_sums_for_half_class() {
        let s = SubsystemSpec::new(wv(-1, 1), wv(1, 1), c(1.0, 0.0), -4, 4).unwrap();
        let w = s.random_state(3, 1.0);
        let inv = invariant_i(&s, &w).unwrap();
        let (u, d) = inv.halves.unwrap();
        // ρ_0 = 0 so the halves make up the total.
        assert!((u + d - inv.total).abs() < 1e-14);
        assert!(invariant_i(&golden(2), &golden(2).zeros()).unwrap().halves.is_none());
    }

    #[test]
    fn wrong_window_rejected() {
        let a = golden(3);
        let b = golden(4);
        assert_eq!(cle_rhs(&a, &b.zeros()), Err(SubsystemError::WindowMismatch));
        assert!(SubsystemSpec::new(wv(1, 0), wv(1, 1), c(1.0, 0.0), 1, 3).is_err());
    }

    #[test]
    fn hole_is_skipped() {
        let s = SubsystemSpec::new(wv(2, 2), wv(1, 1), c(1.0, 0.0), -4, 2).unwrap();
        assert_eq!(s.hole(), Some(-2));
        assert_eq!(s.len(), 6);
        let mut w = s.zeros();
        assert!(!w.set(-2, c(1.0, 0.0)));
        assert!(w.set(-3, c(1.0, 0.0)));
        assert_eq!(w.get(-3), Some(c(1.0, 0.0)));
        // Parallel class: all couplings vanish.
        assert!(cle_rhs(&s, &w).unwrap().values.iter().all(|v| v.norm() == 0.0));
    }

    /// `ω̇_n = −i ρ_n⁻¹ ∂H/∂ω̄_n` with Wirtinger derivatives by central differences.
    #[test]
    fn rhs_is_hamiltonian_flow() {
        for (k, gamma) in [(wv(1, 0), c(1.0, 0.0)), (wv(3, 0), c(0.3, -0.7)), (wv(2, -1), c(-1.2, 0.4))] {
            let s = SubsystemSpec::new(k, wv(1, 1), gamma, -6, 6).unwrap();
            let w = s.random_state(11, 1.0);
            let rhs = cle_rhs(&s, &w).unwrap();
            let h = 1e-6;
            for (i, &n) in s.indices().iter().enumerate() {
                let rho = s.rho()[i];
                if rho == 0.0 {
                    continue;
                }
                let eval = |d: Complex64| {
                    let mut x = w.clone();
                    x.values[i] += d;
                    hamiltonian(&s, &x).unwrap()
                };
                let dre = (eval(c(h, 0.0)) - eval(c(-h, 0.0))) / (2.0 * h);
                let dim = (eval(c(0.0, h)) - eval(c(0.0, -h))) / (2.0 * h);
                let dbar = 0.5 * c(dre, dim);
                let flow = -Complex64::i() * dbar / rho;
                assert!((flow - rhs.get(n).unwrap()).norm() < 1e-8, "k̂ = {k}, n = {n}");
            }
        }
    }

    #[test]
    fn unstable_class_grows_at_twice_real_part() {
        // Converged eigenvalue of the (1,0) class, |a| = 1/2.
        let re_lambda = 0.5 * 0.248_223_018_041_106_7;
        let s = golden(40);
        let w0 = s.random_state(5, 1e-3);
        let tr = integrate_sampled(&s, &w0, 0.01, 6000, 10).unwrap();
        let g = growth_rate(&tr).unwrap();
        assert!((g - 2.0 * re_lambda).abs() < 1e-3 * 2.0 * re_lambda, "g = {g}");
        assert!(tr.h_drift < 1e-8 && tr.i_drift < 1e-8);
    }

    #[test]
    fn rk4_order_on_invariants() {
        // Coarse steps so truncation error dominates rounding.
        let s = golden(15);
        let w0 = s.random_state(17, 1.0);
        let a = integrate(&s, &w0, 0.2, 50).unwrap();
        let b = integrate(&s, &w0, 0.1, 100).unwrap();
        assert!(a.i_drift / b.i_drift > 8.0, "{} {}", a.i_drift, b.i_drift);
        assert!(a.h_drift / b.h_drift > 8.0, "{} {}", a.h_drift, b.h_drift);
    }

    #[test]
    fn classify_examples() {
        let v = classify_stability(&canonical_label(wv(3, 0), wv(1, 1)).unwrap()).unwrap();
        assert_eq!(v.kind, StabilityKind::StableUDT);
        assert!((v.sigma.unwrap() - 5.0 / 3.0).abs() < 1e-12);

        let v = classify_stability(&canonical_label(wv(-1, 1), wv(1, 1)).unwrap()).unwrap();
        assert_eq!(v.kind, StabilityKind::StableHalfClassBoth);
        assert!((v.sigma.unwrap() - 2.0).abs() < 1e-12);

        let v = classify_stability(&canonical_label(wv(1, 0), wv(1, 1)).unwrap()).unwrap();
        assert_eq!(v.kind, StabilityKind::Undetermined);

        let v = classify_stability(&canonical_label(wv(0, 3), wv(1, 1)).unwrap()).unwrap();
        assert_eq!(v.kind, StabilityKind::StableUDT);

        let v = classify_stability(&canonical_label(wv(2, 2), wv(1, 1)).unwrap()).unwrap();
        assert_eq!(v.kind, StabilityKind::ParallelTrivial);
        assert!(v.sigma.is_none());
    }

    #[test]
    fn half_class_one_side() {
        let p = wv(2, 1);
        let mut seen_one = false;
        for k1 in -3..=3 {
            for k2 in -3..=3 {
                let k = wv(k1, k2);
                if k.is_zero() || k.is_parallel(p) {
                    continue;
                }
                let l = canonical_label(k, p).unwrap();
                let v = classify_stability(&l).unwrap();
                if v.kind == StabilityKind::StableHalfClassOne {
                    seen_one = true;
                    assert!(l.is_half_class());
                }
            }
        }
        // One-sided needs a second circle member k̂ ± p, i.e. a 120° lattice angle.
        assert!(!seen_one);
    }

    #[test]
    fn udt_bound_holds_on_stable_class() {
        let s = SubsystemSpec::new(wv(3, 0), wv(1, 1), c(1.0, 0.0), -20, 20).unwrap();
        let w0 = s.random_state(1, 1.0);
        let tr = integrate_sampled(&s, &w0, 0.01, 1000, 5).unwrap();
        let rep = udt_bound_check(&s, &tr).unwrap();
        assert!(rep.max_ratio <= rep.sigma);
        assert!(matches!(
            udt_bound_check(&golden(5), &integrate(&golden(5), &golden(5).random_state(1, 1.0), 0.1, 3).unwrap()),
            Err(SubsystemError::NotUdtStable(StabilityKind::Undetermined))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn invariants_conserved_by_integration(seed in 0u64..1000, k1 in -4i64..=4, k2 in -4i64..=4) {
            let k = wv(k1, k2);
            prop_assume!(!k.is_zero() && !k.is_parallel(wv(1, 1)));
            let s = SubsystemSpec::new(k, wv(1, 1), c(0.8, 0.6), -10, 10).unwrap();
            let w0 = s.random_state(seed, 1.0);
            let tr = integrate(&s, &w0, 1e-2, 100).unwrap();
            prop_assert!(tr.h_drift < 1e-7, "H drift {}", tr.h_drift);
            prop_assert!(tr.i_drift < 1e-7, "I drift {}", tr.i_drift);
        }

        #[test]
        fn rhs_is_linear(seed in 0u64..1000, alpha_re in -2.0..2.0f64, alpha_im in -2.0..2.0f64) {
            let s = golden(6);
            let x = s.random_state(seed, 1.0);
            let y = s.random_state(seed + 1, 1.0);
            let alpha = c(alpha_re, alpha_im);
            let mut z = x.clone();
            for (zi, yi) in z.values.iter_mut().zip(&y.values) {
                *zi = alpha * *zi + yi;
            }
            let fx = cle_rhs(&s, &x).unwrap();
            let fy = cle_rhs(&s, &y).unwrap();
            let fz = cle_rhs(&s, &z).unwrap();
            for i in 0..s.len() {
                prop_assert!((fz.values[i] - alpha * fx.values[i] - fy.values[i]).norm() < 1e-13);
            }
        }
    }
}
