//! Galerkin truncation of the 2D Euler equation in vorticity Fourier modes,
//! `ω̇_k = Σ_{{p,q}: p+q=k} A(p,q) ω_p ω_q` over unordered pairs inside the
//! disk `|k| ≤ K`, with `ω_{−k} = ω̄_k` enforced by storing one mode per
//! `±k` pair.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{triad_coeff, WaveVector};
use crate::rk4;
use crate::subsystem::relative_drift;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EulerError {
    #[error("cutoff {0} admits no modes")]
    EmptyModeSet(f64),
    #[error("mode {0} is outside the truncation")]
    ModeNotInSet(WaveVector),
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("field became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("fields belong to different mode sets")]
    ModeSetMismatch,
    #[error("need at least 3 samples to fit a growth rate")]
    TooFewSamples,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Triad {
    p: usize,
    q: usize,
    coeff: f64,
}

/// Modes `0 < |k| ≤ K`. The first `len_half()` entries of `modes()` are the
/// representatives (`k1 > 0`, or `k1 = 0, k2 > 0`); entry `i + len_half()`
/// is the negative of entry `i`.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub cutoff: f64,
    modes: Vec<WaveVector>,
    index: HashMap<WaveVector, usize>,
    /// Unordered interacting pairs for each mode.
    triads: Vec<Vec<Triad>>,
}

fn is_rep(k: WaveVector) -> bool {
    k.k1 > 0 || (k.k1 == 0 && k.k2 > 0)
}

impl ModeSet {
    pub fn new(cutoff: f64) -> Result<Arc<Self>, EulerError> {
        let r = cutoff.floor() as i64;
        let k2max = cutoff * cutoff;
        let mut reps = Vec::new();
        for k1 in 0..=r {
            for k2 in -r..=r {
                let k = WaveVector::new(k1, k2);
                if is_rep(k) && (k.norm_sq() as f64) <= k2max + 1e-9 {
                    reps.push(k);
                }
            }
        }
        if reps.is_empty() {
            return Err(EulerError::EmptyModeSet(cutoff));
        }
        let mut modes = reps.clone();
        modes.extend(reps.iter().map(|&k| -k));
        let index: HashMap<WaveVector, usize> = modes.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let triads = modes
            .iter()
            .map(|&k| {
                let mut list = Vec::new();
                for (ip, &p) in modes.iter().enumerate() {
                    let q = k - p;
                    if let Some(&iq) = index.get(&q) {
                        if ip < iq {
                            let coeff = triad_coeff(p, q).expect("nonzero modes");
                            if coeff != 0.0 {
                                list.push(Triad { p: ip, q: iq, coeff });
                            }
                        }
                    }
                }
                list
            })
            .collect();
        Ok(Arc::new(Self {
            cutoff,
            modes,
            index,
            triads,
        }))
    }

    pub fn modes(&self) -> &[WaveVector] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn len_half(&self) -> usize {
        self.modes.len() / 2
    }

    pub fn index_of(&self, k: WaveVector) -> Option<usize> {
        self.index.get(&k).copied()
    }

    pub fn contains(&self, k: WaveVector) -> bool {
        self.index.contains_key(&k)
    }

    /// Right-hand side for row `i` of a full (all-modes) coefficient vector.
    fn rhs_row(&self, i: usize, full: &[Complex64]) -> Complex64 {
        self.triads[i]
            .iter()
            .map(|t| full[t.p] * full[t.q] * t.coeff)
            .sum()
    }

    /// Right-hand side for every mode, treating all coefficients as independent.
    pub fn rhs_full(&self, full: &[Complex64]) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.rhs_row(i, full)).collect()
    }
}

/// Real vorticity field stored as its representative coefficients.
#[derive(Debug, Clone)]
pub struct VorticityField {
    pub modes: Arc<ModeSet>,
    pub coeffs: Vec<Complex64>,
}

impl VorticityField {
    pub fn zeros(modes: &Arc<ModeSet>) -> Self {
        Self {
            modes: Arc::clone(modes),
            coeffs: vec![Complex64::new(0.0, 0.0); modes.len_half()],
        }
    }

    /// Field with representative coefficients `f(k)`.
    pub fn from_fn(modes: &Arc<ModeSet>, mut f: impl FnMut(WaveVector) -> Complex64) -> Self {
        let mut out = Self::zeros(modes);
        for (c, &k) in out.coeffs.iter_mut().zip(modes.modes()) {
            *c = f(k);
        }
        out
    }

    /// Coefficients uniform in `[−amplitude, amplitude]²`, seeded.
    pub fn random(modes: &Arc<ModeSet>, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_fn(modes, |_| {
            Complex64::new(
                rng.random_range(-amplitude..=amplitude),
                rng.random_range(-amplitude..=amplitude),
            )
        })
    }

    pub fn get(&self, k: WaveVector) -> Option<Complex64> {
        let i = self.modes.index_of(k)?;
        let h = self.modes.len_half();
        Some(if i < h { self.coeffs[i] } else { self.coeffs[i - h].conj() })
    }

    /// Sets `ω_k` (and `ω_{−k}` by reality).
    pub fn set(&mut self, k: WaveVector, v: Complex64) -> Result<(), EulerError> {
        let i = self.modes.index_of(k).ok_or(EulerError::ModeNotInSet(k))?;
        let h = self.modes.len_half();
        if i < h {
            self.coeffs[i] = v;
        } else {
            self.coeffs[i - h] = v.conj();
        }
        Ok(())
    }

    pub fn full(&self) -> Vec<Complex64> {
        let mut out = self.coeffs.clone();
        out.extend(self.coeffs.iter().map(|c| c.conj()));
        out
    }

    pub fn norm_sq_full(&self) -> f64 {
        2.0 * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn sub(&self, other: &VorticityField) -> Result<VorticityField, EulerError> {
        if !Arc::ptr_eq(&self.modes, &other.modes) {
            return Err(EulerError::ModeSetMismatch);
        }
        Ok(VorticityField {
            modes: Arc::clone(&self.modes),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }
}

fn expand_into(reps: &[Complex64], full: &mut Vec<Complex64>) {
    full.clear();
    full.extend_from_slice(reps);
    full.extend(reps.iter().map(|c| c.conj()));
}

pub fn euler_rhs(field: &VorticityField) -> VorticityField {
    let full = field.full();
    let m = &field.modes;
    VorticityField {
        modes: Arc::clone(m),
        coeffs: (0..m.len_half()).map(|i| m.rhs_row(i, &full)).collect(),
    }
}

/// `ω_p = Γ`, `ω_{−p} = Γ̄`, all other modes zero.
pub fn fixed_point(p: WaveVector, gamma: Complex64, modes: &Arc<ModeSet>) -> Result<VorticityField, EulerError> {
    let mut f = VorticityField::zeros(modes);
    f.set(p, gamma)?;
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conserved {
    /// `½ Σ_k |k|⁻² |ω_k|²` over all modes.
    pub energy: f64,
    /// `Σ_k |ω_k|²` over all modes.
    pub enstrophy: f64,
    /// `2E − |p|⁻² J`.
    pub casimir: f64,
}

pub fn conserved(field: &VorticityField, p: WaveVector) -> Conserved {
    let mut energy = 0.0;
    let mut enstrophy = 0.0;
    for (c, k) in field.coeffs.iter().zip(field.modes.modes()) {
        let a = 2.0 * c.norm_sqr();
        energy += 0.5 * a / k.norm_sq() as f64;
        enstrophy += a;
    }
    Conserved {
        energy,
        enstrophy,
        casimir: 2.0 * energy - enstrophy / p.norm_sq() as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianReport {
    /// Largest `|J_fd − J_analytic|` over all entries.
    pub max_deviation: f64,
    /// Number of nonzero analytic entries.
    pub nonzeros: usize,
}

/// Analytic linearization at the shear state: row `k` has `A(p, k−p) Γ` at
/// column `k − p` and `A(−p, k+p) Γ̄` at column `k + p`.
pub fn analytic_jacobian(p: WaveVector, gamma: Complex64, modes: &ModeSet) -> Vec<Vec<(usize, Complex64)>> {
    modes
        .modes()
        .iter()
        .map(|&k| {
            let mut row: Vec<(usize, Complex64)> = Vec::new();
            for (shift, coef) in [(k - p, gamma), (k + p, gamma.conj())] {
                let Some(col) = modes.index_of(shift) else { continue };
                let src = if shift == k - p { p } else { -p };
                let a = triad_coeff(src, shift).expect("nonzero modes");
                if a != 0.0 {
                    match row.iter_mut().find(|(c, _)| *c == col) {
                        Some((_, v)) => *v += coef * a,
                        None => row.push((col, coef * a)),
                    }
                }
            }
            row
        })
        .collect()
}

/// Central-difference Jacobian of the all-modes right-hand side at the shear
/// state, compared entrywise with [`analytic_jacobian`].
pub fn jacobian_check(
    p: WaveVector,
    gamma: Complex64,
    modes: &Arc<ModeSet>,
    h: f64,
) -> Result<JacobianReport, EulerError> {
    let star = fixed_point(p, gamma, modes)?.full();
    let analytic = analytic_jacobian(p, gamma, modes);
    let n = modes.len();
    let mut dense = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut nonzeros = 0;
    for (r, row) in analytic.iter().enumerate() {
        for &(c, v) in row {
            dense[r][c] = v;
            nonzeros += 1;
        }
    }
    let mut worst: f64 = 0.0;
    let mut plus = star.clone();
    let mut minus = star.clone();
    for col in 0..n {
        plus[col] += h;
        minus[col] -= h;
        let fp = modes.rhs_full(&plus);
        let fm = modes.rhs_full(&minus);
        for row in 0..n {
            let fd = (fp[row] - fm[row]) / (2.0 * h);
            worst = worst.max((fd - dense[row][col]).norm());
        }
        plus[col] = star[col];
        minus[col] = star[col];
    }
    Ok(JacobianReport {
        max_deviation: worst,
        nonzeros,
    })
}

#[derive(Debug, Clone)]
pub struct EulerTrajectory {
    pub times: Vec<f64>,
    pub fields: Vec<VorticityField>,
    pub energy: Vec<f64>,
    pub enstrophy: Vec<f64>,
    pub energy_drift: f64,
    pub enstrophy_drift: f64,
}

impl EulerTrajectory {
    pub fn last(&self) -> &VorticityField {
        self.fields.last().expect("trajectory holds the initial field")
    }
}

/// RK4 with fixed step, recording every step.
pub fn integrate_euler(field0: &VorticityField, dt: f64, steps: usize) -> Result<EulerTrajectory, EulerError> {
    integrate_euler_sampled(field0, dt, steps, 1)
}

/// RK4 with fixed step, recording every `every`-th step and the last one.
pub fn integrate_euler_sampled(
    field0: &VorticityField,
    dt: f64,
    steps: usize,
    every: usize,
) -> Result<EulerTrajectory, EulerError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EulerError::BadStep(dt));
    }
    let every = every.max(1);
    let modes = Arc::clone(&field0.modes);
    let h = modes.len_half();
    let full = std::cell::RefCell::new(Vec::with_capacity(modes.len()));
    let f = |y: &[Complex64], out: &mut [Complex64]| {
        let mut buf = full.borrow_mut();
        expand_into(y, &mut buf);
        for (i, o) in out.iter_mut().enumerate().take(h) {
            *o = modes.rhs_row(i, &buf);
        }
    };
    // The conserved quantities do not depend on p except the Casimir.
    let probe = |v: &VorticityField| conserved(v, WaveVector::new(1, 0));
    let c0 = probe(field0);
    let mut traj = EulerTrajectory {
        times: vec![0.0],
        fields: vec![field0.clone()],
        energy: vec![c0.energy],
        enstrophy: vec![c0.enstrophy],
        energy_drift: 0.0,
        enstrophy_drift: 0.0,
    };
    let mut y = field0.coeffs.clone();
    let mut scratch = rk4::Scratch::default();
    for s in 1..=steps {
        rk4::step(&f, &mut y, dt, &mut scratch);
        if s % every == 0 || s == steps {
            let t = s as f64 * dt;
            if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(EulerError::NonFinite { t });
            }
            let field = VorticityField {
                modes: Arc::clone(&modes),
                coeffs: y.clone(),
            };
            let c = probe(&field);
            traj.times.push(t);
            traj.energy.push(c.energy);
            traj.enstrophy.push(c.enstrophy);
            traj.fields.push(field);
        }
    }
    traj.energy_drift = relative_drift(&traj.energy, c0.energy);
    traj.enstrophy_drift = relative_drift(&traj.enstrophy, c0.enstrophy);
    Ok(traj)
}

/// Log-slope of `Σ|ω − ω*|²` over the final third of a trajectory.
pub fn perturbation_growth_rate(traj: &EulerTrajectory, base: &VorticityField) -> Result<f64, EulerError> {
    let mut norms = Vec::with_capacity(traj.fields.len());
    for f in &traj.fields {
        norms.push(f.sub(base)?.norm_sq_full());
    }
    crate::subsystem::fit_log_slope(&traj.times, &norms).map_err(|_| EulerError::TooFewSamples)
}

/// Field supported on multiples `r k0` of one wave vector.
pub fn ray_field(modes: &Arc<ModeSet>, k0: WaveVector, amp: impl Fn(i64) -> Complex64) -> VorticityField {
    VorticityField::from_fn(modes, |k| {
        if k.is_parallel(k0) {
            let r = if k0.k1 != 0 { k.k1 / k0.k1 } else { k.k2 / k0.k2 };
            if r * k0.k1 == k.k1 && r * k0.k2 == k.k2 {
                return amp(r);
            }
        }
        Complex64::new(0.0, 0.0)
    })
}

/// Field supported on the circle `|k|² = radius_sq`.
pub fn circle_field(modes: &Arc<ModeSet>, radius_sq: i64, amp: impl Fn(WaveVector) -> Complex64) -> VorticityField {
    VorticityField::from_fn(modes, |k| {
        if k.norm_sq() == radius_sq {
            amp(k)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
