//! Finite sections of the class operator in the interleaved ordering
//! `n ≥ 1 ↦ 2n`, `n ≤ 0 ↦ 2|n| + 1`, the constant-coefficient part `B`
//! and its resolvent, and the two-solution determinant test for eigenvalues.
//!
//! Row `relabel(n)` of `A` holds `i a ρ_{n±1}` in columns `relabel(n±1)`;
//! `B` replaces every `ρ_{n±1}` by the limit `ρ`, and `C = A − B`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::contfrac::CFParams;
use crate::roots::{newton, NewtonOptions, RootError};

/// Largest dense section accepted by [`truncated_spectrum`].
pub const MAX_DENSE: usize = 2048;
/// Distance from the unit circle below which a root counts as on it.
const UNIT_CIRCLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixOpError {
    #[error("section size {0} below the minimum of 5")]
    TooSmall(usize),
    #[error("section size {0} exceeds the dense cap {MAX_DENSE}")]
    TooLarge(usize),
    #[error("eigenvalue iteration failed to converge (N = {0})")]
    EigenFailure(usize),
    #[error("λ̃ = {0} lies on the spectral curve")]
    OnSpectralCurve(Complex64),
    #[error("λ̃ = {0} is an endpoint of the spectral curve")]
    SpectralPointSet(Complex64),
    #[error("ρ_{n} = 0 stops the backward recurrence")]
    DegenerateCoefficient { n: i64 },
    #[error("tail length {n_tail} too short: |w|^N = {decay:e}")]
    TailTooShort { n_tail: usize, decay: f64 },
    #[error("recurrence overflowed")]
    Overflow,
    #[error("Newton iteration on det M failed: {0}")]
    NoRoot(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorKind {
    A,
    B,
    C,
}

#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub kind: OperatorKind,
    pub size: usize,
    pub entries: DMatrix<Complex64>,
    pub params: CFParams,
    /// `b = a ρ = −a |p|⁻²`.
    pub b: f64,
}

/// 1-based position of chain index `n`.
pub fn relabel(n: i64) -> usize {
    if n >= 1 {
        (2 * n) as usize
    } else {
        (2 * (-n) + 1) as usize
    }
}

/// Inverse of [`relabel`].
pub fn chain_index(j: usize) -> i64 {
    assert!(j >= 1);
    if j.is_multiple_of(2) {
        (j / 2) as i64
    } else {
        -(((j - 1) / 2) as i64)
    }
}

pub fn build(kind: OperatorKind, params: &CFParams, n: usize) -> Result<TruncatedOperator, MatrixOpError> {
    if n < 5 {
        return Err(MatrixOpError::TooSmall(n));
    }
    let a = params.a;
    let rho_lim = params.rho.limit;
    let b = a * rho_lim;
    let ia = Complex64::new(0.0, a);
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for row in 1..=n {
        let k = chain_index(row);
        for nb in [k - 1, k + 1] {
            let col = relabel(nb);
            if col > n {
                continue;
            }
            let r = params.rho.get(nb).unwrap_or(0.0);
            let coeff = match kind {
                OperatorKind::A => r,
                OperatorKind::B => rho_lim,
                OperatorKind::C => r - rho_lim,
            };
            m[(row - 1, col - 1)] = ia * coeff;
        }
    }
    Ok(TruncatedOperator {
        kind,
        size: n,
        entries: m,
        params: *params,
        b,
    })
}

impl TruncatedOperator {
    /// Nonzero entries as 1-based `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        for r in 0..self.size {
            for c in 0..self.size {
                let v = self.entries[(r, c)];
                if v != Complex64::new(0.0, 0.0) {
                    out.push((r + 1, c + 1, v));
                }
            }
        }
        out
    }

    /// `max |entry|` over rows `≥ r` (1-based), for `r = 1..=N`.
    pub fn tail_max(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        let mut acc: f64 = 0.0;
        for r in (0..self.size).rev() {
            for c in 0..self.size {
                acc = acc.max(self.entries[(r, c)].norm());
            }
            out[r] = acc;
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// All eigenvalues of the dense section (complex Schur form), sorted by
/// real then imaginary part.
pub fn truncated_spectrum(op: &TruncatedOperator) -> Result<Vec<Complex64>, MatrixOpError> {
    if op.size > MAX_DENSE {
        return Err(MatrixOpError::TooLarge(op.size));
    }
    let schur = op
        .entries
        .clone()
        .try_schur(1e-15, 100 * op.size)
        .ok_or(MatrixOpError::EigenFailure(op.size))?;
    let ev = schur.eigenvalues().ok_or(MatrixOpError::EigenFailure(op.size))?;
    let mut v: Vec<Complex64> = ev.iter().copied().collect();
    v.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(v)
}

/// `‖(M − λI)v‖ / (‖M‖ ‖v‖)` for an eigenvector recomputed by inverse iteration.
pub fn eigen_residual(op: &TruncatedOperator, lambda: Complex64) -> f64 {
    let n = op.size;
    let norm = op.frobenius().max(1e-300);
    let shift = lambda + Complex64::new(1e-10 * norm, 1e-10 * norm);
    let mut shifted = op.entries.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    let mut x = DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i % 7) as f64 * 0.1, 0.3));
    for _ in 0..3 {
        if let Some(y) = lu.solve(&x) {
            let s = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            x = y / Complex64::new(s, 0.0);
        }
    }
    let r = &op.entries * &x - &x * lambda;
    r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / norm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralTag {
    Isolated,
    Band,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaggedEigenvalue {
    pub value: Complex64,
    pub tag: SpectralTag,
    pub band_distance: f64,
}

/// Distance from `z` to the segment `i[−2|b|, 2|b|]`.
pub fn band_distance(z: Complex64, b: f64) -> f64 {
    let h = 2.0 * b.abs();
    if z.im.abs() <= h {
        z.re.abs()
    } else {
        z.re.hypot(z.im.abs() - h)
    }
}

/// Isolated if the band distance exceeds ten times the median band distance
/// (and a small absolute floor, so rounding noise on `B` is not tagged).
pub fn tag_spectrum(eigs: &[Complex64], b: f64) -> Vec<TaggedEigenvalue> {
    let dist: Vec<f64> = eigs.iter().map(|&z| band_distance(z, b)).collect();
    let mut sorted = dist.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.is_empty() { 0.0 } else { sorted[sorted.len() / 2] };
    let threshold = (10.0 * median).max(1e-8 * (1.0 + 2.0 * b.abs()));
    eigs.iter()
        .zip(dist)
        .map(|(&value, d)| TaggedEigenvalue {
            value,
            tag: if d > threshold { SpectralTag::Isolated } else { SpectralTag::Band },
            band_distance: d,
        })
        .collect()
}

/// Roots of `1 − λ̃ w² + w⁴`: `[w*, −w*, 1/w*, −1/w*]` with
/// `w* = ((λ̃ + √(λ̃² − 4))/2)^{1/2}`.
pub fn char_roots(lambda_tilde: Complex64) -> [Complex64; 4] {
    let s = (lambda_tilde * lambda_tilde - 4.0).sqrt();
    let w = ((lambda_tilde + s) / 2.0).sqrt();
    [w, -w, 1.0 / w, -1.0 / w]
}

/// Number of characteristic roots strictly inside the unit circle.
pub fn root_count_s(lambda_tilde: Complex64) -> usize {
    char_roots(lambda_tilde)
        .iter()
        .filter(|w| w.norm() < 1.0 - UNIT_CIRCLE_TOL)
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandSpec {
    pub lower: Complex64,
    pub upper: Complex64,
    pub width: f64,
}

/// Essential band `i[−2|b|, 2|b|]` of the class operator.
pub fn essential_band(params: &CFParams) -> BandSpec {
    let h = 2.0 * (params.a * params.rho.limit).abs();
    BandSpec {
        lower: Complex64::new(0.0, -h),
        upper: Complex64::new(0.0, h),
        width: 2.0 * h,
    }
}

/// Explicit Green's function of `B̃ − λ̃I`, `B̃ = −i b⁻¹ B`, off the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolvent {
    pub lambda_tilde: Complex64,
    /// Characteristic root with `|w*| < 1`.
    pub w: Complex64,
    w0: Complex64,
    m_inv: Matrix2<Complex64>,
}

impl Resolvent {
    pub fn new(lambda_tilde: Complex64) -> Result<Self, MatrixOpError> {
        let mut w = char_roots(lambda_tilde)[0];
        if w.norm() > 1.0 {
            w = 1.0 / w;
        }
        if (w.norm() - 1.0).abs() < UNIT_CIRCLE_TOL {
            let at_end = (lambda_tilde - 2.0).norm() < UNIT_CIRCLE_TOL
                || (lambda_tilde + 2.0).norm() < UNIT_CIRCLE_TOL;
            return Err(if at_end {
                MatrixOpError::SpectralPointSet(lambda_tilde)
            } else {
                MatrixOpError::OnSpectralCurve(lambda_tilde)
            });
        }
        let m = -w;
        let w0 = Matrix4::from_fn(|r, c| {
            let k = (r + 1) as i32;
            match c {
                0 => w.powi(k),
                1 => m.powi(k),
                2 => w.powi(-k),
                _ => m.powi(-k),
            }
        })
        .determinant();
        let lt = lambda_tilde;
        let mm = Matrix2::new(
            -lt * w + w.powi(2) + w.powi(3),
            lt * w + w.powi(2) - w.powi(3),
            w - lt * w.powi(2) + w.powi(4),
            -w - lt * w.powi(2) + w.powi(4),
        );
        let m_inv = mm.try_inverse().ok_or(MatrixOpError::SpectralPointSet(lambda_tilde))?;
        Ok(Self {
            lambda_tilde,
            w,
            w0,
            m_inv,
        })
    }

    fn g(&self, n: usize, j: usize) -> Complex64 {
        let w = self.w;
        let m = -w;
        if j == 1 {
            Complex64::new(0.0, 0.0)
        } else if j <= n + 1 {
            let e = (n + 2 - j) as i32;
            2.0 * (1.0 - w.powi(-4)) / self.w0 * (w.powi(e) + m.powi(e))
        } else {
            let e = (j - n - 2) as i32;
            -2.0 * (1.0 - w.powi(4)) / self.w0 * (w.powi(e) + m.powi(e))
        }
    }

    /// `G(n, j)`, both indices 1-based.
    pub fn green(&self, n: usize, j: usize) -> Complex64 {
        let lt = self.lambda_tilde;
        let delta = |l: usize| if l == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        let v0 = delta(1) + lt * self.g(1, j) - self.g(2, j) - self.g(3, j);
        let v1 = delta(2) - self.g(1, j) + lt * self.g(2, j) - self.g(4, j);
        let c0 = self.m_inv[(0, 0)] * v0 + self.m_inv[(0, 1)] * v1;
        let c1 = self.m_inv[(1, 0)] * v0 + self.m_inv[(1, 1)] * v1;
        let e = n as i32;
        self.w.powi(e) * c0 + (-self.w).powi(e) * c1 + self.g(n, j)
    }

    /// Output length covering the support of `y` plus a tail decayed below 1e−17.
    pub fn output_len(&self, support: usize) -> usize {
        let tail = (17.0 * std::f64::consts::LN_10 / -self.w.norm().ln()).ceil() as usize;
        support + tail + 4
    }

    /// `z = (B̃ − λ̃I)⁻¹ y` for finitely supported `y` (`y[0]` is `y_1`).
    pub fn apply(&self, y: &[Complex64]) -> Vec<Complex64> {
        let len = self.output_len(y.len());
        (1..=len)
            .map(|n| {
                y.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != Complex64::new(0.0, 0.0))
                    .map(|(j, v)| self.green(n, j + 1) * v)
                    .sum()
            })
            .collect()
    }

    /// `max_{n ≤ n_max} Σ_j |G(n, j)|`, summing `j` far enough past `n` for the tail to vanish.
    pub fn row_sum_bound(&self, n_max: usize) -> f64 {
        let reach = self.output_len(0);
        (1..=n_max)
            .map(|n| (1..=n + reach).map(|j| self.green(n, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn resolvent_apply(lambda_tilde: Complex64, y: &[Complex64]) -> Result<Vec<Complex64>, MatrixOpError> {
    Ok(Resolvent::new(lambda_tilde)?.apply(y))
}

/// `(B̃_N − λ̃I) z − y` on the section of size `z.len()`.
pub fn resolvent_residual(lambda_tilde: Complex64, y: &[Complex64], z: &[Complex64]) -> f64 {
    let n = z.len();
    let at = |j: usize| if j >= 1 && j <= n { z[j - 1] } else { Complex64::new(0.0, 0.0) };
    let mut worst: f64 = 0.0;
    for row in 1..=n {
        let k = chain_index(row);
        let mut acc = -lambda_tilde * at(row);
        for nb in [k - 1, k + 1] {
            acc += at(relabel(nb));
        }
        let target = if row <= y.len() { y[row - 1] } else { Complex64::new(0.0, 0.0) };
        worst = worst.max((acc - target).norm());
    }
    worst
}

/// Decaying ratio `r` of `x_{n−1} + x_{n+1} = μ x_n`, `|r| < 1`.
fn decay_ratio(mu: Complex64) -> Complex64 {
    let s = (mu * mu - 4.0).sqrt();
    let r = (mu + s) / 2.0;
    if r.norm() > 1.0 {
        1.0 / r
    } else {
        r
    }
}

/// Default backward-recurrence length for `λ̂`: at least 300 and long
/// enough that the decay ratio raised to it is below 1e−14.
pub fn default_tail(params: &CFParams, lambda_hat: Complex64) -> usize {
    let r = decay_ratio(lambda_hat / params.rho.limit).norm();
    if r >= 1.0 - UNIT_CIRCLE_TOL {
        return 300;
    }
    let need = (14.0 * std::f64::consts::LN_10 / -r.ln()).ceil() as usize;
    need.max(300)
}

/// `det M(λ̂)` for the eigenvalue problem `A z = i a λ̂ z` built from the two
/// decaying fundamental solutions (even and odd positions), obtained by
/// backward recurrence from `n_tail`.
pub fn det_m_eigentest(params: &CFParams, lambda_hat: Complex64, n_tail: usize) -> Result<Complex64, MatrixOpError> {
    let mu = lambda_hat / params.rho.limit;
    let r = decay_ratio(mu);
    if (r.norm() - 1.0).abs() < UNIT_CIRCLE_TOL {
        return Err(MatrixOpError::OnSpectralCurve(mu));
    }
    let decay = r.norm().powi(n_tail as i32);
    if decay >= 1e-14 {
        return Err(MatrixOpError::TailTooShort { n_tail, decay });
    }
    let rho = |n: i64| -> Result<f64, MatrixOpError> {
        params.rho.get(n).ok_or(MatrixOpError::DegenerateCoefficient { n })
    };
    let nonzero = |n: i64| -> Result<f64, MatrixOpError> {
        let v = rho(n)?;
        if v == 0.0 {
            Err(MatrixOpError::DegenerateCoefficient { n })
        } else {
            Ok(v)
        }
    };
    let t = n_tail as i64;

    // Even chain x_n = z_{2n} (chain index n ≥ 1):
    //   ρ_{n−1} x_{n−1} − λ̂ x_n + ρ_{n+1} x_{n+1} = 0, n ≥ 2.
    let (mut hi, mut lo) = (r, Complex64::new(1.0, 0.0));
    for n in (2..=t).rev() {
        let next = (lambda_hat * lo - rho(n + 1)? * hi) / nonzero(n - 1)?;
        hi = lo;
        lo = next;
        rescale(&mut lo, &mut hi)?;
    }
    let (x1, x2) = (lo, hi);
    // Odd chain y_m = z_{2m+1} (chain index −m, m ≥ 0):
    //   ρ_{−m+1} y_{m−1} − λ̂ y_m + ρ_{−m−1} y_{m+1} = 0, m ≥ 1.
    let (mut hi, mut lo) = (r, Complex64::new(1.0, 0.0));
    for m in (1..=t).rev() {
        let next = (lambda_hat * lo - rho(-m - 1)? * hi) / nonzero(-m + 1)?;
        hi = lo;
        lo = next;
        rescale(&mut lo, &mut hi)?;
    }
    let (y0, y1) = (lo, hi);

    let s1 = x1.norm().max(x2.norm());
    let s2 = y0.norm().max(y1.norm());
    let (z2, z4) = (x1 / s1, x2 / s1);
    let (z1, z3) = (y0 / s2, y1 / s2);
    // Rows at positions 1 (n = 0) and 2 (n = 1) of (A/(ia) − λ̂) z.
    let even = [rho(1)? * z2, -lambda_hat * z2 + rho(2)? * z4];
    let odd = [-lambda_hat * z1 + rho(-1)? * z3, rho(0)? * z1];
    Ok(even[0] * odd[1] - even[1] * odd[0])
}

fn rescale(lo: &mut Complex64, hi: &mut Complex64) -> Result<(), MatrixOpError> {
    let s = lo.norm().max(hi.norm());
    if !s.is_finite() {
        return Err(MatrixOpError::Overflow);
    }
    if s > 1e100 || (s < 1e-100 && s > 0.0) {
        *lo /= s;
        *hi /= s;
    }
    Ok(())
}

/// Newton refinement of a zero of `det M` in the `λ̂` variable.
pub fn det_m_root(params: &CFParams, guess: Complex64, tol: f64) -> Result<Complex64, MatrixOpError> {
    let f = |z: Complex64| det_m_eigentest(params, z, default_tail(params, z));
    let opts = NewtonOptions {
        tol,
        max_iter: 60,
        fd_step: 1e-7,
    };
    newton(&f, guess, &opts, |_| true).map_err(|e| match e {
        RootError::Eval(e) => e,
        other => MatrixOpError::NoRoot(other.to_string()),
    })
}
