//! Eigenvalues of a class chain as zeros of a two-sided continued fraction.
//!
//! With `z_n = ρ_n ω_n` and `ω_n ∝ e^{λt}`, the chain reduces to the
//! three-term recurrence `a_n z_n + z_{n−1} − z_{n+1} = 0` where
//! `a_n = λ/(a ρ_n) = λ̃/ρ_n`. The ratios `w_n = z_n / z_{n−1}` of the
//! solutions decaying toward `n → −∞` and `n → +∞` satisfy
//!
//! ```text
//! w_{n+1}^{(1)} = a_n + 1/w_n^{(1)}        w_n^{(2)} = 1/(−a_n + w_{n+1}^{(2)})
//! ```
//!
//! and `λ̃` is an eigenvalue iff `f(λ̃) = w_1^{(1)} − w_1^{(2)} = 0`.
//! Tails are started from the roots `w_±` of the limiting constant-coefficient
//! recurrence, which speeds convergence considerably.
//!
//! A zero `ρ_m` (a member on the circle `|k| = |p|`) decouples the chain at
//! `m`; each side is then treated as its own semi-infinite chain with
//! `z_m = 0` as the boundary condition.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{LatticeError, RhoSequence, WaveVector};
use crate::roots::{newton, NewtonOptions, RootError};

/// Starting tail depth; doubled until successive values agree.
pub const MIN_DEPTH: usize = 32;
/// Largest tail depth tried before giving up.
pub const MAX_DEPTH: usize = 1 << 23;
/// Half-width of the excluded tube around the imaginary band.
pub const BAND_TUBE: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContFracError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("class is parallel to p: a = 0")]
    Parallel,
    #[error("ρ_{n} = 0; a_{n} is undefined")]
    ZeroRho { n: i64 },
    #[error("λ̃ = {0} lies on the essential band")]
    EssentialBand(Complex64),
    #[error("continued fraction did not converge by depth {depth}: last iterates {last:?}, {prev:?}")]
    NonConvergence {
        depth: usize,
        last: Complex64,
        prev: Complex64,
    },
    #[error("continued fraction hit a pole")]
    Pole,
    #[error("chain is split by ρ_{0} = 0; no single eigenvector through n = 0")]
    SplitChain(i64),
    #[error("Newton iteration failed: {0}")]
    NoRoot(String),
}

/// Coefficient data for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CFParams {
    pub khat: WaveVector,
    pub p: WaveVector,
    /// `a = ½|Γ| (p1 k̂2 − p2 k̂1)`.
    pub a: f64,
    pub rho: RhoSequence,
}

impl CFParams {
    pub fn new(khat: WaveVector, p: WaveVector, gamma: Complex64) -> Result<Self, ContFracError> {
        if khat.is_zero() {
            return Err(LatticeError::ZeroWaveVector.into());
        }
        let rho = RhoSequence::new(khat, p)?;
        Ok(Self {
            khat,
            p,
            a: 0.5 * gamma.norm() * p.cross(khat) as f64,
            rho,
        })
    }

    /// `ρ_n`, failing at a hole.
    pub fn rho_at(&self, n: i64) -> Result<f64, ContFracError> {
        Ok(crate::lattice::rho(self.khat, self.p, n)?)
    }

    /// Index of the (at most one) zero of `ρ_n` for a non-parallel class.
    pub fn zero_rho_index(&self) -> Option<i64> {
        let pp = self.p.norm_sq();
        let c = (-(self.khat.dot(self.p) as f64) / pp as f64).floor() as i64;
        ((c - 2)..=(c + 3)).find(|&n| (self.khat + n * self.p).norm_sq() == pp)
    }

    fn lambda_tilde_coeff(&self, lt: Complex64, n: i64) -> Result<Complex64, ContFracError> {
        let r = self.rho_at(n)?;
        if r == 0.0 {
            return Err(ContFracError::ZeroRho { n });
        }
        Ok(lt / r)
    }
}

/// `a_n = λ/(a ρ_n)`.
pub fn a_n(params: &CFParams, lambda: Complex64, n: i64) -> Result<Complex64, ContFracError> {
    if params.a == 0.0 {
        return Err(ContFracError::Parallel);
    }
    params.lambda_tilde_coeff(lambda / params.a, n)
}

/// Roots of `w² − ã w − 1 = 0` with `|w₊| > 1 > |w₋|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymRoots {
    pub w_plus: Complex64,
    pub w_minus: Complex64,
}

/// `w_± = ½[ã ± δ√(ã² + 4)]`, `δ = sgn(Re ã)·sgn(Re √(ã²+4))`; on the
/// imaginary axis `ã = iξ`, `|ξ| > 2`, `w_± = (i/2)[ξ ± sgn(ξ)√(ξ² − 4)]`.
pub fn asym_roots(a_tilde: Complex64) -> Result<AsymRoots, ContFracError> {
    if a_tilde.re == 0.0 {
        let xi = a_tilde.im;
        if xi.abs() <= 2.0 {
            return Err(ContFracError::EssentialBand(a_tilde));
        }
        let s = (xi * xi - 4.0).sqrt().copysign(xi);
        return Ok(AsymRoots {
            w_plus: Complex64::new(0.0, 0.5 * (xi + s)),
            w_minus: Complex64::new(0.0, 0.5 * (xi - s)),
        });
    }
    let sq = (a_tilde * a_tilde + 4.0).sqrt();
    let delta = a_tilde.re.signum() * if sq.re == 0.0 { 1.0 } else { sq.re.signum() };
    let w_plus = 0.5 * (a_tilde + delta * sq);
    // −1/w₊ is the other root and avoids cancellation in ã − δ√(·).
    let w_minus = -1.0 / w_plus;
    Ok(AsymRoots { w_plus, w_minus })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `w_{end+1}^{(1)} = a_end + 1/(a_{end−1} + …)`.
    Down,
    /// `w_start^{(2)} = 1/(−a_start + 1/(−a_{start+1} + …))`.
    Up,
}

/// Far end of a tail: an infinite tail seeded from `w_±`, or a boundary
/// `z_m = 0` reached at index `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Far {
    Infinite(AsymRoots),
    Wall(i64),
}

fn eval_tail<F>(coef: &F, dir: Direction, start: i64, far: Far, depth: usize) -> Result<Complex64, ContFracError>
where
    F: Fn(i64) -> Result<Complex64, ContFracError>,
{
    let zero = Complex64::new(0.0, 0.0);
    match dir {
        Direction::Down => {
            // Returns w_{start+1}; runs n from the far end up to `start`.
            let (first, mut inv_w) = match far {
                Far::Infinite(r) => (start - depth as i64, 1.0 / r.w_plus),
                Far::Wall(m) => (m + 1, zero),
            };
            let mut w = zero;
            for n in first..=start {
                w = coef(n)? + inv_w;
                if w == zero {
                    return Err(ContFracError::Pole);
                }
                inv_w = 1.0 / w;
            }
            Ok(w)
        }
        Direction::Up => {
            // Returns w_start; runs n from the far end down to `start`.
            let (last, mut w) = match far {
                Far::Infinite(r) => (start + depth as i64, r.w_minus),
                Far::Wall(m) => (m - 1, zero),
            };
            for n in (start..=last).rev() {
                let d = w - coef(n)?;
                if d == zero {
                    return Err(ContFracError::Pole);
                }
                w = 1.0 / d;
            }
            Ok(w)
        }
    }
}

fn adaptive_tail<F>(coef: &F, dir: Direction, start: i64, far: Far, tol: f64) -> Result<Complex64, ContFracError>
where
    F: Fn(i64) -> Result<Complex64, ContFracError>,
{
    if let Far::Wall(_) = far {
        return eval_tail(coef, dir, start, far, 0);
    }
    let mut depth = MIN_DEPTH;
    let mut prev = eval_tail(coef, dir, start, far, depth)?;
    loop {
        depth *= 2;
        let cur = eval_tail(coef, dir, start, far, depth)?;
        if (cur - prev).norm() < tol * cur.norm().max(1.0) {
            return Ok(cur);
        }
        if depth >= MAX_DEPTH {
            return Err(ContFracError::NonConvergence {
                depth,
                last: cur,
                prev,
            });
        }
        prev = cur;
    }
}

/// Tail of an arbitrary coefficient sequence with limit `ã`:
/// `Down` gives `w_1^{(1)}` (including `a_0`), `Up` gives `w_1^{(2)}`.
pub fn cf_tail_with<F>(coef: F, a_tilde: Complex64, dir: Direction, tol: f64) -> Result<Complex64, ContFracError>
where
    F: Fn(i64) -> Result<Complex64, ContFracError>,
{
    let roots = asym_roots(a_tilde)?;
    let start = match dir {
        Direction::Down => 0,
        Direction::Up => 1,
    };
    adaptive_tail(&coef, dir, start, Far::Infinite(roots), tol)
}

/// `w_1^{(1)}` or `w_1^{(2)}` for the class chain at `λ`.
pub fn cf_tail(params: &CFParams, lambda: Complex64, dir: Direction, tol: f64) -> Result<Complex64, ContFracError> {
    if params.a == 0.0 {
        return Err(ContFracError::Parallel);
    }
    let lt = lambda / params.a;
    check_band(params, lt)?;
    cf_tail_with(|n| params.lambda_tilde_coeff(lt, n), limit_coeff(params, lt), dir, tol)
}

fn limit_coeff(params: &CFParams, lt: Complex64) -> Complex64 {
    lt / params.rho.limit
}

/// Errors if `λ̃` lies on the essential band `Re λ̃ = 0`, `|λ̃| ≤ 2/|p|²`.
pub fn check_band(params: &CFParams, lt: Complex64) -> Result<(), ContFracError> {
    let at = limit_coeff(params, lt);
    if at.re == 0.0 && at.im.abs() <= 2.0 {
        return Err(ContFracError::EssentialBand(lt));
    }
    Ok(())
}

/// One decoupled piece of the chain, `[lo, hi]` with `None` for infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

impl Segment {
    fn matching_index(&self) -> i64 {
        match (self.lo, self.hi) {
            (None, None) => 0,
            (Some(lo), _) => lo,
            (None, Some(hi)) => hi,
        }
    }
}

/// Segments of the chain between zeros of `ρ_n`.
pub fn segments(params: &CFParams) -> Vec<Segment> {
    match params.zero_rho_index() {
        None => vec![Segment { lo: None, hi: None }],
        Some(m) => vec![
            Segment { lo: None, hi: Some(m - 1) },
            Segment { lo: Some(m + 1), hi: None },
        ],
    }
}

/// `f = w_{c+1}^{down} − w_{c+1}^{up}` on one segment, `c` its matching index.
pub fn f_segment(params: &CFParams, seg: Segment, lt: Complex64, tol: f64) -> Result<Complex64, ContFracError> {
    if params.a == 0.0 {
        return Err(ContFracError::Parallel);
    }
    check_band(params, lt)?;
    let roots = asym_roots(limit_coeff(params, lt))?;
    let coef = |n: i64| params.lambda_tilde_coeff(lt, n);
    let c = seg.matching_index();
    let down_far = seg.lo.map_or(Far::Infinite(roots), |lo| Far::Wall(lo - 1));
    let up_far = seg.hi.map_or(Far::Infinite(roots), |hi| Far::Wall(hi + 1));
    let down = adaptive_tail(&coef, Direction::Down, c, down_far, tol)?;
    let up = adaptive_tail(&coef, Direction::Up, c + 1, up_far, tol)?;
    Ok(down - up)
}

/// `f(λ̃)` for the full chain; errors if the chain is split by a zero `ρ`.
pub fn f_eigen(params: &CFParams, lambda_tilde: Complex64, tol: f64) -> Result<Complex64, ContFracError> {
    if let Some(m) = params.zero_rho_index() {
        return Err(ContFracError::ZeroRho { n: m });
    }
    f_segment(params, Segment { lo: None, hi: None }, lambda_tilde, tol)
}

/// `(f₋, f₊)` on the two halves of a chain split at a zero `ρ_m`.
pub fn f_eigen_halves(params: &CFParams, lambda_tilde: Complex64, tol: f64) -> Result<(Complex64, Complex64), ContFracError> {
    let segs = segments(params);
    if segs.len() != 2 {
        return Err(ContFracError::SplitChain(0));
    }
    Ok((
        f_segment(params, segs[0], lambda_tilde, tol)?,
        f_segment(params, segs[1], lambda_tilde, tol)?,
    ))
}

/// Closed rectangle `[re_min, re_max] × [im_min, im_max]` in the `λ̃` plane.
/// The default is the closed quadrant up to 4, so real pairs and imaginary
/// pairs off the band (representatives on the axes) are included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            re_min: 0.0,
            re_max: 4.0,
            im_min: 0.0,
            im_max: 4.0,
        }
    }
}

impl SearchBox {
    fn contains_loose(&self, z: Complex64) -> bool {
        let wr = self.re_max - self.re_min;
        let wi = self.im_max - self.im_min;
        z.re >= self.re_min - 0.5 * wr
            && z.re <= self.re_max + 0.5 * wr
            && z.im >= self.im_min - 0.5 * wi
            && z.im <= self.im_max + 0.5 * wi
    }
}

/// `{λ̃, −λ̃, λ̃*, −λ̃*}` with the first-quadrant representative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenQuadruple {
    pub representative: Complex64,
    pub members: Vec<Complex64>,
    /// `|f|` at the representative.
    pub residual: f64,
    pub segment: Segment,
}

impl EigenQuadruple {
    pub fn from_root(z: Complex64, residual: f64, segment: Segment) -> Self {
        let rep = Complex64::new(z.re.abs(), z.im.abs());
        let mut members: Vec<Complex64> = Vec::with_capacity(4);
        for m in [rep, -rep, rep.conj(), -rep.conj()] {
            if !members.iter().any(|x| (x - m).norm() <= 1e-14 * (1.0 + m.norm())) {
                members.push(m);
            }
        }
        Self {
            representative: rep,
            members,
            residual,
            segment,
        }
    }
}

/// Options for [`find_eigenvalues`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FindOptions {
    pub search_box: SearchBox,
    /// Seeds per side of the grid.
    pub grid: usize,
    /// Required `|f|` at a root; also the Newton step tolerance.
    pub tol: f64,
    /// Relative agreement demanded of successive tail depths.
    pub cf_tol: f64,
}

impl Default for FindOptions {
    fn default() -> Self {
        Self {
            search_box: SearchBox::default(),
            grid: 16,
            tol: 1e-11,
            cf_tol: 1e-14,
        }
    }
}

/// Point-spectrum quadruples of the class with a representative inside the
/// search box, by Newton's method from a grid of seeds on each segment.
pub fn find_eigenvalues(params: &CFParams, opts: &FindOptions) -> Result<Vec<EigenQuadruple>, ContFracError> {
    if params.a == 0.0 {
        return Err(ContFracError::Parallel);
    }
    let b = opts.search_box;
    let g = opts.grid.max(1);
    let step = |lo: f64, hi: f64, i: usize| {
        if g == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (g - 1) as f64
        }
    };
    let seeds: Vec<Complex64> = (0..g)
        .flat_map(|i| (0..g).map(move |j| (i, j)))
        .map(|(i, j)| Complex64::new(step(b.re_min, b.re_max, i), step(b.im_min, b.im_max, j)))
        .collect();
    let newton_opts = NewtonOptions {
        tol: opts.tol,
        max_iter: 80,
        fd_step: 1e-7,
    };

    let mut found: Vec<(Complex64, f64, Segment)> = Vec::new();
    for seg in segments(params) {
        let f = |z: Complex64| f_segment(params, seg, z, opts.cf_tol);
        let roots: Vec<(Complex64, f64)> = seeds
            .par_iter()
            .filter_map(|&z0| {
                let r = newton(&f, z0, &newton_opts, |z| b.contains_loose(z) && !near_band(params, z)).ok()?;
                let fz = f(r).ok()?.norm();
                (fz < opts.tol).then_some((r, fz))
            })
            .collect();
        for (r, fz) in roots {
            let rep = snap_axes(Complex64::new(r.re.abs(), r.im.abs()));
            if rep.re < b.re_min || rep.re > b.re_max || rep.im < b.im_min || rep.im > b.im_max {
                continue;
            }
            let dup = found
                .iter()
                .any(|(x, _, s)| *s == seg && (x - rep).norm() < 10.0 * opts.tol.max(1e-12) * (1.0 + rep.norm()));
            if !dup {
                found.push((rep, fz, seg));
            }
        }
    }
    let mut out: Vec<EigenQuadruple> = found
        .into_iter()
        .map(|(z, r, s)| EigenQuadruple::from_root(z, r, s))
        .collect();
    out.sort_by(|x, y| {
        x.representative
            .norm()
            .total_cmp(&y.representative.norm())
            .then(x.representative.re.total_cmp(&y.representative.re))
    });
    Ok(out)
}

/// Zeroes a part that is rounding noise relative to the other.
fn snap_axes(z: Complex64) -> Complex64 {
    let eps = 1e-13 * z.norm();
    Complex64::new(if z.re < eps { 0.0 } else { z.re }, if z.im < eps { 0.0 } else { z.im })
}

fn near_band(params: &CFParams, lt: Complex64) -> bool {
    let half = 2.0 / params.p.norm_sq() as f64;
    lt.re.abs() < 0.1 * BAND_TUBE && lt.im.abs() <= half
}

/// Newton refinement of a single root of `f` on the full chain.
pub fn refine_root(params: &CFParams, guess: Complex64, tol: f64, cf_tol: f64) -> Result<Complex64, ContFracError> {
    let f = |z: Complex64| f_eigen(params, z, cf_tol);
    let opts = NewtonOptions {
        tol,
        max_iter: 80,
        fd_step: 1e-7,
    };
    newton(&f, guess, &opts, |z| !near_band(params, z)).map_err(|e| match e {
        RootError::Eval(e) => e,
        other => ContFracError::NoRoot(other.to_string()),
    })
}

/// Eigenvector `z_n` (normalized `z_0 = 1`) of the full chain on `[n_min, n_max]`,
/// built from the decaying ratios on each side.
pub fn eigenvector(
    params: &CFParams,
    lambda_tilde: Complex64,
    n_min: i64,
    n_max: i64,
    cf_tol: f64,
) -> Result<Vec<Complex64>, ContFracError> {
    if let Some(m) = params.zero_rho_index() {
        return Err(ContFracError::SplitChain(m));
    }
    check_band(params, lambda_tilde)?;
    let roots = asym_roots(limit_coeff(params, lambda_tilde))?;
    let coef = |n: i64| params.lambda_tilde_coeff(lambda_tilde, n);
    let len = (n_max - n_min + 1) as usize;
    let mut z = vec![Complex64::new(0.0, 0.0); len];
    let at = |n: i64| (n - n_min) as usize;
    z[at(0)] = Complex64::new(1.0, 0.0);
    // z_{n−1} = z_n / w_n^{(1)} for n ≤ 0.
    let mut zn = Complex64::new(1.0, 0.0);
    for n in ((n_min + 1)..=0).rev() {
        let w = adaptive_tail(&coef, Direction::Down, n - 1, Far::Infinite(roots), cf_tol)?;
        zn /= w;
        z[at(n - 1)] = zn;
    }
    // z_n = w_n^{(2)} z_{n−1} for n ≥ 1.
    let mut zn = Complex64::new(1.0, 0.0);
    for n in 1..=n_max {
        let w = adaptive_tail(&coef, Direction::Up, n, Far::Infinite(roots), cf_tol)?;
        zn *= w;
        z[at(n)] = zn;
    }
    Ok(z)
}

/// Max over interior `n` of `|a_n z_n + z_{n−1} − z_{n+1}| / max|z|`.
pub fn recurrence_residual(params: &CFParams, lambda_tilde: Complex64, n_min: i64, z: &[Complex64]) -> Result<f64, ContFracError> {
    let scale = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for i in 1..z.len() - 1 {
        let n = n_min + i as i64;
        let a = params.lambda_tilde_coeff(lambda_tilde, n)?;
        worst = worst.max((a * z[i] + z[i - 1] - z[i + 1]).norm());
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Converged root for k̂ = (1,0), p = (1,1); 30-digit reference.
    const GOLDEN: Complex64 = Complex64::new(0.248_223_018_041_106_71, 0.351_720_764_585_447_5);

    fn wv(a: i64, b: i64) -> WaveVector {
        WaveVector::new(a, b)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn golden() -> CFParams {
        CFParams::new(wv(1, 0), wv(1, 1), c(1.0, 0.0)).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let p = golden();
        assert_eq!(p.a, -0.5);
        let lam = p.a * c(1.0, 0.0);
        assert!((a_n(&p, lam, 0).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        assert!((a_n(&p, lam, 1).unwrap() - c(-1.0 / 0.3, 0.0)).norm() < 1e-14);
        let half = CFParams::new(wv(-1, 1), wv(1, 1), c(1.0, 0.0)).unwrap();
        assert_eq!(a_n(&half, c(1.0, 0.0), 0), Err(ContFracError::ZeroRho { n: 0 }));
        let par = CFParams::new(wv(1, 1), wv(1, 1), c(1.0, 0.0)).unwrap();
        assert_eq!(a_n(&par, c(1.0, 0.0), 1), Err(ContFracError::Parallel));
    }

    #[test]
    fn asym_root_examples() {
        let r = asym_roots(c(3.0, 0.0)).unwrap();
        assert!((r.w_plus - c((3.0 + 13f64.sqrt()) / 2.0, 0.0)).norm() < 1e-14);
        assert!((r.w_minus - c((3.0 - 13f64.sqrt()) / 2.0, 0.0)).norm() < 1e-14);
        let r = asym_roots(c(0.0, 3.0)).unwrap();
        assert!((r.w_plus - c(0.0, (3.0 + 5f64.sqrt()) / 2.0)).norm() < 1e-14);
        assert!((r.w_minus - c(0.0, (3.0 - 5f64.sqrt()) / 2.0)).norm() < 1e-14);
        assert!(matches!(asym_roots(c(0.0, 1.0)), Err(ContFracError::EssentialBand(_))));
        assert!(matches!(asym_roots(c(0.0, -2.0)), Err(ContFracError::EssentialBand(_))));
    }

    #[test]
    fn constant_chain_tails() {
        let at = c(3.0, 0.0);
        let r = asym_roots(at).unwrap();
        let down = cf_tail_with(|_| Ok(at), at, Direction::Down, 1e-15).unwrap();
        let up = cf_tail_with(|_| Ok(at), at, Direction::Up, 1e-15).unwrap();
        assert!((down - r.w_plus).norm() < 1e-14);
        assert!((up - r.w_minus).norm() < 1e-14);
        // K(1/ã) = 1/(ã + 1/(ã + …)) = 1/w₊.
        assert!(((1.0 / down) - c((13f64.sqrt() - 3.0) / 2.0, 0.0)).norm() < 1e-14);
    }

    /// Tails from plain truncation (no `w_±` seed) at large depth.
    fn naive_f(p: &CFParams, lt: Complex64, depth: i64) -> Complex64 {
        let a = |n: i64| lt / p.rho.get(n).unwrap();
        let mut down = a(-depth);
        for n in (-depth + 1)..=0 {
            down = a(n) + 1.0 / down;
        }
        let mut up = c(0.0, 0.0);
        for n in (1..=depth).rev() {
            up = 1.0 / (up - a(n));
        }
        down - up
    }

    #[test]
    fn seeded_tail_matches_naive_truncation() {
        let p = golden();
        for lt in [c(0.3, 0.2), c(1.0, -0.7), c(-0.4, 2.0)] {
            let seeded = f_eigen(&p, lt, 1e-15).unwrap();
            let naive = naive_f(&p, lt, 20_000);
            assert!((seeded - naive).norm() < 1e-9, "{lt}: {seeded} vs {naive}");
        }
    }

    #[test]
    fn golden_root() {
        let p = golden();
        let r = refine_root(&p, c(0.25, 0.35), 1e-13, 1e-15).unwrap();
        assert!((r - GOLDEN).norm() < 1e-12, "{r}");
        assert!(f_eigen(&p, r, 1e-15).unwrap().norm() < 1e-12);
    }

    #[test]
    fn golden_search_finds_one_quadruple() {
        let p = golden();
        let opts = FindOptions {
            search_box: SearchBox {
                re_min: 0.05,
                re_max: 1.0,
                im_min: 0.05,
                im_max: 1.0,
            },
            grid: 10,
            ..FindOptions::default()
        };
        let q = find_eigenvalues(&p, &opts).unwrap();
        assert_eq!(q.len(), 1, "{q:?}");
        assert!((q[0].representative - GOLDEN).norm() < 1e-11);
        assert_eq!(q[0].members.len(), 4);
        for m in &q[0].members {
            assert!(f_eigen(&p, *m, 1e-15).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn real_pair_on_the_axis() {
        // k̂ = (−1,1), p = (2,1): a real pair on the lower half of a chain
        // split at n = 1.
        let p = CFParams::new(wv(-1, 1), wv(2, 1), c(1.0, 0.0)).unwrap();
        let q = find_eigenvalues(&p, &FindOptions::default()).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].representative.im, 0.0);
        assert_eq!(q[0].members.len(), 2);
        assert!(f_segment(&p, q[0].segment, q[0].representative, 1e-14).unwrap().norm() < 1e-11);
    }

    #[test]
    fn stable_class_has_no_roots() {
        let p = CFParams::new(wv(3, 0), wv(1, 1), c(1.0, 0.0)).unwrap();
        let q = find_eigenvalues(&p, &FindOptions { grid: 8, ..FindOptions::default() }).unwrap();
        assert!(q.is_empty(), "{q:?}");
    }

    #[test]
    fn eigenvector_reconstruction() {
        let p = golden();
        let r = refine_root(&p, GOLDEN, 1e-13, 1e-15).unwrap();
        let z = eigenvector(&p, r, -60, 60, 1e-15).unwrap();
        assert!(recurrence_residual(&p, r, -60, &z).unwrap() < 1e-10);
        assert!(z[0].norm() < 1e-5 && z[120].norm() < 1e-5);
    }

    #[test]
    fn half_class_splits() {
        let p = CFParams::new(wv(-1, 1), wv(1, 1), c(1.0, 0.0)).unwrap();
        assert_eq!(p.zero_rho_index(), Some(0));
        assert_eq!(segments(&p).len(), 2);
        assert!(f_eigen(&p, c(0.3, 0.3), 1e-14).is_err());
        let (lo, hi) = f_eigen_halves(&p, c(0.3, 0.3), 1e-14).unwrap();
        // Upper half: f₊ = a₁ − w₂^{(2)}; compare to a plain evaluation.
        let a = |n: i64| c(0.3, 0.3) / p.rho.get(n).unwrap();
        let mut up = c(0.0, 0.0);
        for n in (2..=20_000).rev() {
            up = 1.0 / (up - a(n));
        }
        assert!((hi - (a(1) - up)).norm() < 1e-9);
        let mut down = a(-20_000);
        for n in (-19_999)..=-2 {
            down = a(n) + 1.0 / down;
        }
        assert!((lo - (a(-1) + 1.0 / down)).norm() < 1e-9);
    }

    #[test]
    fn band_rejected() {
        let p = golden();
        assert!(matches!(f_eigen(&p, c(0.0, 0.5), 1e-14), Err(ContFracError::EssentialBand(_))));
        // |λ̃| > 2/|p|² on the axis is fine.
        assert!(f_eigen(&p, c(0.0, 1.5), 1e-14).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn asym_roots_split_by_unit_circle(re in -5.0..5.0f64, im in -5.0..5.0f64) {
            prop_assume!(re.abs() > 1e-6);
            let at = c(re, im);
            let r = asym_roots(at).unwrap();
            prop_assert!(r.w_plus.norm() > 1.0 && r.w_minus.norm() < 1.0);
            prop_assert!((r.w_plus * r.w_plus - at * r.w_plus - 1.0).norm() < 1e-10 * (1.0 + r.w_plus.norm_sqr()));
            prop_assert!((r.w_plus * r.w_minus + 1.0).norm() < 1e-12);
        }

        #[test]
        fn f_symmetries(re in 0.05..2.0f64, im in 0.05..2.0f64) {
            // f(−λ̃) = −f(λ̃) and f(λ̃*) = f(λ̃)* term by term.
            let p = golden();
            let z = c(re, im);
            let f = f_eigen(&p, z, 1e-15).unwrap();
            prop_assert!((f_eigen(&p, -z, 1e-15).unwrap() + f).norm() < 1e-10 * (1.0 + f.norm()));
            prop_assert!((f_eigen(&p, z.conj(), 1e-15).unwrap() - f.conj()).norm() < 1e-10 * (1.0 + f.norm()));
        }

        #[test]
        fn independent_of_gamma_modulus(g in 0.1..5.0f64, re in 0.05..1.0f64, im in 0.05..1.0f64) {
            let p1 = golden();
            let p2 = CFParams::new(wv(1, 0), wv(1, 1), c(g, 0.0)).unwrap();
            let lt = c(re, im);
            let a1 = a_n(&p1, p1.a * lt, 3).unwrap();
            let a2 = a_n(&p2, p2.a * lt, 3).unwrap();
            prop_assert!((a1 - a2).norm() < 1e-13 * (1.0 + a1.norm()));
        }
    }
}
