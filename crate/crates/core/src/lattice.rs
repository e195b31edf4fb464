//! Integer wave vectors, triad coefficients and the class decomposition
//! of the lattice relative to a fixed shear wave vector `p`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("zero wave vector is not allowed here")]
    ZeroWaveVector,
    #[error("member k̂ + {n}·p of the class is the zero vector")]
    Hole { n: i64 },
    #[error("empty index window [{n_min}, {n_max}]")]
    EmptyWindow { n_min: i64, n_max: i64 },
}

/// Integer pair (k1, k2) labelling a Fourier mode on the 2-torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveVector {
    pub k1: i64,
    pub k2: i64,
}

impl WaveVector {
    pub const fn new(k1: i64, k2: i64) -> Self {
        Self { k1, k2 }
    }

    pub fn norm_sq(self) -> i64 {
        self.k1 * self.k1 + self.k2 * self.k2
    }

    pub fn is_zero(self) -> bool {
        self.k1 == 0 && self.k2 == 0
    }

    /// `self.k1 * q.k2 - self.k2 * q.k1`.
    pub fn cross(self, q: WaveVector) -> i64 {
        self.k1 * q.k2 - self.k2 * q.k1
    }

    pub fn dot(self, q: WaveVector) -> i64 {
        self.k1 * q.k1 + self.k2 * q.k2
    }

    pub fn is_parallel(self, q: WaveVector) -> bool {
        self.cross(q) == 0
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k1, self.k2)
    }
}

impl Add for WaveVector {
    type Output = WaveVector;
    fn add(self, o: WaveVector) -> WaveVector {
        WaveVector::new(self.k1 + o.k1, self.k2 + o.k2)
    }
}

impl Sub for WaveVector {
    type Output = WaveVector;
    fn sub(self, o: WaveVector) -> WaveVector {
        WaveVector::new(self.k1 - o.k1, self.k2 - o.k2)
    }
}

impl Neg for WaveVector {
    type Output = WaveVector;
    fn neg(self) -> WaveVector {
        WaveVector::new(-self.k1, -self.k2)
    }
}

impl Mul<WaveVector> for i64 {
    type Output = WaveVector;
    fn mul(self, k: WaveVector) -> WaveVector {
        WaveVector::new(self * k.k1, self * k.k2)
    }
}

/// Symmetrized triad interaction coefficient
/// `A(p,q) = ½(|q|⁻² − |p|⁻²)(p1 q2 − p2 q1)`.
pub fn triad_coeff(p: WaveVector, q: WaveVector) -> Result<f64, LatticeError> {
    if p.is_zero() || q.is_zero() {
        return Err(LatticeError::ZeroWaveVector);
    }
    let inv_q = 1.0 / q.norm_sq() as f64;
    let inv_p = 1.0 / p.norm_sq() as f64;
    Ok(0.5 * (inv_q - inv_p) * p.cross(q) as f64)
}

/// `ρ_n = |k̂ + n p|⁻² − |p|⁻²`.
pub fn rho(khat: WaveVector, p: WaveVector, n: i64) -> Result<f64, LatticeError> {
    if p.is_zero() {
        return Err(LatticeError::ZeroWaveVector);
    }
    let k = khat + n * p;
    if k.is_zero() {
        return Err(LatticeError::Hole { n });
    }
    Ok(1.0 / k.norm_sq() as f64 - 1.0 / p.norm_sq() as f64)
}

/// Canonical label of the class `{k̂ + n p : n ∈ ℤ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassLabel {
    pub khat: WaveVector,
    pub p: WaveVector,
    pub parallel: bool,
    /// Index `n` with `khat + n p = 0`, if the class passes through the origin.
    pub hole: Option<i64>,
}

impl ClassLabel {
    /// The continuous limit `ρ = −|p|⁻²`.
    pub fn rho_limit(&self) -> f64 {
        -1.0 / self.p.norm_sq() as f64
    }

    pub fn member(&self, n: i64) -> WaveVector {
        self.khat + n * self.p
    }

    /// `|k̂|² = |p|²`.
    pub fn is_half_class(&self) -> bool {
        self.khat.norm_sq() == self.p.norm_sq()
    }

    /// Whether some member lies strictly inside the disk of radius `|p|`.
    pub fn meets_open_disk(&self) -> bool {
        min_norm_sq(self.khat, self.p, None, None) < self.p.norm_sq()
    }

    /// Whether the whole class stays outside the closed disk of radius `|p|`.
    pub fn avoids_disk(&self) -> bool {
        min_norm_sq(self.khat, self.p, None, None) > self.p.norm_sq()
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + n{}", self.khat, self.p)
    }
}

/// `ρ_n` for one class, evaluated on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoSequence {
    pub khat: WaveVector,
    pub p: WaveVector,
    pub limit: f64,
}

impl RhoSequence {
    pub fn new(khat: WaveVector, p: WaveVector) -> Result<Self, LatticeError> {
        if p.is_zero() {
            return Err(LatticeError::ZeroWaveVector);
        }
        Ok(Self {
            khat,
            p,
            limit: -1.0 / p.norm_sq() as f64,
        })
    }

    /// `None` at a hole.
    pub fn get(&self, n: i64) -> Option<f64> {
        rho(self.khat, self.p, n).ok()
    }

    pub fn window(&self, n_min: i64, n_max: i64) -> BTreeMap<i64, f64> {
        (n_min..=n_max)
            .filter_map(|n| self.get(n).map(|r| (n, r)))
            .collect()
    }
}

/// Smallest nonzero `|k̂ + n p|²` over `n` within the optional bounds.
pub(crate) fn min_norm_sq(
    khat: WaveVector,
    p: WaveVector,
    n_lo: Option<i64>,
    n_hi: Option<i64>,
) -> i64 {
    let pp = p.norm_sq() as f64;
    let c = (-(khat.dot(p) as f64) / pp).floor() as i64;
    let lo = n_lo.unwrap_or(i64::MIN);
    let hi = n_hi.unwrap_or(i64::MAX);
    let mut candidates: Vec<i64> = ((c - 2)..=(c + 3)).collect();
    for b in [n_lo, n_hi].into_iter().flatten() {
        candidates.extend([b - 1, b, b + 1]);
    }
    candidates
        .into_iter()
        .filter(|n| (lo..=hi).contains(n))
        .map(|n| khat + n * p)
        .filter(|k| !k.is_zero())
        .map(WaveVector::norm_sq)
        .min()
        .unwrap_or(i64::MAX)
}

/// Members `(n, k̂ + n p)` for `n` in `[n_min, n_max]` with the hole removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWindow {
    pub members: Vec<(i64, WaveVector)>,
    pub excluded: Option<i64>,
}

pub fn class_members(
    khat: WaveVector,
    p: WaveVector,
    n_min: i64,
    n_max: i64,
) -> Result<ClassWindow, LatticeError> {
    if p.is_zero() {
        return Err(LatticeError::ZeroWaveVector);
    }
    if n_min > n_max {
        return Err(LatticeError::EmptyWindow { n_min, n_max });
    }
    let mut members = Vec::with_capacity((n_max - n_min + 1) as usize);
    let mut excluded = None;
    for n in n_min..=n_max {
        let k = khat + n * p;
        if k.is_zero() {
            excluded = Some(n);
        } else {
            members.push((n, k));
        }
    }
    Ok(ClassWindow { members, excluded })
}

/// Representative of minimal `|k|²` (zero excluded); ties go to the
/// lexicographically greatest `(k1, k2)`.
pub fn canonical_label(k: WaveVector, p: WaveVector) -> Result<ClassLabel, LatticeError> {
    if p.is_zero() {
        return Err(LatticeError::ZeroWaveVector);
    }
    let pp = p.norm_sq() as f64;
    let c = (-(k.dot(p) as f64) / pp).floor() as i64;
    let mut best: Option<WaveVector> = None;
    for n in (c - 2)..=(c + 3) {
        let m = k + n * p;
        if m.is_zero() {
            continue;
        }
        best = Some(match best {
            None => m,
            Some(b) if m.norm_sq() < b.norm_sq() => m,
            Some(b) if m.norm_sq() == b.norm_sq() && m > b => m,
            Some(b) => b,
        });
    }
    let khat = best.expect("a line of lattice points has a nonzero member near its foot");
    let parallel = khat.is_parallel(p);
    let hole = if parallel {
        // khat = t p with t rational; a hole exists iff t is an integer.
        let (num, den) = if p.k1 != 0 { (khat.k1, p.k1) } else { (khat.k2, p.k2) };
        (num % den == 0).then(|| -num / den)
    } else {
        None
    };
    Ok(ClassLabel {
        khat,
        p,
        parallel,
        hole,
    })
}

/// Non-parallel classes that meet the closed disk `|k| ≤ |p|`.
pub fn classes_meeting_disk(p: WaveVector) -> Result<Vec<ClassLabel>, LatticeError> {
    if p.is_zero() {
        return Err(LatticeError::ZeroWaveVector);
    }
    let r2 = p.norm_sq();
    let r = (r2 as f64).sqrt().ceil() as i64;
    let mut out = BTreeSet::new();
    for k1 in -r..=r {
        for k2 in -r..=r {
            let k = WaveVector::new(k1, k2);
            if k.is_zero() || k.norm_sq() > r2 || k.is_parallel(p) {
                continue;
            }
            out.insert(canonical_label(k, p)?);
        }
    }
    Ok(out.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-15;

    fn wv(a: i64, b: i64) -> WaveVector {
        WaveVector::new(a, b)
    }

    #[test]
    fn triad_examples() {
        assert!((triad_coeff(wv(1, 1), wv(1, 0)).unwrap() + 0.25).abs() < EPS);
        assert_eq!(triad_coeff(wv(1, 0), wv(0, 1)).unwrap(), 0.0);
        assert_eq!(triad_coeff(wv(2, 1), wv(4, 2)).unwrap(), 0.0);
        assert_eq!(triad_coeff(wv(0, 0), wv(1, 0)), Err(LatticeError::ZeroWaveVector));
    }

    #[test]
    fn rho_golden_class() {
        let (k, p) = (wv(1, 0), wv(1, 1));
        assert!((rho(k, p, 0).unwrap() - 0.5).abs() < EPS);
        assert!((rho(k, p, 1).unwrap() + 0.3).abs() < EPS);
        assert!((rho(k, p, -1).unwrap() - 0.5).abs() < EPS);
        assert!((rho(k, p, 100).unwrap() + 0.5).abs() < 1e-4);
    }

    #[test]
    fn canonical_examples() {
        let l = canonical_label(wv(2, 1), wv(1, 1)).unwrap();
        assert_eq!(l.khat, wv(1, 0));
        assert!(!l.parallel);
        assert_eq!(canonical_label(wv(-3, -4), wv(1, 1)).unwrap().khat, wv(1, 0));
        let l = canonical_label(wv(3, 3), wv(1, 1)).unwrap();
        assert!(l.parallel);
        assert_eq!(l.khat, wv(1, 1));
        assert_eq!(l.hole, Some(-1));
        let l = canonical_label(wv(1, 1), wv(2, 2)).unwrap();
        assert!(l.parallel);
        assert_eq!(l.hole, None);
    }

    #[test]
    fn members_report_hole() {
        let w = class_members(wv(1, 1), wv(1, 1), -2, 1).unwrap();
        assert_eq!(w.excluded, Some(-1));
        assert_eq!(w.members.len(), 3);
        assert!(class_members(wv(1, 0), wv(1, 1), 2, 1).is_err());
    }

    fn brute_force_classes(p: WaveVector) -> BTreeSet<(i64, i64)> {
        // Group disk points by the invariant (cross with p, residue along p).
        let r2 = p.norm_sq();
        let r = (r2 as f64).sqrt().ceil() as i64;
        let mut reps: Vec<Vec<WaveVector>> = Vec::new();
        for k1 in -r..=r {
            for k2 in -r..=r {
                let k = wv(k1, k2);
                if k.is_zero() || k.norm_sq() > r2 || k.is_parallel(p) {
                    continue;
                }
                let same = |a: WaveVector, b: WaveVector| {
                    let d = a - b;
                    d.is_parallel(p) && {
                        let (num, den) = if p.k1 != 0 { (d.k1, p.k1) } else { (d.k2, p.k2) };
                        num % den == 0 && num / den * p.k1 == d.k1 && num / den * p.k2 == d.k2
                    }
                };
                match reps.iter_mut().find(|g| same(g[0], k)) {
                    Some(g) => g.push(k),
                    None => reps.push(vec![k]),
                }
            }
        }
        // Walk each class far enough to find its minimal-norm member.
        reps.into_iter()
            .map(|g| {
                let k0 = g[0];
                let mut best = k0;
                for n in -200..=200 {
                    let m = k0 + n * p;
                    if m.norm_sq() < best.norm_sq() || (m.norm_sq() == best.norm_sq() && m > best) {
                        best = m;
                    }
                }
                (best.k1, best.k2)
            })
            .collect()
    }

    #[test]
    fn disk_classes_examples() {
        let got: Vec<_> = classes_meeting_disk(wv(1, 1))
            .unwrap()
            .into_iter()
            .map(|l| l.khat)
            .collect();
        assert_eq!(got, vec![wv(-1, 1), wv(0, 1), wv(1, -1), wv(1, 0)]);
        // Tangent classes touch only the circle; the rest meet the open disk.
        let open: Vec<_> = classes_meeting_disk(wv(1, 1))
            .unwrap()
            .into_iter()
            .filter(ClassLabel::meets_open_disk)
            .map(|l| l.khat)
            .collect();
        assert_eq!(open, vec![wv(0, 1), wv(1, 0)]);
        for p in [wv(1, 0), wv(2, 1), wv(3, 1), wv(2, 3)] {
            let got: BTreeSet<_> = classes_meeting_disk(p)
                .unwrap()
                .into_iter()
                .map(|l| (l.khat.k1, l.khat.k2))
                .collect();
            assert_eq!(got, brute_force_classes(p), "p = {p}");
        }
    }

    #[test]
    fn disk_classes_are_non_parallel_and_meet_disk() {
        let p = wv(2, 1);
        for l in classes_meeting_disk(p).unwrap() {
            assert!(!l.parallel);
            assert!(l.khat.norm_sq() <= p.norm_sq());
            assert!(!l.avoids_disk());
        }
    }

    fn small() -> impl Strategy<Value = i64> {
        -12i64..=12
    }

    proptest! {
        #[test]
        fn triad_antisymmetry(a in small(), b in small(), c in small(), d in small()) {
            let (p, q) = (wv(a, b), wv(c, d));
            prop_assume!(!p.is_zero() && !q.is_zero());
            let x = triad_coeff(p, q).unwrap();
            prop_assert!((x - triad_coeff(q, p).unwrap()).abs() < EPS);
            prop_assert!((x + triad_coeff(-p, q).unwrap()).abs() < EPS);
            prop_assert!((x + triad_coeff(p, -q).unwrap()).abs() < EPS);
        }

        #[test]
        fn canonical_is_class_invariant(a in small(), b in small(), c in small(), d in small(), n in -30i64..30) {
            let (k, p) = (wv(a, b), wv(c, d));
            prop_assume!(!p.is_zero());
            let k2 = k + n * p;
            prop_assume!(!k.is_zero() || !k2.is_zero());
            let l1 = canonical_label(k, p).unwrap();
            let l2 = canonical_label(k2, p).unwrap();
            prop_assert_eq!(l1, l2);
            // Minimality against a wide scan of the class.
            for m in -60..=60 {
                let x = l1.khat + m * p;
                if !x.is_zero() {
                    prop_assert!(x.norm_sq() >= l1.khat.norm_sq());
                }
            }
        }

        #[test]
        fn rho_sign_iff_avoids_disk(a in small(), b in small(), c in -4i64..=4, d in -4i64..=4) {
            let (k, p) = (wv(a, b), wv(c, d));
            prop_assume!(!p.is_zero() && !k.is_parallel(p));
            let l = canonical_label(k, p).unwrap();
            let all_negative = (-80..=80).all(|n| rho(l.khat, p, n).unwrap() < 0.0);
            prop_assert_eq!(all_negative, l.avoids_disk());
        }
    }
}
