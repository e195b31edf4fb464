//! Complex Newton iteration with a finite-difference derivative.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError<E> {
    #[error("function evaluation failed")]
    Eval(E),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("iterate {0} left the admissible region")]
    LeftRegion(Complex64),
    #[error("vanishing derivative at {0}")]
    FlatDerivative(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop once the step is below `tol·(1 + |z|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Difference step relative to `1 + |z|`.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 60,
            fd_step: 1e-7,
        }
    }
}

/// Central-difference derivative of an analytic `f`.
pub fn derivative<E, F>(f: &F, z: Complex64, h: f64) -> Result<Complex64, E>
where
    F: Fn(Complex64) -> Result<Complex64, E>,
{
    let h = Complex64::new(h, 0.0);
    Ok((f(z + h)? - f(z - h)?) / (2.0 * h))
}

/// Newton's method for an analytic `f`; `admissible` rejects iterates
/// leaving the region of interest.
pub fn newton<E, F, R>(f: &F, z0: Complex64, opts: &NewtonOptions, admissible: R) -> Result<Complex64, RootError<E>>
where
    F: Fn(Complex64) -> Result<Complex64, E>,
    R: Fn(Complex64) -> bool,
{
    let mut z = z0;
    for _ in 0..opts.max_iter {
        let fz = f(z).map_err(RootError::Eval)?;
        let h = opts.fd_step * (1.0 + z.norm());
        let d = derivative(f, z, h).map_err(RootError::Eval)?;
        if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
            return Err(RootError::FlatDerivative(z));
        }
        let step = fz / d;
        z -= step;
        if !admissible(z) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(RootError::LeftRegion(z));
        }
        if step.norm() <= opts.tol * (1.0 + z.norm()) {
            return Ok(z);
        }
    }
    Err(RootError::NoConvergence(opts.max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_roots_of_unity() {
        let f = |z: Complex64| -> Result<Complex64, ()> { Ok(z * z * z - 1.0) };
        let r = newton(&f, Complex64::new(-0.4, 0.9), &NewtonOptions::default(), |_| true).unwrap();
        assert!((r - Complex64::new(-0.5, 3f64.sqrt() / 2.0)).norm() < 1e-12);
    }

    #[test]
    fn region_guard() {
        let f = |z: Complex64| -> Result<Complex64, ()> { Ok(z - 10.0) };
        let e = newton(&f, Complex64::new(0.0, 0.0), &NewtonOptions::default(), |z| z.norm() < 5.0);
        assert!(matches!(e, Err(RootError::LeftRegion(_))));
    }
}
