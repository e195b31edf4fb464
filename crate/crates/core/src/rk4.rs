//! Classical fourth-order Runge-Kutta for complex state vectors.

use num_complex::Complex64;

/// One RK4 step of `y' = f(y)` in place. `scratch` holds the stage buffers
/// between calls.
pub fn step<F>(f: &F, y: &mut [Complex64], dt: f64, scratch: &mut Scratch)
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let n = y.len();
    scratch.resize(n);
    let Scratch { k1, k2, k3, k4, tmp } = scratch;
    let half = 0.5 * dt;

    f(y, k1);
    for i in 0..n {
        tmp[i] = y[i] + k1[i] * half;
    }
    f(tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + k2[i] * half;
    }
    f(tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + k3[i] * dt;
    }
    f(tmp, k4);
    let sixth = dt / 6.0;
    for i in 0..n {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * sixth;
    }
}

#[derive(Debug, Default, Clone)]
pub struct Scratch {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Scratch {
    fn resize(&mut self, n: usize) {
        for v in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.tmp] {
            v.resize(n, Complex64::new(0.0, 0.0));
        }
    }
}
