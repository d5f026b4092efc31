//! Fixed-step RK4 for linear, time-independent generators.
//!
//! For `dy/dt = L y` one RK4 step of size `dt` is the fixed linear map
//! `I + A + A²/2 + A³/6 + A⁴/24` with `A = L dt`. [`StepMap`] materializes
//! that map by running the RK4 stages on every basis vector, then advances
//! `n` steps with binary powers. The result is the same sequence of RK4
//! steps, evaluated in `O(log n)` matrix products.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// One classical RK4 step of `dy/dt = f(y)`.
pub fn rk4_step<F>(y: &DVector<C64>, dt: f64, f: &F) -> DVector<C64>
where
    F: Fn(&DVector<C64>) -> DVector<C64>,
{
    let h = C64::new(dt, 0.0);
    let half = C64::new(0.5 * dt, 0.0);
    let k1 = f(y);
    let k2 = f(&(y + &k1 * half));
    let k3 = f(&(y + &k2 * half));
    let k4 = f(&(y + &k3 * h));
    y + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (h / 6.0)
}

/// RK4 step map of a linear generator, with cached binary powers.
#[derive(Clone, Debug)]
pub struct StepMap {
    dt: f64,
    /// `powers[k] = M^(2^k)`
    powers: Vec<DMatrix<C64>>,
}

impl StepMap {
    /// Builds the one-step map of size `dt` for the linear function `f` on a
    /// `dim`-dimensional space.
    pub fn new<F>(dim: usize, dt: f64, f: F) -> Self
    where
        F: Fn(&DVector<C64>) -> DVector<C64>,
    {
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for j in 0..dim {
            let mut e = DVector::<C64>::zeros(dim);
            e[j] = C64::new(1.0, 0.0);
            m.set_column(j, &rk4_step(&e, dt, &f));
        }
        Self {
            dt,
            powers: vec![m],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.powers[0].nrows()
    }

    fn ensure_power(&mut self, k: usize) {
        while self.powers.len() <= k {
            let last = self.powers.last().expect("non-empty");
            let next = last * last;
            self.powers.push(next);
        }
    }

    /// `M^n` as a matrix.
    pub fn power(&mut self, n: u64) -> DMatrix<C64> {
        let dim = self.dim();
        let mut acc = DMatrix::<C64>::identity(dim, dim);
        let mut bits = n;
        let mut k = 0;
        while bits > 0 {
            if bits & 1 == 1 {
                self.ensure_power(k);
                acc = &self.powers[k] * acc;
            }
            bits >>= 1;
            k += 1;
        }
        acc
    }

    /// Applies `n` steps to `v` using matrix-vector products only.
    pub fn advance(&mut self, v: &DVector<C64>, n: u64) -> DVector<C64> {
        let mut out = v.clone();
        let mut bits = n;
        let mut k = 0;
        while bits > 0 {
            if bits & 1 == 1 {
                self.ensure_power(k);
                out = &self.powers[k] * out;
            }
            bits >>= 1;
            k += 1;
        }
        out
    }
}
