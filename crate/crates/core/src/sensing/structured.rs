//! FFT-backed partial circulant and partial Toeplitz operators.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
struct Plan {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    len: usize,
}

impl Plan {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { fwd: planner.plan_fft_forward(len), inv: planner.plan_fft_inverse(len), len }
    }

    fn forward_real(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform including the `1/len` factor.
    fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
        let s = 1.0 / self.len as f64;
        for b in buf.iter_mut() {
            *b *= s;
        }
    }
}

/// Rows `r_i` of the circulant `C[r, j] = c[(j − r) mod n]`.
#[derive(Clone)]
pub(super) struct CirculantOp {
    c: Vec<f64>,
    rows: Vec<usize>,
    c_hat: Vec<Complex64>,
    plan: Plan,
}

impl CirculantOp {
    pub(super) fn new(c: Vec<f64>, rows: Vec<usize>) -> Self {
        let plan = Plan::new(c.len());
        let c_hat = plan.forward_real(&c);
        Self { c, rows, c_hat, plan }
    }

    pub(super) fn storage_len(&self) -> usize {
        self.c.len() + self.rows.len()
    }

    pub(super) fn generator(&self) -> &[f64] {
        &self.c
    }

    pub(super) fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub(super) fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.c.len();
        self.c[(j + n - self.rows[i]) % n]
    }

    /// Circular cross-correlation of `c` with `x`, sampled at the kept rows.
    pub(super) fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut buf = self.plan.forward_real(x);
        for (b, c) in buf.iter_mut().zip(&self.c_hat) {
            *b *= c.conj();
        }
        self.plan.inverse(&mut buf);
        self.rows.iter().map(|&r| buf[r].re).collect()
    }

    /// Scatter `v` onto the kept rows, then circularly convolve with `c`.
    pub(super) fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let n = self.c.len();
        let mut u = vec![0.0; n];
        for (&r, &vi) in self.rows.iter().zip(v) {
            u[r] = vi;
        }
        let mut buf = self.plan.forward_real(&u);
        for (b, c) in buf.iter_mut().zip(&self.c_hat) {
            *b *= c;
        }
        self.plan.inverse(&mut buf);
        buf.iter().map(|b| b.re).collect()
    }
}

/// Rows `r_i` of the Toeplitz `T[r, j] = t[n − 1 + r − j]`.
#[derive(Clone)]
pub(super) struct ToeplitzOp {
    t: Vec<f64>,
    rows: Vec<usize>,
    n: usize,
    full_rows: usize,
    t_hat: Vec<Complex64>,
    plan: Plan,
}

impl ToeplitzOp {
    pub(super) fn new(t: Vec<f64>, rows: Vec<usize>, n: usize) -> Self {
        let full_rows = t.len() + 1 - n;
        // Only outputs n−1..n+R−2 of the linear convolution are read, and a
        // circular length of len(t) already keeps those free of wrap-around
        // (likewise for the transpose).
        let len = t.len().next_power_of_two();
        let plan = Plan::new(len);
        let t_hat = plan.forward_real(&t);
        Self { t, rows, n, full_rows, t_hat, plan }
    }

    pub(super) fn storage_len(&self) -> usize {
        self.t.len() + self.rows.len()
    }

    pub(super) fn generator(&self) -> &[f64] {
        &self.t
    }

    pub(super) fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub(super) fn entry(&self, i: usize, j: usize) -> f64 {
        self.t[self.n - 1 + self.rows[i] - j]
    }

    pub(super) fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut buf = self.plan.forward_real(x);
        for (b, t) in buf.iter_mut().zip(&self.t_hat) {
            *b *= t;
        }
        self.plan.inverse(&mut buf);
        self.rows.iter().map(|&r| buf[self.n - 1 + r].re).collect()
    }

    /// Correlation of `t` with the scattered `v`, done as a convolution with
    /// the reversed sequence.
    pub(super) fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let r_full = self.full_rows;
        let mut u_rev = vec![0.0; r_full];
        for (&r, &vi) in self.rows.iter().zip(v) {
            u_rev[r_full - 1 - r] = vi;
        }
        let mut buf = self.plan.forward_real(&u_rev);
        for (b, t) in buf.iter_mut().zip(&self.t_hat) {
            *b *= t;
        }
        self.plan.inverse(&mut buf);
        (0..self.n).map(|j| buf[self.n - 1 - j + r_full - 1].re).collect()
    }
}
