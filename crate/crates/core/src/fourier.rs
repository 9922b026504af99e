//! Truncated Fourier series `f(x) = Σ_{k=-K..K} c_k e^{i k κ x}` and the
//! collocation transforms between coefficients and uniform-grid samples.
//!
//! The series does not know its period; callers pass the wavenumber
//! `κ = 2π / period` where it matters.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    /// `coeffs[k + order]` holds `c_k`.
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    pub fn zeros(order: usize) -> Self {
        FourierSeries { coeffs: vec![ZERO; 2 * order + 1] }
    }

    /// Builds a series from coefficients listed for `k = -K..=K`.
    ///
    /// # Panics
    /// If `coeffs` has even length.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        assert!(coeffs.len() % 2 == 1, "coefficient vector must have odd length 2K+1");
        FourierSeries { coeffs }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut s = Self::zeros(order);
        s.coeffs[order] = Complex64::new(value, 0.0);
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `c_k`, or zero outside the stored range.
    pub fn get(&self, k: i64) -> Complex64 {
        let order = self.order() as i64;
        if k.abs() > order {
            ZERO
        } else {
            self.coeffs[(k + order) as usize]
        }
    }

    pub fn set(&mut self, k: i64, value: Complex64) {
        let order = self.order() as i64;
        assert!(k.abs() <= order, "mode {k} outside order {order}");
        self.coeffs[(k + order) as usize] = value;
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let order = self.order() as i64;
        self.coeffs.iter().enumerate().map(move |(i, c)| (i as i64 - order, *c))
    }

    /// Truncates or zero-pads to the requested order.
    pub fn resized(&self, order: usize) -> Self {
        let mut out = Self::zeros(order);
        let keep = order.min(self.order()) as i64;
        for k in -keep..=keep {
            out.set(k, self.get(k));
        }
        out
    }

    /// Spectral derivative: `c_k ↦ i k κ c_k`.
    pub fn derivative(&self, wavenumber: f64) -> Self {
        let coeffs = self
            .modes()
            .map(|(k, c)| c * Complex64::new(0.0, k as f64 * wavenumber))
            .collect();
        FourierSeries { coeffs }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FourierSeries { coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    pub fn eval(&self, x: f64, wavenumber: f64) -> Complex64 {
        self.modes()
            .map(|(k, c)| c * Complex64::from_polar(1.0, k as f64 * wavenumber * x))
            .sum()
    }

    /// Real part of [`eval`](Self::eval); exact for conjugate-symmetric series.
    pub fn eval_real(&self, x: f64, wavenumber: f64) -> f64 {
        let order = self.order() as i64;
        let mut sum = self.get(0).re;
        for k in 1..=order {
            let z = Complex64::from_polar(1.0, k as f64 * wavenumber * x);
            sum += (self.get(k) * z + self.get(-k) * z.conj()).re;
        }
        sum
    }

    /// Largest `|c_k - conj(c_{-k})|`; zero for the series of a real function.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let order = self.order() as i64;
        (0..=order)
            .map(|k| (self.get(k) - self.get(-k).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Replaces the series with its conjugate-symmetric part.
    pub fn symmetrize(&mut self) {
        let order = self.order() as i64;
        for k in 0..=order {
            let avg = (self.get(k) + self.get(-k).conj()) * 0.5;
            self.set(k, avg);
            self.set(-k, avg.conj());
        }
    }

    /// Sum of coefficient moduli, an upper bound for the sup-norm.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Values on the uniform grid `x_j = j·P/n`, `j = 0..n`.
    ///
    /// # Panics
    /// If `n < 2K + 1` (the grid would alias the stored modes).
    pub fn to_samples(&self, n: usize) -> Vec<Complex64> {
        let order = self.order();
        assert!(n > 2 * order, "grid of {n} points aliases order {order}");
        let mut buf = vec![ZERO; n];
        for (k, c) in self.modes() {
            buf[k.rem_euclid(n as i64) as usize] = c;
        }
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf
    }

    pub fn to_real_samples(&self, n: usize) -> Vec<f64> {
        self.to_samples(n).into_iter().map(|z| z.re).collect()
    }

    /// Interpolating coefficients of grid samples, returned at `order`.
    ///
    /// Modes the grid cannot resolve (`|k| ≥ n/2`) are set to zero.
    pub fn from_samples(samples: &[Complex64], order: usize) -> Self {
        let n = samples.len();
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let inv_n = 1.0 / n as f64;
        let resolvable = ((n - 1) / 2) as i64;
        let mut out = Self::zeros(order);
        for k in -(order as i64)..=(order as i64) {
            if k.abs() <= resolvable {
                out.set(k, buf[k.rem_euclid(n as i64) as usize] * inv_n);
            }
        }
        out
    }

    pub fn from_real_samples(samples: &[f64], order: usize) -> Self {
        let buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut s = Self::from_samples(&buf, order);
        s.symmetrize();
        s
    }

    /// De-aliased product truncated to `order`, via collocation on a grid
    /// with at least twice the modes of the inputs.
    pub fn product(&self, other: &Self, order: usize) -> Self {
        let m = self.order().max(other.order()).max(order);
        let n = 4 * m.max(1) + 2;
        let a = self.to_samples(n);
        let b = other.to_samples(n);
        let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_samples(&prod, order)
    }
}

/// Uniform grid `j·period/n` for `j = 0..n`.
pub fn grid(period: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 * period / n as f64).collect()
}

pub fn wavenumber(period: f64) -> f64 {
    2.0 * PI / period
}
