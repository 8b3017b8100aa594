//! 2x2 complex transfer matrices for coupled-mode propagation.
//!
//! A segment matrix relates forward/backward field amplitudes `(R, S)` at the
//! segment exit to those at the entrance. For a uniform segment with
//! cross-coupling `kappa_cm`, phase mismatch `delta` and field attenuation
//! `alpha` the coupled-mode system is linear with the closed-form solution
//! `M = cosh(g l) I + sinh(g l)/g * A`, `A = [[i delta - alpha, i kappa],
//! [-i kappa, -(i delta - alpha)]]`, `g^2 = (i delta - alpha)^2 + kappa^2`.
//! `A` is traceless, so `det M = 1` identically, loss included.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        Self {
            m11: Complex64::new(1.0, 0.0),
            m12: Complex64::new(0.0, 0.0),
            m21: Complex64::new(0.0, 0.0),
            m22: Complex64::new(1.0, 0.0),
        }
    }

    /// `self * rhs` (standard matrix product; `self` acts after `rhs`).
    pub fn compose(&self, rhs: &TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }

    /// Integer power by squaring, for runs of identical segments.
    pub fn pow(&self, mut n: u64) -> TransferMatrix {
        let mut base = *self;
        let mut acc = TransferMatrix::identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            n >>= 1;
        }
        acc
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Power transmission for a wave incident from the left with no backward
    /// input from the right: `t = 1/m22` (using `det M = 1`).
    pub fn transmission(&self) -> f64 {
        self.transmission_amplitude().norm_sqr()
    }

    /// Power reflection for the same boundary conditions: `r = -m21/m22`.
    pub fn reflection(&self) -> f64 {
        self.reflection_amplitude().norm_sqr()
    }

    pub fn transmission_amplitude(&self) -> Complex64 {
        // det M = 1 analytically (traceless generator); computing it
        // numerically here would cancel catastrophically for strong gratings
        Complex64::new(1.0, 0.0) / self.m22
    }

    pub fn reflection_amplitude(&self) -> Complex64 {
        -self.m21 / self.m22
    }
}

/// Closed-form uniform-segment coupled-mode matrix.
///
/// * `coupling_per_m` — local grating strength `kappa_cm` (1/m)
/// * `detuning_per_m` — phase mismatch `delta = 2 pi n_eff / lambda - pi / period` (1/m)
/// * `length_m` — segment length (> 0)
/// * `power_loss_per_m` — background power attenuation (1/m); the field rate
///   is half of it
///
/// With zero coupling this reduces to pure propagation
/// `diag(exp((i delta - alpha) l), exp(-(i delta - alpha) l))`.
pub fn segment_matrix(
    coupling_per_m: f64,
    detuning_per_m: f64,
    length_m: f64,
    power_loss_per_m: f64,
) -> TransferMatrix {
    let a = Complex64::new(-power_loss_per_m / 2.0, detuning_per_m);
    let kappa = Complex64::new(coupling_per_m, 0.0);
    let g = (a * a + kappa * kappa).sqrt();
    let gl = g * length_m;

    let cosh = gl.cosh();
    // sinh(gl)/g with a series fallback near g = 0
    let sinc = if gl.norm() < 1e-6 {
        let gl2 = gl * gl;
        (Complex64::new(1.0, 0.0) + gl2 / 6.0 + gl2 * gl2 / 120.0) * length_m
    } else {
        gl.sinh() / g
    };

    let i = Complex64::new(0.0, 1.0);
    TransferMatrix {
        m11: cosh + a * sinc,
        m12: i * kappa * sinc,
        m21: -i * kappa * sinc,
        m22: cosh - a * sinc,
    }
}
