//! Singular and regularized Biot-Savart kernels.
//!
//! The regularized kernel is the algebraic blob
//!
//! ```text
//! H_d(x) = x^perp / (2 pi (|x|^2 + d^2)),    G_d(x) = ln(|x|^2 + d^2) / (4 pi)
//! ```
//!
//! with `grad^perp G_d = H_d`, `H_d(0) = 0` and `H_d(-x) = -H_d(x)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("singular kernel evaluated at the origin")]
    Singular,
    #[error("blob scale must be finite and > 0, got {0}")]
    InvalidScale(f64),
}

/// Singular Biot-Savart kernel `x^perp / (2 pi |x|^2)`.
pub fn biot_savart(x: Vec2) -> Result<Vec2, KernelError> {
    let r2 = x.norm_sq();
    if r2 == 0.0 {
        return Err(KernelError::Singular);
    }
    Ok(x.perp() * (1.0 / (2.0 * PI * r2)))
}

/// Singular stream function `ln|x| / (2 pi)`.
pub fn newtonian_potential(x: Vec2) -> Result<f64, KernelError> {
    let r2 = x.norm_sq();
    if r2 == 0.0 {
        return Err(KernelError::Singular);
    }
    Ok(r2.ln() / (4.0 * PI))
}

/// Certified bounds on the blob kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelBounds {
    /// `sup |H_d|`.
    pub sup: f64,
    /// Lipschitz constant of `H_d`.
    pub lip: f64,
}

/// Algebraic blob regularization of the Biot-Savart kernel at scale `delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlobKernel {
    delta: f64,
    delta_sq: f64,
}

impl BlobKernel {
    pub fn new(delta: f64) -> Result<Self, KernelError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(KernelError::InvalidScale(delta));
        }
        Ok(BlobKernel {
            delta,
            delta_sq: delta * delta,
        })
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Regularized velocity kernel `H_d(x)`.
    #[inline]
    pub fn velocity(&self, x: Vec2) -> Vec2 {
        let f = 1.0 / (2.0 * PI * (x.norm_sq() + self.delta_sq));
        Vec2::new(-x.y * f, x.x * f)
    }

    /// Regularized stream function `G_d(x)`.
    #[inline]
    pub fn stream(&self, x: Vec2) -> f64 {
        (x.norm_sq() + self.delta_sq).ln() / (4.0 * PI)
    }

    /// Jacobian `dH_d/dx` as rows `[[d1 H1, d2 H1], [d1 H2, d2 H2]]`.
    pub fn velocity_gradient(&self, x: Vec2) -> [[f64; 2]; 2] {
        let s = x.norm_sq() + self.delta_sq;
        let c = 1.0 / (2.0 * PI * s);
        let k = 2.0 / s;
        // H1 = -y c(r), H2 = x c(r), with dc/dx_i = -c k x_i.
        [
            [x.y * x.x * c * k, -c + x.y * x.y * c * k],
            [c - x.x * x.x * c * k, -x.x * x.y * c * k],
        ]
    }

    /// `sup |H_d| = 1/(4 pi d)`, attained on `|x| = d`.
    ///
    /// The Jacobian of `x / (|x|^2 + d^2)` has eigenvalues `1/(r^2+d^2)` and
    /// `(d^2 - r^2)/(r^2+d^2)^2`, both bounded by `1/d^2`; the rotation does
    /// not change the operator norm, so `Lip(H_d) = 1/(2 pi d^2)` exactly.
    pub fn bounds(&self) -> KernelBounds {
        KernelBounds {
            sup: 1.0 / (4.0 * PI * self.delta),
            lip: 1.0 / (2.0 * PI * self.delta_sq),
        }
    }
}
