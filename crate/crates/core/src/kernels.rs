//! The odd kernels `K^i(x) = x_i^{2n-1} / |x|^{2n-1+alpha}` and the
//! coefficients of the homogeneous polynomial appearing on their Fourier side.

use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::numeric::DoubleDouble;
use serde::{Deserialize, Serialize};

/// Largest `n` accepted by the coefficient routines.
pub const MAX_FOURIER_N: usize = 16;

/// `(alpha, n, d)`: homogeneity, odd exponent index, ambient dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub alpha: f64,
    pub n: u32,
    pub d: usize,
}

impl KernelParams {
    pub fn new(alpha: f64, n: u32, d: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if d < 2 {
            return Err(invalid(format!("dimension must be at least 2, got {d}")));
        }
        Ok(Self { alpha, n, d })
    }

    /// The odd exponent `2n - 1`.
    pub fn exponent(&self) -> i32 {
        2 * self.n as i32 - 1
    }

    /// `|x|^{-alpha}`, exact division when `alpha = 1`.
    #[inline]
    pub(crate) fn radial(&self, r: f64) -> f64 {
        if self.alpha == 1.0 {
            1.0 / r
        } else {
            r.powf(-self.alpha)
        }
    }
}

/// Kernel component on a raw coordinate slice with precomputed norm `r > 0`.
#[inline]
pub(crate) fn component_with_norm(params: &KernelParams, axis: usize, x: &[f64], r: f64) -> f64 {
    let u = x[axis] / r;
    u.powi(params.exponent()) * params.radial(r)
}

#[inline]
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn check(params: &KernelParams, x: &Point) -> Result<f64> {
    if x.dim() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            found: x.dim(),
        });
    }
    let r = norm(x.coords());
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok(r)
}

/// `K^i_{alpha,n}(x)`.
pub fn kernel_component(params: &KernelParams, axis: usize, x: &Point) -> Result<f64> {
    if axis >= params.d {
        return Err(Error::AxisOutOfRange {
            axis,
            dim: params.d,
        });
    }
    let r = check(params, x)?;
    Ok(component_with_norm(params, axis, x.coords(), r))
}

/// The vector `(K^1(x), ..., K^d(x))`.
pub fn kernel_vector(params: &KernelParams, x: &Point) -> Result<Vec<f64>> {
    let r = check(params, x)?;
    Ok((0..params.d)
        .map(|i| component_with_norm(params, i, x.coords(), r))
        .collect())
}

/// Coefficients of `p(x) = sum_k a_k x_1^{2(n-k-1)} |x|^{2k}` and of its
/// monomial expansion `p = sum_l b_{2l} x_1^{2l} x_2^{2(n-1-l)}`, up to the
/// global positive constant of the Fourier transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierPoly {
    pub n: usize,
    pub alpha: f64,
    /// `a_0 .. a_{n-1}`
    pub a: Vec<f64>,
    /// `b_0, b_2, .., b_{2(n-1)}` stored by `l`
    pub b: Vec<f64>,
}

fn dd(x: f64) -> DoubleDouble {
    DoubleDouble::from_f64(x)
}

fn factorial(k: usize) -> DoubleDouble {
    (2..=k).fold(DoubleDouble::ONE, |acc, j| acc.mul_f64(j as f64))
}

fn pow2(k: usize) -> DoubleDouble {
    dd((k as f64).exp2())
}

/// `(1-alpha)(3-alpha)...(2k-1-alpha)`, empty product for `k = 0`.
fn odd_shifted_product(k: usize, alpha: f64) -> DoubleDouble {
    (1..=k).fold(DoubleDouble::ONE, |acc, t| {
        // 2t-1 is exact; the subtraction is done in double-double
        acc.mul(dd((2 * t - 1) as f64).sub(dd(alpha)))
    })
}

/// `(1-alpha) alpha (alpha+2) ... (alpha + 2(l-1))`.
fn identity_rhs_product(l: usize, alpha: f64) -> DoubleDouble {
    let mut acc = dd(1.0).sub(dd(alpha));
    for t in 0..l {
        acc = acc.mul(dd(alpha).add(dd((2 * t) as f64)));
    }
    acc
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_fourier_domain(n: usize, alpha: f64) -> Result<()> {
    if n == 0 || n > MAX_FOURIER_N {
        return Err(invalid(format!(
            "n must lie in 1..={MAX_FOURIER_N}, got {n}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn a_coefficient(n: usize, k: usize, alpha: f64) -> DoubleDouble {
    let num = odd_shifted_product(n - k, alpha).mul_f64(sign(n - k));
    let den = factorial(2 * n - 1 - 2 * k)
        .mul(pow2(k))
        .mul(factorial(k));
    num.div(den)
}

/// `sum_{k=1}^{l+1} (-1)^k P_k / (2^{n-k} (2k-1)! (l+1-k)!)` with `P_k` the odd
/// shifted product: the left side of the coefficient identity.
fn identity_lhs(n: usize, l: usize, alpha: f64) -> DoubleDouble {
    (1..=l + 1).fold(DoubleDouble::ZERO, |acc, k| {
        let num = odd_shifted_product(k, alpha).mul_f64(sign(k));
        let den = pow2(n - k)
            .mul(factorial(2 * k - 1))
            .mul(factorial(l + 1 - k));
        acc.add(num.div(den))
    })
}

/// `-(1-alpha) alpha (alpha+2)...(alpha+2(l-1)) / (2^{n-1-l} (2l+1)!)`.
fn identity_rhs(n: usize, l: usize, alpha: f64) -> DoubleDouble {
    identity_rhs_product(l, alpha)
        .div(pow2(n - 1 - l).mul(factorial(2 * l + 1)))
        .neg()
}

pub fn fourier_poly_coeffs(n: usize, alpha: f64) -> Result<FourierPoly> {
    check_fourier_domain(n, alpha)?;
    let a = (0..n).map(|k| a_coefficient(n, k, alpha).to_f64()).collect();
    let b = (0..n)
        .map(|l| identity_lhs(n, l, alpha).div(factorial(n - l - 1)).to_f64())
        .collect();
    Ok(FourierPoly { n, alpha, a, b })
}

/// Both sides `(lhs, rhs)` of the coefficient identity, rounded from double-double.
pub fn coeff_identity_sides(n: usize, l: usize, alpha: f64) -> Result<(f64, f64)> {
    check_fourier_domain(n, alpha)?;
    if l >= n {
        return Err(Error::AxisOutOfRange { axis: l, dim: n });
    }
    Ok((
        identity_lhs(n, l, alpha).to_f64(),
        identity_rhs(n, l, alpha).to_f64(),
    ))
}

/// `lhs - rhs` of the coefficient identity, evaluated in double-double.
pub fn coeff_identity_residual(n: usize, l: usize, alpha: f64) -> Result<f64> {
    check_fourier_domain(n, alpha)?;
    if l >= n {
        return Err(Error::AxisOutOfRange { axis: l, dim: n });
    }
    Ok(identity_lhs(n, l, alpha)
        .sub(identity_rhs(n, l, alpha))
        .to_f64())
}

/// Residual normalized by `|rhs|`.
pub fn coeff_identity_normalized_residual(n: usize, l: usize, alpha: f64) -> Result<f64> {
    let res = coeff_identity_residual(n, l, alpha)?;
    let rhs = identity_rhs(n, l, alpha).abs().to_f64();
    Ok(res.abs() / rhs)
}
