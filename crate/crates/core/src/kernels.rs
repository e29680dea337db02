//! Characteristic kernels, the alpha-power distance and distance-induced kernels.
//!
//! Everything here is univariate: samples are survival times on the real line.

use std::f64::consts::PI;
use std::fmt;

use libm::tgamma as gamma;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(-sigma |x - y|^2)`
    Gaussian { sigma: f64 },
    /// `exp(-sigma |x - y|)`
    Laplacian { sigma: f64 },
    /// `(|x - y| + c)^(-beta)`
    RationalQuadratic { c: f64, beta: f64 },
    /// `2^(1-nu)/Gamma(nu) * z^nu * K_nu(z)` with `z = sqrt(2 nu) |x - y| / sigma`
    Matern { sigma: f64, nu: f64 },
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        Ok(Self::Gaussian { sigma })
    }

    pub fn laplacian(sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        Ok(Self::Laplacian { sigma })
    }

    pub fn rational_quadratic(c: f64, beta: f64) -> Result<Self> {
        positive("c", c)?;
        positive("beta", beta)?;
        Ok(Self::RationalQuadratic { c, beta })
    }

    pub fn matern(sigma: f64, nu: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        positive("nu", nu)?;
        Ok(Self::Matern { sigma, nu })
    }

    /// Re-checks parameters of a value built by hand or deserialized.
    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Gaussian { sigma } => Self::gaussian(sigma),
            Self::Laplacian { sigma } => Self::laplacian(sigma),
            Self::RationalQuadratic { c, beta } => Self::rational_quadratic(c, beta),
            Self::Matern { sigma, nu } => Self::matern(sigma, nu),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r = (x - y).abs();
        match *self {
            Self::Gaussian { sigma } => (-sigma * r * r).exp(),
            Self::Laplacian { sigma } => (-sigma * r).exp(),
            Self::RationalQuadratic { c, beta } => (r + c).powf(-beta),
            Self::Matern { sigma, nu } => matern(r, sigma, nu),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { sigma } => write!(f, "gaussian:sigma={sigma}"),
            Self::Laplacian { sigma } => write!(f, "laplacian:sigma={sigma}"),
            Self::RationalQuadratic { c, beta } => write!(f, "ratquad:c={c},beta={beta}"),
            Self::Matern { sigma, nu } => write!(f, "matern:sigma={sigma},nu={nu}"),
        }
    }
}

fn matern(r: f64, sigma: f64, nu: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let s = r / sigma;
    if nu == 0.5 {
        return (-s).exp();
    }
    if nu == 1.5 {
        let z = 3f64.sqrt() * s;
        return (1.0 + z) * (-z).exp();
    }
    if nu == 2.5 {
        let z = 5f64.sqrt() * s;
        return (1.0 + z + z * z / 3.0) * (-z).exp();
    }
    let z = (2.0 * nu).sqrt() * s;
    if z > 700.0 {
        return 0.0;
    }
    let log_norm = (1.0 - nu) * 2f64.ln() - gamma(nu).ln();
    (log_norm + nu * z.ln()).exp() * bessel_k(nu, z)
}

/// Modified Bessel function of the second kind `K_nu(x)` for real `nu >= 0`
/// and `x > 0`.
///
/// The order is split as `nu = mu + l` with `|mu| <= 1/2`; `K_mu` and
/// `K_{mu+1}` come from Temme's series for `x < 2` and Steed's continued
/// fraction otherwise, then forward recurrence climbs to `nu`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0 && nu >= 0.0, "bessel_k needs x > 0 and nu >= 0");
    const EPS: f64 = 1e-16;
    const FPMIN: f64 = 1e-300;
    const MAXIT: usize = 10_000;

    let nl = (nu + 0.5).floor() as usize;
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    let (mut rkmu, mut rk1) = if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS {
            1.0
        } else {
            pimu / pimu.sin()
        };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let e = e.exp();
        let mut p = 0.5 * e / gampl;
        let mut q = 0.5 / (e * gammi);
        let mut c = 1.0;
        let d = x2 * x2;
        let mut sum1 = p;
        for i in 1..=MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= d / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        (sum, sum1 * xi2)
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - xmu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..=MAXIT {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        let rkmu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
        (rkmu, rkmu * (xmu + x + 0.5 - h) * xi)
    };
    for i in 1..=nl {
        let next = (xmu + i as f64) * xi2 * rk1 + rkmu;
        rkmu = rk1;
        rk1 = next;
    }
    rkmu
}

/// `gam1 = (1/G(1-m) - 1/G(1+m)) / (2m)`, `gam2 = (1/G(1-m) + 1/G(1+m)) / 2`
/// and the two reciprocal gammas, by Chebyshev expansion for `|m| <= 1/2`.
fn temme_gammas(m: f64) -> (f64, f64, f64, f64) {
    const C1: [f64; 7] = [
        -1.142022680371168e0,
        6.5165112670737e-3,
        3.087090173086e-4,
        -3.4706269649e-6,
        6.9437664e-9,
        3.67795e-11,
        -1.356e-13,
    ];
    const C2: [f64; 8] = [
        1.843740587300905e0,
        -7.68528408447867e-2,
        1.2719271366546e-3,
        -4.9717367042e-6,
        -3.31261198e-8,
        2.423096e-10,
        -1.702e-13,
        -1.49e-15,
    ];
    let xx = 8.0 * m * m - 1.0;
    let gam1 = chebyshev(&C1, xx);
    let gam2 = chebyshev(&C2, xx);
    (gam1, gam2, gam2 - m * gam1, gam2 + m * gam1)
}

fn chebyshev(c: &[f64], y: f64) -> f64 {
    let y2 = 2.0 * y;
    let mut d = 0.0;
    let mut dd = 0.0;
    for &cj in c[1..].iter().rev() {
        let sv = d;
        d = y2 * d - dd + cj;
        dd = sv;
    }
    y * d - dd + 0.5 * c[0]
}

/// `|x - y|^alpha` with `0 < alpha <= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemimetricSpec {
    alpha: f64,
}

impl SemimetricSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha <= 2.0 {
            Ok(Self { alpha })
        } else {
            Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r = (x - y).abs();
        if self.alpha == 1.0 {
            r
        } else if self.alpha == 2.0 {
            r * r
        } else {
            r.powf(self.alpha)
        }
    }

    /// `K(x, y) = (rho(x, x0) + rho(y, x0) - rho(x, y)) / 2`
    pub fn induced_kernel(&self, x0: f64, x: f64, y: f64) -> f64 {
        0.5 * (self.eval(x, x0) + self.eval(y, x0) - self.eval(x, y))
    }
}

impl fmt::Display for SemimetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "energy:alpha={}", self.alpha)
    }
}
