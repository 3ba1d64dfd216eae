//! Fundamental solutions of the biharmonic wave operator in 2D/3D, their
//! Helmholtz / modified-Helmholtz components, the N-truncated 2D kernel, and
//! the real measurement kernels used by the inversion.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun;
use crate::Dim;

const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;

fn check_rk(r: f64, k: f64, name: &str) -> Result<()> {
    if !(r.is_finite() && k.is_finite()) || r < 0.0 || k <= 0.0 {
        return Err(Error::Domain(format!("{name}: invalid (r, k) = ({r}, {k})")));
    }
    Ok(())
}

/// 3D fundamental solution (e^{ikr} - e^{-kr})/(8 pi k^2 r), with the
/// continuous extension (1+i)/(8 pi k) at r = 0.
pub fn phi_3d(r: f64, k: f64) -> Result<Complex64> {
    check_rk(r, k, "phi_3d")?;
    let denom = 8.0 * std::f64::consts::PI * k * k;
    if r == 0.0 {
        return Ok(Complex64::new(1.0, 1.0) * k / denom);
    }
    let osc = Complex64::from_polar(1.0, k * r);
    let dec = Complex64::new((-k * r).exp(), 0.0);
    Ok((osc - dec) / (denom * r))
}

/// 2D fundamental solution (i/8k^2)(H0(kr) - H0(ikr)). Splitting into real
/// and imaginary parts: Re = -(Y0 + (2/pi)K0)/(8k^2), Im = J0/(8k^2); the
/// log singularities of Y0 and K0 cancel, giving the extension i/(8k^2) at
/// r = 0.
pub fn phi_2d(r: f64, k: f64) -> Result<Complex64> {
    check_rk(r, k, "phi_2d")?;
    let denom = 8.0 * k * k;
    if r == 0.0 {
        return Ok(Complex64::new(0.0, 1.0 / denom));
    }
    let x = k * r;
    let j0 = specfun::bessel_j0(x)?;
    let y0 = specfun::bessel_y0(x)?;
    let k0 = specfun::macdonald_k0(x)?;
    Ok(Complex64::new(-(y0 + FRAC_2_PI * k0) / denom, j0 / denom))
}

/// Green's functions (phi_plus, phi_minus) of the Helmholtz and modified
/// Helmholtz operators; phi = (phi_plus - phi_minus)/(2k^2).
pub fn helmholtz_components(r: f64, k: f64, dim: Dim) -> Result<(Complex64, Complex64)> {
    check_rk(r, k, "helmholtz_components")?;
    if r == 0.0 {
        return Err(Error::Domain("helmholtz_components: r = 0".into()));
    }
    match dim {
        Dim::Three => {
            let denom = 4.0 * std::f64::consts::PI * r;
            let plus = Complex64::from_polar(1.0, k * r) / denom;
            let minus = Complex64::new((-k * r).exp() / denom, 0.0);
            Ok((plus, minus))
        }
        Dim::Two => {
            let plus = Complex64::new(0.0, 0.25) * specfun::hankel_h0_real(k * r)?;
            let minus = Complex64::new(
                specfun::macdonald_k0(k * r)? / (2.0 * std::f64::consts::PI),
                0.0,
            );
            Ok((plus, minus))
        }
    }
}

/// N-truncated 2D kernel (i/8k^2)(H0N(kr) - H0N(ikr)); diverges at r = 0.
pub fn truncated_phi_2d(r: f64, k: f64, order: usize) -> Result<Complex64> {
    check_rk(r, k, "truncated_phi_2d")?;
    if r == 0.0 {
        return Err(Error::Domain("truncated_phi_2d: r = 0".into()));
    }
    let real = specfun::truncated_hankel_h0(Complex64::new(k * r, 0.0), order)?;
    let imag = specfun::truncated_hankel_h0(Complex64::new(0.0, k * r), order)?;
    Ok(Complex64::new(0.0, 1.0 / (8.0 * k * k)) * (real - imag))
}

/// Real measurement kernel of the modified integral equation:
/// G = (Y0(kr) + (2/pi)K0(kr))^2 - J0(kr)^2, with extension -1 at r = 0.
pub fn measurement_kernel_g(r: f64, k: f64) -> Result<f64> {
    check_rk(r, k, "measurement_kernel_g")?;
    if r == 0.0 {
        return Ok(-1.0);
    }
    let x = k * r;
    let j0 = specfun::bessel_j0(x)?;
    let yk = specfun::bessel_y0(x)? + FRAC_2_PI * specfun::macdonald_k0(x)?;
    Ok(yk * yk - j0 * j0)
}

/// Raw magnitude kernel |H0(kr) - H0(ikr)|^2 = J0^2 + (Y0 + (2/pi)K0)^2, the
/// unstable alternative to `measurement_kernel_g`; extension 1 at r = 0.
pub fn magnitude_kernel(r: f64, k: f64) -> Result<f64> {
    check_rk(r, k, "magnitude_kernel")?;
    if r == 0.0 {
        return Ok(1.0);
    }
    let x = k * r;
    let j0 = specfun::bessel_j0(x)?;
    let yk = specfun::bessel_y0(x)? + FRAC_2_PI * specfun::macdonald_k0(x)?;
    Ok(yk * yk + j0 * j0)
}
