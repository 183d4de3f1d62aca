//! Transport of fundamental solutions of Y' = (A0/z² + B/z) Y along arcs and rays.

use num_complex::Complex64;

use crate::error::Result;
use crate::liecore::{CartanElement, ComplexMatrix};
use crate::ode::{integrate, ErrorScale, OdeOptions, OdeStats};

fn flatten(y: &ComplexMatrix) -> Vec<Complex64> {
    y.as_slice().to_vec()
}

fn unflatten(n: usize, m: usize, v: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(n, m, v)
}

/// (A0/z + B) · Y for a column-major n×m state.
fn apply(a0: &CartanElement, b: &ComplexMatrix, z: Complex64, y: &[Complex64], out: &mut [Complex64]) {
    let n = a0.dim();
    let m = y.len() / n;
    for col in 0..m {
        let yc = &y[col * n..(col + 1) * n];
        for i in 0..n {
            let mut acc = a0.diag[i] / z * yc[i];
            for k in 0..n {
                acc += b[(i, k)] * yc[k];
            }
            out[col * n + i] = acc;
        }
    }
}

/// Continue Y along z = r e^{iφ} from φ0 to φ1.
pub(crate) fn along_arc(
    a0: &CartanElement,
    b: &ComplexMatrix,
    r: f64,
    phi0: f64,
    phi1: f64,
    y0: &ComplexMatrix,
    rtol: f64,
) -> Result<(ComplexMatrix, OdeStats)> {
    let n = a0.dim();
    let rhs = |phi: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let z = Complex64::from_polar(r, phi);
        apply(a0, b, z, y, dy);
        for v in dy.iter_mut() {
            *v *= Complex64::new(0.0, 1.0);
        }
    };
    let opts = OdeOptions::new(rtol).with_scale(ErrorScale::Blocks(n));
    // |dz| ≤ r/10
    let (y, st) = integrate(rhs, phi0, phi1, &flatten(y0), &opts, |_| 0.1, |_, _| Ok(()))?;
    Ok((unflatten(n, y0.ncols(), &y), st))
}

/// Continue Y along z = ρ e^{iθ} from ρ0 to ρ1.
pub(crate) fn along_ray(
    a0: &CartanElement,
    b: &ComplexMatrix,
    theta: f64,
    rho0: f64,
    rho1: f64,
    y0: &ComplexMatrix,
    rtol: f64,
) -> Result<(ComplexMatrix, OdeStats)> {
    let n = a0.dim();
    let e = Complex64::from_polar(1.0, theta);
    let rhs = |rho: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let z = e * rho;
        apply(a0, b, z, y, dy);
        let f = e / z;
        for v in dy.iter_mut() {
            *v *= f;
        }
    };
    let opts = OdeOptions::new(rtol).with_scale(ErrorScale::Blocks(n));
    let (y, st) =
        integrate(rhs, rho0, rho1, &flatten(y0), &opts, |rho| 0.1 * rho.abs(), |_, _| Ok(()))?;
    Ok((unflatten(n, y0.ncols(), &y), st))
}
