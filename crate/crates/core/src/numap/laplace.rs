//! Borel–Laplace summation of the formal solution.
//!
//! With x = 1/z, column j of the canonical solution is
//! e^{-a_j x} ∫_0^{∞·e^{iθ}} e^{-x s} V(a_j + s) ds, where V solves the Fuchsian
//! system (ζ - A0) V' = (B - I) V and near s = 0 equals
//! Σ_m u_m s^{λ_j+m-1} / Γ(λ_j+m).

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::liecore::{CartanElement, ComplexMatrix};
use crate::ode::{integrate, ErrorScale, OdeOptions, OdeStats};
use crate::special::rgamma;

const TINY: f64 = 1e-18;
const MAX_SERIES: usize = 400;

pub(crate) struct LaplaceColumn {
    pub value: DVector<Complex64>,
    pub stats: OdeStats,
}

/// Frobenius coefficients ũ_m = u_m·T^m for column j, until they are negligible.
fn frobenius(a0: &CartanElement, b: &ComplexMatrix, j: usize, t: f64) -> Vec<DVector<Complex64>> {
    let n = a0.dim();
    let lam = b[(j, j)];
    let mut out = vec![DVector::from_fn(n, |k, _| {
        if k == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
    })];
    if n == 1 {
        return out;
    }
    let mut quiet = 0;
    for m in 1..MAX_SERIES {
        let prev = &out[m - 1];
        let shift = lam + (m as f64 - 1.0);
        let w = b * prev - prev * shift;
        let mut next = DVector::from_element(n, Complex64::new(0.0, 0.0));
        for k in 0..n {
            if k != j {
                next[k] = w[k] * t / (a0.diag[j] - a0.diag[k]);
            }
        }
        let mut d = Complex64::new(0.0, 0.0);
        for k in 0..n {
            if k != j {
                d += b[(j, k)] * next[k];
            }
        }
        next[j] = d / (m as f64);
        let size = next.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let gm = rgamma(lam + m as f64).norm().max(rgamma(lam + m as f64 + 1.0).norm());
        out.push(next);
        if size * gm.max(1e-300) < TINY && size < 1e300 {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    out
}

/// Column j of the Borel sum at z = r e^{iθ}, with the Laplace ray along θ.
pub(crate) fn laplace_column(
    a0: &CartanElement,
    b: &ComplexMatrix,
    j: usize,
    r: f64,
    theta: f64,
    rtol: f64,
) -> Result<LaplaceColumn> {
    let n = a0.dim();
    let lam = b[(j, j)];
    let z = Complex64::from_polar(r, theta);
    let prefactor = (-a0.diag[j] / z).exp();
    let rho = (0..n)
        .filter(|&k| k != j)
        .map(|k| (a0.diag[k] - a0.diag[j]).norm())
        .fold(f64::INFINITY, f64::min);
    if n == 1 || rho.is_infinite() {
        // V = s^{λ-1}/Γ(λ) integrates to z^λ exactly
        let zl = (lam * Complex64::new(r.ln(), theta)).exp();
        return Ok(LaplaceColumn {
            value: DVector::from_element(1, prefactor * zl),
            stats: OdeStats::default(),
        });
    }
    let t0 = (0.5 * rho).min(2.0 * r);
    let w = t0 / r;
    let u = frobenius(a0, b, j, t0);
    let m_len = u.len();
    // inner incomplete-gamma sums need 1/Γ(λ + p) for p up to m_len + n_inner
    let mut n_inner = 1usize;
    {
        let mut term = 1.0;
        while n_inner < 200 {
            term *= w / n_inner as f64;
            if term < TINY * 1e-2 {
                break;
            }
            n_inner += 1;
        }
        n_inner += 5;
    }
    let rg: Vec<Complex64> = (0..m_len + n_inner + 2).map(|p| rgamma(lam + p as f64)).collect();
    let ew = (-w).exp();
    let i_theta = Complex64::new(0.0, theta);
    let log_t = Complex64::new(t0.ln(), theta);
    let mut near = DVector::from_element(n, Complex64::new(0.0, 0.0));
    let mut v_t0 = DVector::from_element(n, Complex64::new(0.0, 0.0));
    // s0^{λ+m} = T^λ e^{iθλ} · (e^{iθ})^m, the T^m is inside ũ_m
    let base_pow = (lam * log_t).exp();
    for (m, um) in u.iter().enumerate() {
        let rot = (i_theta * m as f64).exp();
        let mut s = Complex64::new(0.0, 0.0);
        let mut wp = 1.0;
        for q in 0..n_inner {
            s += rg[m + q + 1] * wp;
            wp *= w;
        }
        near += um * (base_pow * rot * ew * s);
        // Frobenius value at s0: Σ ũ_m T^{λ-1} e^{iθ(λ+m-1)} / Γ(λ+m)
        v_t0 += um * (base_pow * rot * rg[m] / (t0 * i_theta.exp()));
    }
    // far part: ∫_{T}^{∞} along the ray, state [V; I]
    let e_theta = i_theta.exp();
    let poles: Vec<Complex64> = a0.diag.clone();
    let aj = a0.diag[j];
    let bm1 = b - ComplexMatrix::identity(n, n);
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let zeta = aj + e_theta * t;
        let v = &y[..n];
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..n {
                acc += bm1[(k, l)] * v[l];
            }
            dy[k] = e_theta * acc / (zeta - poles[k]);
        }
        let decay = (-t / r).exp();
        for k in 0..n {
            dy[n + k] = e_theta * decay * v[k];
        }
    };
    let opts = OdeOptions::new(rtol).with_scale(ErrorScale::Blocks(n));
    let cap = |t: f64| {
        let zeta = aj + e_theta * t;
        let d = poles.iter().map(|p| (zeta - p).norm()).fold(f64::INFINITY, f64::min);
        (0.1 * d).max(1e-12).min(r)
    };
    let mut state: Vec<Complex64> = v_t0.iter().cloned().collect();
    state.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), n));
    let mut stats = OdeStats::default();
    let chunk = 4.0 * r;
    let mut t = t0;
    let near_norm = near.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for _ in 0..400 {
        let (y, st) = integrate(rhs, t, t + chunk, &state, &opts, cap, |_, _| Ok(()))?;
        stats.add(st);
        state = y;
        t += chunk;
        let vnorm = state[..n].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let inorm = state[n..].iter().map(|z| z.norm()).fold(0.0, f64::max).max(near_norm);
        // remaining tail bounded by r e^{-t/r} |V| up to polynomial growth
        if (-t / r).exp() * vnorm * r * (1.0 + t / r) < TINY * inorm {
            let mut value = near;
            for k in 0..n {
                value[k] += state[n + k];
                value[k] *= prefactor;
            }
            return Ok(LaplaceColumn { value, stats });
        }
    }
    Err(Error::Precision(format!("Laplace integral for column {} did not converge", j + 1)))
}
