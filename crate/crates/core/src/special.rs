//! Complex gamma function via the Lanczos approximation.

use num_complex::Complex64;
use std::f64::consts::PI;

const G: f64 = 7.0;
const COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// log Γ(z) for Re z ≥ 1/2.
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(COEF[0], 0.0);
    for (k, &ck) in COEF.iter().enumerate().skip(1) {
        x += ck / (z + k as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// 1/Γ(z), entire; exact zeros at non-positive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        // 1/Γ(z) = Γ(1-z) sin(πz) / π
        let s = sin_pi(z);
        (ln_gamma_right(1.0 - z)).exp() * s / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

/// sin(πz) with argument reduction so that values near integers stay accurate.
fn sin_pi(z: Complex64) -> Complex64 {
    let k = z.re.round();
    let r = Complex64::new(z.re - k, z.im);
    let sign = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * (r * PI).sin()
}
