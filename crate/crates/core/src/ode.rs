//! Adaptive Dormand–Prince 8(5,3) integrator for complex first-order systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

const A: [[f64; 12]; 12] = [
    [0.0; 12],
    [5.260_015_195_876_773E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.972_505_698_453_79E-2, 5.917_517_095_361_37E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.958_758_547_680_685E-2, 0.0, 8.876_275_643_042_054E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        2.413_651_341_592_667E-1, 0.0, -8.845_494_793_282_861E-1, 9.248_340_032_617_92E-1,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.703_703_703_703_703_5E-2, 0.0, 0.0, 1.708_286_087_294_738_6E-1,
        1.254_676_875_668_224_2E-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.7109375E-2, 0.0, 0.0, 1.702_522_110_195_440_5E-1, 6.021_653_898_045_596E-2,
        -1.7578125E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.709_200_011_850_479E-2, 0.0, 0.0, 1.703_839_257_122_399_8E-1,
        1.072_620_304_463_732_8E-1, -1.531_943_774_862_440_2E-2, 8.273_789_163_814_023E-3,
        0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        6.241_109_587_160_757E-1, 0.0, 0.0, -3.360_892_629_446_941_4,
        -8.682_193_468_417_26E-1, 2.759_209_969_944_671E1, 2.015_406_755_047_789_4E1,
        -4.348_988_418_106_996E1, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        4.776_625_364_382_643_4E-1, 0.0, 0.0, -2.488_114_619_971_667_7,
        -5.902_908_268_368_43E-1, 2.123_005_144_818_119_3E1, 1.527_923_363_288_242_3E1,
        -3.328_821_096_898_486E1, -2.033_120_170_850_862_7E-2, 0.0, 0.0, 0.0,
    ],
    [
        -9.371_424_300_859_873E-1, 0.0, 0.0, 5.186_372_428_844_064, 1.091_437_348_996_729_5,
        -8.149_787_010_746_927, -1.852_006_565_999_696E1, 2.273_948_709_935_050_5E1,
        2.493_605_552_679_652_3, -3.046_764_471_898_219_6, 0.0, 0.0,
    ],
    [
        2.273_310_147_516_538, 0.0, 0.0, -1.053_449_546_673_725E1, -2.000_872_058_224_862_5,
        -1.795_893_186_311_88E1, 2.794_888_452_941_996E1, -2.858_998_277_135_023_5,
        -8.872_856_933_530_63, 1.236_056_717_579_430_3E1, 6.433_927_460_157_636E-1, 0.0,
    ],
];

const C: [f64; 12] = [
    0.0,
    5.260_015_195_876_773E-2,
    7.890_022_793_815_16E-2,
    1.183_503_419_072_274E-1,
    2.816_496_580_927_726E-1,
    3.333_333_333_333_333E-1,
    0.25,
    3.076_923_076_923_077E-1,
    6.512_820_512_820_513E-1,
    0.6,
    8.571_428_571_428_571E-1,
    1.0,
];

const B: [f64; 12] = [
    5.429_373_411_656_876_5E-2, 0.0, 0.0, 0.0, 0.0, 4.450_312_892_752_409,
    1.891_517_899_314_500_3, -5.801_203_960_010_585, 3.111_643_669_578_199E-1,
    -1.521_609_496_625_161E-1, 2.013_654_008_040_303_4E-1, 4.471_061_572_777_259E-2,
];

const ER: [f64; 12] = [
    1.312_004_499_419_488E-2, 0.0, 0.0, 0.0, 0.0, -1.225_156_446_376_204_4,
    -4.957_589_496_572_502E-1, 1.664_377_182_454_986_4, -3.503_288_487_499_736_6E-1,
    3.341_791_187_130_175E-1, 8.192_320_648_511_571E-2, -2.235_530_786_388_629_4E-2,
];

const BHH: [f64; 3] = [
    2.440_944_881_889_764E-1,
    7.338_466_882_816_118E-1,
    2.205_882_352_941_176_6E-2,
];

/// How the local error is scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorScale {
    /// One scale for the whole state (max-norm relative).
    Global,
    /// Consecutive blocks of the given length are scaled independently,
    /// e.g. the columns of a column-major matrix.
    Blocks(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub scale: ErrorScale,
}

impl OdeOptions {
    pub fn new(rtol: f64) -> Self {
        OdeOptions { rtol, atol: rtol * 1e-6, max_steps: 200_000, scale: ErrorScale::Global }
    }

    pub fn with_scale(mut self, scale: ErrorScale) -> Self {
        self.scale = scale;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl OdeStats {
    pub fn add(&mut self, o: OdeStats) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
    }
}

fn block_scales(y: &[Complex64], y1: &[Complex64], opts: &OdeOptions) -> Vec<f64> {
    let len = match opts.scale {
        ErrorScale::Global => y.len().max(1),
        ErrorScale::Blocks(k) => k.max(1),
    };
    y.chunks(len)
        .zip(y1.chunks(len))
        .map(|(a, b)| {
            let m = a.iter().chain(b).map(|z| z.norm()).fold(0.0, f64::max);
            opts.atol + opts.rtol * m
        })
        .collect()
}

/// Integrate y' = f(t, y) from t0 to t1 (either direction).
///
/// `step_cap(t)` bounds |h|; `on_step(t, y)` is called after every accepted
/// step and may abort the integration with an error.
pub fn integrate<F, S, O>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: &[Complex64],
    opts: &OdeOptions,
    step_cap: S,
    mut on_step: O,
) -> Result<(Vec<Complex64>, OdeStats)>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    S: Fn(f64) -> f64,
    O: FnMut(f64, &[Complex64]) -> Result<()>,
{
    let dim = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    if t1 == t0 || dim == 0 {
        return Ok((y, stats));
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let zero = Complex64::new(0.0, 0.0);
    let mut k = vec![vec![zero; dim]; 12];
    let mut ytmp = vec![zero; dim];
    let mut ynew = vec![zero; dim];
    let mut t = t0;

    let mut h = (0.01 * span).min(step_cap(t0));
    let mut last_rejected = false;
    f(t, &y, &mut k[0]);
    stats.evaluations += 1;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Precision(format!(
                "integrator exceeded {} steps at t = {t}",
                opts.max_steps
            )));
        }
        let remaining = (t1 - t) * dir;
        if remaining <= 1e-14 * span {
            break;
        }
        h = h.min(step_cap(t)).min(remaining);
        if !(h > 1e-14 * span.max(1.0) * f64::EPSILON) {
            return Err(Error::Precision(format!("step size underflow at t = {t}")));
        }
        let hs = h * dir;
        for s in 1..12 {
            for i in 0..dim {
                let mut acc = zero;
                for (r, kr) in k.iter().enumerate().take(s) {
                    let a = A[s][r];
                    if a != 0.0 {
                        acc += kr[i] * a;
                    }
                }
                ytmp[i] = y[i] + acc * hs;
            }
            f(t + C[s] * hs, &ytmp, &mut k[s]);
        }
        stats.evaluations += 11;
        for i in 0..dim {
            let mut acc = zero;
            for (s, ks) in k.iter().enumerate() {
                if B[s] != 0.0 {
                    acc += ks[i] * B[s];
                }
            }
            ynew[i] = y[i] + acc * hs;
        }
        let scales = block_scales(&y, &ynew, opts);
        let block = match opts.scale {
            ErrorScale::Global => dim,
            ErrorScale::Blocks(b) => b.max(1),
        };
        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..dim {
            let sk = scales[i / block];
            let mut bk = zero;
            let mut ek = zero;
            for s in 0..12 {
                if B[s] != 0.0 {
                    bk += k[s][i] * B[s];
                }
                if ER[s] != 0.0 {
                    ek += k[s][i] * ER[s];
                }
            }
            let e2 = bk - k[0][i] * BHH[0] - k[8][i] * BHH[1] - k[11][i] * BHH[2];
            err2 += (e2.norm() / sk).powi(2);
            err += (ek.norm() / sk).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let errn = h * err * (1.0 / (deno * dim as f64)).sqrt();
        if !errn.is_finite() {
            stats.rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        let fac11 = errn.powf(0.125);
        if errn <= 1.0 {
            stats.accepted += 1;
            t += hs;
            std::mem::swap(&mut y, &mut ynew);
            on_step(t, &y)?;
            f(t, &y, &mut k[0]);
            stats.evaluations += 1;
            let fac = (fac11 / 0.9).clamp(1.0 / 6.0, 3.0);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            last_rejected = false;
            h = hnew;
        } else {
            stats.rejected += 1;
            h /= (fac11 / 0.9).min(3.0);
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let lam = Complex64::new(-0.3, 2.0);
        let opts = OdeOptions::new(1e-12);
        let (y, st) = integrate(
            |_, y, dy| dy[0] = lam * y[0],
            0.0,
            3.0,
            &[Complex64::new(1.0, 0.0)],
            &opts,
            |_| f64::INFINITY,
            |_, _| Ok(()),
        )
        .unwrap();
        let exact = (lam * 3.0).exp();
        assert!((y[0] - exact).norm() < 1e-11, "{} vs {}", y[0], exact);
        assert!(st.accepted > 0);
    }

    #[test]
    fn backward_integration_returns() {
        let opts = OdeOptions::new(1e-12);
        let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = y[1];
            dy[1] = -y[0] * (1.0 + t * t);
        };
        let y0 = [Complex64::new(1.0, 0.5), Complex64::new(0.0, -1.0)];
        let (y1, _) = integrate(rhs, 0.0, 2.0, &y0, &opts, |_| f64::INFINITY, |_, _| Ok(())).unwrap();
        let (y2, _) = integrate(rhs, 2.0, 0.0, &y1, &opts, |_| f64::INFINITY, |_, _| Ok(())).unwrap();
        for i in 0..2 {
            assert!((y2[i] - y0[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn step_cap_is_respected() {
        let opts = OdeOptions::new(1e-8);
        let mut last = 0.0;
        let mut biggest: f64 = 0.0;
        integrate(
            |_, _, dy| dy[0] = Complex64::new(1.0, 0.0),
            0.0,
            1.0,
            &[Complex64::new(0.0, 0.0)],
            &opts,
            |_| 0.05,
            |t, _| {
                biggest = biggest.max(t - last);
                last = t;
                Ok(())
            },
        )
        .unwrap();
        assert!(biggest <= 0.05 + 1e-15);
    }
}
