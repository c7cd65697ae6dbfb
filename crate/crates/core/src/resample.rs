//! Rational-ratio polyphase resampling with a Kaiser-windowed sinc kernel.
//!
//! The kernel is zero-phase: output sample `m` sits at input time
//! `m * from / to`, so no group delay has to be compensated by callers.

use std::f64::consts::PI;

/// Stop-band attenuation the kernel is designed for, in dB.
const STOPBAND_DB: f64 = 95.0;
/// Pass band ends at this fraction of the lower Nyquist frequency; the stop band starts at Nyquist.
const PASSBAND_FRACTION: f64 = 0.9;
/// Above this many coefficients the kernel is evaluated per tap instead of tabulated.
const MAX_TABLE_LEN: usize = 1 << 22;

#[derive(Debug, Clone)]
pub struct Resampler {
    up: usize,
    down: usize,
    /// Taps on each side of the output instant, per phase.
    half_taps: usize,
    kernel: Kernel,
    table: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct Kernel {
    up: f64,
    /// Cutoff as a fraction of the upsampled rate.
    cutoff: f64,
    beta: f64,
    i0_beta: f64,
    half_width: f64,
}

impl Kernel {
    /// Kernel value at `tau` upsampled-rate samples from the centre.
    fn at(&self, tau: f64) -> f64 {
        let u = tau / self.half_width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(self.beta * (1.0 - u * u).sqrt()) / self.i0_beta;
        self.up * 2.0 * self.cutoff * sinc(2.0 * self.cutoff * tau) * window
    }
}

impl Resampler {
    pub fn new(from_hz: u32, to_hz: u32) -> Self {
        assert!(from_hz > 0 && to_hz > 0, "sample rates must be positive");
        let g = gcd(from_hz as u64, to_hz as u64);
        let up = (to_hz as u64 / g) as usize;
        let down = (from_hz as u64 / g) as usize;

        let upsampled = up as f64 * from_hz as f64;
        let nyquist = from_hz.min(to_hz) as f64 / 2.0;
        let transition = (1.0 - PASSBAND_FRACTION) * nyquist;
        let cutoff = (nyquist - transition / 2.0) / upsampled;

        // Kaiser's estimates for the window length and shape.
        let total_taps = (STOPBAND_DB - 7.95) / (14.36 * transition / upsampled);
        let half_taps = ((total_taps / up as f64) / 2.0).ceil().max(1.0) as usize;
        let beta = 0.1102 * (STOPBAND_DB - 8.7);

        let kernel = Kernel {
            up: up as f64,
            cutoff,
            beta,
            i0_beta: bessel_i0(beta),
            half_width: (half_taps * up) as f64,
        };

        let table_len = up * 2 * half_taps;
        let table = (up != down && table_len <= MAX_TABLE_LEN).then(|| {
            let mut table = Vec::with_capacity(table_len);
            for phase in 0..up {
                for j in 0..2 * half_taps {
                    let tau = phase as f64 + (j as f64 - half_taps as f64) * up as f64;
                    table.push(kernel.at(tau));
                }
            }
            table
        });

        Resampler {
            up,
            down,
            half_taps,
            kernel,
            table,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.up == self.down
    }

    /// Output length for `input_len` input samples.
    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len * self.up).div_ceil(self.down)
    }

    pub fn process(&self, input: &[f32]) -> Vec<f32> {
        if self.is_identity() {
            return input.to_vec();
        }
        let taps = 2 * self.half_taps;
        let out_len = self.output_len(input.len());
        let mut out = Vec::with_capacity(out_len);
        for m in 0..out_len {
            let p = m * self.down;
            let phase = p % self.up;
            let base = (p / self.up) as isize;
            let mut acc = 0.0f64;
            for j in 0..taps {
                let k = base + self.half_taps as isize - j as isize;
                if k < 0 || k as usize >= input.len() {
                    continue;
                }
                let coeff = match &self.table {
                    Some(t) => t[phase * taps + j],
                    None => self.kernel.at(
                        phase as f64 + (j as f64 - self.half_taps as f64) * self.up as f64,
                    ),
                };
                acc += input[k as usize] as f64 * coeff;
            }
            out.push(acc as f32);
        }
        out
    }
}

/// Length of `input_len` samples after conversion from `from_hz` to `to_hz`.
pub fn resampled_len(from_hz: u32, to_hz: u32, input_len: usize) -> usize {
    let g = gcd(from_hz as u64, to_hz as u64);
    let (up, down) = ((to_hz as u64 / g) as usize, (from_hz as u64 / g) as usize);
    (input_len * up).div_ceil(down)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let r = half / k as f64;
        term *= r * r;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
