//! In-place radix-2 FFT for power-of-two lengths.

use core::f64::consts::PI;

use crate::error::invalid;
use crate::{Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `X_k = Σ x_n e^{−2πikn/N}`
    Forward,
    /// `x_n = Σ X_k e^{+2πikn/N}`, unnormalized.
    Inverse,
}

/// Transforms `data` in place. The length must be a power of two.
pub fn fft(data: &mut [C64], direction: Direction) -> Result<()> {
    let n = data.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(invalid!("FFT length must be a power of two, got {n}"));
    }
    if n == 1 {
        return Ok(());
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                // Direct twiddles avoid accumulated rounding from recurrences.
                let w = C64::from_polar(1.0, step * k as f64);
                let u = data[start + k];
                let v = data[start + k + half] * w;
                data[start + k] = u + v;
                data[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// Largest power of two not exceeding `n` (0 for `n = 0`).
pub fn pow2_floor(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}
