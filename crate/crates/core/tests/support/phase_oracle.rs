//! Arbitrary-precision reference for the backscatter phase `4π·f·d / c`.
//!
//! Every f64 input is an exact binary rational, so `d²` is formed exactly,
//! its square root is taken as an integer square root at 2^-256 resolution,
//! and the number of turns `2·f·d / c` is reduced modulo one exactly. Only
//! the final scaling by 2π happens in floating point.

use num_bigint::{BigInt, BigUint, Sign};

const FRAC_BITS: u64 = 256;

/// `v = m · 2^e` with integer `m`.
fn split(v: f64) -> (BigInt, i64) {
    if v == 0.0 {
        return (BigInt::from(0), 0);
    }
    let bits = v.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let sign = if v < 0.0 { Sign::Minus } else { Sign::Plus };
    (BigInt::from_biguint(sign, BigUint::from(mant)), e)
}

/// `v · 2^shift` as an exact integer (`shift` large enough to clear the binary point).
fn scaled(v: f64, shift: i64) -> BigInt {
    let (m, e) = split(v);
    let total = e + shift;
    assert!(total >= 0, "shift too small for {v}");
    m << (total as usize)
}

pub fn exact_phase(px: f64, py: f64, ax: f64, ay: f64, f: f64) -> f64 {
    // coordinates in units of 2^-1100 are integers for every finite f64 ≥ 2^-1074
    const S: i64 = 1100;
    let dx = scaled(px, S) - scaled(ax, S);
    let dy = scaled(py, S) - scaled(ay, S);
    let d2 = &dx * &dx + &dy * &dy; // d² · 2^(2S)
                                    // d · 2^FRAC_BITS = sqrt(d² · 2^(2S) · 2^(2·FRAC_BITS)) / 2^S
    let root = (d2.magnitude() << (2 * FRAC_BITS as usize)).sqrt() >> (S as usize);
    assert!(
        f > 0.0 && f.fract() == 0.0 && f < 2f64.powi(53),
        "frequency must be a positive integer in Hz"
    );
    let f_int = BigUint::from(f as u64);
    let c = BigUint::from(299_792_458u64);
    let turns = (BigUint::from(2u32) * f_int * root) / c; // turns · 2^FRAC_BITS
    let frac = turns & ((BigUint::from(1u32) << FRAC_BITS as usize) - BigUint::from(1u32));
    // top 64 bits of the fractional part
    let top: u64 = (frac >> (FRAC_BITS as usize - 64))
        .try_into()
        .expect("fits in 64 bits");
    (top as f64 / 2f64.powi(64)) * std::f64::consts::TAU
}

/// Circular distance between two phases.
pub fn circ_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}
