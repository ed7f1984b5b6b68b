//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Distance in representable doubles; `0.0` and `-0.0` coincide.
pub fn ulps_f64(a: f64, b: f64) -> u64 {
    let key = |v: f64| {
        let bits = v.to_bits() as i64;
        if bits < 0 {
            i64::MIN.wrapping_sub(bits) as i128
        } else {
            bits as i128
        }
    };
    key(a).abs_diff(key(b)) as u64
}

fn split(x: f64) -> (bool, u64, i32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7FF) as i32;
    let frac = bits & ((1 << 52) - 1);
    let (m, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1 << 52), exp - 1075)
    };
    (bits >> 63 == 1, m, e)
}

/// `x^k / k!` rounded once to the nearest double, from exact integers.
pub fn exact_term(x: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if x == 0.0 {
        return 0.0;
    }
    let (neg, m, e) = split(x);
    let num = BigUint::from(m).pow(k);
    let den: BigUint = (1..=k).fold(BigUint::one(), |acc, i| acc * i);
    let scale = e * k as i32;
    let shift = (70 + den.bits() as i64 - num.bits() as i64).max(0) as u32;
    let scaled = num << shift;
    let q = &scaled / &den;
    let inexact = !(&scaled % &den).is_zero();
    let len = q.bits() as u32;
    let drop = len - 53;
    let kept = &q >> drop;
    let rest = &q - (&kept << drop);
    let half = BigUint::one() << (drop - 1);
    let round_up = rest > half || (rest == half && (inexact || kept.bit(0)));
    let kept = kept.to_u64().unwrap() + u64::from(round_up);
    let v = kept as f64 * 2f64.powi(drop as i32 + scale - shift as i32);
    if neg && k % 2 == 1 {
        -v
    } else {
        v
    }
}

#[test]
fn exact_term_spot_values() {
    assert_eq!(exact_term(1.0, 3), 1.0 / 6.0);
    assert_eq!(exact_term(2.0, 2), 2.0);
    assert_eq!(exact_term(-0.5, 3), -0.125 / 6.0);
    assert_eq!(exact_term(3.0, 4), 81.0 / 24.0);
    assert_eq!(ulps_f64(1.0, 1.0 + f64::EPSILON), 1);
    assert_eq!(ulps_f64(0.0, -0.0), 0);
}
