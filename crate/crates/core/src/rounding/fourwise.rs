//! An explicit 4-wise independent family over `{1, -1, i, -i}^d`.
//!
//! Each member is a cubic `p(x) = c0 + c1 x + c2 x^2 + c3 x^3` over GF(2^m);
//! coordinate `r` reads two bits of `p(r)`. Values of a random cubic at any
//! four distinct points are independent and uniform on GF(2^m), so any four
//! coordinates of `z` are independent and uniform on the fourth roots of unity.

use crate::linalg::C64;
use crate::rng::quarter_turn;

/// Irreducible polynomials over GF(2) for degrees 2..=16 (bit `k` is `x^k`).
const IRREDUCIBLE: [u32; 15] = [
    0b111, 0b1011, 0x13, 0x25, 0x43, 0x83, 0x11B, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443, 0x8003, 0x1100B,
];

#[derive(Clone, Debug)]
pub struct FourwiseFamily {
    d: usize,
    m: u32,
    modulus: u32,
}

fn gf_mul(mut a: u32, mut b: u32, m: u32, modulus: u32) -> u32 {
    let mut acc = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> m & 1 == 1 {
            a ^= modulus;
        }
    }
    acc
}

pub fn fourwise_z_family(d: usize) -> FourwiseFamily {
    let mut m = 2;
    while (1usize << m) < d {
        m += 1;
    }
    assert!(m <= 16, "dimension {d} too large for the four-wise family");
    FourwiseFamily { d, m, modulus: IRREDUCIBLE[(m - 2) as usize] }
}

impl FourwiseFamily {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        1usize << (4 * self.m)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Member `index` of the family, `index < len()`.
    pub fn member(&self, index: usize) -> Vec<C64> {
        let mask = (1u32 << self.m) - 1;
        let c: Vec<u32> = (0..4).map(|k| (index >> (k * self.m as usize)) as u32 & mask).collect();
        (0..self.d as u32)
            .map(|x| {
                let mut v = c[3];
                for k in (0..3).rev() {
                    v = gf_mul(v, x, self.m, self.modulus) ^ c[k];
                }
                let sigma = (v & 1) as u8;
                let tau = (v >> 1 & 1) as u8;
                // sigma picks the sign, tau picks between the real and imaginary axis.
                quarter_turn(2 * sigma + tau)
            })
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<C64>> + '_ {
        (0..self.len()).map(|i| self.member(i))
    }
}
