//! 256-bit word arithmetic with the execution semantics of the target
//! machine: everything wraps modulo 2^256, division and modulo by zero
//! yield zero, shifts past the word size saturate.

use ethnum::{I256, U256};
use num_bigint::BigUint;

pub type Word = U256;

pub fn bool_word(b: bool) -> Word {
    if b {
        U256::ONE
    } else {
        U256::ZERO
    }
}

fn to_big(a: Word) -> BigUint {
    BigUint::from_bytes_be(&a.to_be_bytes())
}

fn from_big(b: &BigUint) -> Word {
    let bytes = b.to_bytes_be();
    let mut buf = [0u8; 32];
    let n = bytes.len().min(32);
    buf[32 - n..].copy_from_slice(&bytes[bytes.len() - n..]);
    U256::from_be_bytes(buf)
}

pub fn add(a: Word, b: Word) -> Word {
    a.wrapping_add(b)
}

pub fn mul(a: Word, b: Word) -> Word {
    a.wrapping_mul(b)
}

pub fn sub(a: Word, b: Word) -> Word {
    a.wrapping_sub(b)
}

pub fn div(a: Word, b: Word) -> Word {
    if b == U256::ZERO {
        U256::ZERO
    } else {
        a / b
    }
}

pub fn sdiv(a: Word, b: Word) -> Word {
    let (a, b) = (a.as_i256(), b.as_i256());
    if b == I256::ZERO {
        U256::ZERO
    } else if a == I256::MIN && b == -I256::ONE {
        I256::MIN.as_u256()
    } else {
        (a / b).as_u256()
    }
}

pub fn rem(a: Word, b: Word) -> Word {
    if b == U256::ZERO {
        U256::ZERO
    } else {
        a % b
    }
}

pub fn srem(a: Word, b: Word) -> Word {
    let (a, b) = (a.as_i256(), b.as_i256());
    if b == I256::ZERO {
        U256::ZERO
    } else {
        (a % b).as_u256()
    }
}

pub fn addmod(a: Word, b: Word, n: Word) -> Word {
    if n == U256::ZERO {
        return U256::ZERO;
    }
    from_big(&((to_big(a) + to_big(b)) % to_big(n)))
}

pub fn mulmod(a: Word, b: Word, n: Word) -> Word {
    if n == U256::ZERO {
        return U256::ZERO;
    }
    from_big(&((to_big(a) * to_big(b)) % to_big(n)))
}

pub fn exp(mut base: Word, mut power: Word) -> Word {
    let mut acc = U256::ONE;
    while power != U256::ZERO {
        if power & U256::ONE == U256::ONE {
            acc = acc.wrapping_mul(base);
        }
        base = base.wrapping_mul(base);
        power >>= 1;
    }
    acc
}

pub fn signextend(b: Word, x: Word) -> Word {
    if b >= U256::from(31u32) {
        return x;
    }
    let bit = 8 * b.as_usize() + 7;
    let mask = (U256::ONE << bit) - 1;
    if x & (U256::ONE << bit) != U256::ZERO {
        x | !mask
    } else {
        x & mask
    }
}

pub fn byte(i: Word, x: Word) -> Word {
    if i >= U256::from(32u32) {
        return U256::ZERO;
    }
    let shift = 8 * (31 - i.as_usize());
    (x >> shift) & U256::from(0xffu32)
}

pub fn shl(shift: Word, value: Word) -> Word {
    if shift >= U256::from(256u32) {
        U256::ZERO
    } else {
        value << shift.as_u32()
    }
}

pub fn shr(shift: Word, value: Word) -> Word {
    if shift >= U256::from(256u32) {
        U256::ZERO
    } else {
        value >> shift.as_u32()
    }
}

pub fn sar(shift: Word, value: Word) -> Word {
    let negative = value.as_i256() < I256::ZERO;
    if shift >= U256::from(256u32) {
        return if negative { U256::MAX } else { U256::ZERO };
    }
    (value.as_i256() >> shift.as_u32()).as_u256()
}

pub fn lt(a: Word, b: Word) -> Word {
    bool_word(a < b)
}

pub fn gt(a: Word, b: Word) -> Word {
    bool_word(a > b)
}

pub fn slt(a: Word, b: Word) -> Word {
    bool_word(a.as_i256() < b.as_i256())
}

pub fn sgt(a: Word, b: Word) -> Word {
    bool_word(a.as_i256() > b.as_i256())
}

pub fn eq(a: Word, b: Word) -> Word {
    bool_word(a == b)
}

pub fn iszero(a: Word) -> Word {
    bool_word(a == U256::ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping_and_zero_division() {
        assert_eq!(add(U256::MAX, U256::ONE), U256::ZERO);
        assert_eq!(div(U256::from(7u32), U256::ZERO), U256::ZERO);
        assert_eq!(rem(U256::from(7u32), U256::ZERO), U256::ZERO);
        assert_eq!(sdiv(U256::from(7u32), U256::ZERO), U256::ZERO);
    }

    #[test]
    fn signed_ops() {
        let minus_one = U256::MAX;
        assert_eq!(sdiv(minus_one, U256::ONE), minus_one);
        assert_eq!(slt(minus_one, U256::ZERO), U256::ONE);
        assert_eq!(sgt(U256::ONE, minus_one), U256::ONE);
        assert_eq!(sar(U256::ONE, minus_one), minus_one);
        assert_eq!(shr(U256::ONE, minus_one), U256::MAX >> 1);
    }

    #[test]
    fn modular_ops_use_wide_intermediates() {
        // (2^255 + 2^255) mod 3: the sum wraps 256 bits
        let big = U256::ONE << 255;
        assert_eq!(addmod(big, big, U256::from(3u32)), U256::from(1u32));
        assert_eq!(
            mulmod(U256::MAX, U256::MAX, U256::MAX),
            U256::ZERO
        );
    }

    #[test]
    fn shifts_saturate() {
        assert_eq!(shl(U256::from(256u32), U256::ONE), U256::ZERO);
        assert_eq!(shl(U256::from(4u32), U256::ONE), U256::from(16u32));
        assert_eq!(byte(U256::from(31u32), U256::from(0xabu32)), U256::from(0xabu32));
        assert_eq!(byte(U256::from(40u32), U256::MAX), U256::ZERO);
    }

    #[test]
    fn signextend_widths() {
        // 0xff as a signed byte is -1
        assert_eq!(signextend(U256::ZERO, U256::from(0xffu32)), U256::MAX);
        assert_eq!(signextend(U256::ZERO, U256::from(0x7fu32)), U256::from(0x7fu32));
        assert_eq!(
            signextend(U256::ONE, U256::from(0xff00u32)),
            U256::MAX - U256::from(0xffu32)
        );
    }
}
