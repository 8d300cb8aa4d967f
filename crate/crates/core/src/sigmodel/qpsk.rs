use rand::Rng;

use super::{SignalError, SymbolStream};
use crate::numerics::Cplx;

pub const QPSK_AMPLITUDE: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Gray map: the first bit selects the sign of the quadrature part, the second
/// the sign of the in-phase part (00 → +1+j, 01 → −1+j, 11 → −1−j, 10 → +1−j).
pub fn qpsk_symbol(b0: u8, b1: u8) -> Cplx {
    let re = if b1 == 0 { QPSK_AMPLITUDE } else { -QPSK_AMPLITUDE };
    let im = if b0 == 0 { QPSK_AMPLITUDE } else { -QPSK_AMPLITUDE };
    Cplx::new(re, im)
}

pub fn qpsk_modulate(bits: &[u8]) -> Result<SymbolStream, SignalError> {
    if !bits.len().is_multiple_of(2) {
        return Err(SignalError::OddBitCount(bits.len()));
    }
    let symbols = bits.chunks_exact(2).map(|b| qpsk_symbol(b[0], b[1])).collect();
    Ok(SymbolStream {
        symbols,
        bits: bits.to_vec(),
    })
}

/// Nearest-quadrant decisions. A zero component decides toward the positive
/// half-plane.
pub fn qpsk_demodulate(symbols: &[Cplx]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(2 * symbols.len());
    for z in symbols {
        bits.push(u8::from(z.im < 0.0));
        bits.push(u8::from(z.re < 0.0));
    }
    bits
}

pub fn random_symbols<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SymbolStream {
    let bits: Vec<u8> = (0..2 * n).map(|_| rng.random_range(0..2u8)).collect();
    qpsk_modulate(&bits).expect("even bit count")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gray_mapping() {
        let s = qpsk_modulate(&[0, 0, 0, 1, 1, 1, 1, 0]).unwrap().symbols;
        let a = QPSK_AMPLITUDE;
        assert_eq!(s, vec![Cplx::new(a, a), Cplx::new(-a, a), Cplx::new(-a, -a), Cplx::new(a, -a)]);
        assert!((s[0].norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadrant_decision() {
        assert_eq!(qpsk_demodulate(&[Cplx::new(0.9, -0.2)]), vec![1, 0]);
        assert_eq!(qpsk_demodulate(&[Cplx::new(0.0, 0.0)]), vec![0, 0]);
    }

    #[test]
    fn odd_bits_rejected() {
        assert_eq!(qpsk_modulate(&[1, 0, 1]), Err(SignalError::OddBitCount(3)));
    }

    #[test]
    fn noiseless_round_trip_and_unit_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_symbols(&mut rng, 5000);
        assert_eq!(qpsk_demodulate(&s.symbols), s.bits);
        let p: f64 = s.symbols.iter().map(|z| z.norm_sqr()).sum::<f64>() / s.len() as f64;
        assert!((p - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn demod_inverts_mod(bits in proptest::collection::vec(0u8..2, 0..200)) {
            let bits = if bits.len() % 2 == 1 { &bits[1..] } else { &bits[..] };
            let s = qpsk_modulate(bits).unwrap();
            prop_assert_eq!(qpsk_demodulate(&s.symbols), bits.to_vec());
        }
    }
}
