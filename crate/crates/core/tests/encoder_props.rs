mod common;

use cqpolar::transform::{encode, generator_matrix};
use proptest::prelude::*;

fn bits_of_len() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
    (0u32..=7).prop_flat_map(|l| {
        let n = 1usize << l;
        (prop::collection::vec(0u8..2, n), prop::collection::vec(0u8..2, n))
    })
}

proptest! {
    #[test]
    fn encoding_is_linear((u, v) in bits_of_len()) {
        let sum: Vec<u8> = u.iter().zip(&v).map(|(a, b)| a ^ b).collect();
        let xu = encode(&u).unwrap();
        let xv = encode(&v).unwrap();
        let expected: Vec<u8> = xu.iter().zip(&xv).map(|(a, b)| a ^ b).collect();
        prop_assert_eq!(encode(&sum).unwrap(), expected);
    }

    #[test]
    fn encoding_is_an_involution((u, _) in bits_of_len()) {
        prop_assert_eq!(encode(&encode(&u).unwrap()).unwrap(), u);
    }

    #[test]
    fn encoding_matches_kronecker_generator((u, _) in bits_of_len()) {
        let levels = u.len().trailing_zeros();
        prop_assert_eq!(encode(&u).unwrap(), common::gf2_mul(&u, &common::generator(levels)));
    }
}

#[test]
fn generator_matrix_agrees_with_oracle() {
    for levels in 0..=6u32 {
        assert_eq!(generator_matrix(1 << levels).unwrap(), common::generator(levels));
    }
}
