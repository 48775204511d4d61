use aes::cipher::Array;
use cnhaven_core::primitives::KECCAK_RATE;
use cnhaven_core::{
    aes_expand_keys, aes_round, hash_final, keccak_absorb, keccak_f1600, Block128, FinalHashFamily,
    KeccakState,
};
use proptest::prelude::*;

fn oracle_f1600(lanes: [u64; 25]) -> [u64; 25] {
    let mut s = lanes;
    keccak::Keccak::new().with_f1600(|f| f(&mut s));
    s
}

fn oracle_aes_round(block: [u8; 16], key: [u8; 16]) -> [u8; 16] {
    let mut b = Array::from(block);
    aes::hazmat::cipher_round(&mut b, &Array::from(key));
    b.into()
}

#[test]
fn keccak_zero_state() {
    let out = keccak_f1600(&KeccakState::zero());
    assert_eq!(out.lanes()[0], 0xF125_8F79_40E1_DDE7);
    assert_eq!(out.lanes()[24], 0xEAF1_FF7B_5CEC_A249);
    assert_eq!(*out.lanes(), oracle_f1600([0; 25]));
}

#[test]
fn absorb_matches_reference_sponge() {
    for len in [43usize, 76, 135, 136, 137, 200, 300] {
        let input: Vec<u8> = (0..len).map(|i| (i * 7 + 3) as u8).collect();
        let mut padded = input.clone();
        padded.push(0x01);
        while !padded.len().is_multiple_of(KECCAK_RATE) {
            padded.push(0);
        }
        *padded.last_mut().unwrap() |= 0x80;
        let mut lanes = [0u64; 25];
        for block in padded.chunks(KECCAK_RATE) {
            for (lane, word) in lanes.iter_mut().zip(block.chunks(8)) {
                *lane ^= u64::from_le_bytes(word.try_into().unwrap());
            }
            lanes = oracle_f1600(lanes);
        }
        assert_eq!(*keccak_absorb(&input).unwrap().lanes(), lanes, "len {len}");
    }
}

#[test]
fn aes256_key_schedule_fips197() {
    let key =
        hex::decode("603deb1015ca71be2b73aef0857d77811f352c073b6108d72d9810a30914dff4").unwrap();
    let expect = "603deb1015ca71be2b73aef0857d77811f352c073b6108d72d9810a30914dff4\
                  9ba354118e6925afa51a8b5f2067fcdea8b09c1a93d194cdbe49846eb75d5b9a\
                  d59aecb85bf3c917fee94248de8ebe96b5a9328a2678a647983122292f6c79b3\
                  812c81addadf48ba24360af2fab8b46498c5bfc9bebd198e268c3ba709e04214\
                  68007bacb2df331696e939e46c518d80c814e20476a9fb8a5025c02d59c58239";
    let keys = aes_expand_keys(&key).unwrap();
    let got: String = keys.iter().map(|k| hex::encode(k.as_bytes())).collect();
    assert_eq!(got, expect);
}

#[test]
fn aes_round_zero_vector() {
    assert_eq!(
        aes_round(Block128::ZERO, Block128::ZERO),
        Block128([0x63; 16])
    );
}

#[test]
fn finalization_published_vectors() {
    let cases = [
        (
            FinalHashFamily::Blake256,
            "716f6e863f744b9ac22c97ec7b76ea5f5908bc5b2f67c61510bfc4751384ea7a",
        ),
        (
            FinalHashFamily::Groestl256,
            "1a52d11d550039be16107f9c58db9ebcc417f16f736adb2502567119f0083467",
        ),
        (
            FinalHashFamily::Jh256,
            "46e64619c18bb0a92a5e87185a47eef83ca747b8fcc8e1412921357e326df434",
        ),
        (
            FinalHashFamily::Skein256,
            "39ccc4554a8b31853b9de7a1fe638a24cce6b35a55f2431009e18780335d2621",
        ),
    ];
    for (family, want) in cases {
        assert_eq!(
            hex::encode(hash_final(family, b"")),
            want,
            "{}",
            family.name()
        );
    }
    assert_eq!(
        hex::encode(hash_final(FinalHashFamily::Blake256, &[0])),
        "0ce8d4ef4dd7cd8d62dfded9d4edb0a774ae6a41929a74da23109e8f11139c87"
    );
}

proptest! {
    #[test]
    fn keccak_matches_oracle(lanes in proptest::array::uniform25(any::<u64>())) {
        let out = keccak_f1600(&KeccakState::from_lanes(lanes));
        prop_assert_eq!(*out.lanes(), oracle_f1600(lanes));
    }

    #[test]
    fn aes_round_matches_oracle(block in any::<[u8; 16]>(), key in any::<[u8; 16]>()) {
        prop_assert_eq!(aes_round(Block128(block), Block128(key)).0, oracle_aes_round(block, key));
    }

    #[test]
    fn aes_round_is_affine_in_key(block in any::<[u8; 16]>(), k1 in any::<[u8; 16]>(), k2 in any::<[u8; 16]>()) {
        let (b, k1, k2) = (Block128(block), Block128(k1), Block128(k2));
        prop_assert_eq!(aes_round(b, k1) ^ aes_round(b, k2), k1 ^ k2);
    }
}
