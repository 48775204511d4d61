use serde::{Deserialize, Serialize};

/// The four finalization hashes, in selector-code order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalHashFamily {
    Blake256 = 0,
    Groestl256 = 1,
    Jh256 = 2,
    Skein256 = 3,
}

impl FinalHashFamily {
    pub const ALL: [FinalHashFamily; 4] = [
        FinalHashFamily::Blake256,
        FinalHashFamily::Groestl256,
        FinalHashFamily::Jh256,
        FinalHashFamily::Skein256,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Family chosen by the two low bits of a state byte.
    pub fn from_selector(byte: u8) -> Self {
        Self::ALL[(byte & 3) as usize]
    }

    pub fn name(self) -> &'static str {
        match self {
            FinalHashFamily::Blake256 => "blake256",
            FinalHashFamily::Groestl256 => "groestl256",
            FinalHashFamily::Jh256 => "jh256",
            FinalHashFamily::Skein256 => "skein256",
        }
    }
}

/// 256-bit digest of `data` under `family`.
///
/// BLAKE-256 is the 14-round submission, Groestl and JH the final-round
/// tweaked versions, and Skein is Skein-512 truncated to 256 bits, as in
/// CryptoNote.
pub fn hash_final(family: FinalHashFamily, data: &[u8]) -> [u8; 32] {
    let mut out = [0u8; 32];
    match family {
        FinalHashFamily::Blake256 => {
            use blake_hash::digest::Digest;
            out.copy_from_slice(&blake_hash::Blake256::digest(data));
        }
        FinalHashFamily::Groestl256 => {
            use groestl::Digest;
            out.copy_from_slice(&groestl::Groestl256::digest(data));
        }
        FinalHashFamily::Jh256 => {
            use jh::Digest;
            out.copy_from_slice(&jh::Jh256::digest(data));
        }
        FinalHashFamily::Skein256 => {
            use skein::Digest;
            out.copy_from_slice(&skein::Skein512_256::digest(data));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_stable() {
        for (i, fam) in FinalHashFamily::ALL.iter().enumerate() {
            assert_eq!(fam.code() as usize, i);
            assert_eq!(FinalHashFamily::from_code(i as u8), Some(*fam));
            assert_eq!(FinalHashFamily::from_selector(0xf0 | i as u8), *fam);
        }
        assert_eq!(FinalHashFamily::from_code(4), None);
    }

    #[test]
    fn families_differ() {
        let d: Vec<_> = FinalHashFamily::ALL
            .iter()
            .map(|f| hash_final(*f, b"x"))
            .collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(d[i], d[j]);
            }
        }
    }
}
