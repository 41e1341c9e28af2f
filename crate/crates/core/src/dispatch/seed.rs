//! Per-request tie-break key derived from the user identity and the user's IP.

use crate::ids::parse_ipv4;

use super::DispatchError;

pub const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub const fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET_BASIS;
    let mut i = 0;
    while i < bytes.len() {
        hash ^= bytes[i] as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
        i += 1;
    }
    hash
}

pub fn seed_from_user(user_id: &str) -> u64 {
    fnv1a64(user_id.as_bytes())
}

pub fn seed_from_ip(external_ip: &str) -> Result<u64, DispatchError> {
    if parse_ipv4(external_ip).is_none() {
        return Err(DispatchError::MalformedIp(external_ip.to_string()));
    }
    Ok(fnv1a64(external_ip.as_bytes()))
}

pub fn combine_seeds(user_seed: u64, ip_seed: u64) -> u64 {
    user_seed ^ ip_seed.rotate_left(32)
}

/// Tie-break key for a request: `combine_seeds(seed_from_user, seed_from_ip)`.
pub fn request_key(user_id: &str, external_ip: &str) -> Result<u64, DispatchError> {
    Ok(combine_seeds(seed_from_user(user_id), seed_from_ip(external_ip)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Straight transcription of the published recurrence with u128 arithmetic,
    // kept apart from the wrapping-mul implementation above.
    fn fnv_oracle(bytes: &[u8]) -> u64 {
        let modulus: u128 = 1 << 64;
        let mut h: u128 = 14_695_981_039_346_656_037;
        for &b in bytes {
            h = ((h ^ b as u128) * 1_099_511_628_211) % modulus;
        }
        h as u64
    }

    // Rotation written out as two shifts over u128.
    fn combine_oracle(user: u64, ip: u64) -> u64 {
        let wide = ip as u128;
        let rotated = ((wide << 32) | (wide >> 32)) as u64;
        user ^ rotated
    }

    #[test]
    fn empty_user_is_offset_basis() {
        assert_eq!(seed_from_user(""), 14_695_981_039_346_656_037);
        assert_eq!(seed_from_user(""), 0xcbf29ce484222325);
    }

    #[test]
    fn single_byte_matches_oracle() {
        assert_eq!(fnv_oracle(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(seed_from_user("a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn ip_seeds() {
        let d = seed_from_ip("10.20.30.40").unwrap();
        assert_eq!(d, seed_from_ip("10.20.30.40").unwrap());
        assert_eq!(d, fnv_oracle(b"10.20.30.40"));
        assert_ne!(d, seed_from_ip("10.20.30.41").unwrap());
        assert!(matches!(seed_from_ip(""), Err(DispatchError::MalformedIp(_))));
        assert!(matches!(seed_from_ip("10.20.30"), Err(DispatchError::MalformedIp(_))));
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine_seeds(0, 0), 0);
        assert_eq!(combine_seeds(0x1234, 0), 0x1234);
        let (u, i) = (0xcbf29ce484222325, 0xaf63dc4c8601ec8c);
        assert_eq!(combine_seeds(u, i), combine_oracle(u, i));
    }

    proptest::proptest! {
        #[test]
        fn fnv_matches_oracle(bytes in proptest::collection::vec(proptest::num::u8::ANY, 0..64)) {
            proptest::prop_assert_eq!(fnv1a64(&bytes), fnv_oracle(&bytes));
        }

        #[test]
        fn combine_matches_oracle(u: u64, i: u64) {
            proptest::prop_assert_eq!(combine_seeds(u, i), combine_oracle(u, i));
        }
    }
}
