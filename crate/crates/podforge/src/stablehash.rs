//! FNV-1a hashing with pinned constants. Used wherever a hash feeds an
//! observable output (hash embeddings, offline providers), so results are
//! stable across runs, platforms, and compiler versions. `std` hashers
//! are randomly seeded and must not be used for those purposes.

pub(crate) const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
pub(crate) const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Extends an existing hash state with more bytes, for hashing several
/// fields without allocating a joined buffer.
pub(crate) fn fnv1a64_extend(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn extend_matches_joined() {
        let joined = fnv1a64(b"hello world");
        let split = fnv1a64_extend(fnv1a64(b"hello "), b"world");
        assert_eq!(joined, split);
    }
}
