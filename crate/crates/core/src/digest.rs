use sha2::{Digest, Sha256};

/// Hex SHA-256 of a byte string; used to fingerprint configs and plane sets.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
