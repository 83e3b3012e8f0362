//! Deterministic test provider for oracle tests and conformance vectors.
//!
//! NOT SECURE. The group is the order-q subgroup of quadratic residues
//! modulo a 62-bit safe prime, small enough that discrete logs are cheap.
//! Its value is that every operation is a short, dependency-free, fully
//! deterministic computation that independent implementations can reproduce
//! byte for byte.
//!
//! - DH: `shared = peer^x mod p`, hashed to 32 bytes.
//! - Signatures: Schnorr with a derandomized nonce, `(R, s)` as 16 bytes.
//! - AEAD: SHA-256 keystream XOR plus a 16-byte hash tag.
//! - KDF: the same HKDF-SHA256 as the production provider.

use sha2::{Digest, Sha256};

use super::{
    hkdf_sha256, CryptoError, CryptoProvider, KeyPair, PrivateKey, PublicKey, SharedSecret,
    Signature, SymmetricKey, SEED_LEN,
};

/// Safe prime p = 2q + 1, the largest below 2^62.
const P: u64 = 4_611_686_018_427_377_339;
/// Prime order of the quadratic-residue subgroup.
const Q: u64 = 2_305_843_009_213_688_669;
/// Generator of the order-q subgroup (4 = 2^2 is always a QR).
const G: u64 = 4;

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    base %= P;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        exp >>= 1;
    }
    acc
}

fn hash_to_scalar(label: &[u8], parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new_with_prefix(label);
    for part in parts {
        h.update((part.len() as u32).to_be_bytes());
        h.update(part);
    }
    let digest = h.finalize();
    let raw = u64::from_be_bytes(digest[..8].try_into().unwrap());
    1 + raw % (Q - 1)
}

fn decode_element(bytes: &[u8]) -> Result<u64, CryptoError> {
    let raw: [u8; 8] = bytes.try_into().map_err(|_| CryptoError::BadPublicKey)?;
    let v = u64::from_be_bytes(raw);
    // Valid elements are subgroup members other than the identity.
    if v <= 1 || v >= P || pow_mod(v, Q) != 1 {
        return Err(CryptoError::BadPublicKey);
    }
    Ok(v)
}

pub struct TestProvider;

impl CryptoProvider for TestProvider {
    fn name(&self) -> &'static str {
        "test"
    }

    fn generate_keypair(&self, seed: &[u8]) -> Result<KeyPair, CryptoError> {
        if seed.len() != SEED_LEN {
            return Err(CryptoError::BadSeed);
        }
        let x = hash_to_scalar(b"metasim-test-keygen", &[seed]);
        let public = pow_mod(G, x);
        Ok(KeyPair {
            private: PrivateKey(x.to_be_bytes().to_vec()),
            public: PublicKey(public.to_be_bytes().to_vec()),
        })
    }

    fn dh(
        &self,
        my_private: &PrivateKey,
        peer_public: &PublicKey,
    ) -> Result<SharedSecret, CryptoError> {
        let x = u64::from_be_bytes(
            my_private
                .as_bytes()
                .try_into()
                .map_err(|_| CryptoError::BadPublicKey)?,
        );
        let peer = decode_element(peer_public.as_bytes())?;
        let shared = pow_mod(peer, x);
        let digest = Sha256::new_with_prefix(b"metasim-test-dh")
            .chain_update(shared.to_be_bytes())
            .finalize();
        Ok(SharedSecret(digest.to_vec()))
    }

    fn sign(&self, private: &PrivateKey, message: &[u8]) -> Signature {
        let x = u64::from_be_bytes(private.as_bytes().try_into().expect("8-byte scalar"));
        let public = pow_mod(G, x);
        let k = hash_to_scalar(b"metasim-test-nonce", &[private.as_bytes(), message]);
        let r = pow_mod(G, k);
        let e = hash_to_scalar(
            b"metasim-test-challenge",
            &[&r.to_be_bytes(), &public.to_be_bytes(), message],
        );
        let s = ((k as u128 + (e as u128 * x as u128) % Q as u128) % Q as u128) as u64;
        let mut out = Vec::with_capacity(16);
        out.extend_from_slice(&r.to_be_bytes());
        out.extend_from_slice(&s.to_be_bytes());
        Signature(out)
    }

    fn verify(&self, public: &PublicKey, message: &[u8], sig: &Signature) -> bool {
        let Ok(pk) = decode_element(public.as_bytes()) else {
            return false;
        };
        if sig.as_bytes().len() != 16 {
            return false;
        }
        let r = u64::from_be_bytes(sig.as_bytes()[..8].try_into().unwrap());
        let s = u64::from_be_bytes(sig.as_bytes()[8..].try_into().unwrap());
        if r == 0 || r >= P || s >= Q {
            return false;
        }
        let e = hash_to_scalar(
            b"metasim-test-challenge",
            &[&r.to_be_bytes(), &pk.to_be_bytes(), message],
        );
        // g^s == R * pk^e
        pow_mod(G, s) == mul_mod(r, pow_mod(pk, e))
    }

    fn kdf(&self, inputs: &[&[u8]], info: &[u8], out_len: usize) -> Result<Vec<u8>, CryptoError> {
        hkdf_sha256(inputs, info, out_len)
    }

    fn aead_seal(
        &self,
        key: &SymmetricKey,
        nonce: &[u8; 12],
        plaintext: &[u8],
        aad: &[u8],
    ) -> Vec<u8> {
        let mut out = xor_keystream(key, nonce, plaintext);
        out.extend_from_slice(&tag(key, nonce, aad, &out));
        out
    }

    fn aead_open(
        &self,
        key: &SymmetricKey,
        nonce: &[u8; 12],
        ciphertext: &[u8],
        aad: &[u8],
    ) -> Result<Vec<u8>, CryptoError> {
        if ciphertext.len() < 16 {
            return Err(CryptoError::AeadAuthFail);
        }
        let (body, received) = ciphertext.split_at(ciphertext.len() - 16);
        if tag(key, nonce, aad, body) != received {
            return Err(CryptoError::AeadAuthFail);
        }
        Ok(xor_keystream(key, nonce, body))
    }
}

fn xor_keystream(key: &SymmetricKey, nonce: &[u8; 12], data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len());
    for (block, chunk) in data.chunks(32).enumerate() {
        let stream = Sha256::new_with_prefix(b"metasim-test-stream")
            .chain_update(key.as_bytes())
            .chain_update(nonce)
            .chain_update((block as u32).to_be_bytes())
            .finalize();
        out.extend(chunk.iter().zip(stream.iter()).map(|(d, s)| d ^ s));
    }
    out
}

fn tag(key: &SymmetricKey, nonce: &[u8; 12], aad: &[u8], ciphertext: &[u8]) -> [u8; 16] {
    let digest = Sha256::new_with_prefix(b"metasim-test-tag")
        .chain_update(key.as_bytes())
        .chain_update(nonce)
        .chain_update((aad.len() as u32).to_be_bytes())
        .chain_update(aad)
        .chain_update(ciphertext)
        .finalize();
    digest[..16].try_into().unwrap()
}
