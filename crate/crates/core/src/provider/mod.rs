//! Pluggable cryptographic provider: a DH group, a signature scheme, an AEAD,
//! and a hash-based KDF behind one trait.
//!
//! Two implementations ship with the crate:
//!
//! - [`DefaultProvider`]: X25519 + Ed25519 + ChaCha20-Poly1305 + HKDF-SHA256.
//! - [`TestProvider`]: a tiny deterministic discrete-log group over a 62-bit
//!   safe prime with a Schnorr signature and a hash-stream AEAD. It exists so
//!   protocol oracles and conformance vectors are stable, self-contained, and
//!   fast; it offers no real security.
//!
//! Key material is opaque to callers. A keypair is one logical identity key
//! usable for both DH and sign/verify; providers may keep two linked keypairs
//! behind it.

use std::fmt;

use thiserror::Error;

mod deterministic;
mod production;

pub use deterministic::TestProvider;
pub use production::DefaultProvider;

/// Seed length accepted by [`CryptoProvider::generate_keypair`].
pub const SEED_LEN: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("seed must be exactly {SEED_LEN} bytes")]
    BadSeed,
    #[error("public key is not a valid group element")]
    BadPublicKey,
    #[error("kdf requires at least one input")]
    KdfEmpty,
    #[error("kdf output length unsupported")]
    KdfTooLong,
    #[error("aead authentication failed")]
    AeadAuthFail,
}

impl CryptoError {
    /// Stable wire/transcript code for this error.
    pub fn code(&self) -> &'static str {
        match self {
            CryptoError::BadSeed => "bad-seed",
            CryptoError::BadPublicKey => "bad-public-key",
            CryptoError::KdfEmpty => "kdf-empty",
            CryptoError::KdfTooLong => "kdf-too-long",
            CryptoError::AeadAuthFail => "aead-auth-fail",
        }
    }
}

/// Public half of a keypair. Length is fixed per provider.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PublicKey(pub(crate) Vec<u8>);

impl PublicKey {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", hex::encode(&self.0))
    }
}

/// Private half of a keypair. Never serialized; debug output is redacted.
#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey(pub(crate) Vec<u8>);

impl PrivateKey {
    pub(crate) fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrivateKey(<redacted>)")
    }
}

/// A logical identity keypair, valid for both DH and sign/verify.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub private: PrivateKey,
    pub public: PublicKey,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

/// Raw DH output. Never serialized into transcripts or ledger entries.
#[derive(Clone, PartialEq, Eq)]
pub struct SharedSecret(pub(crate) Vec<u8>);

impl SharedSecret {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SharedSecret(<redacted>)")
    }
}

/// Signature over the canonical encoding of a message.
#[derive(Clone, PartialEq, Eq)]
pub struct Signature(pub(crate) Vec<u8>);

impl Signature {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", hex::encode(&self.0))
    }
}

/// 32-byte symmetric key. Constructed from KDF output only.
#[derive(Clone, PartialEq, Eq)]
pub struct SymmetricKey([u8; 32]);

impl SymmetricKey {
    pub(crate) fn from_kdf_output(bytes: &[u8]) -> Self {
        let mut key = [0u8; 32];
        key.copy_from_slice(bytes);
        Self(key)
    }

    pub(crate) fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymmetricKey(<redacted>)")
    }
}

/// The provider contract consumed by the whole protocol stack.
///
/// Every operation is a pure function of its inputs; providers hold no
/// mutable state and are safe to share across threads.
pub trait CryptoProvider: Send + Sync {
    fn name(&self) -> &'static str;

    /// Derive a keypair deterministically from a 32-byte seed.
    fn generate_keypair(&self, seed: &[u8]) -> Result<KeyPair, CryptoError>;

    /// Diffie-Hellman agreement; commutative across the two keypairs.
    fn dh(
        &self,
        my_private: &PrivateKey,
        peer_public: &PublicKey,
    ) -> Result<SharedSecret, CryptoError>;

    fn sign(&self, private: &PrivateKey, message: &[u8]) -> Signature;

    /// True iff `sig` was produced by the matching private key over exactly
    /// `message`. Never errors on well-formed inputs.
    fn verify(&self, public: &PublicKey, message: &[u8], sig: &Signature) -> bool;

    /// Hash-based KDF over an ordered input list with a domain label.
    fn kdf(&self, inputs: &[&[u8]], info: &[u8], out_len: usize) -> Result<Vec<u8>, CryptoError>;

    fn aead_seal(
        &self,
        key: &SymmetricKey,
        nonce: &[u8; 12],
        plaintext: &[u8],
        aad: &[u8],
    ) -> Vec<u8>;

    fn aead_open(
        &self,
        key: &SymmetricKey,
        nonce: &[u8; 12],
        ciphertext: &[u8],
        aad: &[u8],
    ) -> Result<Vec<u8>, CryptoError>;
}

/// Look up a provider by its stable name (`default` or `test`), as used by
/// the `METASIM_PROVIDER` environment variable.
pub fn provider_by_name(name: &str) -> Option<Box<dyn CryptoProvider>> {
    match name {
        "default" => Some(Box::new(DefaultProvider)),
        "test" => Some(Box::new(TestProvider)),
        _ => None,
    }
}

/// Derive a symmetric key through the provider's KDF. This is the only way
/// to obtain a [`SymmetricKey`]; raw bytes never become keys directly.
pub fn derive_symmetric_key(
    provider: &dyn CryptoProvider,
    inputs: &[&[u8]],
    info: &[u8],
) -> Result<SymmetricKey, CryptoError> {
    let out = provider.kdf(inputs, info, 32)?;
    Ok(SymmetricKey::from_kdf_output(&out))
}

/// HKDF-SHA256 over the length-prefixed concatenation of `inputs`.
///
/// Length prefixes keep the input list injective: `["ab","c"]` and
/// `["a","bc"]` produce different keying material.
pub(crate) fn hkdf_sha256(
    inputs: &[&[u8]],
    info: &[u8],
    out_len: usize,
) -> Result<Vec<u8>, CryptoError> {
    use hkdf::Hkdf;
    use sha2::Sha256;

    if inputs.is_empty() {
        return Err(CryptoError::KdfEmpty);
    }
    if out_len == 0 || out_len > 255 * 32 {
        return Err(CryptoError::KdfTooLong);
    }
    let mut ikm = Vec::new();
    for input in inputs {
        ikm.extend_from_slice(&(input.len() as u32).to_be_bytes());
        ikm.extend_from_slice(input);
    }
    let hk = Hkdf::<Sha256>::new(None, &ikm);
    let mut okm = vec![0u8; out_len];
    hk.expand(info, &mut okm)
        .map_err(|_| CryptoError::KdfTooLong)?;
    Ok(okm)
}
