//! Production provider: X25519 DH, Ed25519 signatures, ChaCha20-Poly1305
//! AEAD, HKDF-SHA256.
//!
//! One seed yields one logical keypair backed by two linked keypairs: the
//! Ed25519 signing key is derived from the seed directly, the X25519 secret
//! from a domain-separated hash of it. Public and private halves concatenate
//! both (64 bytes each), signing material first.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::ChaCha20Poly1305;
use ed25519_dalek::{Signer, Verifier};
use sha2::{Digest, Sha256};

use super::{
    hkdf_sha256, CryptoError, CryptoProvider, KeyPair, PrivateKey, PublicKey, SharedSecret,
    Signature, SymmetricKey, SEED_LEN,
};

const DH_DERIVE_LABEL: &[u8] = b"metasim-x25519-derive";

pub struct DefaultProvider;

fn split_private(private: &PrivateKey) -> Option<(&[u8], &[u8])> {
    let bytes = private.as_bytes();
    (bytes.len() == 64).then(|| bytes.split_at(32))
}

fn split_public(public: &PublicKey) -> Option<(&[u8], &[u8])> {
    let bytes = public.as_bytes();
    (bytes.len() == 64).then(|| bytes.split_at(32))
}

impl CryptoProvider for DefaultProvider {
    fn name(&self) -> &'static str {
        "default"
    }

    fn generate_keypair(&self, seed: &[u8]) -> Result<KeyPair, CryptoError> {
        let seed: &[u8; SEED_LEN] = seed.try_into().map_err(|_| CryptoError::BadSeed)?;

        let signing = ed25519_dalek::SigningKey::from_bytes(seed);
        let dh_seed: [u8; 32] = Sha256::new_with_prefix(DH_DERIVE_LABEL)
            .chain_update(seed)
            .finalize()
            .into();
        let dh_secret = x25519_dalek::StaticSecret::from(dh_seed);
        let dh_public = x25519_dalek::PublicKey::from(&dh_secret);

        let mut private = Vec::with_capacity(64);
        private.extend_from_slice(seed);
        private.extend_from_slice(dh_secret.as_bytes());
        let mut public = Vec::with_capacity(64);
        public.extend_from_slice(signing.verifying_key().as_bytes());
        public.extend_from_slice(dh_public.as_bytes());

        Ok(KeyPair {
            private: PrivateKey(private),
            public: PublicKey(public),
        })
    }

    fn dh(
        &self,
        my_private: &PrivateKey,
        peer_public: &PublicKey,
    ) -> Result<SharedSecret, CryptoError> {
        let (_, my_dh) = split_private(my_private).ok_or(CryptoError::BadPublicKey)?;
        let (_, peer_dh) = split_public(peer_public).ok_or(CryptoError::BadPublicKey)?;
        if peer_dh.iter().all(|&b| b == 0) {
            return Err(CryptoError::BadPublicKey);
        }
        let secret = x25519_dalek::StaticSecret::from(
            <[u8; 32]>::try_from(my_dh).map_err(|_| CryptoError::BadPublicKey)?,
        );
        let peer = x25519_dalek::PublicKey::from(
            <[u8; 32]>::try_from(peer_dh).map_err(|_| CryptoError::BadPublicKey)?,
        );
        let shared = secret.diffie_hellman(&peer);
        // Contributory check: low-order peer points collapse to all zeros.
        if shared.as_bytes().iter().all(|&b| b == 0) {
            return Err(CryptoError::BadPublicKey);
        }
        Ok(SharedSecret(shared.as_bytes().to_vec()))
    }

    fn sign(&self, private: &PrivateKey, message: &[u8]) -> Signature {
        let (seed, _) = split_private(private).expect("private key from this provider");
        let signing = ed25519_dalek::SigningKey::from_bytes(seed.try_into().expect("32-byte half"));
        Signature(signing.sign(message).to_bytes().to_vec())
    }

    fn verify(&self, public: &PublicKey, message: &[u8], sig: &Signature) -> bool {
        let Some((ed, _)) = split_public(public) else {
            return false;
        };
        let Ok(ed): Result<[u8; 32], _> = ed.try_into() else {
            return false;
        };
        let Ok(key) = ed25519_dalek::VerifyingKey::from_bytes(&ed) else {
            return false;
        };
        let Ok(sig_bytes): Result<[u8; 64], _> = sig.as_bytes().try_into() else {
            return false;
        };
        key.verify(message, &ed25519_dalek::Signature::from_bytes(&sig_bytes))
            .is_ok()
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
        let cipher = ChaCha20Poly1305::new(key.as_bytes().into());
        cipher
            .encrypt(
                nonce.into(),
                Payload {
                    msg: plaintext,
                    aad,
                },
            )
            .expect("chacha20poly1305 encryption is infallible for in-memory payloads")
    }

    fn aead_open(
        &self,
        key: &SymmetricKey,
        nonce: &[u8; 12],
        ciphertext: &[u8],
        aad: &[u8],
    ) -> Result<Vec<u8>, CryptoError> {
        let cipher = ChaCha20Poly1305::new(key.as_bytes().into());
        cipher
            .decrypt(
                nonce.into(),
                Payload {
                    msg: ciphertext,
                    aad,
                },
            )
            .map_err(|_| CryptoError::AeadAuthFail)
    }
}
