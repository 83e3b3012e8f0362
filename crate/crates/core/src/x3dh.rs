//! Three-leg X3DH key agreement between a long-term identity key, a signed
//! prekey, and a per-handshake ephemeral key.
//!
//! Both sides feed the same three DH outputs, in initiator-perspective order,
//! into the KDF under the [`X3DH_INFO`] label:
//!
//! ```text
//! leg 1: DH(initiator identity,  responder signed prekey)
//! leg 2: DH(initiator ephemeral, responder identity)
//! leg 3: DH(initiator ephemeral, responder signed prekey)
//! ```
//!
//! There is no one-time prekey leg; prekey bundles carry medium-term keys
//! only.

use crate::provider::{CryptoError, CryptoProvider, KeyPair, PublicKey, SharedSecret};

/// KDF label for session keys derived from the handshake.
pub const X3DH_INFO: &[u8] = b"metaverse-x3dh-v1";

/// KDF label for per-message keys derived from a session key and counter.
pub const MSG_INFO: &[u8] = b"metaverse-msg-v1";

/// Session secret length in bytes.
pub const SESSION_KEY_LEN: usize = 32;

/// Derive the session secret as the initiator.
pub fn x3dh_initiator(
    provider: &dyn CryptoProvider,
    my_identity: &KeyPair,
    my_ephemeral: &KeyPair,
    peer_identity_pub: &PublicKey,
    peer_signed_prekey_pub: &PublicKey,
) -> Result<SharedSecret, CryptoError> {
    let leg1 = provider.dh(&my_identity.private, peer_signed_prekey_pub)?;
    let leg2 = provider.dh(&my_ephemeral.private, peer_identity_pub)?;
    let leg3 = provider.dh(&my_ephemeral.private, peer_signed_prekey_pub)?;
    derive(provider, &leg1, &leg2, &leg3)
}

/// Derive the session secret as the responder. Legs are transposed so the
/// ordered leg list matches the initiator's exactly.
pub fn x3dh_responder(
    provider: &dyn CryptoProvider,
    my_identity: &KeyPair,
    my_signed_prekey: &KeyPair,
    peer_identity_pub: &PublicKey,
    peer_ephemeral_pub: &PublicKey,
) -> Result<SharedSecret, CryptoError> {
    let leg1 = provider.dh(&my_signed_prekey.private, peer_identity_pub)?;
    let leg2 = provider.dh(&my_identity.private, peer_ephemeral_pub)?;
    let leg3 = provider.dh(&my_signed_prekey.private, peer_ephemeral_pub)?;
    derive(provider, &leg1, &leg2, &leg3)
}

fn derive(
    provider: &dyn CryptoProvider,
    leg1: &SharedSecret,
    leg2: &SharedSecret,
    leg3: &SharedSecret,
) -> Result<SharedSecret, CryptoError> {
    let out = provider.kdf(
        &[leg1.as_bytes(), leg2.as_bytes(), leg3.as_bytes()],
        X3DH_INFO,
        SESSION_KEY_LEN,
    )?;
    Ok(SharedSecret(out))
}
