//! Attestation-gated end-to-end encrypted channels.
//!
//! The requester fetches the receiver's identity key, trusted-party key, and
//! signed prekey bundle from the ledger and directory, validates its own
//! attestation certificate, selects the first prekey whose signature chain
//! validates, and runs the initiator side of X3DH with a fresh ephemeral
//! key. The receiver validates the requester's certificate and request
//! signature, then runs the responder side with the retained prekey private
//! half. No party other than the two endpoints ever receives a message; the
//! ledger and directory serve read-only fetches.
//!
//! A prekey entry is valid when it is self-signed by the owner's identity
//! key and that identity carries a valid trusted-party attestation on the
//! ledger.
//!
//! Message keys are derived per message from the session key and a strictly
//! increasing counter; the counter doubles as the AEAD nonce and replay
//! guard.

use thiserror::Error;

use crate::codec::{CodecError, Reader, Writer};
use crate::directory::PrekeyDirectory;
use crate::ledger::{Ledger, NftId};
use crate::provider::{CryptoError, CryptoProvider, PublicKey, Signature, SymmetricKey};
use crate::trace::{Trace, DIRECTORY_PARTY, LEDGER_PARTY};
use crate::wallet::{AttestationCertificate, Wallet};
use crate::x3dh::{x3dh_initiator, x3dh_responder, MSG_INFO, SESSION_KEY_LEN};

const REQUEST_TAG: &str = "metasim-channel-request-v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChannelError {
    #[error("attestation certificate is missing, malformed, or invalid")]
    CertInvalid,
    #[error("no prekey bundle entry passes validation")]
    NoValidPrekey,
    #[error("required ledger or directory record is missing")]
    LedgerMiss,
    #[error("chosen prekey is not held by the receiver")]
    UnknownPrekey,
    #[error("channel request signature does not verify")]
    BadRequestSignature,
    #[error("envelope counter is not newer than the last received")]
    Replay,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

impl ChannelError {
    pub fn code(&self) -> &'static str {
        match self {
            ChannelError::CertInvalid => "cert-invalid",
            ChannelError::NoValidPrekey => "no-valid-prekey",
            ChannelError::LedgerMiss => "ledger-miss",
            ChannelError::UnknownPrekey => "unknown-prekey",
            ChannelError::BadRequestSignature => "bad-request-signature",
            ChannelError::Replay => "replay",
            ChannelError::Crypto(e) => e.code(),
        }
    }
}

/// Wire form of a channel request. The certificate travels as canonical
/// bytes and is parsed during validation, so any corruption surfaces as
/// `cert-invalid` rather than a framing error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelRequest {
    pub requester_nft: NftId,
    pub tp_id: crate::ledger::WalletAddress,
    pub cert_bytes: Vec<u8>,
    pub requester_ephemeral_pub: PublicKey,
    pub chosen_prekey_id: u32,
    pub requester_signature: Signature,
}

impl ChannelRequest {
    fn signing_message(
        requester_nft: &NftId,
        tp_id: &crate::ledger::WalletAddress,
        cert_bytes: &[u8],
        ephemeral_pub: &PublicKey,
        chosen_prekey_id: u32,
    ) -> Vec<u8> {
        Writer::new()
            .str(REQUEST_TAG)
            .str(requester_nft.as_str())
            .str(tp_id.as_str())
            .bytes(cert_bytes)
            .bytes(ephemeral_pub.as_bytes())
            .u32(chosen_prekey_id)
            .finish()
    }

    pub fn cert(&self) -> Result<AttestationCertificate, CodecError> {
        AttestationCertificate::decode(&self.cert_bytes)
    }

    pub fn encode(&self) -> Vec<u8> {
        Writer::new()
            .str(self.requester_nft.as_str())
            .str(self.tp_id.as_str())
            .bytes(&self.cert_bytes)
            .bytes(self.requester_ephemeral_pub.as_bytes())
            .u32(self.chosen_prekey_id)
            .bytes(self.requester_signature.as_bytes())
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let out = Self {
            requester_nft: NftId::from_hex(r.str()?),
            tp_id: crate::ledger::WalletAddress::from_hex(r.str()?),
            cert_bytes: r.bytes()?,
            requester_ephemeral_pub: PublicKey::from_bytes(r.bytes()?),
            chosen_prekey_id: r.u32()?,
            requester_signature: Signature::from_bytes(r.bytes()?),
        };
        r.done()?;
        Ok(out)
    }
}

/// Established session: the derived key plus send/receive counters. The key
/// never serializes; the struct deliberately has no encode.
pub struct ChannelState {
    pub peer_nft: NftId,
    session_key: SymmetricKey,
    pub send_counter: u64,
    pub recv_counter: u64,
    pub established_at: u64,
}

impl std::fmt::Debug for ChannelState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChannelState")
            .field("peer_nft", &self.peer_nft)
            .field("send_counter", &self.send_counter)
            .field("recv_counter", &self.recv_counter)
            .field("established_at", &self.established_at)
            .finish_non_exhaustive()
    }
}

impl ChannelState {
    /// Hash of the session key, for cross-endpoint agreement checks without
    /// exposing the key itself.
    pub fn session_key_digest(&self) -> [u8; 32] {
        crate::codec::sha256(self.session_key.as_bytes())
    }
}

/// One encrypted message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub sender_nft: NftId,
    pub counter: u64,
    pub ciphertext: Vec<u8>,
}

impl Envelope {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new()
            .str(self.sender_nft.as_str())
            .u64(self.counter)
            .bytes(&self.ciphertext)
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let out = Self {
            sender_nft: NftId::from_hex(r.str()?),
            counter: r.u64()?,
            ciphertext: r.bytes()?,
        };
        r.done()?;
        Ok(out)
    }
}

fn message_aad(sender_nft: &NftId, counter: u64) -> Vec<u8> {
    Writer::new().str(sender_nft.as_str()).u64(counter).finish()
}

fn message_nonce(counter: u64) -> [u8; 12] {
    let mut nonce = [0u8; 12];
    nonce[4..].copy_from_slice(&counter.to_be_bytes());
    nonce
}

fn message_key(
    provider: &dyn CryptoProvider,
    session_key: &SymmetricKey,
    counter: u64,
) -> Result<SymmetricKey, CryptoError> {
    let out = provider.kdf(
        &[session_key.as_bytes(), &counter.to_be_bytes()],
        MSG_INFO,
        SESSION_KEY_LEN,
    )?;
    Ok(SymmetricKey::from_kdf_output(&out))
}

/// Requester side: validate, select a prekey, and derive the session.
/// `ephemeral_seed` feeds the per-handshake ephemeral keypair and comes from
/// the caller's randomness source.
#[allow(clippy::too_many_arguments)]
pub fn request_channel(
    provider: &dyn CryptoProvider,
    requester_wallet: &Wallet,
    receiver_nft: &NftId,
    ledger: &Ledger,
    directory: &PrekeyDirectory,
    ephemeral_seed: &[u8; 32],
    now: u64,
    trace: &mut Trace,
) -> Result<(ChannelRequest, ChannelState), ChannelError> {
    let requester_nft = requester_wallet
        .nft_id()
        .ok_or(ChannelError::CertInvalid)?
        .clone();
    let requester_name = requester_nft.as_str().to_string();

    // Receiver identity key, from the ledger.
    trace.record(
        requester_name.clone(),
        LEDGER_PARTY,
        "resolve-nft",
        true,
        receiver_nft.as_str().into(),
    );
    let receiver = ledger
        .resolve_nft(receiver_nft)
        .map_err(|_| ChannelError::LedgerMiss)?;
    trace.record(
        requester_name.clone(),
        LEDGER_PARTY,
        "fetch-key-record",
        true,
        receiver.owner.as_str().into(),
    );
    let receiver_key = ledger
        .fetch_key_record(&receiver.owner)
        .map_err(|_| ChannelError::LedgerMiss)?;

    // Own certificate, validated against the trusted party's ledger key.
    let cert = requester_wallet
        .held_certs()
        .iter()
        .find(|c| c.claim.subject_nft == requester_nft)
        .ok_or(ChannelError::CertInvalid)?;
    trace.record(
        requester_name.clone(),
        LEDGER_PARTY,
        "fetch-key-record",
        true,
        cert.issuer_id.as_str().into(),
    );
    if !cert.verify_on_ledger(provider, ledger) {
        return Err(ChannelError::CertInvalid);
    }

    // Receiver's signed prekey bundle and attestation status.
    trace.record(
        requester_name.clone(),
        DIRECTORY_PARTY,
        "fetch-bundle",
        true,
        receiver_nft.as_str().into(),
    );
    let bundle = directory
        .fetch_bundle(receiver_nft)
        .ok_or(ChannelError::LedgerMiss)?;
    trace.record(
        requester_name.clone(),
        LEDGER_PARTY,
        "fetch-attestations",
        true,
        receiver_nft.as_str().into(),
    );
    let receiver_attested = ledger.has_valid_attestation(provider, receiver_nft);

    // First entry whose signature chain validates wins.
    let chosen = bundle
        .entries
        .iter()
        .find(|entry| {
            receiver_attested && entry.verify(provider, &receiver_key.identity_pub, receiver_nft)
        })
        .ok_or(ChannelError::NoValidPrekey)?;

    let ephemeral = provider.generate_keypair(ephemeral_seed)?;
    let secret = x3dh_initiator(
        provider,
        requester_wallet.identity_keypair(),
        &ephemeral,
        &receiver_key.identity_pub,
        &chosen.prekey_pub,
    )?;

    let cert_bytes = cert.encode();
    let message = ChannelRequest::signing_message(
        &requester_nft,
        &cert.issuer_id,
        &cert_bytes,
        &ephemeral.public,
        chosen.prekey_id,
    );
    let request = ChannelRequest {
        requester_nft,
        tp_id: cert.issuer_id.clone(),
        cert_bytes,
        requester_ephemeral_pub: ephemeral.public.clone(),
        chosen_prekey_id: chosen.prekey_id,
        requester_signature: requester_wallet.sign(provider, &message),
    };
    let state = ChannelState {
        peer_nft: receiver_nft.clone(),
        session_key: SymmetricKey::from_kdf_output(secret.as_bytes()),
        send_counter: 0,
        recv_counter: 0,
        established_at: now,
    };
    Ok((request, state))
}

/// Receiver side: validate the request and derive the same session.
///
/// The certificate is checked first, so any corruption of it reports
/// `cert-invalid` regardless of what else the corruption broke.
pub fn accept_channel(
    provider: &dyn CryptoProvider,
    receiver_wallet: &Wallet,
    request: &ChannelRequest,
    ledger: &Ledger,
    now: u64,
    trace: &mut Trace,
) -> Result<ChannelState, ChannelError> {
    let receiver_name = receiver_wallet
        .nft_id()
        .map(|n| n.as_str().to_string())
        .unwrap_or_else(|| "receiver".to_string());

    // Certificate chain: parse, issuer consistency, trusted-party key from
    // the ledger, signature, and binding to the requester NFT.
    let cert = request.cert().map_err(|_| ChannelError::CertInvalid)?;
    if cert.issuer_id != request.tp_id {
        return Err(ChannelError::CertInvalid);
    }
    trace.record(
        receiver_name.clone(),
        LEDGER_PARTY,
        "fetch-key-record",
        true,
        cert.issuer_id.as_str().into(),
    );
    if !cert.verify_on_ledger(provider, ledger) {
        return Err(ChannelError::CertInvalid);
    }
    if cert.claim.subject_nft != request.requester_nft {
        return Err(ChannelError::CertInvalid);
    }

    // Requester identity key, from the ledger; verifies the request itself.
    trace.record(
        receiver_name.clone(),
        LEDGER_PARTY,
        "resolve-nft",
        true,
        request.requester_nft.as_str().into(),
    );
    let requester_key = ledger
        .resolve_nft(&request.requester_nft)
        .and_then(|nft| ledger.fetch_key_record(&nft.owner))
        .map_err(|_| ChannelError::BadRequestSignature)?;
    let message = ChannelRequest::signing_message(
        &request.requester_nft,
        &request.tp_id,
        &request.cert_bytes,
        &request.requester_ephemeral_pub,
        request.chosen_prekey_id,
    );
    if !provider.verify(
        &requester_key.identity_pub,
        &message,
        &request.requester_signature,
    ) {
        return Err(ChannelError::BadRequestSignature);
    }

    let prekey = receiver_wallet
        .prekey_keypair(request.chosen_prekey_id)
        .ok_or(ChannelError::UnknownPrekey)?;

    let secret = x3dh_responder(
        provider,
        receiver_wallet.identity_keypair(),
        prekey,
        &requester_key.identity_pub,
        &request.requester_ephemeral_pub,
    )?;

    Ok(ChannelState {
        peer_nft: request.requester_nft.clone(),
        session_key: SymmetricKey::from_kdf_output(secret.as_bytes()),
        send_counter: 0,
        recv_counter: 0,
        established_at: now,
    })
}

/// Seal `plaintext` under the next counter.
pub fn send_message(
    provider: &dyn CryptoProvider,
    state: &mut ChannelState,
    sender_nft: &NftId,
    plaintext: &[u8],
) -> Result<Envelope, ChannelError> {
    let counter = state.send_counter + 1;
    let key = message_key(provider, &state.session_key, counter)?;
    let ciphertext = provider.aead_seal(
        &key,
        &message_nonce(counter),
        plaintext,
        &message_aad(sender_nft, counter),
    );
    state.send_counter = counter;
    Ok(Envelope {
        sender_nft: sender_nft.clone(),
        counter,
        ciphertext,
    })
}

/// Open an envelope, enforcing the replay guard. The AAD binds the sender
/// this state expects, so a relabeled sender fails authentication.
pub fn receive_message(
    provider: &dyn CryptoProvider,
    state: &mut ChannelState,
    envelope: &Envelope,
) -> Result<Vec<u8>, ChannelError> {
    if envelope.counter <= state.recv_counter {
        return Err(ChannelError::Replay);
    }
    let key = message_key(provider, &state.session_key, envelope.counter)?;
    let plaintext = provider.aead_open(
        &key,
        &message_nonce(envelope.counter),
        &envelope.ciphertext,
        &message_aad(&state.peer_nft, envelope.counter),
    )?;
    state.recv_counter = envelope.counter;
    Ok(plaintext)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::TestProvider;
    use crate::wallet::{Claim, PredicateRegistry};

    fn seed(n: u64) -> [u8; 32] {
        let mut s = [0u8; 32];
        s[..8].copy_from_slice(&n.to_be_bytes());
        s
    }

    struct Net {
        provider: TestProvider,
        ledger: Ledger,
        directory: PrekeyDirectory,
        tp: Wallet,
        trace: Trace,
    }

    impl Net {
        fn new() -> Self {
            let provider = TestProvider;
            let mut ledger = Ledger::new();
            let tp = Wallet::create(&provider, &seed(1000)).unwrap();
            tp.publish_key_record(&provider, &mut ledger).unwrap();
            Self {
                provider,
                ledger,
                directory: PrekeyDirectory::new(),
                tp,
                trace: Trace::new(),
            }
        }

        /// Registered, minted, attested user with a published bundle.
        fn user(&mut self, n: u64, prekeys: u32) -> Wallet {
            let mut wallet = Wallet::create(&self.provider, &seed(n)).unwrap();
            wallet
                .publish_key_record(&self.provider, &mut self.ledger)
                .unwrap();
            let nft = self.ledger.mint_identity_nft(wallet.address()).unwrap();
            wallet.adopt_nft(nft);
            let cert = self
                .tp
                .issue_attestation(
                    &self.provider,
                    &self.ledger,
                    &PredicateRegistry::standard(),
                    Claim {
                        predicate: "kyc_verified".into(),
                        subject_nft: wallet.nft_id().unwrap().clone(),
                    },
                )
                .unwrap();
            self.ledger
                .publish_attestation(&self.provider, cert.clone())
                .unwrap();
            wallet.hold_cert(cert);
            if prekeys > 0 {
                let bundle = wallet
                    .create_prekey_bundle(&self.provider, prekeys)
                    .unwrap();
                self.directory.publish_bundle(bundle);
            }
            wallet
        }
    }

    fn handshake(net: &mut Net, a: &Wallet, b: &Wallet) -> (ChannelState, ChannelState) {
        let (request, a_state) = request_channel(
            &net.provider,
            a,
            b.nft_id().unwrap(),
            &net.ledger,
            &net.directory,
            &seed(777),
            1,
            &mut net.trace,
        )
        .unwrap();
        let b_state =
            accept_channel(&net.provider, b, &request, &net.ledger, 1, &mut net.trace).unwrap();
        (a_state, b_state)
    }

    #[test]
    fn honest_handshake_agrees() {
        let mut net = Net::new();
        let alice = net.user(1, 0);
        let bob = net.user(2, 3);
        let (a_state, b_state) = handshake(&mut net, &alice, &bob);
        assert_eq!(a_state.session_key_digest(), b_state.session_key_digest());
    }

    #[test]
    fn corrupted_requester_cert_aborts_before_any_send() {
        let mut net = Net::new();
        let mut alice = net.user(1, 0);
        let bob = net.user(2, 3);

        // Corrupt the held certificate's signature.
        let mut cert = alice.held_certs()[0].clone();
        let mut sig = cert.signature.as_bytes().to_vec();
        sig[0] ^= 1;
        cert.signature = Signature::from_bytes(sig);
        alice = {
            let mut fresh = Wallet::create(&net.provider, &seed(1)).unwrap();
            fresh.adopt_nft(
                net.ledger
                    .resolve_nft(alice.nft_id().unwrap())
                    .unwrap()
                    .clone(),
            );
            fresh.hold_cert(cert);
            fresh
        };

        let before = net.trace.len();
        let err = request_channel(
            &net.provider,
            &alice,
            bob.nft_id().unwrap(),
            &net.ledger,
            &net.directory,
            &seed(778),
            1,
            &mut net.trace,
        )
        .unwrap_err();
        assert_eq!(err, ChannelError::CertInvalid);
        // Nothing was addressed to the receiver: only read-only fetches.
        assert!(net.trace.since(before).iter().all(|e| e.read_only));
    }

    #[test]
    fn first_valid_prekey_entry_is_selected() {
        let mut net = Net::new();
        let alice = net.user(1, 0);
        let bob = net.user(2, 3);

        // Tamper entry 0 of bob's published bundle; entry 1 must be chosen.
        let mut bundle = net
            .directory
            .fetch_bundle(bob.nft_id().unwrap())
            .unwrap()
            .clone();
        let ids: Vec<u32> = bundle.entries.iter().map(|e| e.prekey_id).collect();
        bundle.entries[0].prekey_pub = alice.identity_public().clone();
        net.directory.publish_bundle(bundle);

        // Oracle: per-entry verification sweep agrees entry 0 is broken.
        let bob_key = net
            .ledger
            .fetch_key_record(bob.address())
            .unwrap()
            .identity_pub
            .clone();
        let published = net.directory.fetch_bundle(bob.nft_id().unwrap()).unwrap();
        let verdicts: Vec<bool> = published
            .entries
            .iter()
            .map(|e| e.verify(&net.provider, &bob_key, bob.nft_id().unwrap()))
            .collect();
        assert_eq!(verdicts, vec![false, true, true]);

        let (request, a_state) = request_channel(
            &net.provider,
            &alice,
            bob.nft_id().unwrap(),
            &net.ledger,
            &net.directory,
            &seed(779),
            1,
            &mut net.trace,
        )
        .unwrap();
        assert_eq!(request.chosen_prekey_id, ids[1]);
        let b_state = accept_channel(
            &net.provider,
            &bob,
            &request,
            &net.ledger,
            1,
            &mut net.trace,
        )
        .unwrap();
        assert_eq!(a_state.session_key_digest(), b_state.session_key_digest());
    }

    #[test]
    fn unattested_receiver_means_no_valid_prekey() {
        let mut net = Net::new();
        let alice = net.user(1, 0);
        // Receiver with a bundle but no trusted-party attestation.
        let mut carol = Wallet::create(&net.provider, &seed(3)).unwrap();
        carol
            .publish_key_record(&net.provider, &mut net.ledger)
            .unwrap();
        let nft = net.ledger.mint_identity_nft(carol.address()).unwrap();
        carol.adopt_nft(nft);
        let bundle = carol.create_prekey_bundle(&net.provider, 2).unwrap();
        net.directory.publish_bundle(bundle);

        let err = request_channel(
            &net.provider,
            &alice,
            carol.nft_id().unwrap(),
            &net.ledger,
            &net.directory,
            &seed(780),
            1,
            &mut net.trace,
        )
        .unwrap_err();
        assert_eq!(err, ChannelError::NoValidPrekey);
    }

    #[test]
    fn missing_bundle_is_a_ledger_miss() {
        let mut net = Net::new();
        let alice = net.user(1, 0);
        let bob = net.user(2, 0); // attested but never published a bundle
        let err = request_channel(
            &net.provider,
            &alice,
            bob.nft_id().unwrap(),
            &net.ledger,
            &net.directory,
            &seed(781),
            1,
            &mut net.trace,
        )
        .unwrap_err();
        assert_eq!(err, ChannelError::LedgerMiss);
    }

    #[test]
    fn cert_bound_to_other_nft_rejected() {
        let mut net = Net::new();
        let alice = net.user(1, 0);
        let bob = net.user(2, 3);
        let (mut request, _) = request_channel(
            &net.provider,
            &alice,
            bob.nft_id().unwrap(),
            &net.ledger,
            &net.directory,
            &seed(782),
            1,
            &mut net.trace,
        )
        .unwrap();

        // Swap in bob's certificate (issued to bob's NFT, not alice's).
        let bob_cert = bob.held_certs()[0].clone();
        request.cert_bytes = bob_cert.encode();
        let err = accept_channel(
            &net.provider,
            &bob,
            &request,
            &net.ledger,
            1,
            &mut net.trace,
        )
        .unwrap_err();
        assert_eq!(err, ChannelError::CertInvalid);
    }

    #[test]
    fn unknown_prekey_rejected() {
        let mut net = Net::new();
        let alice = net.user(1, 0);
        let mut bob = net.user(2, 3);
        let (request, _) = request_channel(
            &net.provider,
            &alice,
            bob.nft_id().unwrap(),
            &net.ledger,
            &net.directory,
            &seed(783),
            1,
            &mut net.trace,
        )
        .unwrap();

        // Receiver that never generated the prekeys: same identity, no
        // retained private halves.
        bob = {
            let mut fresh = Wallet::create(&net.provider, &seed(2)).unwrap();
            fresh.adopt_nft(
                net.ledger
                    .resolve_nft(bob.nft_id().unwrap())
                    .unwrap()
                    .clone(),
            );
            fresh
        };
        let err = accept_channel(
            &net.provider,
            &bob,
            &request,
            &net.ledger,
            1,
            &mut net.trace,
        )
        .unwrap_err();
        assert_eq!(err, ChannelError::UnknownPrekey);
    }

    #[test]
    fn every_request_field_corruption_is_rejected_with_its_code() {
        let mut net = Net::new();
        let alice = net.user(1, 0);
        let bob = net.user(2, 3);
        let (request, _) = request_channel(
            &net.provider,
            &alice,
            bob.nft_id().unwrap(),
            &net.ledger,
            &net.directory,
            &seed(784),
            1,
            &mut net.trace,
        )
        .unwrap();

        let accept = |req: &ChannelRequest, net: &mut Net, bob: &Wallet| {
            accept_channel(&net.provider, bob, req, &net.ledger, 1, &mut net.trace)
        };

        let mut r = request.clone();
        r.requester_nft = NftId::from_hex("00".repeat(32));
        assert_eq!(
            accept(&r, &mut net, &bob).unwrap_err(),
            ChannelError::CertInvalid
        );

        let mut r = request.clone();
        r.tp_id = crate::ledger::WalletAddress::from_hex("11".repeat(32));
        assert_eq!(
            accept(&r, &mut net, &bob).unwrap_err(),
            ChannelError::CertInvalid
        );

        let mut r = request.clone();
        r.cert_bytes[10] ^= 0xff;
        assert_eq!(
            accept(&r, &mut net, &bob).unwrap_err(),
            ChannelError::CertInvalid
        );

        let mut r = request.clone();
        let mut pk = r.requester_ephemeral_pub.as_bytes().to_vec();
        pk[0] ^= 1;
        r.requester_ephemeral_pub = PublicKey::from_bytes(pk);
        assert_eq!(
            accept(&r, &mut net, &bob).unwrap_err(),
            ChannelError::BadRequestSignature
        );

        let mut r = request.clone();
        r.chosen_prekey_id += 1;
        assert_eq!(
            accept(&r, &mut net, &bob).unwrap_err(),
            ChannelError::BadRequestSignature
        );

        let mut r = request.clone();
        let mut sig = r.requester_signature.as_bytes().to_vec();
        sig[0] ^= 1;
        r.requester_signature = Signature::from_bytes(sig);
        assert_eq!(
            accept(&r, &mut net, &bob).unwrap_err(),
            ChannelError::BadRequestSignature
        );
    }

    #[test]
    fn message_round_trip_replay_and_tamper() {
        let mut net = Net::new();
        let alice = net.user(1, 0);
        let bob = net.user(2, 3);
        let (mut a_state, mut b_state) = handshake(&mut net, &alice, &bob);

        let envelope = send_message(
            &net.provider,
            &mut a_state,
            alice.nft_id().unwrap(),
            b"hello",
        )
        .unwrap();
        assert_eq!(envelope.counter, 1);
        let plaintext = receive_message(&net.provider, &mut b_state, &envelope).unwrap();
        assert_eq!(plaintext, b"hello");

        // Replay of the same envelope.
        assert_eq!(
            receive_message(&net.provider, &mut b_state, &envelope).unwrap_err(),
            ChannelError::Replay
        );

        // Bit flips across the whole ciphertext all fail authentication.
        let envelope2 = send_message(
            &net.provider,
            &mut a_state,
            alice.nft_id().unwrap(),
            b"again",
        )
        .unwrap();
        for i in 0..envelope2.ciphertext.len() {
            let mut bad = envelope2.clone();
            bad.ciphertext[i] ^= 1;
            assert_eq!(
                receive_message(&net.provider, &mut b_state, &bad).unwrap_err(),
                ChannelError::Crypto(CryptoError::AeadAuthFail),
                "byte {i}"
            );
        }

        // The intact envelope still opens afterwards.
        assert_eq!(
            receive_message(&net.provider, &mut b_state, &envelope2).unwrap(),
            b"again"
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn message_sequences_round_trip(
                payloads in prop::collection::vec(
                    prop::collection::vec(any::<u8>(), 0..256),
                    1..8,
                ),
            ) {
                let mut net = Net::new();
                let alice = net.user(1, 0);
                let bob = net.user(2, 2);
                let (mut a_state, mut b_state) = handshake(&mut net, &alice, &bob);

                for (i, payload) in payloads.iter().enumerate() {
                    let env = send_message(
                        &net.provider,
                        &mut a_state,
                        alice.nft_id().unwrap(),
                        payload,
                    )
                    .unwrap();
                    prop_assert_eq!(env.counter, i as u64 + 1);
                    let decoded = Envelope::decode(&env.encode()).unwrap();
                    let opened =
                        receive_message(&net.provider, &mut b_state, &decoded).unwrap();
                    prop_assert_eq!(&opened, payload);
                }
            }
        }
    }

    #[test]
    fn counters_advance_independently_per_direction() {
        let mut net = Net::new();
        let alice = net.user(1, 0);
        let bob = net.user(2, 3);
        let (mut a_state, mut b_state) = handshake(&mut net, &alice, &bob);

        for i in 1..=3u64 {
            let env = send_message(
                &net.provider,
                &mut a_state,
                alice.nft_id().unwrap(),
                b"ping",
            )
            .unwrap();
            assert_eq!(env.counter, i);
            receive_message(&net.provider, &mut b_state, &env).unwrap();
            let env =
                send_message(&net.provider, &mut b_state, bob.nft_id().unwrap(), b"pong").unwrap();
            assert_eq!(env.counter, i);
            receive_message(&net.provider, &mut a_state, &env).unwrap();
        }
    }
}
