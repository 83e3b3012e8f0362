//! Holder and issuer agent: key custody, prekey bundles, predicate
//! credentials, and verifiable presentations.
//!
//! Credentials are signed predicate claims. The issuer asserts a predicate
//! (`age_over_18`, ...) over a subject NFT; the raw attribute behind it never
//! leaves the issuer. A presentation binds such a certificate to a live
//! verifier challenge with the holder's own signature, so certificates cannot
//! be replayed by anyone who merely saw one.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::codec::{sha256, CodecError, Reader, Writer};
use crate::ledger::{IdentityNft, KeyRecord, Ledger, LedgerError, NftId, WalletAddress};
use crate::provider::{CryptoError, CryptoProvider, KeyPair, PublicKey, Signature};

const ATTESTATION_TAG: &str = "metasim-attestation-v1";
const PREKEY_TAG: &str = "metasim-prekey-v1";
const PRESENTATION_TAG: &str = "metasim-presentation-v1";
const PREKEY_DERIVE_TAG: &str = "metasim-prekey-derive-v1";

/// Maximum number of entries in a signed prekey bundle.
pub const MAX_PREKEYS: u32 = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WalletError {
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("wallet has no identity NFT")]
    NoIdentityNft,
    #[error("prekey count must be between 1 and {MAX_PREKEYS}")]
    BadCount,
    #[error("predicate `{0}` is not in the registered vocabulary")]
    UnknownPredicate(String),
    #[error("issuer has no published key record")]
    IssuerNotRegistered,
}

impl WalletError {
    pub fn code(&self) -> &'static str {
        match self {
            WalletError::Crypto(e) => e.code(),
            WalletError::NoIdentityNft => "no-identity-nft",
            WalletError::BadCount => "bad-count",
            WalletError::UnknownPredicate(_) => "unknown-predicate",
            WalletError::IssuerNotRegistered => "unknown-wallet",
        }
    }
}

/// Why a presentation was rejected.
#[derive(Debug, Error, PartialEq, Eq, Clone, Copy)]
pub enum PresentationError {
    #[error("certificate signature invalid under the pinned issuer key")]
    BadCertSig,
    #[error("holder signature invalid under the holder's identity key")]
    BadHolderSig,
    #[error("presentation nonce does not match the outstanding challenge")]
    NonceMismatch,
    #[error("holder NFT does not match the certificate subject")]
    NftMismatch,
}

impl PresentationError {
    pub fn code(&self) -> &'static str {
        match self {
            PresentationError::BadCertSig => "bad-cert-sig",
            PresentationError::BadHolderSig => "bad-holder-sig",
            PresentationError::NonceMismatch => "nonce-mismatch",
            PresentationError::NftMismatch => "nft-mismatch",
        }
    }
}

/// Closed predicate vocabulary shared by issuers and verifiers, extensible
/// through configuration.
#[derive(Debug, Clone)]
pub struct PredicateRegistry {
    predicates: BTreeSet<String>,
}

impl PredicateRegistry {
    /// The standard vocabulary.
    pub fn standard() -> Self {
        Self {
            predicates: ["age_over_18", "world_member", "kyc_verified"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }

    pub fn register(&mut self, predicate: &str) {
        self.predicates.insert(predicate.to_string());
    }

    pub fn contains(&self, predicate: &str) -> bool {
        self.predicates.contains(predicate)
    }
}

/// A predicate claim about a subject NFT. Predicates only; no raw attribute
/// values exist anywhere in the type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claim {
    pub predicate: String,
    pub subject_nft: NftId,
}

impl Claim {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new()
            .str(&self.predicate)
            .str(self.subject_nft.as_str())
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let out = Self {
            predicate: r.str()?,
            subject_nft: NftId::from_hex(r.str()?),
        };
        r.done()?;
        Ok(out)
    }
}

/// A trusted party's signature over a claim, pinned to the issuer key that
/// was current at `issued_at`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttestationCertificate {
    pub claim: Claim,
    pub issuer_id: WalletAddress,
    pub issued_at: u64,
    pub signature: Signature,
}

impl AttestationCertificate {
    fn signing_message(claim: &Claim, issuer_id: &WalletAddress, issued_at: u64) -> Vec<u8> {
        Writer::new()
            .str(ATTESTATION_TAG)
            .bytes(&claim.encode())
            .str(issuer_id.as_str())
            .u64(issued_at)
            .finish()
    }

    pub fn verify(&self, provider: &dyn CryptoProvider, issuer_pub: &PublicKey) -> bool {
        let message = Self::signing_message(&self.claim, &self.issuer_id, self.issued_at);
        provider.verify(issuer_pub, &message, &self.signature)
    }

    /// Verify against the issuer key pinned at `issued_at` on the ledger.
    pub fn verify_on_ledger(&self, provider: &dyn CryptoProvider, ledger: &Ledger) -> bool {
        ledger
            .key_record_at(&self.issuer_id, self.issued_at)
            .map(|rec| self.verify(provider, &rec.identity_pub))
            .unwrap_or(false)
    }

    pub fn encode(&self) -> Vec<u8> {
        Writer::new()
            .bytes(&self.claim.encode())
            .str(self.issuer_id.as_str())
            .u64(self.issued_at)
            .bytes(self.signature.as_bytes())
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let out = Self {
            claim: Claim::decode(&r.bytes()?)?,
            issuer_id: WalletAddress::from_hex(r.str()?),
            issued_at: r.u64()?,
            signature: Signature::from_bytes(r.bytes()?),
        };
        r.done()?;
        Ok(out)
    }

    /// SHA-256 over the canonical encoding; what the holder signs in a
    /// presentation.
    pub fn hash(&self) -> [u8; 32] {
        sha256(&self.encode())
    }
}

/// One signed prekey in a bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrekeyEntry {
    pub prekey_id: u32,
    pub prekey_pub: PublicKey,
    pub signature: Signature,
}

impl PrekeyEntry {
    fn signing_message(prekey_id: u32, prekey_pub: &PublicKey, owner_nft: &NftId) -> Vec<u8> {
        Writer::new()
            .str(PREKEY_TAG)
            .u32(prekey_id)
            .bytes(prekey_pub.as_bytes())
            .str(owner_nft.as_str())
            .finish()
    }

    pub fn verify(
        &self,
        provider: &dyn CryptoProvider,
        owner_identity_pub: &PublicKey,
        owner_nft: &NftId,
    ) -> bool {
        let message = Self::signing_message(self.prekey_id, &self.prekey_pub, owner_nft);
        provider.verify(owner_identity_pub, &message, &self.signature)
    }
}

/// Published list of medium-term public keys, each signed by the owner's
/// identity key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPrekeyBundle {
    pub owner_nft: NftId,
    pub entries: Vec<PrekeyEntry>,
}

impl SignedPrekeyBundle {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.str(self.owner_nft.as_str());
        w.u32(self.entries.len() as u32);
        for entry in &self.entries {
            w.u32(entry.prekey_id);
            w.bytes(entry.prekey_pub.as_bytes());
            w.bytes(entry.signature.as_bytes());
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let owner_nft = NftId::from_hex(r.str()?);
        let count = r.u32()?;
        let mut entries = Vec::with_capacity(count as usize);
        for _ in 0..count {
            entries.push(PrekeyEntry {
                prekey_id: r.u32()?,
                prekey_pub: PublicKey::from_bytes(r.bytes()?),
                signature: Signature::from_bytes(r.bytes()?),
            });
        }
        r.done()?;
        Ok(Self { owner_nft, entries })
    }
}

/// Holder-signed package binding a certificate to a live challenge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    pub cert: AttestationCertificate,
    pub holder_nft: NftId,
    pub nonce: u64,
    pub holder_signature: Signature,
}

impl Presentation {
    fn signing_message(cert_hash: &[u8; 32], nonce: u64) -> Vec<u8> {
        Writer::new()
            .str(PRESENTATION_TAG)
            .bytes(cert_hash)
            .u64(nonce)
            .finish()
    }

    pub fn encode(&self) -> Vec<u8> {
        Writer::new()
            .bytes(&self.cert.encode())
            .str(self.holder_nft.as_str())
            .u64(self.nonce)
            .bytes(self.holder_signature.as_bytes())
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let out = Self {
            cert: AttestationCertificate::decode(&r.bytes()?)?,
            holder_nft: NftId::from_hex(r.str()?),
            nonce: r.u64()?,
            holder_signature: Signature::from_bytes(r.bytes()?),
        };
        r.done()?;
        Ok(out)
    }
}

/// Verify a presentation against the ledger and the verifier's outstanding
/// challenge nonce.
///
/// Checks, in order: certificate signature under the issuer key pinned at
/// issuance; holder NFT equals the certificate subject; holder signature
/// under the current identity key of the NFT owner; nonce freshness.
pub fn verify_presentation(
    provider: &dyn CryptoProvider,
    presentation: &Presentation,
    ledger: &Ledger,
    expected_nonce: u64,
) -> Result<(), PresentationError> {
    if !presentation.cert.verify_on_ledger(provider, ledger) {
        return Err(PresentationError::BadCertSig);
    }
    if presentation.holder_nft != presentation.cert.claim.subject_nft {
        return Err(PresentationError::NftMismatch);
    }
    let holder_key = ledger
        .resolve_nft(&presentation.holder_nft)
        .and_then(|nft| ledger.fetch_key_record(&nft.owner))
        .map_err(|_| PresentationError::BadHolderSig)?;
    let message = Presentation::signing_message(&presentation.cert.hash(), presentation.nonce);
    if !provider.verify(
        &holder_key.identity_pub,
        &message,
        &presentation.holder_signature,
    ) {
        return Err(PresentationError::BadHolderSig);
    }
    if presentation.nonce != expected_nonce {
        return Err(PresentationError::NonceMismatch);
    }
    Ok(())
}

/// Serializable public view of a wallet: address, identity public key, NFT,
/// and prekey public halves. No private material, by construction.
#[derive(Debug, Clone)]
pub struct WalletPublicView {
    pub address: WalletAddress,
    pub identity_pub: PublicKey,
    pub nft_id: Option<NftId>,
    pub held_cert_count: u32,
    pub prekey_publics: Vec<(u32, PublicKey)>,
}

impl WalletPublicView {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.str(self.address.as_str());
        w.bytes(self.identity_pub.as_bytes());
        match &self.nft_id {
            Some(id) => w.bool(true).str(id.as_str()),
            None => w.bool(false),
        };
        w.u32(self.held_cert_count);
        w.u32(self.prekey_publics.len() as u32);
        for (id, public) in &self.prekey_publics {
            w.u32(*id);
            w.bytes(public.as_bytes());
        }
        w.finish()
    }
}

/// Holder agent: custody of the identity keypair, prekey private halves, and
/// received certificates.
pub struct Wallet {
    address: WalletAddress,
    identity: KeyPair,
    nft: Option<IdentityNft>,
    held_certs: Vec<AttestationCertificate>,
    prekeys: Vec<(u32, KeyPair)>,
    root_seed: [u8; 32],
    next_prekey_id: u32,
}

impl std::fmt::Debug for Wallet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Wallet")
            .field("address", &self.address)
            .field("nft", &self.nft)
            .field("held_certs", &self.held_certs.len())
            .field("prekeys", &self.prekeys.len())
            .finish_non_exhaustive()
    }
}

impl Wallet {
    /// Deterministically create a wallet from a 32-byte seed.
    pub fn create(provider: &dyn CryptoProvider, seed: &[u8]) -> Result<Self, WalletError> {
        let identity = provider.generate_keypair(seed)?;
        let address = WalletAddress::from_public_key(&identity.public);
        Ok(Self {
            address,
            identity,
            nft: None,
            held_certs: Vec::new(),
            prekeys: Vec::new(),
            root_seed: seed
                .try_into()
                .expect("seed length checked by generate_keypair"),
            next_prekey_id: 1,
        })
    }

    pub fn address(&self) -> &WalletAddress {
        &self.address
    }

    pub fn identity_public(&self) -> &PublicKey {
        &self.identity.public
    }

    pub(crate) fn identity_keypair(&self) -> &KeyPair {
        &self.identity
    }

    pub fn nft(&self) -> Option<&IdentityNft> {
        self.nft.as_ref()
    }

    pub fn nft_id(&self) -> Option<&NftId> {
        self.nft.as_ref().map(|nft| &nft.nft_id)
    }

    pub fn held_certs(&self) -> &[AttestationCertificate] {
        &self.held_certs
    }

    /// Sign an arbitrary canonical message with the identity key.
    pub fn sign(&self, provider: &dyn CryptoProvider, message: &[u8]) -> Signature {
        provider.sign(&self.identity.private, message)
    }

    /// Self-attest and publish this wallet's key record.
    pub fn publish_key_record(
        &self,
        provider: &dyn CryptoProvider,
        ledger: &mut Ledger,
    ) -> Result<u64, LedgerError> {
        let message = KeyRecord::signing_message(&self.address, &self.identity.public);
        let proof = self.sign(provider, &message);
        ledger.publish_key_record(provider, &self.address, self.identity.public.clone(), proof)
    }

    /// Record the minted NFT in the wallet after `Ledger::mint_identity_nft`.
    pub fn adopt_nft(&mut self, nft: IdentityNft) {
        self.nft = Some(nft);
    }

    /// Store a certificate received from an issuer (holder-custody path).
    pub fn hold_cert(&mut self, cert: AttestationCertificate) {
        self.held_certs.push(cert);
    }

    /// First held certificate matching a predicate, if any.
    pub fn find_cert(&self, predicate: &str) -> Option<&AttestationCertificate> {
        self.held_certs
            .iter()
            .find(|c| c.claim.predicate == predicate)
    }

    /// Create `n` fresh signed prekeys. Private halves stay in the wallet;
    /// the returned bundle carries only public material.
    pub fn create_prekey_bundle(
        &mut self,
        provider: &dyn CryptoProvider,
        n: u32,
    ) -> Result<SignedPrekeyBundle, WalletError> {
        let owner_nft = self
            .nft
            .as_ref()
            .ok_or(WalletError::NoIdentityNft)?
            .nft_id
            .clone();
        if n == 0 || n > MAX_PREKEYS {
            return Err(WalletError::BadCount);
        }
        let mut entries = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let id = self.next_prekey_id;
            self.next_prekey_id += 1;
            let seed = sha256(
                &Writer::new()
                    .str(PREKEY_DERIVE_TAG)
                    .bytes(&self.root_seed)
                    .u32(id)
                    .finish(),
            );
            let keypair = provider.generate_keypair(&seed)?;
            let message = PrekeyEntry::signing_message(id, &keypair.public, &owner_nft);
            entries.push(PrekeyEntry {
                prekey_id: id,
                prekey_pub: keypair.public.clone(),
                signature: self.sign(provider, &message),
            });
            self.prekeys.push((id, keypair));
        }
        Ok(SignedPrekeyBundle { owner_nft, entries })
    }

    /// Private keypair for a retained prekey id.
    pub(crate) fn prekey_keypair(&self, prekey_id: u32) -> Option<&KeyPair> {
        self.prekeys
            .iter()
            .find(|(id, _)| *id == prekey_id)
            .map(|(_, kp)| kp)
    }

    /// Issue a signed predicate certificate (this wallet is the trusted
    /// party). The certificate is returned to the holder; publishing it on
    /// the ledger is a separate, optional step.
    pub fn issue_attestation(
        &self,
        provider: &dyn CryptoProvider,
        ledger: &Ledger,
        registry: &PredicateRegistry,
        claim: Claim,
    ) -> Result<AttestationCertificate, WalletError> {
        if !registry.contains(&claim.predicate) {
            return Err(WalletError::UnknownPredicate(claim.predicate));
        }
        ledger
            .fetch_key_record(&self.address)
            .map_err(|_| WalletError::IssuerNotRegistered)?;
        let issued_at = ledger.head();
        let message = AttestationCertificate::signing_message(&claim, &self.address, issued_at);
        let signature = self.sign(provider, &message);
        Ok(AttestationCertificate {
            claim,
            issuer_id: self.address.clone(),
            issued_at,
            signature,
        })
    }

    /// Bind a certificate to a verifier challenge with the holder signature.
    pub fn make_presentation(
        &self,
        provider: &dyn CryptoProvider,
        cert: &AttestationCertificate,
        nonce: u64,
    ) -> Result<Presentation, WalletError> {
        let holder_nft = self
            .nft
            .as_ref()
            .ok_or(WalletError::NoIdentityNft)?
            .nft_id
            .clone();
        let message = Presentation::signing_message(&cert.hash(), nonce);
        Ok(Presentation {
            cert: cert.clone(),
            holder_nft,
            nonce,
            holder_signature: self.sign(provider, &message),
        })
    }

    pub fn public_view(&self) -> WalletPublicView {
        WalletPublicView {
            address: self.address.clone(),
            identity_pub: self.identity.public.clone(),
            nft_id: self.nft.as_ref().map(|nft| nft.nft_id.clone()),
            held_cert_count: self.held_certs.len() as u32,
            prekey_publics: self
                .prekeys
                .iter()
                .map(|(id, kp)| (*id, kp.public.clone()))
                .collect(),
        }
    }

    /// All private byte strings held by this wallet, for leak audits.
    pub fn private_material(&self) -> Vec<Vec<u8>> {
        let mut out = vec![
            self.root_seed.to_vec(),
            self.identity.private.as_bytes().to_vec(),
        ];
        out.extend(
            self.prekeys
                .iter()
                .map(|(_, kp)| kp.private.as_bytes().to_vec()),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::{DefaultProvider, TestProvider};

    fn seed(n: u64) -> [u8; 32] {
        let mut s = [0u8; 32];
        s[..8].copy_from_slice(&n.to_be_bytes());
        s
    }

    fn setup_holder(provider: &dyn CryptoProvider, ledger: &mut Ledger, n: u64) -> Wallet {
        let mut wallet = Wallet::create(provider, &seed(n)).unwrap();
        wallet.publish_key_record(provider, ledger).unwrap();
        let nft = ledger.mint_identity_nft(wallet.address()).unwrap();
        wallet.adopt_nft(nft);
        wallet
    }

    #[test]
    fn wallet_creation_is_deterministic() {
        let provider = DefaultProvider;
        let a = Wallet::create(&provider, &seed(5)).unwrap();
        let b = Wallet::create(&provider, &seed(5)).unwrap();
        assert_eq!(a.address(), b.address());
        assert_eq!(
            Wallet::create(&provider, &[1u8; 3]).unwrap_err().code(),
            "bad-seed"
        );
    }

    #[test]
    fn distinct_seeds_distinct_addresses() {
        let provider = TestProvider;
        let mut seen = std::collections::HashSet::new();
        for i in 0..10_000u64 {
            let wallet = Wallet::create(&provider, &seed(i)).unwrap();
            assert!(seen.insert(wallet.address().as_str().to_string()));
        }
    }

    #[test]
    fn public_view_carries_no_private_bytes() {
        let provider = DefaultProvider;
        let mut ledger = Ledger::new();
        let mut wallet = setup_holder(&provider, &mut ledger, 1);
        wallet.create_prekey_bundle(&provider, 3).unwrap();
        let view = wallet.public_view().encode();
        for private in wallet.private_material() {
            assert!(
                !view.windows(private.len()).any(|w| w == &private[..]),
                "private bytes leaked into public view"
            );
        }
    }

    #[test]
    fn prekey_bundle_counts_and_signatures() {
        let provider = TestProvider;
        let mut ledger = Ledger::new();
        let mut wallet = setup_holder(&provider, &mut ledger, 1);

        assert_eq!(
            wallet.create_prekey_bundle(&provider, 0).unwrap_err(),
            WalletError::BadCount
        );
        assert_eq!(
            wallet
                .create_prekey_bundle(&provider, MAX_PREKEYS + 1)
                .unwrap_err(),
            WalletError::BadCount
        );

        let bundle = wallet.create_prekey_bundle(&provider, 3).unwrap();
        assert_eq!(bundle.entries.len(), 3);
        for entry in &bundle.entries {
            assert!(entry.verify(&provider, wallet.identity_public(), &bundle.owner_nft));
            assert!(wallet.prekey_keypair(entry.prekey_id).is_some());
        }
    }

    #[test]
    fn prekey_bundle_requires_nft() {
        let provider = TestProvider;
        let mut wallet = Wallet::create(&provider, &seed(1)).unwrap();
        assert_eq!(
            wallet.create_prekey_bundle(&provider, 2).unwrap_err(),
            WalletError::NoIdentityNft
        );
    }

    #[test]
    fn tampered_prekey_entry_fails_verification_alone() {
        let provider = TestProvider;
        let mut ledger = Ledger::new();
        let mut wallet = setup_holder(&provider, &mut ledger, 1);
        let other = Wallet::create(&provider, &seed(77)).unwrap();

        let mut bundle = wallet.create_prekey_bundle(&provider, 3).unwrap();
        bundle.entries[1].prekey_pub = other.identity_public().clone();

        let verdicts: Vec<bool> = bundle
            .entries
            .iter()
            .map(|e| e.verify(&provider, wallet.identity_public(), &bundle.owner_nft))
            .collect();
        assert_eq!(verdicts, vec![true, false, true]);
    }

    #[test]
    fn issue_attestation_checks_vocabulary() {
        let provider = TestProvider;
        let mut ledger = Ledger::new();
        let issuer = setup_holder(&provider, &mut ledger, 1);
        let holder = setup_holder(&provider, &mut ledger, 2);
        let registry = PredicateRegistry::standard();

        let err = issuer
            .issue_attestation(
                &provider,
                &ledger,
                &registry,
                Claim {
                    predicate: "likes_cats".into(),
                    subject_nft: holder.nft_id().unwrap().clone(),
                },
            )
            .unwrap_err();
        assert_eq!(err.code(), "unknown-predicate");

        let cert = issuer
            .issue_attestation(
                &provider,
                &ledger,
                &registry,
                Claim {
                    predicate: "age_over_18".into(),
                    subject_nft: holder.nft_id().unwrap().clone(),
                },
            )
            .unwrap();
        assert!(cert.verify_on_ledger(&provider, &ledger));
    }

    #[test]
    fn cert_survives_issuer_key_rotation() {
        let provider = TestProvider;
        let mut ledger = Ledger::new();
        let issuer = setup_holder(&provider, &mut ledger, 1);
        let holder = setup_holder(&provider, &mut ledger, 2);
        let registry = PredicateRegistry::standard();
        let cert = issuer
            .issue_attestation(
                &provider,
                &ledger,
                &registry,
                Claim {
                    predicate: "age_over_18".into(),
                    subject_nft: holder.nft_id().unwrap().clone(),
                },
            )
            .unwrap();
        assert!(cert.verify_on_ledger(&provider, &ledger));

        // Rotate the issuer key; the pinned historical key keeps the cert valid.
        let rotated = Wallet::create(&provider, &seed(50)).unwrap();
        let message = KeyRecord::signing_message(issuer.address(), rotated.identity_public());
        let proof = rotated.sign(&provider, &message);
        ledger
            .publish_key_record(
                &provider,
                issuer.address(),
                rotated.identity_public().clone(),
                proof,
            )
            .unwrap();

        assert!(cert.verify_on_ledger(&provider, &ledger));
    }

    #[test]
    fn honest_presentation_flow() {
        let provider = TestProvider;
        let mut ledger = Ledger::new();
        let issuer = setup_holder(&provider, &mut ledger, 1);
        let holder = setup_holder(&provider, &mut ledger, 2);
        let registry = PredicateRegistry::standard();
        let cert = issuer
            .issue_attestation(
                &provider,
                &ledger,
                &registry,
                Claim {
                    predicate: "age_over_18".into(),
                    subject_nft: holder.nft_id().unwrap().clone(),
                },
            )
            .unwrap();

        let presentation = holder.make_presentation(&provider, &cert, 42).unwrap();
        assert_eq!(
            verify_presentation(&provider, &presentation, &ledger, 42),
            Ok(())
        );

        // Stale nonce replay.
        assert_eq!(
            verify_presentation(&provider, &presentation, &ledger, 43),
            Err(PresentationError::NonceMismatch)
        );
    }

    #[test]
    fn cross_holder_replay_rejected() {
        let provider = TestProvider;
        let mut ledger = Ledger::new();
        let issuer = setup_holder(&provider, &mut ledger, 1);
        let victim = setup_holder(&provider, &mut ledger, 2);
        let attacker = setup_holder(&provider, &mut ledger, 3);
        let registry = PredicateRegistry::standard();
        let cert = issuer
            .issue_attestation(
                &provider,
                &ledger,
                &registry,
                Claim {
                    predicate: "age_over_18".into(),
                    subject_nft: victim.nft_id().unwrap().clone(),
                },
            )
            .unwrap();

        // Attacker presents the victim's cert under its own NFT.
        let stolen = attacker.make_presentation(&provider, &cert, 7).unwrap();
        assert_eq!(
            verify_presentation(&provider, &stolen, &ledger, 7),
            Err(PresentationError::NftMismatch)
        );

        // Attacker claims the victim's NFT but cannot sign for it.
        let forged = Presentation {
            cert: cert.clone(),
            holder_nft: victim.nft_id().unwrap().clone(),
            nonce: 7,
            holder_signature: attacker
                .sign(&provider, &Presentation::signing_message(&cert.hash(), 7)),
        };
        assert_eq!(
            verify_presentation(&provider, &forged, &ledger, 7),
            Err(PresentationError::BadHolderSig)
        );
    }

    #[test]
    fn corrupted_cert_fails_presentation() {
        let provider = TestProvider;
        let mut ledger = Ledger::new();
        let issuer = setup_holder(&provider, &mut ledger, 1);
        let holder = setup_holder(&provider, &mut ledger, 2);
        let registry = PredicateRegistry::standard();
        let mut cert = issuer
            .issue_attestation(
                &provider,
                &ledger,
                &registry,
                Claim {
                    predicate: "age_over_18".into(),
                    subject_nft: holder.nft_id().unwrap().clone(),
                },
            )
            .unwrap();
        cert.claim.predicate = "kyc_verified".into();
        let presentation = holder.make_presentation(&provider, &cert, 9).unwrap();
        assert_eq!(
            verify_presentation(&provider, &presentation, &ledger, 9),
            Err(PresentationError::BadCertSig)
        );
    }

    #[test]
    fn presentation_serialized_fields_are_exactly_the_protocol_fields() {
        // Data minimization: walk the serialized form field by field and
        // account for every byte. Nothing beyond predicate, ids, sequence
        // numbers, nonce, and signatures exists.
        let provider = TestProvider;
        let mut ledger = Ledger::new();
        let issuer = setup_holder(&provider, &mut ledger, 1);
        let holder = setup_holder(&provider, &mut ledger, 2);
        let registry = PredicateRegistry::standard();
        let cert = issuer
            .issue_attestation(
                &provider,
                &ledger,
                &registry,
                Claim {
                    predicate: "age_over_18".into(),
                    subject_nft: holder.nft_id().unwrap().clone(),
                },
            )
            .unwrap();
        let presentation = holder.make_presentation(&provider, &cert, 11).unwrap();
        let bytes = presentation.encode();

        let mut r = Reader::new(&bytes);
        let cert_bytes = r.bytes().unwrap();
        {
            let mut c = Reader::new(&cert_bytes);
            let claim_bytes = c.bytes().unwrap();
            {
                let mut cl = Reader::new(&claim_bytes);
                assert_eq!(cl.str().unwrap(), "age_over_18");
                assert_eq!(cl.str().unwrap(), holder.nft_id().unwrap().as_str());
                cl.done().unwrap();
            }
            assert_eq!(c.str().unwrap(), issuer.address().as_str());
            c.u64().unwrap(); // issued_at
            c.bytes().unwrap(); // issuer signature
            c.done().unwrap();
        }
        assert_eq!(r.str().unwrap(), holder.nft_id().unwrap().as_str());
        assert_eq!(r.u64().unwrap(), 11);
        r.bytes().unwrap(); // holder signature
        r.done().unwrap();
    }
}
