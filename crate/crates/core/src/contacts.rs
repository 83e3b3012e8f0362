//! Avatar recognition: contact exchange, mutual-contact endorsement, and
//! impersonation detection.
//!
//! Appearance and voice are data, not evidence: recognition verdicts derive
//! solely from the NFT binding proof. An avatar whose appearance exactly
//! matches a saved contact but whose proven NFT differs is flagged, because
//! looks are exactly what an impersonator can copy.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::codec::{CodecError, Reader, Writer};
use crate::ledger::{Ledger, NftId};
use crate::provider::{CryptoProvider, Signature};
use crate::trace::Trace;
use crate::wallet::Wallet;

const BINDING_TAG: &str = "metasim-contact-binding-v1";
const ENDORSE_TAG: &str = "metasim-endorse-v1";

/// Opaque appearance attributes (skin, clothing, ...). Carries no trust.
pub type AttributeMap = BTreeMap<String, String>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContactsError {
    #[error("NFT binding proof failed verification")]
    BindingProofFailed,
    #[error("endorser does not know both subject and target")]
    NotMutualContact,
}

impl ContactsError {
    pub fn code(&self) -> &'static str {
        match self {
            ContactsError::BindingProofFailed => "binding-proof-failed",
            ContactsError::NotMutualContact => "not-mutual-contact",
        }
    }
}

/// What an avatar looks and sounds like. Pure presentation data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvatarProfile {
    pub nft_id: NftId,
    pub display_name: String,
    pub appearance: AttributeMap,
    pub voice_tag: String,
}

impl AvatarProfile {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.str(self.nft_id.as_str());
        w.str(&self.display_name);
        w.u32(self.appearance.len() as u32);
        for (key, value) in &self.appearance {
            w.str(key);
            w.str(value);
        }
        w.str(&self.voice_tag);
        w.finish()
    }
}

/// Proof of live control over the identity key the ledger binds to an NFT.
#[derive(Debug, Clone)]
pub struct BindingProof {
    pub nft_id: NftId,
    pub nonce: u64,
    pub signature: Signature,
}

impl BindingProof {
    fn signing_message(nft_id: &NftId, nonce: u64) -> Vec<u8> {
        Writer::new()
            .str(BINDING_TAG)
            .str(nft_id.as_str())
            .u64(nonce)
            .finish()
    }

    /// Sign a binding proof for the wallet's own NFT over the peer's nonce.
    pub fn make(provider: &dyn CryptoProvider, wallet: &Wallet, nonce: u64) -> Option<Self> {
        let nft_id = wallet.nft_id()?.clone();
        let signature = wallet.sign(provider, &Self::signing_message(&nft_id, nonce));
        Some(Self {
            nft_id,
            nonce,
            signature,
        })
    }

    /// Sign a proof claiming an arbitrary NFT; verification rejects it
    /// unless the wallet really controls that NFT's ledger-bound key.
    pub fn claim(
        provider: &dyn CryptoProvider,
        wallet: &Wallet,
        claimed: &NftId,
        nonce: u64,
    ) -> Self {
        let signature = wallet.sign(provider, &Self::signing_message(claimed, nonce));
        Self {
            nft_id: claimed.clone(),
            nonce,
            signature,
        }
    }

    pub fn verify(&self, provider: &dyn CryptoProvider, ledger: &Ledger, nonce: u64) -> bool {
        if self.nonce != nonce {
            return false;
        }
        let Ok(key) = ledger
            .resolve_nft(&self.nft_id)
            .and_then(|nft| ledger.fetch_key_record(&nft.owner))
        else {
            return false;
        };
        provider.verify(
            &key.identity_pub,
            &Self::signing_message(&self.nft_id, self.nonce),
            &self.signature,
        )
    }
}

/// A mutual contact's signed attestation of a saved contact's NFT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endorsement {
    pub endorser_nft: NftId,
    pub signature: Signature,
}

impl Endorsement {
    fn signing_message(subject_nft: &NftId, endorser_nft: &NftId) -> Vec<u8> {
        Writer::new()
            .str(ENDORSE_TAG)
            .str(subject_nft.as_str())
            .str(endorser_nft.as_str())
            .finish()
    }

    pub fn verify(
        &self,
        provider: &dyn CryptoProvider,
        ledger: &Ledger,
        subject_nft: &NftId,
    ) -> bool {
        let Ok(key) = ledger
            .resolve_nft(&self.endorser_nft)
            .and_then(|nft| ledger.fetch_key_record(&nft.owner))
        else {
            return false;
        };
        provider.verify(
            &key.identity_pub,
            &Self::signing_message(subject_nft, &self.endorser_nft),
            &self.signature,
        )
    }
}

/// One saved contact, like a phone-book entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactEntry {
    pub nft_id: NftId,
    pub saved_label: String,
    pub endorsements: Vec<Endorsement>,
    pub first_met: u64,
    /// Appearance captured at exchange time; reference material for
    /// impersonation detection, never trust input.
    pub saved_appearance: AttributeMap,
}

/// Per-wallet contact book, actor-local to its owner.
#[derive(Debug, Default, Clone)]
pub struct ContactBook {
    entries: BTreeMap<NftId, ContactEntry>,
}

impl ContactBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, nft: &NftId) -> Option<&ContactEntry> {
        self.entries.get(nft)
    }

    pub fn contains(&self, nft: &NftId) -> bool {
        self.entries.contains_key(nft)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &ContactEntry> {
        self.entries.values()
    }

    /// Insert or refresh a contact. Re-meeting an existing contact keeps
    /// `first_met` and endorsements.
    fn save(&mut self, profile: &AvatarProfile, now: u64) {
        self.entries
            .entry(profile.nft_id.clone())
            .and_modify(|entry| {
                entry.saved_label = profile.display_name.clone();
                entry.saved_appearance = profile.appearance.clone();
            })
            .or_insert_with(|| ContactEntry {
                nft_id: profile.nft_id.clone(),
                saved_label: profile.display_name.clone(),
                endorsements: Vec::new(),
                first_met: now,
                saved_appearance: profile.appearance.clone(),
            });
    }

    fn entry_mut(&mut self, nft: &NftId) -> Option<&mut ContactEntry> {
        self.entries.get_mut(nft)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u32(self.entries.len() as u32);
        for entry in self.entries.values() {
            w.str(entry.nft_id.as_str());
            w.str(&entry.saved_label);
            w.u64(entry.first_met);
            w.u32(entry.endorsements.len() as u32);
            for endorsement in &entry.endorsements {
                w.str(endorsement.endorser_nft.as_str());
                w.bytes(endorsement.signature.as_bytes());
            }
            w.u32(entry.saved_appearance.len() as u32);
            for (key, value) in &entry.saved_appearance {
                w.str(key);
                w.str(value);
            }
        }
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let count = r.u32()?;
        let mut book = ContactBook::new();
        for _ in 0..count {
            let nft_id = NftId::from_hex(r.str()?);
            let saved_label = r.str()?;
            let first_met = r.u64()?;
            let endorsement_count = r.u32()?;
            let mut endorsements = Vec::with_capacity(endorsement_count as usize);
            for _ in 0..endorsement_count {
                endorsements.push(Endorsement {
                    endorser_nft: NftId::from_hex(r.str()?),
                    signature: Signature::from_bytes(r.bytes()?),
                });
            }
            let attr_count = r.u32()?;
            let mut saved_appearance = AttributeMap::new();
            for _ in 0..attr_count {
                let key = r.str()?;
                let value = r.str()?;
                saved_appearance.insert(key, value);
            }
            book.entries.insert(
                nft_id.clone(),
                ContactEntry {
                    nft_id,
                    saved_label,
                    endorsements,
                    first_met,
                    saved_appearance,
                },
            );
        }
        r.done()?;
        Ok(book)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Known,
    Unknown,
    ImpersonationWarning,
}

/// Outcome of looking at an avatar: the verdict plus the label to render
/// (saved label for known contacts, short NFT id otherwise).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecognitionResult {
    pub verdict: Verdict,
    pub label: Option<String>,
}

impl RecognitionResult {
    pub fn code(&self) -> &'static str {
        match self.verdict {
            Verdict::Known => "known",
            Verdict::Unknown => "unknown",
            Verdict::ImpersonationWarning => "IMPERSONATION_WARNING",
        }
    }
}

/// Mutual contact exchange with challenge-verified NFT bindings.
///
/// Each side proves control of its profile's NFT by signing the other's
/// nonce. On success both books gain the peer's entry; repeat exchanges are
/// idempotent and keep `first_met`.
#[allow(clippy::too_many_arguments)]
pub fn exchange_contacts(
    provider: &dyn CryptoProvider,
    ledger: &Ledger,
    a_wallet: &Wallet,
    a_profile: &AvatarProfile,
    a_book: &mut ContactBook,
    b_wallet: &Wallet,
    b_profile: &AvatarProfile,
    b_book: &mut ContactBook,
    nonce_a: u64,
    nonce_b: u64,
    now: u64,
    trace: &mut Trace,
) -> Result<(), ContactsError> {
    // a proves its profile NFT over b's nonce, and vice versa. A wallet that
    // presents an NFT it cannot sign for fails here.
    let a_proof = BindingProof::claim(provider, a_wallet, &a_profile.nft_id, nonce_b);
    let b_proof = BindingProof::claim(provider, b_wallet, &b_profile.nft_id, nonce_a);
    trace.record(
        a_profile.nft_id.as_str().to_string(),
        b_profile.nft_id.as_str().to_string(),
        "contact-offer",
        false,
        a_profile.encode(),
    );
    trace.record(
        b_profile.nft_id.as_str().to_string(),
        a_profile.nft_id.as_str().to_string(),
        "contact-offer",
        false,
        b_profile.encode(),
    );
    if !a_proof.verify(provider, ledger, nonce_b) || !b_proof.verify(provider, ledger, nonce_a) {
        return Err(ContactsError::BindingProofFailed);
    }
    a_book.save(b_profile, now);
    b_book.save(a_profile, now);
    Ok(())
}

/// A mutual contact endorses `subject` into `target`'s book. The endorser
/// must know both parties; endorsements never create contacts on their own.
pub fn endorse_contact(
    provider: &dyn CryptoProvider,
    endorser_wallet: &Wallet,
    endorser_book: &ContactBook,
    subject_nft: &NftId,
    target_nft: &NftId,
    target_book: &mut ContactBook,
) -> Result<(), ContactsError> {
    let endorser_nft = endorser_wallet
        .nft_id()
        .ok_or(ContactsError::NotMutualContact)?
        .clone();
    if !endorser_book.contains(subject_nft) || !endorser_book.contains(target_nft) {
        return Err(ContactsError::NotMutualContact);
    }
    let entry = target_book
        .entry_mut(subject_nft)
        .ok_or(ContactsError::NotMutualContact)?;
    let message = Endorsement::signing_message(subject_nft, &endorser_nft);
    entry.endorsements.push(Endorsement {
        endorser_nft,
        signature: endorser_wallet.sign(provider, &message),
    });
    Ok(())
}

/// Decide who an encountered avatar is. The verdict depends only on the
/// proven NFT; appearance can at most trigger a warning, never trust.
pub fn recognize_avatar(
    provider: &dyn CryptoProvider,
    ledger: &Ledger,
    observer_book: &ContactBook,
    encountered: &AvatarProfile,
    proof: Option<&BindingProof>,
    expected_nonce: u64,
) -> RecognitionResult {
    let proven = proof
        .map(|p| p.nft_id == encountered.nft_id && p.verify(provider, ledger, expected_nonce))
        .unwrap_or(false);

    let appearance_collision = observer_book
        .entries()
        .find(|entry| entry.saved_appearance == encountered.appearance);

    if proven {
        if let Some(entry) = observer_book.get(&encountered.nft_id) {
            return RecognitionResult {
                verdict: Verdict::Known,
                label: Some(if entry.saved_label.is_empty() {
                    entry.nft_id.short().to_string()
                } else {
                    entry.saved_label.clone()
                }),
            };
        }
        // Novel NFT wearing a known contact's exact appearance.
        if let Some(colliding) = appearance_collision {
            if colliding.nft_id != encountered.nft_id {
                return RecognitionResult {
                    verdict: Verdict::ImpersonationWarning,
                    label: Some(encountered.nft_id.short().to_string()),
                };
            }
        }
        return RecognitionResult {
            verdict: Verdict::Unknown,
            label: Some(encountered.nft_id.short().to_string()),
        };
    }

    // Unproven binding: the claimed NFT means nothing.
    if appearance_collision.is_some() {
        return RecognitionResult {
            verdict: Verdict::ImpersonationWarning,
            label: None,
        };
    }
    RecognitionResult {
        verdict: Verdict::Unknown,
        label: None,
    }
}
