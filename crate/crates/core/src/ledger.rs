//! Simulated append-only SSI registry: identity NFTs, self-attested public
//! key records, and trusted-party attestation records.
//!
//! The ledger is a single ordered log with strictly increasing sequence
//! numbers plus derived indices. Identity NFTs are soulbound: exactly one
//! per wallet, and every transfer attempt is rejected outright. Key records
//! are latest-wins with full history retained, so attestations can pin the
//! issuer key that was current when they were issued.
//!
//! The log persists as line-delimited canonical records, `seq|kind|payload-hex`;
//! replaying a persisted log rebuilds identical indices.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::fmt;

use thiserror::Error;

use crate::codec::{sha256_hex, CodecError, Reader, Writer};
use crate::provider::{CryptoProvider, PublicKey, Signature};
use crate::wallet::AttestationCertificate;

/// Domain tag for the self-attestation signature over a key record.
const KEY_RECORD_TAG: &str = "metasim-key-record-v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("wallet already holds an identity NFT")]
    NftExists,
    #[error("wallet has no published key record")]
    UnknownWallet,
    #[error("identity NFTs are non-transferable")]
    SoulboundTransferForbidden,
    #[error("key record self-attestation does not verify")]
    BadSelfAttestation,
    #[error("no such record")]
    NotFound,
    #[error("attestation issuer signature does not verify")]
    BadIssuerSignature,
    #[error("attestation subject NFT was never minted")]
    UnknownSubjectNft,
    #[error("malformed ledger log: {0}")]
    Malformed(String),
}

impl LedgerError {
    pub fn code(&self) -> &'static str {
        match self {
            LedgerError::NftExists => "nft-exists",
            LedgerError::UnknownWallet => "unknown-wallet",
            LedgerError::SoulboundTransferForbidden => "soulbound-transfer-forbidden",
            LedgerError::BadSelfAttestation => "bad-self-attestation",
            LedgerError::NotFound => "not-found",
            LedgerError::BadIssuerSignature => "bad-issuer-signature",
            LedgerError::UnknownSubjectNft => "unknown-subject-nft",
            LedgerError::Malformed(_) => "malformed-log",
        }
    }
}

impl From<CodecError> for LedgerError {
    fn from(e: CodecError) -> Self {
        LedgerError::Malformed(e.to_string())
    }
}

/// Wallet address: SHA-256 of the wallet's root public key, lowercase hex.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WalletAddress(String);

impl WalletAddress {
    pub fn from_public_key(public: &PublicKey) -> Self {
        Self(sha256_hex(public.as_bytes()))
    }

    /// Reconstruct from a previously rendered address.
    pub fn from_hex(hex: String) -> Self {
        Self(hex)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WalletAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for WalletAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WalletAddress({})", &self.0[..8.min(self.0.len())])
    }
}

/// Identity NFT id: SHA-256 of (owner address, mint sequence number), hex.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NftId(String);

impl NftId {
    fn derive(owner: &WalletAddress, seq: u64) -> Self {
        let bytes = Writer::new().str(owner.as_str()).u64(seq).finish();
        Self(sha256_hex(&bytes))
    }

    pub fn from_hex(hex: String) -> Self {
        Self(hex)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// First 8 hex chars, the short form rendered to users.
    pub fn short(&self) -> &str {
        &self.0[..8.min(self.0.len())]
    }
}

impl fmt::Display for NftId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NftId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NftId({})", self.short())
    }
}

/// Unique, non-transferable ledger token anchoring a user's identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityNft {
    pub nft_id: NftId,
    pub owner: WalletAddress,
    pub minted_at: u64,
}

impl IdentityNft {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new()
            .str(self.nft_id.as_str())
            .str(self.owner.as_str())
            .u64(self.minted_at)
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let out = Self {
            nft_id: NftId::from_hex(r.str()?),
            owner: WalletAddress::from_hex(r.str()?),
            minted_at: r.u64()?,
        };
        r.done()?;
        Ok(out)
    }
}

/// Self-attested binding of an identity public key to a wallet address.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyRecord {
    pub owner: WalletAddress,
    pub identity_pub: PublicKey,
    pub published_at: u64,
    pub proof: Signature,
}

impl KeyRecord {
    /// Message the owner signs to self-attest the record.
    pub fn signing_message(owner: &WalletAddress, identity_pub: &PublicKey) -> Vec<u8> {
        Writer::new()
            .str(KEY_RECORD_TAG)
            .str(owner.as_str())
            .bytes(identity_pub.as_bytes())
            .finish()
    }

    pub fn encode(&self) -> Vec<u8> {
        Writer::new()
            .str(self.owner.as_str())
            .bytes(self.identity_pub.as_bytes())
            .u64(self.published_at)
            .bytes(self.proof.as_bytes())
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let out = Self {
            owner: WalletAddress::from_hex(r.str()?),
            identity_pub: PublicKey::from_bytes(r.bytes()?),
            published_at: r.u64()?,
            proof: Signature::from_bytes(r.bytes()?),
        };
        r.done()?;
        Ok(out)
    }
}

/// A trusted party's published attestation over a subject NFT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttestationRecord {
    pub cert: AttestationCertificate,
    pub issuer: WalletAddress,
    pub subject_nft: NftId,
    pub published_at: u64,
}

impl AttestationRecord {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new()
            .bytes(&self.cert.encode())
            .str(self.issuer.as_str())
            .str(self.subject_nft.as_str())
            .u64(self.published_at)
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let out = Self {
            cert: AttestationCertificate::decode(&r.bytes()?)?,
            issuer: WalletAddress::from_hex(r.str()?),
            subject_nft: NftId::from_hex(r.str()?),
            published_at: r.u64()?,
        };
        r.done()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LedgerEntry {
    Mint(IdentityNft),
    Key(KeyRecord),
    Attestation(AttestationRecord),
}

impl LedgerEntry {
    fn kind(&self) -> &'static str {
        match self {
            LedgerEntry::Mint(_) => "mint",
            LedgerEntry::Key(_) => "key",
            LedgerEntry::Attestation(_) => "attest",
        }
    }

    fn payload(&self) -> Vec<u8> {
        match self {
            LedgerEntry::Mint(nft) => nft.encode(),
            LedgerEntry::Key(rec) => rec.encode(),
            LedgerEntry::Attestation(rec) => rec.encode(),
        }
    }
}

/// Append-only registry with derived indices.
#[derive(Default)]
pub struct Ledger {
    entries: Vec<(u64, LedgerEntry)>,
    key_history: BTreeMap<WalletAddress, Vec<usize>>,
    nft_by_id: BTreeMap<NftId, usize>,
    nft_by_owner: BTreeMap<WalletAddress, NftId>,
    attestations_by_nft: BTreeMap<NftId, Vec<usize>>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sequence number of the most recent entry; 0 when empty.
    pub fn head(&self) -> u64 {
        self.entries.last().map(|(seq, _)| *seq).unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, &LedgerEntry)> {
        self.entries.iter().map(|(seq, e)| (*seq, e))
    }

    fn next_seq(&self) -> u64 {
        self.head() + 1
    }

    fn index(&mut self, seq: u64, entry: LedgerEntry) -> u64 {
        let idx = self.entries.len();
        match &entry {
            LedgerEntry::Mint(nft) => {
                self.nft_by_id.insert(nft.nft_id.clone(), idx);
                self.nft_by_owner
                    .insert(nft.owner.clone(), nft.nft_id.clone());
            }
            LedgerEntry::Key(rec) => {
                self.key_history
                    .entry(rec.owner.clone())
                    .or_default()
                    .push(idx);
            }
            LedgerEntry::Attestation(rec) => {
                self.attestations_by_nft
                    .entry(rec.subject_nft.clone())
                    .or_default()
                    .push(idx);
            }
        }
        self.entries.push((seq, entry));
        seq
    }

    /// Publish a self-attested key record. `proof` must be a signature by
    /// `identity_pub`'s private key over [`KeyRecord::signing_message`].
    pub fn publish_key_record(
        &mut self,
        provider: &dyn CryptoProvider,
        wallet: &WalletAddress,
        identity_pub: PublicKey,
        proof: Signature,
    ) -> Result<u64, LedgerError> {
        let message = KeyRecord::signing_message(wallet, &identity_pub);
        if !provider.verify(&identity_pub, &message, &proof) {
            return Err(LedgerError::BadSelfAttestation);
        }
        let seq = self.next_seq();
        let record = KeyRecord {
            owner: wallet.clone(),
            identity_pub,
            published_at: seq,
            proof,
        };
        Ok(self.index(seq, LedgerEntry::Key(record)))
    }

    /// Mint the wallet's identity NFT. One per wallet, forever.
    pub fn mint_identity_nft(
        &mut self,
        wallet: &WalletAddress,
    ) -> Result<IdentityNft, LedgerError> {
        if !self.key_history.contains_key(wallet) {
            return Err(LedgerError::UnknownWallet);
        }
        if self.nft_by_owner.contains_key(wallet) {
            return Err(LedgerError::NftExists);
        }
        let seq = self.next_seq();
        let nft = IdentityNft {
            nft_id: NftId::derive(wallet, seq),
            owner: wallet.clone(),
            minted_at: seq,
        };
        self.index(seq, LedgerEntry::Mint(nft.clone()));
        Ok(nft)
    }

    /// Always rejected: identity NFTs are soulbound. The rejection is uniform
    /// regardless of whether the NFT exists or the target is the current
    /// owner, so the call leaks nothing.
    pub fn transfer_identity_nft(
        &mut self,
        _nft_id: &NftId,
        _new_owner: &WalletAddress,
    ) -> Result<Infallible, LedgerError> {
        Err(LedgerError::SoulboundTransferForbidden)
    }

    /// Latest key record for a wallet.
    pub fn fetch_key_record(&self, wallet: &WalletAddress) -> Result<&KeyRecord, LedgerError> {
        let history = self.key_history.get(wallet).ok_or(LedgerError::NotFound)?;
        let idx = *history.last().expect("key history entries are never empty");
        match &self.entries[idx].1 {
            LedgerEntry::Key(rec) => Ok(rec),
            _ => unreachable!("key history indexes only key entries"),
        }
    }

    /// Key record that was latest for `wallet` at sequence number `at`.
    pub fn key_record_at(
        &self,
        wallet: &WalletAddress,
        at: u64,
    ) -> Result<&KeyRecord, LedgerError> {
        let history = self.key_history.get(wallet).ok_or(LedgerError::NotFound)?;
        let idx = history
            .iter()
            .rev()
            .copied()
            .find(|&i| self.entries[i].0 <= at)
            .ok_or(LedgerError::NotFound)?;
        match &self.entries[idx].1 {
            LedgerEntry::Key(rec) => Ok(rec),
            _ => unreachable!("key history indexes only key entries"),
        }
    }

    pub fn resolve_nft(&self, nft_id: &NftId) -> Result<&IdentityNft, LedgerError> {
        let idx = *self.nft_by_id.get(nft_id).ok_or(LedgerError::NotFound)?;
        match &self.entries[idx].1 {
            LedgerEntry::Mint(nft) => Ok(nft),
            _ => unreachable!("nft index points at mint entries"),
        }
    }

    pub fn nft_of_wallet(&self, wallet: &WalletAddress) -> Option<&NftId> {
        self.nft_by_owner.get(wallet)
    }

    /// All attestation records for a subject NFT, in publication order.
    pub fn fetch_attestations(&self, nft_id: &NftId) -> Vec<&AttestationRecord> {
        self.attestations_by_nft
            .get(nft_id)
            .map(|indices| {
                indices
                    .iter()
                    .map(|&i| match &self.entries[i].1 {
                        LedgerEntry::Attestation(rec) => rec,
                        _ => unreachable!("attestation index points at attestation entries"),
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Publish a trusted party's attestation. The certificate must verify
    /// against the issuer key pinned at the certificate's issuance sequence.
    pub fn publish_attestation(
        &mut self,
        provider: &dyn CryptoProvider,
        cert: AttestationCertificate,
    ) -> Result<u64, LedgerError> {
        if !self.nft_by_id.contains_key(&cert.claim.subject_nft) {
            return Err(LedgerError::UnknownSubjectNft);
        }
        let issuer_key = self
            .key_record_at(&cert.issuer_id, cert.issued_at)
            .map_err(|_| LedgerError::BadIssuerSignature)?;
        if !cert.verify(provider, &issuer_key.identity_pub) {
            return Err(LedgerError::BadIssuerSignature);
        }
        let seq = self.next_seq();
        let record = AttestationRecord {
            issuer: cert.issuer_id.clone(),
            subject_nft: cert.claim.subject_nft.clone(),
            published_at: seq,
            cert,
        };
        Ok(self.index(seq, LedgerEntry::Attestation(record)))
    }

    /// Does the subject NFT carry at least one attestation whose certificate
    /// verifies against the issuer key pinned at issuance?
    pub fn has_valid_attestation(&self, provider: &dyn CryptoProvider, nft_id: &NftId) -> bool {
        self.fetch_attestations(nft_id).iter().any(|rec| {
            self.key_record_at(&rec.issuer, rec.cert.issued_at)
                .map(|key| rec.cert.verify(provider, &key.identity_pub))
                .unwrap_or(false)
        })
    }

    /// Serialize the full log as line-delimited `seq|kind|payload-hex`.
    pub fn to_log_string(&self) -> String {
        let mut out = String::new();
        for (seq, entry) in &self.entries {
            out.push_str(&format!(
                "{}|{}|{}\n",
                seq,
                entry.kind(),
                hex::encode(entry.payload())
            ));
        }
        out
    }

    /// Rebuild a ledger by replaying a persisted log through the indexer.
    /// Sequence numbers must be exactly 1..=n in order.
    pub fn from_log_string(log: &str) -> Result<Self, LedgerError> {
        let mut ledger = Ledger::new();
        for (line_no, line) in log.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '|');
            let (seq, kind, payload_hex) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(LedgerError::Malformed(format!(
                        "line {}: expected seq|kind|payload-hex",
                        line_no + 1
                    )))
                }
            };
            let seq: u64 = seq.parse().map_err(|_| {
                LedgerError::Malformed(format!("line {}: bad sequence number", line_no + 1))
            })?;
            if seq != ledger.next_seq() {
                return Err(LedgerError::Malformed(format!(
                    "line {}: sequence {} breaks continuity",
                    line_no + 1,
                    seq
                )));
            }
            let payload = hex::decode(payload_hex).map_err(|_| {
                LedgerError::Malformed(format!("line {}: bad payload hex", line_no + 1))
            })?;
            let entry = match kind {
                "mint" => LedgerEntry::Mint(IdentityNft::decode(&payload)?),
                "key" => LedgerEntry::Key(KeyRecord::decode(&payload)?),
                "attest" => LedgerEntry::Attestation(AttestationRecord::decode(&payload)?),
                other => {
                    return Err(LedgerError::Malformed(format!(
                        "line {}: unknown entry kind `{}`",
                        line_no + 1,
                        other
                    )))
                }
            };
            ledger.index(seq, entry);
        }
        Ok(ledger)
    }

    /// Canonical bytes of the derived indices, for replay-equality checks.
    pub fn index_digest(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u64(self.head());
        w.u64(self.key_history.len() as u64);
        for (wallet, history) in &self.key_history {
            w.str(wallet.as_str());
            w.u64(history.len() as u64);
            for &idx in history {
                w.u64(self.entries[idx].0);
            }
        }
        w.u64(self.nft_by_owner.len() as u64);
        for (wallet, nft) in &self.nft_by_owner {
            w.str(wallet.as_str());
            w.str(nft.as_str());
        }
        w.u64(self.attestations_by_nft.len() as u64);
        for (nft, indices) in &self.attestations_by_nft {
            w.str(nft.as_str());
            w.u64(indices.len() as u64);
            for &idx in indices {
                w.u64(self.entries[idx].0);
            }
        }
        w.finish()
    }
}
