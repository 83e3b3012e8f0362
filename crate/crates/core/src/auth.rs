//! Two-tier world authentication.
//!
//! Open worlds recognize the visitor's identity NFT: the wallet signs a
//! fresh world challenge with the identity key the ledger binds to its NFT,
//! and returning visitors are recognized from the visitor registry alone.
//!
//! Restricted worlds additionally demand a verifiable presentation of a
//! trusted-party certificate for the world's required predicate. The world
//! learns the predicate, ids, nonces, and signatures; no attribute values
//! ever cross the wire.

use std::collections::{BTreeMap, BTreeSet};

use crate::codec::{sha256_hex, Writer};
use crate::ledger::{Ledger, NftId, WalletAddress};
use crate::provider::{CryptoProvider, Signature};
use crate::trace::Trace;
use crate::wallet::{verify_presentation, Presentation, Wallet};

const AUTH_TAG: &str = "metasim-auth-v1";

/// Single-use liveness challenge issued by a world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge {
    pub nonce: u64,
    pub world_id: String,
    pub issued_at: u64,
}

impl Challenge {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new()
            .u64(self.nonce)
            .str(&self.world_id)
            .u64(self.issued_at)
            .finish()
    }
}

/// Wallet-side answer: the claimed NFT plus a signature over the challenge.
#[derive(Debug, Clone)]
pub struct AuthResponse {
    pub nft_id: NftId,
    pub signature: Signature,
    /// Present only for restricted access.
    pub presentation: Option<Presentation>,
}

impl AuthResponse {
    fn signing_message(world_id: &str, nonce: u64, nft_id: &NftId) -> Vec<u8> {
        Writer::new()
            .str(AUTH_TAG)
            .str(world_id)
            .u64(nonce)
            .str(nft_id.as_str())
            .finish()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.str(self.nft_id.as_str());
        w.bytes(self.signature.as_bytes());
        match &self.presentation {
            Some(p) => w.bool(true).bytes(&p.encode()),
            None => w.bool(false),
        };
        w.finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthOutcome {
    Accepted,
    Rejected,
}

/// Result of one authentication attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthResult {
    pub outcome: AuthOutcome,
    /// `"ok"` on acceptance, else the rejection code.
    pub reason: &'static str,
    pub recognized_returning: bool,
    pub session_id: Option<String>,
}

impl AuthResult {
    fn rejected(reason: &'static str) -> Self {
        Self {
            outcome: AuthOutcome::Rejected,
            reason,
            recognized_returning: false,
            session_id: None,
        }
    }

    pub fn accepted(&self) -> bool {
        self.outcome == AuthOutcome::Accepted
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitRecord {
    pub first_seen: u64,
    pub visit_count: u64,
}

/// Per-world record of NFTs that completed an accepted authentication.
/// Stores nothing else: no keys, no claims, no attributes.
#[derive(Debug, Default, Clone)]
pub struct VisitorRegistry {
    visits: BTreeMap<NftId, VisitRecord>,
}

impl VisitorRegistry {
    pub fn contains(&self, nft: &NftId) -> bool {
        self.visits.contains_key(nft)
    }

    pub fn get(&self, nft: &NftId) -> Option<&VisitRecord> {
        self.visits.get(nft)
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    fn note_visit(&mut self, nft: &NftId, now: u64) {
        self.visits
            .entry(nft.clone())
            .and_modify(|rec| rec.visit_count += 1)
            .or_insert(VisitRecord {
                first_seen: now,
                visit_count: 1,
            });
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u32(self.visits.len() as u32);
        for (nft, rec) in &self.visits {
            w.str(nft.as_str());
            w.u64(rec.first_seen);
            w.u64(rec.visit_count);
        }
        w.finish()
    }
}

/// World-side authentication state: outstanding challenges and the visitor
/// registry. Confined to the world actor.
pub struct AuthEngine {
    world_id: String,
    outstanding: BTreeMap<u64, Challenge>,
    registry: VisitorRegistry,
}

impl AuthEngine {
    pub fn new(world_id: impl Into<String>) -> Self {
        Self {
            world_id: world_id.into(),
            outstanding: BTreeMap::new(),
            registry: VisitorRegistry::default(),
        }
    }

    pub fn world_id(&self) -> &str {
        &self.world_id
    }

    pub fn registry(&self) -> &VisitorRegistry {
        &self.registry
    }

    pub fn outstanding_nonces(&self) -> impl Iterator<Item = u64> + '_ {
        self.outstanding.keys().copied()
    }

    /// Issue a fresh single-use challenge. `nonce` comes from the caller's
    /// deterministic randomness source.
    pub fn issue_challenge(&mut self, nonce: u64, now: u64, trace: &mut Trace) -> Challenge {
        let challenge = Challenge {
            nonce,
            world_id: self.world_id.clone(),
            issued_at: now,
        };
        self.outstanding.insert(nonce, challenge.clone());
        trace.record(
            self.world_id.clone(),
            "visitor",
            "auth-challenge",
            false,
            challenge.encode(),
        );
        challenge
    }

    /// Consume an outstanding challenge; a challenge survives exactly one
    /// verification attempt.
    fn take_challenge(&mut self, nonce: u64) -> Option<Challenge> {
        self.outstanding.remove(&nonce)
    }

    /// Open access: recognize the authentication NFT via challenge signature.
    pub fn authenticate_open(
        &mut self,
        provider: &dyn CryptoProvider,
        ledger: &Ledger,
        wallet: &Wallet,
        challenge: &Challenge,
        now: u64,
        trace: &mut Trace,
    ) -> AuthResult {
        let response = match respond_to_challenge(provider, wallet, challenge, None) {
            Some(r) => r,
            None => return AuthResult::rejected("no-nft"),
        };
        trace.record(
            response.nft_id.as_str().to_string(),
            self.world_id.clone(),
            "auth-response",
            false,
            response.encode(),
        );
        self.verify_response(
            provider,
            ledger,
            &response,
            challenge.nonce,
            now,
            None,
            None,
        )
    }

    /// Restricted access: open-access checks plus a verifiable presentation
    /// of the required predicate from a trusted issuer.
    #[allow(clippy::too_many_arguments)]
    pub fn authenticate_restricted(
        &mut self,
        provider: &dyn CryptoProvider,
        ledger: &Ledger,
        wallet: &Wallet,
        challenge: &Challenge,
        required_predicate: &str,
        trusted_issuers: &BTreeSet<WalletAddress>,
        now: u64,
        trace: &mut Trace,
    ) -> AuthResult {
        // Prefer a certificate from an issuer this world trusts; fall back
        // to any predicate match so the rejection names the real problem.
        let cert = wallet
            .held_certs()
            .iter()
            .find(|c| {
                c.claim.predicate == required_predicate && trusted_issuers.contains(&c.issuer_id)
            })
            .or_else(|| wallet.find_cert(required_predicate));
        let presentation = cert.and_then(|cert| {
            wallet
                .make_presentation(provider, cert, challenge.nonce)
                .ok()
        });
        let response = match respond_to_challenge(provider, wallet, challenge, presentation) {
            Some(r) => r,
            None => return AuthResult::rejected("no-nft"),
        };
        trace.record(
            response.nft_id.as_str().to_string(),
            self.world_id.clone(),
            "auth-response",
            false,
            response.encode(),
        );
        self.verify_response(
            provider,
            ledger,
            &response,
            challenge.nonce,
            now,
            Some(required_predicate),
            Some(trusted_issuers),
        )
    }

    /// World-side verification shared by both tiers.
    #[allow(clippy::too_many_arguments)]
    fn verify_response(
        &mut self,
        provider: &dyn CryptoProvider,
        ledger: &Ledger,
        response: &AuthResponse,
        nonce: u64,
        now: u64,
        required_predicate: Option<&str>,
        trusted_issuers: Option<&BTreeSet<WalletAddress>>,
    ) -> AuthResult {
        let Some(challenge) = self.take_challenge(nonce) else {
            return AuthResult::rejected("stale-challenge");
        };

        // The ledger, not the wallet, decides which key the NFT binds to.
        let bound_key = ledger
            .resolve_nft(&response.nft_id)
            .and_then(|nft| ledger.fetch_key_record(&nft.owner));
        let Ok(bound_key) = bound_key else {
            return AuthResult::rejected("no-nft");
        };
        let message =
            AuthResponse::signing_message(&challenge.world_id, challenge.nonce, &response.nft_id);
        if !provider.verify(&bound_key.identity_pub, &message, &response.signature) {
            return AuthResult::rejected("bad-signature");
        }

        if let Some(predicate) = required_predicate {
            let Some(presentation) = &response.presentation else {
                return AuthResult::rejected("missing-claim");
            };
            if presentation.cert.claim.predicate != predicate {
                return AuthResult::rejected("missing-claim");
            }
            let trusted = trusted_issuers.expect("restricted checks carry a trust set");
            if !trusted.contains(&presentation.cert.issuer_id) {
                return AuthResult::rejected("untrusted-issuer");
            }
            if verify_presentation(provider, presentation, ledger, challenge.nonce).is_err() {
                return AuthResult::rejected("bad-presentation");
            }
        }

        let recognized_returning = self.registry.contains(&response.nft_id);
        self.registry.note_visit(&response.nft_id, now);
        let session_id = session_id(&challenge.world_id, challenge.nonce, &response.nft_id);
        AuthResult {
            outcome: AuthOutcome::Accepted,
            reason: "ok",
            recognized_returning,
            session_id: Some(session_id),
        }
    }
}

/// Wallet-side half of the exchange: sign the challenge for the wallet's own
/// NFT. Returns `None` when the wallet holds no identity NFT.
pub fn respond_to_challenge(
    provider: &dyn CryptoProvider,
    wallet: &Wallet,
    challenge: &Challenge,
    presentation: Option<Presentation>,
) -> Option<AuthResponse> {
    let nft_id = wallet.nft_id()?.clone();
    let message = AuthResponse::signing_message(&challenge.world_id, challenge.nonce, &nft_id);
    Some(AuthResponse {
        nft_id,
        signature: wallet.sign(provider, &message),
        presentation,
    })
}

fn session_id(world_id: &str, nonce: u64, nft_id: &NftId) -> String {
    let bytes = Writer::new()
        .str("metasim-session")
        .str(world_id)
        .u64(nonce)
        .str(nft_id.as_str())
        .finish();
    sha256_hex(&bytes)[..16].to_string()
}
