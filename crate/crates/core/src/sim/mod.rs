//! Deterministic multi-world simulator.
//!
//! A scenario declares users, trusted parties, and worlds, then scripts
//! events against them. The runner executes every event through the real
//! protocol modules over a single ledger and prekey directory, drawing all
//! randomness from one seeded generator: identical scenario and seed give
//! byte-identical transcripts.
//!
//! Worlds hold no user secrets. After every event the runner serializes each
//! world's state and verifies that no private key, certificate body, or
//! avatar attribute value appears in it; a hit aborts the run as an
//! invariant breach. Channel handshakes are additionally audited for
//! third-party messages.
//!
//! Event failures are not run failures: a rejected authentication is a
//! recorded outcome. Only invariant breaches abort.

mod scenario;
mod transcript;

pub use scenario::{
    AccessPolicy, Event, EventKind, Scenario, ScenarioError, TrustedPartyDecl, UserDecl, WorldDecl,
};
pub use transcript::{detail, Transcript, TranscriptError, TranscriptRecord};

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::auth::AuthEngine;
use crate::channel::{
    accept_channel, receive_message, request_channel, send_message, ChannelState,
};
use crate::codec::{sha256_hex, Writer};
use crate::contacts::{
    endorse_contact, exchange_contacts, recognize_avatar, AvatarProfile, BindingProof, ContactBook,
};
use crate::directory::PrekeyDirectory;
use crate::ledger::{Ledger, LedgerEntry, WalletAddress};
use crate::provider::CryptoProvider;
use crate::trace::Trace;
use crate::wallet::{Claim, PredicateRegistry, Wallet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("invariant breach at seq {seq}: {message}")]
    InvariantBreach { seq: u64, message: String },
}

/// A virtual world: access policy, trusted issuers, and auth state. By
/// construction it stores no user private material and no credential bodies.
pub struct VirtualWorld {
    pub world_id: String,
    pub policy: AccessPolicy,
    pub trusted_issuers: BTreeSet<WalletAddress>,
    pub auth: AuthEngine,
}

impl VirtualWorld {
    fn new(decl: &WorldDecl, issuers: BTreeSet<WalletAddress>) -> Self {
        Self {
            world_id: decl.name.clone(),
            policy: decl.policy.clone(),
            trusted_issuers: issuers,
            auth: AuthEngine::new(decl.name.clone()),
        }
    }

    /// Canonical serialization of everything this world knows.
    pub fn serialized_state(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.str(&self.world_id);
        w.str(&self.policy.describe());
        w.u32(self.trusted_issuers.len() as u32);
        for issuer in &self.trusted_issuers {
            w.str(issuer.as_str());
        }
        w.bytes(&self.auth.registry().encode());
        let nonces: Vec<u64> = self.auth.outstanding_nonces().collect();
        w.u32(nonces.len() as u32);
        for nonce in nonces {
            w.u64(nonce);
        }
        w.finish()
    }
}

struct UserActor {
    decl: UserDecl,
    wallet: Wallet,
    profile: Option<AvatarProfile>,
    book: ContactBook,
    sessions: BTreeMap<String, String>,
    admitted_worlds: BTreeSet<String>,
    channels: BTreeMap<String, ChannelState>,
}

struct TrustedPartyActor {
    wallet: Wallet,
    removed: bool,
}

/// Everything a finished run exposes for inspection and audits.
pub struct RunReport {
    pub transcript: Transcript,
    pub trace: Trace,
    pub ledger_log: String,
    /// Final serialized state per world.
    pub world_states: BTreeMap<String, Vec<u8>>,
    /// Identity NFTs on the ledger per user.
    pub nft_count_by_user: BTreeMap<String, usize>,
    /// Worlds that ever admitted the user.
    pub admitted_worlds_by_user: BTreeMap<String, usize>,
    /// Per user: byte patterns that must never appear in world state
    /// (private keys, seeds, held certificate bodies), for external audits.
    pub sensitive_material_by_user: BTreeMap<String, Vec<Vec<u8>>>,
}

/// Run a scenario and return just the transcript.
pub fn run_scenario(
    scenario: &Scenario,
    provider: &dyn CryptoProvider,
) -> Result<Transcript, SimError> {
    run_report(scenario, provider).map(|report| report.transcript)
}

/// Run a scenario and return the full report.
pub fn run_report(
    scenario: &Scenario,
    provider: &dyn CryptoProvider,
) -> Result<RunReport, SimError> {
    Simulation::new(scenario, provider).run(scenario)
}

/// Re-run the scenario and compare transcripts byte for byte.
pub fn verify_transcript(
    scenario: &Scenario,
    provider: &dyn CryptoProvider,
    transcript_text: &str,
) -> Result<bool, SimError> {
    let fresh = run_scenario(scenario, provider)?;
    Ok(fresh.render() == transcript_text)
}

struct Simulation<'a> {
    provider: &'a dyn CryptoProvider,
    rng: ChaCha20Rng,
    time: u64,
    next_seq: u64,
    ledger: Ledger,
    directory: PrekeyDirectory,
    registry: PredicateRegistry,
    users: BTreeMap<String, UserActor>,
    tps: BTreeMap<String, TrustedPartyActor>,
    worlds: BTreeMap<String, VirtualWorld>,
    trace: Trace,
    transcript: Transcript,
}

impl<'a> Simulation<'a> {
    fn new(scenario: &Scenario, provider: &'a dyn CryptoProvider) -> Self {
        Self {
            provider,
            rng: ChaCha20Rng::seed_from_u64(scenario.seed),
            time: 0,
            next_seq: 1,
            ledger: Ledger::new(),
            directory: PrekeyDirectory::new(),
            registry: PredicateRegistry::standard(),
            users: BTreeMap::new(),
            tps: BTreeMap::new(),
            worlds: BTreeMap::new(),
            trace: Trace::new(),
            transcript: Transcript::default(),
        }
    }

    fn record(&mut self, actor: &str, event: &str, detail_bytes: Vec<u8>, outcome: String) {
        let record = TranscriptRecord {
            seq: self.next_seq,
            time: self.time,
            actor: actor.to_string(),
            event: event.to_string(),
            detail: detail_bytes,
            outcome,
        };
        self.next_seq += 1;
        self.transcript.records.push(record);
    }

    fn fresh_seed(&mut self) -> [u8; 32] {
        let mut seed = [0u8; 32];
        self.rng.fill_bytes(&mut seed);
        seed
    }

    /// Wallet creation and key publication for every declared actor, in
    /// declaration order so the seed stream is stable. Setup is not part of
    /// the event script and leaves no transcript records: an empty event
    /// list runs to an empty transcript.
    fn setup(&mut self, scenario: &Scenario) {
        for decl in &scenario.users {
            let seed = self.fresh_seed();
            let wallet =
                Wallet::create(self.provider, &seed).expect("32-byte seeds are always valid");
            wallet
                .publish_key_record(self.provider, &mut self.ledger)
                .expect("self-attestation of a fresh wallet cannot fail");
            self.users.insert(
                decl.name.clone(),
                UserActor {
                    decl: decl.clone(),
                    wallet,
                    profile: None,
                    book: ContactBook::new(),
                    sessions: BTreeMap::new(),
                    admitted_worlds: BTreeSet::new(),
                    channels: BTreeMap::new(),
                },
            );
        }
        for decl in &scenario.trusted_parties {
            let seed = self.fresh_seed();
            let wallet =
                Wallet::create(self.provider, &seed).expect("32-byte seeds are always valid");
            wallet
                .publish_key_record(self.provider, &mut self.ledger)
                .expect("self-attestation of a fresh wallet cannot fail");
            self.tps.insert(
                decl.name.clone(),
                TrustedPartyActor {
                    wallet,
                    removed: false,
                },
            );
        }
        for decl in &scenario.worlds {
            let issuers = decl
                .trusted_issuers
                .iter()
                .map(|name| self.tps[name].wallet.address().clone())
                .collect();
            self.worlds
                .insert(decl.name.clone(), VirtualWorld::new(decl, issuers));
        }
    }

    fn run(mut self, scenario: &Scenario) -> Result<RunReport, SimError> {
        self.setup(scenario);
        self.audit_worlds()?;
        for event in scenario.ordered_events() {
            self.time = event.at;
            let (detail_bytes, outcome) = self.execute(&event.kind)?;
            self.record(
                event.kind.subject(),
                event.kind.token(),
                detail_bytes,
                outcome,
            );
            self.audit_worlds()?;
        }
        Ok(self.into_report())
    }

    fn into_report(self) -> RunReport {
        let world_states = self
            .worlds
            .values()
            .map(|w| (w.world_id.clone(), w.serialized_state()))
            .collect();
        let nft_count_by_user = self
            .users
            .iter()
            .map(|(name, actor)| {
                let count = self
                    .ledger
                    .entries()
                    .filter(|(_, entry)| {
                        matches!(entry, LedgerEntry::Mint(nft) if &nft.owner == actor.wallet.address())
                    })
                    .count();
                (name.clone(), count)
            })
            .collect();
        let admitted_worlds_by_user = self
            .users
            .iter()
            .map(|(name, actor)| (name.clone(), actor.admitted_worlds.len()))
            .collect();
        let sensitive_material_by_user = self
            .users
            .iter()
            .map(|(name, actor)| {
                let mut patterns = actor.wallet.private_material();
                patterns.extend(actor.wallet.held_certs().iter().map(|c| c.encode()));
                (name.clone(), patterns)
            })
            .collect();
        RunReport {
            transcript: self.transcript,
            trace: self.trace,
            ledger_log: self.ledger.to_log_string(),
            world_states,
            nft_count_by_user,
            admitted_worlds_by_user,
            sensitive_material_by_user,
        }
    }

    /// No-credential-silos audit: worlds must never hold user secrets,
    /// certificate bodies, or avatar attribute values.
    fn audit_worlds(&self) -> Result<(), SimError> {
        for world in self.worlds.values() {
            let state = world.serialized_state();
            for (name, actor) in &self.users {
                let mut forbidden: Vec<Vec<u8>> = actor.wallet.private_material();
                forbidden.extend(actor.wallet.held_certs().iter().map(|c| c.encode()));
                for value in actor.decl.appearance.values() {
                    forbidden.push(value.as_bytes().to_vec());
                }
                if !actor.decl.voice_tag.is_empty() {
                    forbidden.push(actor.decl.voice_tag.as_bytes().to_vec());
                }
                for pattern in &forbidden {
                    if !pattern.is_empty()
                        && state.windows(pattern.len()).any(|w| w == &pattern[..])
                    {
                        return Err(SimError::InvariantBreach {
                            seq: self.next_seq,
                            message: format!(
                                "world `{}` state contains data belonging to `{}`",
                                world.world_id, name
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn execute(&mut self, kind: &EventKind) -> Result<(Vec<u8>, String), SimError> {
        match kind {
            EventKind::Mint { user } => Ok(self.do_mint(user)),
            EventKind::Attest {
                tp,
                user,
                predicate,
            } => Ok(self.do_attest(tp, user, predicate)),
            EventKind::PublishBundle { user, count } => Ok(self.do_publish_bundle(user, *count)),
            EventKind::Authenticate { user, world } => Ok(self.do_authenticate_event(user, world)),
            EventKind::OpenChannel {
                requester,
                receiver,
            } => self.do_open_channel(requester, receiver),
            EventKind::Message { from, to, text } => self.do_message(from, to, text),
            EventKind::ExchangeContacts { a, b } => Ok(self.do_exchange_contacts(a, b)),
            EventKind::Endorse {
                endorser,
                subject,
                target,
            } => Ok(self.do_endorse(endorser, subject, target)),
            EventKind::Migrate { user, from, to } => Ok(self.do_migrate(user, from, to)),
            EventKind::Impersonate {
                attacker,
                victim,
                observer,
            } => Ok(self.do_impersonate(attacker, victim, observer)),
            EventKind::Remove { actor } => Ok(self.do_remove(actor)),
        }
    }

    fn do_mint(&mut self, user: &str) -> (Vec<u8>, String) {
        let actor = self.users.get_mut(user).expect("validated at load");
        match self.ledger.mint_identity_nft(actor.wallet.address()) {
            Ok(nft) => {
                let short = nft.nft_id.short().to_string();
                actor.profile = Some(AvatarProfile {
                    nft_id: nft.nft_id.clone(),
                    display_name: actor.decl.display_name.clone(),
                    appearance: actor.decl.appearance.clone(),
                    voice_tag: actor.decl.voice_tag.clone(),
                });
                actor.wallet.adopt_nft(nft);
                (detail(&[("nft", &short)]), "ok".into())
            }
            Err(e) => (Vec::new(), format!("rejected:{}", e.code())),
        }
    }

    fn do_attest(&mut self, tp: &str, user: &str, predicate: &str) -> (Vec<u8>, String) {
        let party = self.tps.get(tp).expect("validated at load");
        if party.removed {
            return (Vec::new(), "rejected:actor-removed".into());
        }
        let Some(subject_nft) = self.users[user].wallet.nft_id().cloned() else {
            return (Vec::new(), "rejected:no-nft".into());
        };
        let claim = Claim {
            predicate: predicate.to_string(),
            subject_nft,
        };
        let cert =
            match party
                .wallet
                .issue_attestation(self.provider, &self.ledger, &self.registry, claim)
            {
                Ok(cert) => cert,
                Err(e) => return (Vec::new(), format!("rejected:{}", e.code())),
            };
        let seq = match self.ledger.publish_attestation(self.provider, cert.clone()) {
            Ok(seq) => seq,
            Err(e) => return (Vec::new(), format!("rejected:{}", e.code())),
        };
        self.users
            .get_mut(user)
            .expect("validated at load")
            .wallet
            .hold_cert(cert);
        (
            detail(&[("predicate", predicate), ("seq", &seq.to_string())]),
            "ok".into(),
        )
    }

    fn do_publish_bundle(&mut self, user: &str, count: u32) -> (Vec<u8>, String) {
        let actor = self.users.get_mut(user).expect("validated at load");
        match actor.wallet.create_prekey_bundle(self.provider, count) {
            Ok(bundle) => {
                self.directory.publish_bundle(bundle);
                (detail(&[("count", &count.to_string())]), "ok".into())
            }
            Err(e) => (Vec::new(), format!("rejected:{}", e.code())),
        }
    }

    /// Shared world-entry flow for `authenticate` and `migrate`.
    fn authenticate_at(&mut self, user: &str, world_name: &str) -> (String, Option<String>) {
        let nonce = self.rng.next_u64();
        let world = self.worlds.get_mut(world_name).expect("validated at load");
        let actor = self.users.get(user).expect("validated at load");
        let challenge = world
            .auth
            .issue_challenge(nonce, self.time, &mut self.trace);
        let result = match &world.policy {
            AccessPolicy::Open => world.auth.authenticate_open(
                self.provider,
                &self.ledger,
                &actor.wallet,
                &challenge,
                self.time,
                &mut self.trace,
            ),
            AccessPolicy::Restricted(predicate) => world.auth.authenticate_restricted(
                self.provider,
                &self.ledger,
                &actor.wallet,
                &challenge,
                predicate,
                &world.trusted_issuers,
                self.time,
                &mut self.trace,
            ),
        };
        self.trace.record(
            world_name.to_string(),
            user.to_string(),
            "auth-result",
            false,
            result.reason.as_bytes().to_vec(),
        );
        if result.accepted() {
            let session = result
                .session_id
                .clone()
                .expect("accepted results carry a session");
            let actor = self.users.get_mut(user).expect("validated at load");
            actor
                .sessions
                .insert(world_name.to_string(), session.clone());
            actor.admitted_worlds.insert(world_name.to_string());
            let outcome = if result.recognized_returning {
                "accepted:returning".to_string()
            } else {
                "accepted:first-visit".to_string()
            };
            (outcome, Some(session))
        } else {
            (format!("rejected:{}", result.reason), None)
        }
    }

    fn do_authenticate_event(&mut self, user: &str, world: &str) -> (Vec<u8>, String) {
        let (outcome, session) = self.authenticate_at(user, world);
        let session = session.unwrap_or_default();
        (detail(&[("world", world), ("session", &session)]), outcome)
    }

    fn do_open_channel(
        &mut self,
        requester: &str,
        receiver: &str,
    ) -> Result<(Vec<u8>, String), SimError> {
        if requester == receiver {
            return Ok((Vec::new(), "rejected:self-reference".into()));
        }
        let Some(receiver_nft) = self.users[receiver].wallet.nft_id().cloned() else {
            return Ok((Vec::new(), "rejected:no-nft".into()));
        };
        let Some(requester_nft) = self.users[requester].wallet.nft_id().cloned() else {
            return Ok((Vec::new(), "rejected:no-nft".into()));
        };
        let ephemeral_seed = self.fresh_seed();
        let snapshot = self.trace.len();

        let (request, requester_state) = match request_channel(
            self.provider,
            &self.users[requester].wallet,
            &receiver_nft,
            &self.ledger,
            &self.directory,
            &ephemeral_seed,
            self.time,
            &mut self.trace,
        ) {
            Ok(pair) => pair,
            Err(e) => return Ok((Vec::new(), format!("rejected:{}", e.code()))),
        };
        self.trace.record(
            requester_nft.as_str().to_string(),
            receiver_nft.as_str().to_string(),
            "channel-request",
            false,
            request.encode(),
        );
        let receiver_state = match accept_channel(
            self.provider,
            &self.users[receiver].wallet,
            &request,
            &self.ledger,
            self.time,
            &mut self.trace,
        ) {
            Ok(state) => state,
            Err(e) => return Ok((Vec::new(), format!("rejected:{}", e.code()))),
        };

        if requester_state.session_key_digest() != receiver_state.session_key_digest() {
            return Err(SimError::InvariantBreach {
                seq: self.next_seq,
                message: "handshake endpoints derived different session keys".into(),
            });
        }
        let violations = Trace::mediator_violations(
            self.trace.since(snapshot),
            requester_nft.as_str(),
            receiver_nft.as_str(),
        );
        if !violations.is_empty() {
            return Err(SimError::InvariantBreach {
                seq: self.next_seq,
                message: format!(
                    "handshake addressed a third party: {} -> {}",
                    violations[0].from, violations[0].to
                ),
            });
        }

        let prekey = request.chosen_prekey_id.to_string();
        self.users
            .get_mut(requester)
            .expect("validated at load")
            .channels
            .insert(receiver.to_string(), requester_state);
        self.users
            .get_mut(receiver)
            .expect("validated at load")
            .channels
            .insert(requester.to_string(), receiver_state);
        Ok((
            detail(&[("peer", receiver), ("prekey", &prekey)]),
            "ok".into(),
        ))
    }

    fn do_message(
        &mut self,
        from: &str,
        to: &str,
        text: &str,
    ) -> Result<(Vec<u8>, String), SimError> {
        if from == to {
            return Ok((Vec::new(), "rejected:self-reference".into()));
        }
        if !self.users[from].channels.contains_key(to)
            || !self.users[to].channels.contains_key(from)
        {
            return Ok((Vec::new(), "rejected:no-channel".into()));
        }
        let sender_nft = self.users[from]
            .wallet
            .nft_id()
            .expect("channel implies minted NFT")
            .clone();
        let receiver_nft = self.users[to]
            .wallet
            .nft_id()
            .expect("channel implies minted NFT")
            .clone();

        let sender = self.users.get_mut(from).expect("validated at load");
        let envelope = match send_message(
            self.provider,
            sender.channels.get_mut(to).expect("checked above"),
            &sender_nft,
            text.as_bytes(),
        ) {
            Ok(env) => env,
            Err(e) => return Ok((Vec::new(), format!("rejected:{}", e.code()))),
        };
        self.trace.record(
            sender_nft.as_str().to_string(),
            receiver_nft.as_str().to_string(),
            "envelope",
            false,
            envelope.encode(),
        );

        let recipient = self.users.get_mut(to).expect("validated at load");
        let plaintext = match receive_message(
            self.provider,
            recipient.channels.get_mut(from).expect("checked above"),
            &envelope,
        ) {
            Ok(p) => p,
            Err(e) => return Ok((Vec::new(), format!("rejected:{}", e.code()))),
        };
        if plaintext != text.as_bytes() {
            return Err(SimError::InvariantBreach {
                seq: self.next_seq,
                message: "decrypted plaintext does not match the sent message".into(),
            });
        }
        Ok((
            detail(&[
                ("counter", &envelope.counter.to_string()),
                ("bytes", &plaintext.len().to_string()),
            ]),
            "ok".into(),
        ))
    }

    fn do_exchange_contacts(&mut self, a: &str, b: &str) -> (Vec<u8>, String) {
        if a == b {
            return (Vec::new(), "rejected:self-reference".into());
        }
        let co_present = {
            let a_actor = &self.users[a];
            let b_actor = &self.users[b];
            a_actor
                .sessions
                .keys()
                .any(|world| b_actor.sessions.contains_key(world))
        };
        if !co_present {
            return (Vec::new(), "rejected:not-co-present".into());
        }
        if self.users[a].profile.is_none() || self.users[b].profile.is_none() {
            return (Vec::new(), "rejected:no-nft".into());
        }
        let nonce_a = self.rng.next_u64();
        let nonce_b = self.rng.next_u64();

        let mut a_actor = self.users.remove(a).expect("validated at load");
        let mut b_actor = self.users.remove(b).expect("validated at load");
        let result = exchange_contacts(
            self.provider,
            &self.ledger,
            &a_actor.wallet,
            a_actor.profile.as_ref().expect("checked above"),
            &mut a_actor.book,
            &b_actor.wallet,
            b_actor.profile.as_ref().expect("checked above"),
            &mut b_actor.book,
            nonce_a,
            nonce_b,
            self.time,
            &mut self.trace,
        );
        self.users.insert(a.to_string(), a_actor);
        self.users.insert(b.to_string(), b_actor);
        match result {
            Ok(()) => (detail(&[("peer", b)]), "ok".into()),
            Err(e) => (Vec::new(), format!("rejected:{}", e.code())),
        }
    }

    fn do_endorse(&mut self, endorser: &str, subject: &str, target: &str) -> (Vec<u8>, String) {
        if endorser == target {
            return (Vec::new(), "rejected:self-reference".into());
        }
        let (Some(subject_nft), Some(target_nft)) = (
            self.users[subject].wallet.nft_id().cloned(),
            self.users[target].wallet.nft_id().cloned(),
        ) else {
            return (Vec::new(), "rejected:no-nft".into());
        };
        let endorser_actor = self.users.remove(endorser).expect("validated at load");
        let mut target_actor = self.users.remove(target).expect("validated at load");
        let result = endorse_contact(
            self.provider,
            &endorser_actor.wallet,
            &endorser_actor.book,
            &subject_nft,
            &target_nft,
            &mut target_actor.book,
        );
        self.users.insert(endorser.to_string(), endorser_actor);
        self.users.insert(target.to_string(), target_actor);
        match result {
            Ok(()) => (
                detail(&[("subject", subject), ("target", target)]),
                "ok".into(),
            ),
            Err(e) => (Vec::new(), format!("rejected:{}", e.code())),
        }
    }

    fn do_migrate(&mut self, user: &str, from: &str, to: &str) -> (Vec<u8>, String) {
        if !self.users[user].sessions.contains_key(from) {
            return (Vec::new(), "rejected:not-authenticated".into());
        }
        // The exact same profile travels: hash it once for both worlds' view.
        let avatar_hash = self.users[user]
            .profile
            .as_ref()
            .map(|p| sha256_hex(&p.encode())[..16].to_string())
            .unwrap_or_default();

        let (outcome, _session) = self.authenticate_at(user, to);
        if outcome.starts_with("accepted") {
            let actor = self.users.get_mut(user).expect("validated at load");
            actor.sessions.remove(from);
        }
        (
            detail(&[("from", from), ("to", to), ("avatar", &avatar_hash)]),
            outcome,
        )
    }

    fn do_impersonate(
        &mut self,
        attacker: &str,
        victim: &str,
        observer: &str,
    ) -> (Vec<u8>, String) {
        let Some(victim_profile) = self.users[victim].profile.clone() else {
            return (Vec::new(), "rejected:no-nft".into());
        };
        let nonce = self.rng.next_u64();
        let attacker_actor = &self.users[attacker];

        // The attacker wears the victim's exact appearance. With an identity
        // NFT of its own it proves that NFT; without one it just claims the
        // victim's.
        let (clone_profile, proof) = match attacker_actor.wallet.nft_id() {
            Some(own_nft) => {
                let profile = AvatarProfile {
                    nft_id: own_nft.clone(),
                    display_name: victim_profile.display_name.clone(),
                    appearance: victim_profile.appearance.clone(),
                    voice_tag: victim_profile.voice_tag.clone(),
                };
                let proof = BindingProof::make(self.provider, &attacker_actor.wallet, nonce)
                    .expect("attacker holds an NFT");
                (profile, Some(proof))
            }
            None => (victim_profile.clone(), None),
        };

        let observer_actor = &self.users[observer];
        let result = recognize_avatar(
            self.provider,
            &self.ledger,
            &observer_actor.book,
            &clone_profile,
            proof.as_ref(),
            nonce,
        );
        let label = result.label.clone().unwrap_or_default();
        (
            detail(&[
                ("victim", victim),
                ("observer", observer),
                ("label", &label),
            ]),
            result.code().to_string(),
        )
    }

    fn do_remove(&mut self, actor: &str) -> (Vec<u8>, String) {
        let party = self.tps.get_mut(actor).expect("validated at load");
        party.removed = true;
        (Vec::new(), "ok".into())
    }
}
