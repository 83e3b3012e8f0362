//! Acceptance suite. One test per criterion; each prints a PASS/FAIL line.
//!
//! Run with `cargo test --test acceptance` (add `-- --nocapture` to see the
//! per-criterion lines as they complete).

use std::collections::HashSet;
use std::panic::AssertUnwindSafe;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use metasim_core::channel::{accept_channel, request_channel, ChannelError, ChannelRequest};
use metasim_core::contacts::{
    exchange_contacts, recognize_avatar, AttributeMap, AvatarProfile, BindingProof, ContactBook,
    Verdict,
};
use metasim_core::directory::PrekeyDirectory;
use metasim_core::ledger::{Ledger, LedgerError, NftId, WalletAddress};
use metasim_core::provider::{derive_symmetric_key, CryptoProvider, DefaultProvider, TestProvider};
use metasim_core::sim::{run_report, run_scenario, Scenario};
use metasim_core::trace::Trace;
use metasim_core::wallet::{Claim, PredicateRegistry, Wallet};

fn criterion<F: FnOnce()>(number: u32, name: &str, body: F) {
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    match outcome {
        Ok(()) => println!("PASS criterion {number}: {name} [{elapsed:.2?}]"),
        Err(payload) => {
            println!("FAIL criterion {number}: {name} [{elapsed:.2?}]");
            std::panic::resume_unwind(payload);
        }
    }
}

fn scenario_path(file: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(file)
}

fn rng_seed(rng: &mut ChaCha20Rng) -> [u8; 32] {
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    seed
}

/// Shared fixture: a ledger with one trusted party, plus helpers to enroll
/// users ready for channels.
struct Net<'p> {
    provider: &'p dyn CryptoProvider,
    ledger: Ledger,
    directory: PrekeyDirectory,
    tp: Wallet,
    registry: PredicateRegistry,
}

impl<'p> Net<'p> {
    fn new(provider: &'p dyn CryptoProvider, rng: &mut ChaCha20Rng) -> Self {
        let mut ledger = Ledger::new();
        let tp = Wallet::create(provider, &rng_seed(rng)).unwrap();
        tp.publish_key_record(provider, &mut ledger).unwrap();
        Self {
            provider,
            ledger,
            directory: PrekeyDirectory::new(),
            tp,
            registry: PredicateRegistry::standard(),
        }
    }

    /// Registered + minted + attested user; publishes a bundle when asked.
    fn enroll(&mut self, rng: &mut ChaCha20Rng, prekeys: u32) -> Wallet {
        let mut wallet = Wallet::create(self.provider, &rng_seed(rng)).unwrap();
        wallet
            .publish_key_record(self.provider, &mut self.ledger)
            .unwrap();
        let nft = self.ledger.mint_identity_nft(wallet.address()).unwrap();
        wallet.adopt_nft(nft);
        let cert = self
            .tp
            .issue_attestation(
                self.provider,
                &self.ledger,
                &self.registry,
                Claim {
                    predicate: "kyc_verified".into(),
                    subject_nft: wallet.nft_id().unwrap().clone(),
                },
            )
            .unwrap();
        self.ledger
            .publish_attestation(self.provider, cert.clone())
            .unwrap();
        wallet.hold_cert(cert);
        if prekeys > 0 {
            let bundle = wallet.create_prekey_bundle(self.provider, prekeys).unwrap();
            self.directory.publish_bundle(bundle);
        }
        wallet
    }

    fn handshake(
        &mut self,
        rng: &mut ChaCha20Rng,
        requester: &Wallet,
        receiver: &Wallet,
        trace: &mut Trace,
    ) -> (ChannelRequest, [u8; 32], [u8; 32]) {
        let (request, requester_state) = request_channel(
            self.provider,
            requester,
            receiver.nft_id().unwrap(),
            &self.ledger,
            &self.directory,
            &rng_seed(rng),
            0,
            trace,
        )
        .expect("honest request");
        trace.record(
            requester.nft_id().unwrap().as_str().to_string(),
            receiver.nft_id().unwrap().as_str().to_string(),
            "channel-request",
            false,
            request.encode(),
        );
        let receiver_state =
            accept_channel(self.provider, receiver, &request, &self.ledger, 0, trace)
                .expect("honest accept");
        (
            request,
            requester_state.session_key_digest(),
            receiver_state.session_key_digest(),
        )
    }
}

#[test]
fn c1_handshake_agreement_1000_trials() {
    criterion(
        1,
        "1000 honest handshakes agree byte-for-byte (default provider)",
        || {
            let provider = DefaultProvider;
            let mut rng = ChaCha20Rng::seed_from_u64(0xA11CE);
            let mut net = Net::new(&provider, &mut rng);
            let mut trace = Trace::new();
            let mut agreed = 0u32;
            let start = Instant::now();
            for _ in 0..1_000 {
                let prekeys = rng.gen_range(1..=3);
                let requester = net.enroll(&mut rng, 0);
                let receiver = net.enroll(&mut rng, prekeys);
                let (_, initiator_digest, responder_digest) =
                    net.handshake(&mut rng, &requester, &receiver, &mut trace);
                assert_eq!(initiator_digest, responder_digest, "session keys diverged");
                agreed += 1;
            }
            assert_eq!(agreed, 1_000);
            let elapsed = start.elapsed();
            assert!(
                elapsed < Duration::from_secs(10),
                "handshake batch took {elapsed:.2?}, budget is 10s"
            );
        },
    );
}

#[test]
fn c2_attestation_tamper_sweep() {
    criterion(
        2,
        "every byte flip of the certificate rejects with cert-invalid",
        || {
            let provider = DefaultProvider;
            let mut rng = ChaCha20Rng::seed_from_u64(0xBEEF);
            let mut net = Net::new(&provider, &mut rng);
            let mut trace = Trace::new();
            let requester = net.enroll(&mut rng, 0);
            let receiver = net.enroll(&mut rng, 2);
            let (request, a_digest, b_digest) =
                net.handshake(&mut rng, &requester, &receiver, &mut trace);
            assert_eq!(a_digest, b_digest);

            let mut rejections = 0usize;
            for i in 0..request.cert_bytes.len() {
                let mut corrupt = request.clone();
                corrupt.cert_bytes[i] ^= 0xff;
                match accept_channel(&provider, &receiver, &corrupt, &net.ledger, 0, &mut trace) {
                    Err(ChannelError::CertInvalid) => rejections += 1,
                    Err(other) => panic!("byte {i}: wrong rejection {other:?}"),
                    Ok(_) => panic!("byte {i}: silent acceptance of a corrupted certificate"),
                }
            }
            assert_eq!(rejections, request.cert_bytes.len());
        },
    );
}

#[test]
fn c3_soulbound_invariant_10000_sequences() {
    criterion(
        3,
        "10000 random ledger sequences never move an identity NFT",
        || {
            let provider = TestProvider;
            let mut rng = ChaCha20Rng::seed_from_u64(0x50F7);

            // Fixed wallet pool with precomputed self-attestation proofs; each
            // sequence gets a fresh ledger.
            let wallets: Vec<Wallet> = (0..6)
                .map(|_| Wallet::create(&provider, &rng_seed(&mut rng)).unwrap())
                .collect();

            for _ in 0..10_000 {
                let mut ledger = Ledger::new();
                let mut first_owner: Vec<(NftId, WalletAddress)> = Vec::new();
                let mut minted: HashSet<usize> = HashSet::new();

                for _ in 0..12 {
                    let w = rng.gen_range(0..wallets.len());
                    let wallet = &wallets[w];
                    match rng.gen_range(0..4u8) {
                        // Publish (or re-publish) a key record.
                        0 => {
                            wallet.publish_key_record(&provider, &mut ledger).unwrap();
                        }
                        // Mint: succeeds at most once per wallet.
                        1 => match ledger.mint_identity_nft(wallet.address()) {
                            Ok(nft) => {
                                assert!(
                                    minted.insert(w),
                                    "duplicate mint accepted for the same wallet"
                                );
                                first_owner.push((nft.nft_id.clone(), nft.owner.clone()));
                            }
                            Err(LedgerError::UnknownWallet) => {
                                assert!(ledger.fetch_key_record(wallet.address()).is_err());
                            }
                            Err(LedgerError::NftExists) => {
                                assert!(minted.contains(&w), "spurious nft-exists");
                            }
                            Err(other) => panic!("unexpected mint failure {other:?}"),
                        },
                        // Transfer attempts: known or unknown NFT, any target.
                        _ => {
                            let target = wallets[rng.gen_range(0..wallets.len())].address().clone();
                            let nft_id = if !first_owner.is_empty() && rng.gen_bool(0.8) {
                                first_owner[rng.gen_range(0..first_owner.len())].0.clone()
                            } else {
                                NftId::from_hex(hex::encode(rng_seed(&mut rng)))
                            };
                            assert_eq!(
                                ledger.transfer_identity_nft(&nft_id, &target).unwrap_err(),
                                LedgerError::SoulboundTransferForbidden
                            );
                        }
                    }

                    // Owners never change, and no wallet ever holds two NFTs.
                    for (nft_id, owner) in &first_owner {
                        assert_eq!(&ledger.resolve_nft(nft_id).unwrap().owner, owner);
                    }
                }
            }
        },
    );
}

#[test]
fn c4_demo_scenario_matches_golden_outcomes() {
    criterion(
        4,
        "bundled demo reproduces the two authentication scenarios",
        || {
            let golden = std::fs::read_to_string(
                Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/demo_outcomes.txt"),
            )
            .expect("golden file ships with the repo");

            for provider in [
                Box::new(DefaultProvider) as Box<dyn CryptoProvider>,
                Box::new(TestProvider),
            ] {
                let scenario = Scenario::load(&scenario_path("demo.scn")).unwrap();
                let transcript = run_scenario(&scenario, provider.as_ref()).unwrap();
                assert_eq!(
                    transcript.outcome_summary(),
                    golden,
                    "outcome sequence drifted under provider {}",
                    provider.name()
                );

                // The two tiers, spelled out.
                let auth_outcomes: Vec<(String, String)> = transcript
                    .records
                    .iter()
                    .filter(|r| r.event == "authenticate")
                    .map(|r| (r.actor.clone(), r.outcome.clone()))
                    .collect();
                assert_eq!(
                    auth_outcomes[0],
                    ("alice".into(), "accepted:first-visit".into())
                );
                assert_eq!(
                    auth_outcomes[1],
                    ("alice".into(), "accepted:returning".into())
                );
                assert_eq!(
                    auth_outcomes[2],
                    ("bob".into(), "rejected:missing-claim".into())
                );
                assert_eq!(
                    auth_outcomes[3],
                    ("bob".into(), "accepted:first-visit".into())
                );
            }
        },
    );
}

#[test]
fn c5_impersonation_detection_100_maps() {
    criterion(
        5,
        "appearance clones with a different NFT always warn",
        || {
            let provider = TestProvider;
            let mut rng = ChaCha20Rng::seed_from_u64(0xC7073);
            let mut warnings = 0u32;

            for _ in 0..100 {
                let mut ledger = Ledger::new();
                let mut trace = Trace::new();
                let enroll = |rng: &mut ChaCha20Rng, ledger: &mut Ledger| {
                    let mut wallet = Wallet::create(&provider, &rng_seed(rng)).unwrap();
                    wallet.publish_key_record(&provider, ledger).unwrap();
                    let nft = ledger.mint_identity_nft(wallet.address()).unwrap();
                    wallet.adopt_nft(nft);
                    wallet
                };
                let observer = enroll(&mut rng, &mut ledger);
                let victim = enroll(&mut rng, &mut ledger);
                let attacker = enroll(&mut rng, &mut ledger);

                let mut appearance = AttributeMap::new();
                for attr in 0..rng.gen_range(1..=4) {
                    appearance.insert(
                        format!("attr{attr}"),
                        hex::encode(rng.next_u64().to_be_bytes()),
                    );
                }
                let observer_profile = AvatarProfile {
                    nft_id: observer.nft_id().unwrap().clone(),
                    display_name: "observer".into(),
                    appearance: AttributeMap::new(),
                    voice_tag: String::new(),
                };
                let victim_profile = AvatarProfile {
                    nft_id: victim.nft_id().unwrap().clone(),
                    display_name: "victim".into(),
                    appearance: appearance.clone(),
                    voice_tag: "original".into(),
                };
                let mut observer_book = ContactBook::new();
                let mut victim_book = ContactBook::new();
                exchange_contacts(
                    &provider,
                    &ledger,
                    &observer,
                    &observer_profile,
                    &mut observer_book,
                    &victim,
                    &victim_profile,
                    &mut victim_book,
                    rng.next_u64(),
                    rng.next_u64(),
                    0,
                    &mut trace,
                )
                .unwrap();

                let clone_profile = AvatarProfile {
                    nft_id: attacker.nft_id().unwrap().clone(),
                    display_name: "victim".into(),
                    appearance,
                    voice_tag: "original".into(),
                };
                let nonce = rng.next_u64();
                let proof = BindingProof::make(&provider, &attacker, nonce).unwrap();
                let result = recognize_avatar(
                    &provider,
                    &ledger,
                    &observer_book,
                    &clone_profile,
                    Some(&proof),
                    nonce,
                );
                assert_eq!(result.verdict, Verdict::ImpersonationWarning);
                warnings += 1;
            }
            assert_eq!(warnings, 100);
        },
    );
}

#[test]
fn c6_interoperability_audit() {
    criterion(
        6,
        "worlds hold no user data; migration creates no accounts",
        || {
            let provider = DefaultProvider;
            for file in ["demo.scn", "interop.scn"] {
                let scenario = Scenario::load(&scenario_path(file)).unwrap();
                let report = run_report(&scenario, &provider).unwrap();

                // Field audit over every world's serialized state.
                for (world, state) in &report.world_states {
                    for (user, patterns) in &report.sensitive_material_by_user {
                        for pattern in patterns {
                            assert!(
                                !pattern.is_empty()
                                    && !state.windows(pattern.len()).any(|w| w == &pattern[..]),
                                "{file}: world `{world}` state leaks material of `{user}`"
                            );
                        }
                    }
                    // Attribute values, derived independently from the scenario.
                    for user in &scenario.users {
                        for value in user
                            .appearance
                            .values()
                            .chain(std::iter::once(&user.voice_tag))
                        {
                            assert!(
                                value.is_empty()
                                    || !state.windows(value.len()).any(|w| w == value.as_bytes()),
                                "{file}: world `{world}` state leaks attribute of `{}`",
                                user.name
                            );
                        }
                    }
                }

                // No account creation anywhere in the scripted run: key
                // publication happens once in silent setup, and no
                // register-style record ever appears — in particular not
                // around migrations.
                for record in &report.transcript.records {
                    assert!(
                        !matches!(
                            record.event.as_str(),
                            "register" | "create-account" | "publish-key"
                        ),
                        "{file}: account-creation record `{}` in transcript",
                        record.event
                    );
                }

                // One identity NFT regardless of how many worlds admitted the user.
                for (user, nft_count) in &report.nft_count_by_user {
                    assert!(
                        *nft_count <= 1,
                        "{file}: `{user}` holds {nft_count} identity NFTs"
                    );
                    if report.admitted_worlds_by_user[user] >= 2 {
                        assert_eq!(*nft_count, 1);
                    }
                }
            }
        },
    );
}

#[test]
fn c7_no_mediator_and_confidentiality() {
    criterion(
        7,
        "handshakes touch nobody but the endpoints and read-only registries",
        || {
            let provider = DefaultProvider;
            let mut rng = ChaCha20Rng::seed_from_u64(0x70AD);
            let mut net = Net::new(&provider, &mut rng);

            for _ in 0..100 {
                let requester = net.enroll(&mut rng, 0);
                let receiver = net.enroll(&mut rng, 2);
                let mut trace = Trace::new();
                net.handshake(&mut rng, &requester, &receiver, &mut trace);

                let violations = Trace::mediator_violations(
                    trace.events(),
                    requester.nft_id().unwrap().as_str(),
                    receiver.nft_id().unwrap().as_str(),
                );
                assert!(
                    violations.is_empty(),
                    "third-party message: {:?}",
                    violations[0]
                );
                assert!(
                    trace.events().iter().any(|e| e.read_only),
                    "expected read-only registry fetches in the trace"
                );

                // Confidentiality smoke: a random >=32-byte plaintext never
                // appears in any on-wire or on-ledger byte sequence.
                let mut plaintext = vec![0u8; 48];
                rng.fill_bytes(&mut plaintext);
                let mut a_state = request_channel(
                    &provider,
                    &requester,
                    receiver.nft_id().unwrap(),
                    &net.ledger,
                    &net.directory,
                    &rng_seed(&mut rng),
                    0,
                    &mut trace,
                )
                .unwrap()
                .1;
                let envelope = metasim_core::channel::send_message(
                    &provider,
                    &mut a_state,
                    requester.nft_id().unwrap(),
                    &plaintext,
                )
                .unwrap();
                trace.record(
                    requester.nft_id().unwrap().as_str().to_string(),
                    receiver.nft_id().unwrap().as_str().to_string(),
                    "envelope",
                    false,
                    envelope.encode(),
                );
                assert!(!Trace::payload_contains(trace.events(), &plaintext));
                assert!(!contains_subslice(
                    net.ledger.to_log_string().as_bytes(),
                    &plaintext
                ));
            }

            // Bundled runs: every handshake-flow trace event is either a
            // read-only registry fetch or addressed to a user endpoint, and
            // message texts stay out of wire payloads and the ledger.
            for file in ["demo.scn", "interop.scn"] {
                let scenario = Scenario::load(&scenario_path(file)).unwrap();
                let report = run_report(&scenario, &provider).unwrap();

                let mut fetches = 0usize;
                for event in report.trace.events() {
                    match event.kind.as_str() {
                        "resolve-nft" | "fetch-key-record" | "fetch-bundle"
                        | "fetch-attestations" => {
                            assert!(event.read_only, "{file}: registry fetch not read-only");
                            assert!(
                                event.to == metasim_core::trace::LEDGER_PARTY
                                    || event.to == metasim_core::trace::DIRECTORY_PARTY,
                                "{file}: fetch addressed to `{}`",
                                event.to
                            );
                            fetches += 1;
                        }
                        "channel-request" | "envelope" => {
                            // NFT ids render as 64 hex chars; both ends must
                            // be user endpoints, never a mediator.
                            assert_eq!(event.from.len(), 64, "{file}: non-user sender");
                            assert_eq!(event.to.len(), 64, "{file}: non-user receiver");
                        }
                        _ => {}
                    }
                }
                assert!(
                    fetches > 0,
                    "{file}: expected registry fetches in the trace"
                );

                for event in &scenario.events {
                    if let metasim_core::sim::EventKind::Message { text, .. } = &event.kind {
                        assert!(
                            !Trace::payload_contains(report.trace.events(), text.as_bytes()),
                            "{file}: message text visible on the wire"
                        );
                        assert!(
                            !contains_subslice(report.ledger_log.as_bytes(), text.as_bytes()),
                            "{file}: message text visible on the ledger"
                        );
                    }
                }
            }
        },
    );
}

#[test]
fn c8_determinism_and_verify() {
    criterion(
        8,
        "equal seeds give byte-identical transcripts; verify exits 0",
        || {
            for file in ["demo.scn", "interop.scn"] {
                for provider in [
                    Box::new(DefaultProvider) as Box<dyn CryptoProvider>,
                    Box::new(TestProvider),
                ] {
                    let scenario = Scenario::load(&scenario_path(file)).unwrap();
                    let one = run_scenario(&scenario, provider.as_ref()).unwrap().render();
                    let two = run_scenario(&scenario, provider.as_ref()).unwrap().render();
                    assert_eq!(one, two, "{file} under {}", provider.name());
                }
            }

            // End to end through the CLI.
            let binary = env!("CARGO_BIN_EXE_metasim");
            let transcript = std::env::temp_dir().join("metasim-acceptance-demo.log");
            let run = std::process::Command::new(binary)
                .args(["run", "--scenario"])
                .arg(scenario_path("demo.scn"))
                .args(["--seed", "42", "--transcript"])
                .arg(&transcript)
                .output()
                .expect("spawn metasim run");
            assert!(
                run.status.success(),
                "run failed: {}",
                String::from_utf8_lossy(&run.stderr)
            );

            let verify = std::process::Command::new(binary)
                .args(["verify", "--transcript"])
                .arg(&transcript)
                .args(["--scenario"])
                .arg(scenario_path("demo.scn"))
                .args(["--seed", "42"])
                .output()
                .expect("spawn metasim verify");
            assert_eq!(
                verify.status.code(),
                Some(0),
                "verify must exit 0 on a matching transcript"
            );
        },
    );
}

#[test]
fn c9_crypto_oracle_suite() {
    criterion(
        9,
        "DH commutativity, AEAD flip totality, KDF label separation",
        || {
            let start = Instant::now();
            let providers: [Box<dyn CryptoProvider>; 2] =
                [Box::new(DefaultProvider), Box::new(TestProvider)];
            let mut rng = ChaCha20Rng::seed_from_u64(0x0AC1E);

            for provider in &providers {
                // DH commutativity, 10^4 trials.
                for _ in 0..10_000 {
                    let a = provider.generate_keypair(&rng_seed(&mut rng)).unwrap();
                    let b = provider.generate_keypair(&rng_seed(&mut rng)).unwrap();
                    let ab = provider.dh(&a.private, &b.public).unwrap();
                    let ba = provider.dh(&b.private, &a.public).unwrap();
                    assert_eq!(ab.as_bytes(), ba.as_bytes(), "{}", provider.name());
                }

                // AEAD corruption totality across ciphertext, aad, and nonce.
                let key =
                    derive_symmetric_key(provider.as_ref(), &[b"oracle-key"], b"aead").unwrap();
                let nonce = [7u8; 12];
                let aad = b"oracle-aad".to_vec();
                let sealed = provider.aead_seal(&key, &nonce, &[0xAB; 64], &aad);
                for i in 0..sealed.len() {
                    let mut bad = sealed.clone();
                    bad[i] ^= 1;
                    assert!(provider.aead_open(&key, &nonce, &bad, &aad).is_err());
                }
                for i in 0..aad.len() {
                    let mut bad = aad.clone();
                    bad[i] ^= 1;
                    assert!(provider.aead_open(&key, &nonce, &sealed, &bad).is_err());
                }
                for i in 0..nonce.len() {
                    let mut bad = nonce;
                    bad[i] ^= 1;
                    assert!(provider.aead_open(&key, &bad, &sealed, &aad).is_err());
                }

                // KDF label separation over 10^3 random input sets.
                for _ in 0..1_000 {
                    let input = rng_seed(&mut rng);
                    let session = provider.kdf(&[&input], b"session", 32).unwrap();
                    let auth = provider.kdf(&[&input], b"auth", 32).unwrap();
                    let again = provider.kdf(&[&input], b"session", 32).unwrap();
                    assert_ne!(session, auth);
                    assert_eq!(session, again);
                }
            }

            let elapsed = start.elapsed();
            assert!(
                elapsed < Duration::from_secs(30),
                "oracle suite took {elapsed:.2?}"
            );
        },
    );
}

fn contains_subslice(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}
