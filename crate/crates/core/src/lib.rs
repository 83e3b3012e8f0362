//! SSI-based identity and secure communication for interoperable virtual
//! worlds, with a deterministic multi-world simulator.
//!
//! One wallet, one soulbound identity NFT, everywhere: users carry the same
//! ledger-anchored identity, trusted-party credentials, and avatar across
//! worlds, authenticate by proving control of the NFT-bound key, and open
//! end-to-end encrypted channels with each other through an X3DH handshake
//! gated on attestations instead of a central key server.
//!
//! Layers, bottom up:
//!
//! - [`provider`]: pluggable crypto (DH, signatures, AEAD, KDF) with a
//!   production provider and a deterministic test provider.
//! - [`x3dh`]: the three-leg handshake both channel endpoints run.
//! - [`ledger`]: simulated append-only registry of identity NFTs, key
//!   records, and attestations.
//! - [`wallet`]: holder/issuer agent — key custody, prekey bundles,
//!   predicate credentials, verifiable presentations.
//! - [`auth`]: open (NFT recognition) and restricted (attested claim)
//!   world authentication.
//! - [`channel`]: attestation-gated encrypted channels between users.
//! - [`contacts`]: contact exchange, endorsements, and impersonation
//!   detection by NFT mismatch.
//! - [`sim`]: scenario files, the deterministic event loop, transcripts.
//!
//! The `metasim` binary runs and verifies scenario files; see the repository
//! README for the file formats.

pub mod auth;
pub mod channel;
pub mod codec;
pub mod contacts;
pub mod directory;
pub mod ledger;
pub mod provider;
pub mod sim;
pub mod trace;
pub mod wallet;
pub mod x3dh;

pub use provider::{provider_by_name, CryptoProvider, DefaultProvider, TestProvider};
pub use sim::{run_report, run_scenario, verify_transcript, Scenario, Transcript};
