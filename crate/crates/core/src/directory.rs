//! Prekey directory: published signed prekey bundles, keyed by owner NFT.
//!
//! Bundles are public material and sit outside the ledger log proper; the
//! directory is the "retrievable via ledger/directory" half of key
//! distribution. Fetches are read-only.

use std::collections::BTreeMap;

use crate::ledger::NftId;
use crate::wallet::SignedPrekeyBundle;

#[derive(Default)]
pub struct PrekeyDirectory {
    bundles: BTreeMap<NftId, SignedPrekeyBundle>,
}

impl PrekeyDirectory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Publish (or replace) the owner's bundle.
    pub fn publish_bundle(&mut self, bundle: SignedPrekeyBundle) {
        self.bundles.insert(bundle.owner_nft.clone(), bundle);
    }

    pub fn fetch_bundle(&self, owner: &NftId) -> Option<&SignedPrekeyBundle> {
        self.bundles.get(owner)
    }
}
