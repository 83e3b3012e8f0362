//! Message trace: every inter-actor message and registry fetch observed
//! during a protocol flow, for audits.
//!
//! Two audits run over traces:
//!
//! - no-mediator: a two-party handshake may touch nobody but the endpoints,
//!   except read-only fetches from the ledger or prekey directory;
//! - confidentiality: plaintext bytes must never appear in any traced
//!   payload.

/// Well-known addressee for ledger fetches.
pub const LEDGER_PARTY: &str = "ledger";
/// Well-known addressee for prekey directory fetches.
pub const DIRECTORY_PARTY: &str = "directory";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub from: String,
    pub to: String,
    pub kind: String,
    pub read_only: bool,
    pub payload: Vec<u8>,
}

/// Ordered log of traced messages.
#[derive(Debug, Default)]
pub struct Trace {
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(
        &mut self,
        from: impl Into<String>,
        to: impl Into<String>,
        kind: impl Into<String>,
        read_only: bool,
        payload: Vec<u8>,
    ) {
        self.events.push(TraceEvent {
            from: from.into(),
            to: to.into(),
            kind: kind.into(),
            read_only,
            payload,
        });
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events recorded at or after `start`, for scoping audits to one flow.
    pub fn since(&self, start: usize) -> &[TraceEvent] {
        &self.events[start..]
    }

    /// No-mediator audit over `events`: every message either stays between
    /// the two endpoints or is a read-only registry fetch. Returns the
    /// offending events.
    pub fn mediator_violations<'a>(
        events: &'a [TraceEvent],
        endpoint_a: &str,
        endpoint_b: &str,
    ) -> Vec<&'a TraceEvent> {
        events
            .iter()
            .filter(|e| {
                let between_endpoints = (e.from == endpoint_a || e.from == endpoint_b)
                    && (e.to == endpoint_a || e.to == endpoint_b);
                let registry_fetch =
                    e.read_only && (e.to == LEDGER_PARTY || e.to == DIRECTORY_PARTY);
                !(between_endpoints || registry_fetch)
            })
            .collect()
    }

    /// True iff `needle` appears inside any traced payload.
    pub fn payload_contains(events: &[TraceEvent], needle: &[u8]) -> bool {
        !needle.is_empty()
            && events
                .iter()
                .any(|e| e.payload.windows(needle.len()).any(|w| w == needle))
    }
}
