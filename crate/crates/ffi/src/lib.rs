//! C ABI over the scenario runner: parse a scenario once, run it under a
//! seed and provider, verify stored transcripts.
//!
//! Conventions:
//!
//! - `MetasimScenario` is an opaque handle; free it with
//!   [`metasim_scenario_free`].
//! - Functions return a [`MetasimStatus`] code; out-params are written only
//!   on `OK`.
//! - Strings returned through out-params are NUL-terminated, owned by the
//!   library, and must be released with [`metasim_string_free`].
//! - Panics never unwind across the boundary; they surface as `INTERNAL`.
//!
//! The header `include/metasim.h` is generated by cbindgen at build time.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use metasim_core::sim::{run_scenario, verify_transcript, Scenario};
use metasim_core::{CryptoProvider, DefaultProvider, TestProvider};

/// Result codes for every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MetasimStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// An input string was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The scenario text failed to parse or validate.
    ParseError = 3,
    /// The run aborted on an internal invariant breach.
    RunFailed = 4,
    /// The transcript does not match a fresh run.
    Mismatch = 5,
    /// An unexpected internal error.
    Internal = 6,
}

/// Crypto provider selector.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MetasimProvider {
    /// X25519 + Ed25519 + ChaCha20-Poly1305 + HKDF-SHA256.
    Default = 0,
    /// Deterministic test provider (not secure; for conformance vectors).
    Test = 1,
}

impl MetasimProvider {
    fn instance(self) -> Box<dyn CryptoProvider> {
        match self {
            MetasimProvider::Default => Box::new(DefaultProvider),
            MetasimProvider::Test => Box::new(TestProvider),
        }
    }
}

/// Opaque parsed scenario.
pub struct MetasimScenario {
    inner: Scenario,
}

/// Static human-readable text for a status code.
#[no_mangle]
pub extern "C" fn metasim_status_message(status: MetasimStatus) -> *const c_char {
    let text: &'static CStr = match status {
        MetasimStatus::Ok => c"ok",
        MetasimStatus::NullArgument => c"null argument",
        MetasimStatus::InvalidUtf8 => c"invalid utf-8",
        MetasimStatus::ParseError => c"scenario parse error",
        MetasimStatus::RunFailed => c"run failed: invariant breach",
        MetasimStatus::Mismatch => c"transcript mismatch",
        MetasimStatus::Internal => c"internal error",
    };
    text.as_ptr()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn metasim_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Parse scenario text into an opaque handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be a valid pointer.
/// On `OK` the caller owns the handle and must free it with
/// [`metasim_scenario_free`].
#[no_mangle]
pub unsafe extern "C" fn metasim_scenario_parse(
    text: *const c_char,
    out: *mut *mut MetasimScenario,
) -> MetasimStatus {
    if text.is_null() || out.is_null() {
        return MetasimStatus::NullArgument;
    }
    let Ok(text) = CStr::from_ptr(text).to_str() else {
        return MetasimStatus::InvalidUtf8;
    };
    match catch_unwind(|| Scenario::parse(text)) {
        Ok(Ok(inner)) => {
            *out = Box::into_raw(Box::new(MetasimScenario { inner }));
            MetasimStatus::Ok
        }
        Ok(Err(_)) => MetasimStatus::ParseError,
        Err(_) => MetasimStatus::Internal,
    }
}

/// Release a scenario handle. NULL is a no-op.
///
/// # Safety
/// `scenario` must be a pointer returned by [`metasim_scenario_parse`] that
/// has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn metasim_scenario_free(scenario: *mut MetasimScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run a scenario under a seed and provider; write the transcript text to
/// `out_transcript`.
///
/// # Safety
/// `scenario` must be a live handle from [`metasim_scenario_parse`];
/// `out_transcript` must be a valid pointer. The returned string must be
/// released with [`metasim_string_free`].
#[no_mangle]
pub unsafe extern "C" fn metasim_run(
    scenario: *const MetasimScenario,
    seed: u64,
    provider: MetasimProvider,
    out_transcript: *mut *mut c_char,
) -> MetasimStatus {
    if scenario.is_null() || out_transcript.is_null() {
        return MetasimStatus::NullArgument;
    }
    let handle = &*scenario;
    let result = catch_unwind(AssertUnwindSafe(|| {
        let mut loaded = handle.inner.clone();
        loaded.seed = seed;
        run_scenario(&loaded, provider.instance().as_ref()).map(|t| t.render())
    }));
    match result {
        Ok(Ok(text)) => match CString::new(text) {
            Ok(cstring) => {
                *out_transcript = cstring.into_raw();
                MetasimStatus::Ok
            }
            Err(_) => MetasimStatus::Internal,
        },
        Ok(Err(_)) => MetasimStatus::RunFailed,
        Err(_) => MetasimStatus::Internal,
    }
}

/// Re-run the scenario and compare against a stored transcript.
///
/// # Safety
/// `scenario` must be a live handle; `transcript` must be a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn metasim_verify(
    scenario: *const MetasimScenario,
    seed: u64,
    provider: MetasimProvider,
    transcript: *const c_char,
) -> MetasimStatus {
    if scenario.is_null() || transcript.is_null() {
        return MetasimStatus::NullArgument;
    }
    let Ok(stored) = CStr::from_ptr(transcript).to_str() else {
        return MetasimStatus::InvalidUtf8;
    };
    let handle = &*scenario;
    let result = catch_unwind(AssertUnwindSafe(|| {
        let mut loaded = handle.inner.clone();
        loaded.seed = seed;
        verify_transcript(&loaded, provider.instance().as_ref(), stored)
    }));
    match result {
        Ok(Ok(true)) => MetasimStatus::Ok,
        Ok(Ok(false)) => MetasimStatus::Mismatch,
        Ok(Err(_)) => MetasimStatus::RunFailed,
        Err(_) => MetasimStatus::Internal,
    }
}

/// Release a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be a pointer previously returned through an out-param of this
/// library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn metasim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
