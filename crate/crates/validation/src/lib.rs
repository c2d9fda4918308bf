//! Acceptance checks for `monodromy-lab`; the suite lives in `tests/acceptance.rs`.
