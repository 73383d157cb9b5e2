//! Acceptance checks for `srl-core`; see `tests/acceptance.rs`.
//!
//! Run with `cargo test -p srl-verify --test acceptance`. Each check prints
//! one `PASS` or `FAIL` line and the binary exits non-zero if any fails.
