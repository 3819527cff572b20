//! Acceptance suite for `lgcavity`; see `tests/acceptance.rs`.
