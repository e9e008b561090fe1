//! Secrecy-rate analysis and beamformer design for bidirectional MIMO
//! communication through an untrusted amplify-and-forward relay.
//!
//! The relay is honest-but-curious: it forwards signals as asked while
//! trying to decode the messages it carries, so every scheme is scored by
//! its secrecy sum rate — the two-way information rate minus whatever the
//! relay can decode, clipped at zero.
//!
//! Crate layout:
//! - [`matkit`]: small complex linear-algebra toolkit (QR, generalized
//!   eigenproblems, null spaces) shared by everything else.
//! - [`channels`]: channel containers, random sampling, the reference
//!   fixture, JSON persistence.
//! - [`schemes`]: exact rate expressions for two-phase relaying,
//!   three-phase relaying, and direct transmission.
//! - [`optimize`]: relay-structure reductions, the log-barrier relay
//!   search, fractional source subproblems, signal alignment, and the two
//!   alternating design algorithms.
//! - [`asymptotics`]: closed-form high/low-power limits and the regime
//!   comparison table.
//! - [`experiment`]: config-driven experiment runner backing the CLI.

pub mod asymptotics;
pub mod channels;
pub mod experiment;
pub mod matkit;
pub mod optimize;
pub mod schemes;
