//! Executable checks of the economic and cryptographic claims: incentive
//! compatibility by exhaustive scan, geometric noise, Groves weight
//! recovery, exact hiding, and the binding reduction.
//!
//! Reports print one line per item followed by `key=value` summary lines.

pub mod attack;
pub mod dsic;
pub mod groves;
pub mod hiding;
pub mod noise;

pub use attack::{
    commitment_attack_driver, AttackResult, EquivocatingSeller, HonestSeller, ScriptedLiar, SellerMove, SellerStrategy,
};
pub use dsic::{
    check_dsic_ir, ex3_ic_lemma_check, ic_lemma_report, posted_price_mechanism, two_part_mechanism, FiniteMechanism,
    Violation, ViolationKind,
};
pub use groves::{groves_extract_weights, groves_outcome, GrovesInstance, GrovesOutcome};
pub use hiding::transcript_distribution_equality;
pub use noise::{geometric_noise, noise_ratio_report, NoiseReport};
