//! Seller and buyer sessions for the hidden-mechanism examples.
//!
//! A session runs `Commit -> (CommitProof) -> TypeReport -> evaluation ->
//! Outcome`. The buyer checks each message as it arrives; a transcript of all
//! messages lets anyone repeat those checks with [`verify_transcript`].

pub mod mechanism;
pub mod message;
pub mod seller;
pub mod verifier;

use rand::RngCore;

pub use mechanism::{Branch, ExampleKind, Mechanism, MechanismSpec, Outcome};
pub use message::{Claim, Message};
pub use seller::Seller;
pub use verifier::{verify_transcript, Buyer, Role, Verifier};

use crate::codec::Transcript;
use crate::error::{Error, Result};
use crate::group::RefString;

/// Alternates between the two parties until the buyer has verified the
/// outcome.
pub fn run_session(seller: &mut Seller, buyer: &mut Buyer) -> Result<(Outcome, Transcript)> {
    while let Some(role) = buyer.verifier().next_speaker() {
        match role {
            Role::Seller => {
                let msg = seller.poll().ok_or_else(|| Error::OutOfOrder {
                    phase: buyer.verifier().phase_name().into(),
                    detail: "seller has nothing to send".into(),
                })?;
                buyer.receive(&msg)?;
            }
            Role::Buyer => {
                let msg = buyer.poll()?.expect("buyer's turn yields a message");
                seller.receive(&msg)?;
            }
        }
    }
    let outcome = buyer.outcome().cloned().expect("finished session has an outcome");
    Ok((outcome, buyer.verifier().transcript()))
}

/// Runs both roles in-process with the given randomness.
pub fn run_example<R1, R2>(
    rf: &RefString,
    spec: &MechanismSpec,
    report: &[u64],
    seller_rng: R1,
    buyer_rng: R2,
) -> Result<(Outcome, Transcript)>
where
    R1: RngCore + Send + 'static,
    R2: RngCore + Send + 'static,
{
    let mut seller = Seller::new(rf.clone(), spec.clone(), seller_rng)?;
    let mut buyer = Buyer::new(rf.clone(), spec.kind(), spec.h(), report.to_vec(), buyer_rng)?;
    run_session(&mut seller, &mut buyer)
}
