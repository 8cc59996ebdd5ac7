pub mod analysis;
pub mod codec;
pub mod commit;
pub mod error;
pub mod gadgets;
pub mod group;
pub mod mpc;
pub mod protocols;
pub mod sigma;
