//! Link-level simulation of spatial coding for downlink massive MU-MIMO with
//! 1-bit DACs and ADCs.
//!
//! The transmit chain per user is LDPC encoding, spatial coding onto a
//! channel-dependent subset of QPSK input vectors, and a lookup-table
//! precoder whose columns maximize the minimum-BER criterion. The receive
//! chain quantizes, spatially decodes and LDPC decodes.

pub mod channel;
pub mod cli;
pub mod constellation;
pub mod error;
pub mod ldpc;
pub mod precoder;
pub mod selftest;
pub mod sim;
pub mod spatial;

pub use error::{Error, Result};
