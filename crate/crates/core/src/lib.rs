//! Massive MIMO uplink analysis on synthetic channel traces: ZF/MF
//! sum-rates with delayed decoders, channel aging metrics, and OFDM training
//! overhead.

pub mod aging;
pub mod chanmodel;
pub mod cli;
pub mod detect;
pub mod numkit;
pub mod overhead;
