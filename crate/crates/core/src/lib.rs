//! Monte Carlo engine for a deployment question in dense cellular networks:
//! with the total antenna budget per km^2 fixed, how should it be split
//! between base-station density and antennas per base station to maximize
//! downlink area spectral efficiency (ASE, bps/Hz/km^2)?
//!
//! Each Monte Carlo drop realizes the full system once:
//!
//! 1. Base stations and user equipments are sampled as independent Poisson
//!    point processes on a square torus; the measured UE sits at the center
//!    ([`geometry`]).
//! 2. Every BS-UE link gets a 3-D distance and a random line-of-sight or
//!    non-line-of-sight state with distance-dependent path loss
//!    ([`propagation`]).
//! 3. UEs attach to the strongest link; BSs with no attached UE idle, loaded
//!    BSs schedule up to a quarter of their antenna count and hand out
//!    orthogonal pilots ([`network`]).
//! 4. Scheduled UEs send pilots uplink with fractional power control; each BS
//!    forms MMSE channel estimates that are contaminated by same-pilot UEs in
//!    other cells ([`channel`]).
//! 5. Active BSs zero-force over their estimates and split transmit power
//!    evenly across streams; the measured UE's SINR decomposes into signal,
//!    estimation-error self-interference, other-stream interference, and
//!    noise ([`precoding`]).
//! 6. SINR samples aggregate into ASE and coverage estimates ([`metrics`]).
//!
//! [`engine`] wires the stages together with deterministic per-drop RNG
//! streams, so results are reproducible bit-for-bit for a given master seed
//! regardless of worker count.

pub mod channel;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod network;
pub mod precoding;
pub mod propagation;

pub use error::Error;
