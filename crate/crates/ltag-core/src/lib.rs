//! Operator-independent uplink monitoring pipeline, desk-scale.
//!
//! The crate synthesizes LTE uplink messages (PRACH/PUSCH/PUCCH) on a
//! resource grid, propagates them through a parameterized geometric channel
//! to distributed two-port uplink receivers, measures correlation-based
//! signal features per antenna port, aggregates the measurements at a
//! central unit under a hard timeout, and classifies each connection as
//! originating inside or outside a geofenced area before connection
//! establishment completes.
//!
//! Module map:
//!
//! * [`phy`] — resource grid, Zadoff-Chu sequences, message construction,
//!   OFDM modulation.
//! * [`channel`] — path loss, antenna patterns, walls, AWGN, band mixing.
//! * [`channelizer`] — overlap-save FFT channelizer for wideband streams.
//! * [`sched`] — connection state machine and the downlink-controller role
//!   (allocation broadcasting).
//! * [`receiver`] — circular IQ buffer, allocation event queue, wideband
//!   bin extraction and signal feature measurement.
//! * [`bus`] — pub/sub transport (in-process and socket modes) with the
//!   binary frame format.
//! * [`central`] — report aggregation, relative feature assembly, score
//!   fusion and the decision log.
//! * [`model`] — self-contained MLP (forward/backward/Adam) plus the
//!   per-connection logistic ensemble, serialization and evaluation.
//! * [`sim`] — scenario configuration, routes, dataset generation, sweeps
//!   and the multi-process run harness.

pub mod bus;
pub mod central;
pub mod channel;
pub mod channelizer;
pub mod geom;
pub mod iq;
pub mod model;
pub mod phy;
pub mod receiver;
pub mod sched;
pub mod sim;

pub use iq::IqStream;
pub use phy::{CellConfig, MsgType, SubframeGrid, UplinkMessageSpec};
pub use sched::{MessageId, UplinkAllocation};

/// Speed of light in m/s, used for propagation delays.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
