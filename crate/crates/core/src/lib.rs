//! Adaptive market hypothesis toolkit: return series, rolling efficiency
//! diagnostics, and Kalman-filtered time-varying AR/GARCH models.

pub mod calibrate;
pub mod diagnostics;
pub mod ingest;
pub mod models;
pub mod simulate;
pub mod statespace;
