//! Model-based channel charting.
//!
//! The toolkit simulates single-ray CSI for UEs scattered in front of a base
//! station with a uniform linear array, estimates each UE's angle of arrival
//! and range with classical spectral estimators, places the UEs on a 2-D chart
//! and scores the chart with trustworthiness and continuity.
//!
//! Pipeline: [`scene`] → [`channel`] → [`subspace`] → [`aoa`] / [`range`] →
//! [`chart`] → [`metrics`], orchestrated by [`estimate`], [`bench`] and
//! [`experiment`].

pub mod aoa;
pub mod bench;
pub mod channel;
pub mod chart;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod range;
pub mod rng;
pub mod scene;
pub mod spectrum;
pub mod subspace;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};
