//! Exact decision procedures for Lipschitz spaces over finite pointed
//! metric spaces.
//!
//! Everything runs on [`Rational`](rational::Rational) values: the LP kernel
//! in [`exactlp`], spaces in [`metric`], Lipschitz functions and peaking in
//! [`lipfunc`], the free-space ball in [`freespace`], composition operators
//! in [`compop`], and random corpora in [`harness`].

pub mod cli;
pub mod compop;
pub mod error;
pub mod exactlp;
pub mod freespace;
pub mod harness;
pub mod lipfunc;
pub mod metric;
pub mod rational;

pub use error::{Error, Result};
pub use metric::{PairIndex, PointedMetricSpace};
pub use rational::Rational;
