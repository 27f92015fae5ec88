//! Numeric core of the stereo super-resolution benchmark toolkit.
//!
//! Everything in this crate is a pure function of its inputs and needs only
//! `alloc`: image containers, the low-resolution synthesis pipelines
//! ([`degrade`]), quality metrics ([`metrics`]), compute-budget accounting
//! ([`budget`]) and reference implementations of the stereo building blocks
//! and training losses ([`mech`]). File formats, directory layouts and the
//! command line live in the `stereobench` crate.
//!
//! Floating point math goes through [`libm`] so results do not depend on the
//! platform's math library; pseudorandom streams come from ChaCha8, whose
//! output is stable across platforms and releases.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod budget;
pub mod degrade;
pub mod filter;
pub mod image;
pub mod jpeg;
pub mod mech;
pub mod metrics;
pub mod resize;
pub mod rng;
pub mod selftest;
pub mod synth;

pub use image::{Image, Image8, ImageError, SceneId, Split, StereoPair, View};
pub use rng::Rng;
