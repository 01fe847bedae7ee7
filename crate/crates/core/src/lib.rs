//! Generative wheel design toolkit.
//!
//! The pipeline has three stages:
//!
//! 1. [`topopt`] — a similarity-regularized SIMP topology optimizer on the
//!    annular wheel domain ([`design`]), driven by the plane-stress FEM
//!    solver in [`fem`]. Sweeping the 11x11 grid of (similarity weight,
//!    force ratio) parameters yields 121 optimized variants per reference.
//! 2. [`surrogate`] — an encoder-decoder network (built on the hand-rolled
//!    [`nn`] kernel) that approximates the optimizer so variants can be
//!    produced in milliseconds instead of minutes.
//! 3. [`agent`] — a PPO agent that picks 5 + 5 parameter values per episode
//!    ([`env`]) to maximize the diversity ([`diversity`]) of the resulting
//!    25-design grid, benchmarked against equ-distance, greedy and
//!    exhaustive strategies.
//!
//! Persistence formats and run configuration live in [`store`] and
//! [`config`]; the `wheelgen` CLI crate drives batch runs.

pub mod agent;
pub mod config;
pub mod design;
pub mod diversity;
pub mod env;
pub mod error;
pub mod fem;
pub mod nn;
pub mod store;
pub mod surrogate;
pub mod topopt;

pub use design::{AnnulusMask, DesignImage, PixelClass, ReferenceSpec};
pub use error::{Error, Result};
