//! Exact computation with positive cocycles on finite equivalence relations and towers.

pub mod approximation;
pub mod compression;
pub mod error;
pub mod examples;
pub mod harness;
pub mod io;
pub mod lacunarity;
pub mod measures;
pub mod model;
pub mod rational;

pub use error::{Error, Result};
pub use rational::Q;
