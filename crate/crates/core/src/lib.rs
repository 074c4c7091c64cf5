//! Simulation configuration classes for atomic DEVS models.

pub mod algebra;
pub mod campaign;
pub mod criteria;
pub mod model;
pub mod parser;
pub mod project;
pub mod render;
pub mod select;
pub mod sequencer;
pub mod sim;
pub mod symbolic;
