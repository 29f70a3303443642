pub mod mc;
pub mod augment;
pub mod gridworld;
pub mod webapp;
pub mod synthesis;
pub mod indicators;
pub mod experiment;
