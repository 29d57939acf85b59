pub mod cli;
pub mod data;
pub mod model;
pub mod rng;
pub mod sim;
pub mod tensor;
pub mod train;
