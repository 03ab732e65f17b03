pub mod eval;
pub mod graph;
pub mod model;
pub mod process;
pub mod special;
pub mod synth;
pub mod train;
