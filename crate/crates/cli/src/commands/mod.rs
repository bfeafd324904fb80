pub mod complete;
pub mod eval;
pub mod fixtures;
pub mod probe;
