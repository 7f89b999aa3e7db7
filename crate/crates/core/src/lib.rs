pub mod cli;
pub mod expr;
pub mod fiber;
pub mod geometry;
pub mod index;
pub mod monodromy;
pub mod poly;
