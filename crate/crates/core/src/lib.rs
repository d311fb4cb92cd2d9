pub mod basis;
pub mod geometry;
pub mod mesh;
pub mod shape;
pub mod spline;
pub mod verify;
pub mod cli;
