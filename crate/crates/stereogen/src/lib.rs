pub mod assets;
pub mod compose;
pub mod dataset;
pub mod eval;
pub mod geom;
pub mod gt;
pub mod noise;
pub mod render;
pub mod rng;
pub mod scene;
pub mod terrain;
pub mod config;
pub mod pipeline;
