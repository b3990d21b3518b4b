pub mod career;
pub mod driver;
pub mod engine;
pub mod fixtures;
pub mod ids;
pub mod physics;
pub mod pipeline;
pub mod report;
pub mod resources;
pub mod store;
