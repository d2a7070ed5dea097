//! HTTP service for live, historical and exposure noise maps.

pub mod api;
pub mod config;
pub mod grid_json;
pub mod jobs;
pub mod poller;
pub mod state;
pub mod tiers;

pub use api::router;
pub use config::ServiceConfig;
pub use state::AppState;
