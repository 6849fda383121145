//! Study orchestration service and its HTTP API.

pub mod domain;
pub mod http;

pub use domain::*;
pub use http::router;
