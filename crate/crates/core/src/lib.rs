pub mod decomp;
pub mod error;
pub mod harness;
pub mod lag;
mod linalg;
pub mod models;
pub mod predictor;
pub mod series;
pub mod sim;
pub mod svr;

pub use error::{Error, Result};
