pub mod bounds;
pub mod channel;
pub mod construction;
pub mod decoder;
pub mod error;
pub mod operator;
pub mod synthesis;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
