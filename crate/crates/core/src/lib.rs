pub mod averaging;
pub mod collatz;
pub mod correlation;
pub mod error;
pub mod isometry;
pub mod koopman;
pub mod linalg;
pub mod parity;
pub mod report;
pub mod spectrum;
pub mod verify;

pub use collatz::Natural;
pub use error::{Error, Result};
pub use report::{Check, Report, Status};
