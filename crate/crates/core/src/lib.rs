pub mod error;
pub mod linalg;
pub mod mesh;
pub mod pwls;
pub mod schur;
pub mod adaptive;
pub mod bddc;
pub mod bench;

pub use error::{Error, Result};

