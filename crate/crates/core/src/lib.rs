pub mod analysis;
pub mod circuit;
pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod models;
pub mod numkernel;
pub mod table;
pub mod trajectory;

pub use error::{Error, Result};
pub use table::ResultTable;
