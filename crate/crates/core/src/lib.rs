pub mod certificate;
pub mod contact;
pub mod error;
pub mod exprlang;
pub mod fibration;
pub mod linespace;
pub mod numeric;
pub mod spherecorr;

pub use error::{Error, Result};
