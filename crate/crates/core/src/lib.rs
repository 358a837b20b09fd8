pub mod engine;
pub mod kb;
pub mod par;
pub mod sim;
pub mod temporal;
pub mod values;
pub mod wm;

#[cfg(feature = "testkit")]
pub mod testkit;
