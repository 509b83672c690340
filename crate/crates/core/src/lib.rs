pub mod bench;
pub mod crypto;
pub mod netfn;
pub mod ops;
pub mod schemes;
pub mod sim;
