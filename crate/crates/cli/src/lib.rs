pub mod bench;
pub mod cli;
pub mod render;
pub mod replay;
pub mod verify;
