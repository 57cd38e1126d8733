pub mod classify;
pub mod simulate;
pub mod sweep;
pub mod tables;
