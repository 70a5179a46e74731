pub mod linearize;
pub mod schedule;
pub mod simulate;
pub mod turbine;
pub mod validate;
