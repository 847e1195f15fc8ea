pub mod brackets;
pub mod dirac;
pub mod dsl;
pub mod fixtures;
pub mod fj;
pub mod kk;
pub mod lattice;
pub mod report;
pub mod symbolic;
