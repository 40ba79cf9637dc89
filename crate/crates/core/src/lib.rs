pub mod analytic;
pub mod error;
pub mod lattice;
pub mod market;
pub mod payoff;
pub mod quad;
pub mod expansion;
pub mod repform;
pub mod composite;
pub mod harness;
