//! Rate-equation simulator for trapped-ion state readout and sideband
//! cooling: Zeeman-resolved shelving/detection dynamics in a five-level
//! alkaline-earth ion, and motional steady states under single- or
//! two-frequency red-sideband excitation outside the Lamb-Dicke regime.

pub mod atomic;
pub mod config;
pub mod ode;
pub mod run;
pub mod shelving;
pub mod sideband;
pub mod solver;
pub mod table;
