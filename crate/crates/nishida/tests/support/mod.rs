//! Oracles and checks shared by the integration tests and the acceptance
//! report. Each test binary uses a subset.
#![allow(dead_code)]

pub mod adem;
pub mod coeff;
pub mod phi;
pub mod rewrites;
