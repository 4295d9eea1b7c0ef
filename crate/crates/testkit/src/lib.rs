//! Reference oracles and random generators used by the test suites.
//!
//! Everything here is deliberately written in the most direct way possible
//! (brute-force substitution enumeration, exhaustive path walks) and shares
//! no evaluation code with the engines under test.

pub mod graphs;
pub mod naive;
pub mod progs;
