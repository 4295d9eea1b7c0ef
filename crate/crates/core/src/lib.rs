//! Static security analysis for EVM smart-contract bytecode: decompilation
//! to stackless SSA, dependence inference over a Datalog fixed point, and
//! compliance/violation pattern checking.

pub mod analysis;
pub mod decompiler;
pub mod evm;
pub mod ir;
pub mod word;
