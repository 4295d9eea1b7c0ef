//! EVM bytecode handling: opcode table, decoder, and node RPC client.

pub mod decode;
pub mod opcodes;
pub mod rpc;
