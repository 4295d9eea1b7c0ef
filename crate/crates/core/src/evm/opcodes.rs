//! The EVM opcode table: mnemonic, immediate width, and stack effect for
//! every assigned opcode byte. Unassigned bytes decode as data.

/// Static description of one opcode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpInfo {
    pub byte: u8,
    pub mnemonic: &'static str,
    /// Number of immediate bytes following the opcode (only pushes have any).
    pub immediate: u8,
    pub pops: u8,
    pub pushes: u8,
}

impl OpInfo {
    pub fn is_push(&self) -> bool {
        (0x5f..=0x7f).contains(&self.byte)
    }

    pub fn is_jumpdest(&self) -> bool {
        self.byte == 0x5b
    }

    /// Does this opcode end a basic block?
    pub fn is_terminator(&self) -> bool {
        matches!(
            self.byte,
            0x00 | 0x56 | 0x57 | 0xf3 | 0xfd | 0xfe | 0xff
        )
    }
}

macro_rules! table {
    ($(($byte:expr, $name:expr, $imm:expr, $pops:expr, $pushes:expr),)*) => {
        &[$(OpInfo { byte: $byte, mnemonic: $name, immediate: $imm, pops: $pops, pushes: $pushes },)*]
    };
}

#[rustfmt::skip]
static OPCODES: &[OpInfo] = table![
    (0x00, "STOP", 0, 0, 0),
    (0x01, "ADD", 0, 2, 1),
    (0x02, "MUL", 0, 2, 1),
    (0x03, "SUB", 0, 2, 1),
    (0x04, "DIV", 0, 2, 1),
    (0x05, "SDIV", 0, 2, 1),
    (0x06, "MOD", 0, 2, 1),
    (0x07, "SMOD", 0, 2, 1),
    (0x08, "ADDMOD", 0, 3, 1),
    (0x09, "MULMOD", 0, 3, 1),
    (0x0a, "EXP", 0, 2, 1),
    (0x0b, "SIGNEXTEND", 0, 2, 1),
    (0x10, "LT", 0, 2, 1),
    (0x11, "GT", 0, 2, 1),
    (0x12, "SLT", 0, 2, 1),
    (0x13, "SGT", 0, 2, 1),
    (0x14, "EQ", 0, 2, 1),
    (0x15, "ISZERO", 0, 1, 1),
    (0x16, "AND", 0, 2, 1),
    (0x17, "OR", 0, 2, 1),
    (0x18, "XOR", 0, 2, 1),
    (0x19, "NOT", 0, 1, 1),
    (0x1a, "BYTE", 0, 2, 1),
    (0x1b, "SHL", 0, 2, 1),
    (0x1c, "SHR", 0, 2, 1),
    (0x1d, "SAR", 0, 2, 1),
    (0x20, "SHA3", 0, 2, 1),
    (0x30, "ADDRESS", 0, 0, 1),
    (0x31, "BALANCE", 0, 1, 1),
    (0x32, "ORIGIN", 0, 0, 1),
    (0x33, "CALLER", 0, 0, 1),
    (0x34, "CALLVALUE", 0, 0, 1),
    (0x35, "CALLDATALOAD", 0, 1, 1),
    (0x36, "CALLDATASIZE", 0, 0, 1),
    (0x37, "CALLDATACOPY", 0, 3, 0),
    (0x38, "CODESIZE", 0, 0, 1),
    (0x39, "CODECOPY", 0, 3, 0),
    (0x3a, "GASPRICE", 0, 0, 1),
    (0x3b, "EXTCODESIZE", 0, 1, 1),
    (0x3c, "EXTCODECOPY", 0, 4, 0),
    (0x3d, "RETURNDATASIZE", 0, 0, 1),
    (0x3e, "RETURNDATACOPY", 0, 3, 0),
    (0x3f, "EXTCODEHASH", 0, 1, 1),
    (0x40, "BLOCKHASH", 0, 1, 1),
    (0x41, "COINBASE", 0, 0, 1),
    (0x42, "TIMESTAMP", 0, 0, 1),
    (0x43, "NUMBER", 0, 0, 1),
    (0x44, "DIFFICULTY", 0, 0, 1),
    (0x45, "GASLIMIT", 0, 0, 1),
    (0x46, "CHAINID", 0, 0, 1),
    (0x47, "SELFBALANCE", 0, 0, 1),
    (0x48, "BASEFEE", 0, 0, 1),
    (0x50, "POP", 0, 1, 0),
    (0x51, "MLOAD", 0, 1, 1),
    (0x52, "MSTORE", 0, 2, 0),
    (0x53, "MSTORE8", 0, 2, 0),
    (0x54, "SLOAD", 0, 1, 1),
    (0x55, "SSTORE", 0, 2, 0),
    (0x56, "JUMP", 0, 1, 0),
    (0x57, "JUMPI", 0, 2, 0),
    (0x58, "PC", 0, 0, 1),
    (0x59, "MSIZE", 0, 0, 1),
    (0x5a, "GAS", 0, 0, 1),
    (0x5b, "JUMPDEST", 0, 0, 0),
    (0x5f, "PUSH0", 0, 0, 1),
    (0xa0, "LOG0", 0, 2, 0),
    (0xa1, "LOG1", 0, 3, 0),
    (0xa2, "LOG2", 0, 4, 0),
    (0xa3, "LOG3", 0, 5, 0),
    (0xa4, "LOG4", 0, 6, 0),
    (0xf0, "CREATE", 0, 3, 1),
    (0xf1, "CALL", 0, 7, 1),
    (0xf2, "CALLCODE", 0, 7, 1),
    (0xf3, "RETURN", 0, 2, 0),
    (0xf4, "DELEGATECALL", 0, 6, 1),
    (0xf5, "CREATE2", 0, 4, 1),
    (0xfa, "STATICCALL", 0, 6, 1),
    (0xfd, "REVERT", 0, 2, 0),
    (0xfe, "INVALID", 0, 0, 0),
    (0xff, "SELFDESTRUCT", 0, 1, 0),
];

static PUSH_NAMES: [&str; 32] = [
    "PUSH1", "PUSH2", "PUSH3", "PUSH4", "PUSH5", "PUSH6", "PUSH7", "PUSH8", "PUSH9", "PUSH10",
    "PUSH11", "PUSH12", "PUSH13", "PUSH14", "PUSH15", "PUSH16", "PUSH17", "PUSH18", "PUSH19",
    "PUSH20", "PUSH21", "PUSH22", "PUSH23", "PUSH24", "PUSH25", "PUSH26", "PUSH27", "PUSH28",
    "PUSH29", "PUSH30", "PUSH31", "PUSH32",
];

static DUP_NAMES: [&str; 16] = [
    "DUP1", "DUP2", "DUP3", "DUP4", "DUP5", "DUP6", "DUP7", "DUP8", "DUP9", "DUP10", "DUP11",
    "DUP12", "DUP13", "DUP14", "DUP15", "DUP16",
];

static SWAP_NAMES: [&str; 16] = [
    "SWAP1", "SWAP2", "SWAP3", "SWAP4", "SWAP5", "SWAP6", "SWAP7", "SWAP8", "SWAP9", "SWAP10",
    "SWAP11", "SWAP12", "SWAP13", "SWAP14", "SWAP15", "SWAP16",
];

/// Look up an opcode byte. Returns None for unassigned bytes.
pub fn opcode_info(byte: u8) -> Option<OpInfo> {
    match byte {
        0x60..=0x7f => {
            let width = byte - 0x5f;
            Some(OpInfo {
                byte,
                mnemonic: PUSH_NAMES[(width - 1) as usize],
                immediate: width,
                pops: 0,
                pushes: 1,
            })
        }
        0x80..=0x8f => Some(OpInfo {
            byte,
            mnemonic: DUP_NAMES[(byte - 0x80) as usize],
            immediate: 0,
            pops: byte - 0x7f,      // reads n slots, leaves them plus a copy
            pushes: byte - 0x7e,
        }),
        0x90..=0x9f => Some(OpInfo {
            byte,
            mnemonic: SWAP_NAMES[(byte - 0x90) as usize],
            immediate: 0,
            pops: byte - 0x8e,
            pushes: byte - 0x8e,
        }),
        _ => OPCODES.iter().find(|op| op.byte == byte).copied(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_lookup() {
        assert_eq!(opcode_info(0x01).unwrap().mnemonic, "ADD");
        assert_eq!(opcode_info(0x60).unwrap().mnemonic, "PUSH1");
        assert_eq!(opcode_info(0x60).unwrap().immediate, 1);
        assert_eq!(opcode_info(0x7f).unwrap().immediate, 32);
        assert_eq!(opcode_info(0x8f).unwrap().mnemonic, "DUP16");
        assert_eq!(opcode_info(0x9f).unwrap().mnemonic, "SWAP16");
        assert!(opcode_info(0x0c).is_none());
        assert!(opcode_info(0xef).is_none());
    }
}
