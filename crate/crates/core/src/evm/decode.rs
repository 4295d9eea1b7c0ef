//! Bytecode decoding: hex text to a validated opcode stream.

use std::fmt;
use std::ops::Range;

use thiserror::Error;

use super::opcodes::{opcode_info, OpInfo};

/// One decoded opcode, including any push immediate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawOpcode {
    pub offset: usize,
    pub info: OpInfo,
    pub immediate: Vec<u8>,
}

impl RawOpcode {
    /// Total encoded length in bytes.
    pub fn size(&self) -> usize {
        1 + self.immediate.len()
    }
}

impl fmt::Display for RawOpcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>5}: {}", self.offset, self.info.mnemonic)?;
        if !self.immediate.is_empty() {
            write!(f, " 0x")?;
            for b in &self.immediate {
                write!(f, "{:02x}", b)?;
            }
        }
        Ok(())
    }
}

/// Decoded contract code. Every byte of `bytes` is covered by exactly one
/// opcode or one invalid region; re-encoding reproduces the input.
#[derive(Clone, Debug, Default)]
pub struct CodeImage {
    pub bytes: Vec<u8>,
    pub opcodes: Vec<RawOpcode>,
    pub invalid_regions: Vec<Range<usize>>,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("hex input has odd length ({0} digits)")]
    OddLength(usize),
    #[error("invalid hex digit {found:?} at byte position {position}")]
    BadDigit { position: usize, found: char },
}

/// Parse hex text (optionally 0x-prefixed, surrounding whitespace ignored)
/// into bytes.
pub fn parse_hex(text: &str) -> Result<Vec<u8>, DecodeError> {
    let text = text.trim();
    let text = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")).unwrap_or(text);
    if text.len() % 2 != 0 {
        return Err(DecodeError::OddLength(text.len()));
    }
    let mut out = Vec::with_capacity(text.len() / 2);
    let bytes = text.as_bytes();
    for i in (0..bytes.len()).step_by(2) {
        let hi = digit(bytes[i], i / 2)?;
        let lo = digit(bytes[i + 1], i / 2)?;
        out.push(hi << 4 | lo);
    }
    Ok(out)
}

fn digit(b: u8, position: usize) -> Result<u8, DecodeError> {
    (b as char).to_digit(16).map(|d| d as u8).ok_or(DecodeError::BadDigit {
        position,
        found: b as char,
    })
}

/// Decode a hex string into a [`CodeImage`].
///
/// Decoding is total over byte content: unassigned opcode bytes and pushes
/// with truncated immediates become invalid regions rather than errors, since
/// deployed code routinely embeds data and metadata. Only malformed hex text
/// is rejected.
pub fn decode_bytecode(hex: &str) -> Result<CodeImage, DecodeError> {
    let bytes = parse_hex(hex)?;
    Ok(decode_bytes(bytes))
}

/// Decode raw bytes (see [`decode_bytecode`]).
pub fn decode_bytes(bytes: Vec<u8>) -> CodeImage {
    let mut opcodes = Vec::new();
    let mut invalid: Vec<Range<usize>> = Vec::new();
    let mark_invalid = |range: Range<usize>, invalid: &mut Vec<Range<usize>>| {
        if let Some(last) = invalid.last_mut() {
            if last.end == range.start {
                last.end = range.end;
                return;
            }
        }
        invalid.push(range);
    };
    let mut pc = 0usize;
    while pc < bytes.len() {
        let byte = bytes[pc];
        match opcode_info(byte) {
            Some(info) => {
                let imm_len = info.immediate as usize;
                if pc + 1 + imm_len > bytes.len() {
                    // push running past the end of code: data, not an opcode
                    mark_invalid(pc..bytes.len(), &mut invalid);
                    break;
                }
                let immediate = bytes[pc + 1..pc + 1 + imm_len].to_vec();
                opcodes.push(RawOpcode {
                    offset: pc,
                    info,
                    immediate,
                });
                pc += 1 + imm_len;
            }
            None => {
                mark_invalid(pc..pc + 1, &mut invalid);
                pc += 1;
            }
        }
    }
    CodeImage {
        bytes,
        opcodes,
        invalid_regions: invalid,
    }
}

impl CodeImage {
    /// Re-encode opcodes plus invalid regions back to the original bytes.
    pub fn reencode(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bytes.len()];
        for op in &self.opcodes {
            out[op.offset] = op.info.byte;
            out[op.offset + 1..op.offset + op.size()].copy_from_slice(&op.immediate);
        }
        for region in &self.invalid_regions {
            out[region.clone()].copy_from_slice(&self.bytes[region.clone()]);
        }
        out
    }

    /// Opcode starting at the given byte offset, if any.
    pub fn opcode_at(&self, offset: usize) -> Option<&RawOpcode> {
        self.opcodes
            .binary_search_by_key(&offset, |op| op.offset)
            .ok()
            .map(|ix| &self.opcodes[ix])
    }

    pub fn is_jumpdest(&self, offset: usize) -> bool {
        self.opcode_at(offset).is_some_and(|op| op.info.is_jumpdest())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_push() {
        let img = decode_bytecode("6004").unwrap();
        assert_eq!(img.opcodes.len(), 1);
        let op = &img.opcodes[0];
        assert_eq!(op.offset, 0);
        assert_eq!(op.info.mnemonic, "PUSH1");
        assert_eq!(op.immediate, vec![0x04]);
        assert!(img.invalid_regions.is_empty());
    }

    #[test]
    fn empty_input() {
        let img = decode_bytecode("").unwrap();
        assert!(img.opcodes.is_empty());
        assert!(img.bytes.is_empty());
        let img = decode_bytecode("0x").unwrap();
        assert!(img.opcodes.is_empty());
    }

    #[test]
    fn truncated_push_is_invalid_region() {
        let img = decode_bytecode("60").unwrap();
        assert!(img.opcodes.is_empty());
        assert_eq!(img.invalid_regions, vec![0..1]);
    }

    #[test]
    fn unknown_bytes_become_invalid_regions() {
        // 0x0c and 0x0d are unassigned; STOP in between
        let img = decode_bytecode("0c0d000c").unwrap();
        assert_eq!(img.invalid_regions, vec![0..2, 3..4]);
        assert_eq!(img.opcodes.len(), 1);
        assert_eq!(img.opcodes[0].info.mnemonic, "STOP");
    }

    #[test]
    fn malformed_hex() {
        assert_eq!(decode_bytecode("123").unwrap_err(), DecodeError::OddLength(3));
        assert!(matches!(
            decode_bytecode("60zz"),
            Err(DecodeError::BadDigit { position: 1, .. })
        ));
    }

    #[test]
    fn round_trip_random_bytes() {
        // decoding is total and re-encoding is exact, whatever the input
        let mut state = 0x12345678u64;
        for len in 0..200 {
            let mut bytes = Vec::with_capacity(len);
            for _ in 0..len {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                bytes.push((state >> 33) as u8);
            }
            let img = decode_bytes(bytes.clone());
            assert_eq!(img.reencode(), bytes);
            // coverage: every byte in exactly one opcode or invalid region
            let mut covered = vec![0u8; len];
            for op in &img.opcodes {
                for i in op.offset..op.offset + op.size() {
                    covered[i] += 1;
                }
            }
            for r in &img.invalid_regions {
                for i in r.clone() {
                    covered[i] += 1;
                }
            }
            assert!(covered.iter().all(|&c| c == 1), "coverage hole in {bytes:?}");
        }
    }
}
