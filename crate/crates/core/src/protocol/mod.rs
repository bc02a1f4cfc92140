//! Framed command protocol and the virtual device that executes it.

mod crc;
mod decoder;
mod device;
mod frame;
mod hex;
mod transport;

use thiserror::Error;

pub use crc::crc8;
pub use decoder::{decode_all, DecodeOutput, Decoder, DecoderStats, Diagnostic};
pub use device::{virtual_device_step, DeviceState, QUEUE_DEPTH};
pub use frame::{encode_frame, opcode, payload_len, Frame, Message, MAX_PAYLOAD, SYNC};
pub use hex::{parse_hex, to_hex};
pub use transport::{serve, Client, ServeReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("frame too large: {0} payload bytes (max 32)")]
    FrameTooLarge(usize),
    #[error("unknown opcode 0x{0:02X}")]
    UnknownOpcode(u8),
    #[error("opcode 0x{opcode:02X} expects {expected} payload bytes, got {found}")]
    PayloadLength { opcode: u8, expected: usize, found: usize },
    #[error("opcode 0x{opcode:02X}: {reason}")]
    InvalidPayload { opcode: u8, reason: String },
    #[error("NAK for opcode 0x{opcode:02X}: {reason}")]
    Nak { opcode: u8, reason: String },
    #[error("malformed hex `{0}`")]
    MalformedHex(String),
}
