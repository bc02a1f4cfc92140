use super::crc::crc8;
use super::frame::{payload_len, Frame, MAX_PAYLOAD, SYNC};

/// Something the decoder had to throw away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagnostic {
    /// Bytes before a sync marker were skipped.
    Resync,
    /// A header carried a length no frame can have.
    IllegalLength(u8),
    /// A header named an opcode that is undefined or has another length.
    IllegalOpcode { opcode: u8, len: u8 },
    CrcMismatch { expected: u8, found: u8 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecoderStats {
    pub frames: u64,
    pub skipped_bytes: u64,
    pub resyncs: u64,
    pub crc_failures: u64,
    pub header_failures: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecodeOutput {
    pub frames: Vec<Frame>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Incremental frame parser.
///
/// On a bad header or CRC the sync byte is dropped and the scan restarts one
/// byte later, so a frame hidden behind a false sync is never lost.
#[derive(Debug, Clone, Default)]
pub struct Decoder {
    buf: Vec<u8>,
    // inside a run of discarded bytes
    discarding: bool,
    stats: DecoderStats,
}

impl Decoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> DecoderStats {
        self.stats
    }

    /// Bytes held while waiting for the rest of a frame.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }

    pub fn feed(&mut self, bytes: &[u8]) -> DecodeOutput {
        self.buf.extend_from_slice(bytes);
        let mut out = DecodeOutput::default();
        let mut pos = 0;
        while pos < self.buf.len() {
            if self.buf[pos] != SYNC {
                if !self.discarding {
                    self.discarding = true;
                    self.stats.resyncs += 1;
                    out.diagnostics.push(Diagnostic::Resync);
                }
                self.stats.skipped_bytes += 1;
                pos += 1;
                continue;
            }
            let Some(&len) = self.buf.get(pos + 1) else { break };
            if len == 0 || len as usize > 1 + MAX_PAYLOAD {
                self.reject(&mut pos, Diagnostic::IllegalLength(len), &mut out);
                continue;
            }
            let Some(&op) = self.buf.get(pos + 2) else { break };
            if payload_len(op) != Some(len as usize - 1) {
                self.reject(&mut pos, Diagnostic::IllegalOpcode { opcode: op, len }, &mut out);
                continue;
            }
            let end = pos + len as usize + 3;
            if self.buf.len() < end {
                break;
            }
            let expected = crc8(&self.buf[pos + 1..end - 1]);
            let found = self.buf[end - 1];
            if expected != found {
                self.stats.crc_failures += 1;
                self.reject(&mut pos, Diagnostic::CrcMismatch { expected, found }, &mut out);
                continue;
            }
            out.frames.push(Frame {
                opcode: op,
                payload: self.buf[pos + 3..end - 1].to_vec(),
            });
            self.stats.frames += 1;
            self.discarding = false;
            pos = end;
        }
        self.buf.drain(..pos);
        out
    }

    fn reject(&mut self, pos: &mut usize, diag: Diagnostic, out: &mut DecodeOutput) {
        if !matches!(diag, Diagnostic::CrcMismatch { .. }) {
            self.stats.header_failures += 1;
        }
        out.diagnostics.push(diag);
        self.stats.skipped_bytes += 1;
        self.discarding = true;
        *pos += 1;
    }
}

/// Decodes a complete byte buffer in one go.
pub fn decode_all(bytes: &[u8]) -> (DecodeOutput, DecoderStats) {
    let mut d = Decoder::new();
    let out = d.feed(bytes);
    (out, d.stats())
}
