use std::fmt;

use super::crc::crc8;
use super::ProtocolError;
use crate::movement::MovementDirection;
use crate::rotation::RotationDirection;
use crate::timeline::{Channel, WaveformShape};

pub const SYNC: u8 = 0xA5;
pub const MAX_PAYLOAD: usize = 32;

pub mod opcode {
    pub const PING: u8 = 0x01;
    pub const VIBE: u8 = 0x10;
    pub const MOVEMENT: u8 = 0x11;
    pub const ROTATION: u8 = 0x20;
    pub const STOP: u8 = 0x2F;
    pub const STATUS: u8 = 0x30;
    pub const PONG: u8 = 0x81;
    pub const STATUS_REPLY: u8 = 0xB0;
}

/// Fixed payload length of a defined opcode.
pub fn payload_len(op: u8) -> Option<usize> {
    match op {
        opcode::PING | opcode::STOP | opcode::STATUS | opcode::PONG => Some(0),
        opcode::VIBE => Some(4),
        opcode::MOVEMENT => Some(7),
        opcode::ROTATION => Some(8),
        opcode::STATUS_REPLY => Some(2),
        _ => None,
    }
}

/// Raw protocol unit: an opcode and its payload bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub opcode: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    /// A frame whose opcode is defined and whose payload matches its layout.
    pub fn new(opcode: u8, payload: Vec<u8>) -> Result<Self, ProtocolError> {
        let frame = Frame { opcode, payload };
        frame.check()?;
        Ok(frame)
    }

    pub fn check(&self) -> Result<(), ProtocolError> {
        if self.payload.len() > MAX_PAYLOAD {
            return Err(ProtocolError::FrameTooLarge(self.payload.len()));
        }
        match payload_len(self.opcode) {
            None => Err(ProtocolError::UnknownOpcode(self.opcode)),
            Some(n) if n != self.payload.len() => Err(ProtocolError::PayloadLength {
                opcode: self.opcode,
                expected: n,
                found: self.payload.len(),
            }),
            Some(_) => Ok(()),
        }
    }
}

/// `SYNC LEN OPCODE PAYLOAD CRC`, with the CRC over `LEN..PAYLOAD`.
pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, ProtocolError> {
    frame.check()?;
    let mut out = Vec::with_capacity(frame.payload.len() + 4);
    out.push(SYNC);
    out.push(1 + frame.payload.len() as u8);
    out.push(frame.opcode);
    out.extend_from_slice(&frame.payload);
    let crc = crc8(&out[1..]);
    out.push(crc);
    Ok(out)
}

/// Typed view of every defined frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Message {
    Ping,
    Vibe {
        channel: Channel,
        amplitude: u8,
        duration_ms: u16,
    },
    Movement {
        direction: MovementDirection,
        duration_ms: u16,
        isoi_ms: u16,
        amplitude: u8,
        repetitions: u8,
    },
    Rotation {
        direction: RotationDirection,
        on_ms: u16,
        off_ms: u16,
        shape: WaveformShape,
        count: u8,
        amplitude: u8,
    },
    Stop,
    Status,
    Pong,
    StatusReply {
        busy: bool,
        queued: u8,
    },
}

fn u16_le(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn bad(opcode: u8, what: &str) -> ProtocolError {
    ProtocolError::InvalidPayload {
        opcode,
        reason: what.to_string(),
    }
}

impl Message {
    pub fn opcode(&self) -> u8 {
        match self {
            Message::Ping => opcode::PING,
            Message::Vibe { .. } => opcode::VIBE,
            Message::Movement { .. } => opcode::MOVEMENT,
            Message::Rotation { .. } => opcode::ROTATION,
            Message::Stop => opcode::STOP,
            Message::Status => opcode::STATUS,
            Message::Pong => opcode::PONG,
            Message::StatusReply { .. } => opcode::STATUS_REPLY,
        }
    }

    pub fn to_frame(&self) -> Frame {
        let payload = match *self {
            Message::Ping | Message::Stop | Message::Status | Message::Pong => vec![],
            Message::Vibe {
                channel,
                amplitude,
                duration_ms,
            } => {
                let ch = if channel == Channel::VibeEnd { 1 } else { 0 };
                let mut p = vec![ch, amplitude];
                p.extend(duration_ms.to_le_bytes());
                p
            }
            Message::Movement {
                direction,
                duration_ms,
                isoi_ms,
                amplitude,
                repetitions,
            } => {
                let mut p = vec![match direction {
                    MovementDirection::TipToEnd => 0,
                    MovementDirection::EndToTip => 1,
                }];
                p.extend(duration_ms.to_le_bytes());
                p.extend(isoi_ms.to_le_bytes());
                p.push(amplitude);
                p.push(repetitions);
                p
            }
            Message::Rotation {
                direction,
                on_ms,
                off_ms,
                shape,
                count,
                amplitude,
            } => {
                let mut p = vec![match direction {
                    RotationDirection::Cw => 0,
                    RotationDirection::Ccw => 1,
                }];
                p.extend(on_ms.to_le_bytes());
                p.extend(off_ms.to_le_bytes());
                p.push(match shape {
                    WaveformShape::Square => 0,
                    WaveformShape::IncreasingRamp => 1,
                    WaveformShape::DecreasingRamp => 2,
                });
                p.push(count);
                p.push(amplitude);
                p
            }
            Message::StatusReply { busy, queued } => vec![busy as u8, queued],
        };
        Frame {
            opcode: self.opcode(),
            payload,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        encode_frame(&self.to_frame()).expect("typed messages always fit their layout")
    }
}

impl TryFrom<&Frame> for Message {
    type Error = ProtocolError;

    fn try_from(f: &Frame) -> Result<Self, Self::Error> {
        f.check()?;
        let p = &f.payload;
        let op = f.opcode;
        Ok(match op {
            opcode::PING => Message::Ping,
            opcode::STOP => Message::Stop,
            opcode::STATUS => Message::Status,
            opcode::PONG => Message::Pong,
            opcode::VIBE => Message::Vibe {
                channel: match p[0] {
                    0 => Channel::VibeTip,
                    1 => Channel::VibeEnd,
                    _ => return Err(bad(op, "channel must be 0 or 1")),
                },
                amplitude: p[1],
                duration_ms: u16_le(p, 2),
            },
            opcode::MOVEMENT => Message::Movement {
                direction: match p[0] {
                    0 => MovementDirection::TipToEnd,
                    1 => MovementDirection::EndToTip,
                    _ => return Err(bad(op, "direction must be 0 or 1")),
                },
                duration_ms: u16_le(p, 1),
                isoi_ms: u16_le(p, 3),
                amplitude: p[5],
                repetitions: p[6],
            },
            opcode::ROTATION => Message::Rotation {
                direction: match p[0] {
                    0 => RotationDirection::Cw,
                    1 => RotationDirection::Ccw,
                    _ => return Err(bad(op, "direction must be 0 or 1")),
                },
                on_ms: u16_le(p, 1),
                off_ms: u16_le(p, 3),
                shape: match p[5] {
                    0 => WaveformShape::Square,
                    1 => WaveformShape::IncreasingRamp,
                    2 => WaveformShape::DecreasingRamp,
                    _ => return Err(bad(op, "shape must be 0, 1 or 2")),
                },
                count: p[6],
                amplitude: p[7],
            },
            opcode::STATUS_REPLY => Message::StatusReply {
                busy: match p[0] {
                    0 => false,
                    1 => true,
                    _ => return Err(bad(op, "busy must be 0 or 1")),
                },
                queued: p[1],
            },
            other => return Err(ProtocolError::UnknownOpcode(other)),
        })
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Ping => write!(f, "PING"),
            Message::Stop => write!(f, "STOP"),
            Message::Status => write!(f, "STATUS"),
            Message::Pong => write!(f, "PONG"),
            Message::Vibe {
                channel,
                amplitude,
                duration_ms,
            } => write!(f, "VIBE ch={channel} amp={amplitude} dur_ms={duration_ms}"),
            Message::Movement {
                direction,
                duration_ms,
                isoi_ms,
                amplitude,
                repetitions,
            } => write!(
                f,
                "MOVEMENT dir={direction} d_ms={duration_ms} isoi_ms={isoi_ms} amp={amplitude} reps={repetitions}"
            ),
            Message::Rotation {
                direction,
                on_ms,
                off_ms,
                shape,
                count,
                amplitude,
            } => write!(
                f,
                "ROTATION dir={direction} on_ms={on_ms} off_ms={off_ms} shape={shape} count={count} amp={amplitude}"
            ),
            Message::StatusReply { busy, queued } => {
                write!(f, "STATUS_REPLY busy={} queued={queued}", *busy as u8)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ping_bytes() {
        assert_eq!(Message::Ping.encode(), vec![0xA5, 0x01, 0x01, 0x12]);
    }

    #[test]
    fn stop_bytes() {
        assert_eq!(Message::Stop.encode(), vec![0xA5, 0x01, 0x2F, 0xD8]);
    }

    #[test]
    fn movement_layout() {
        let m = Message::Movement {
            direction: MovementDirection::TipToEnd,
            duration_ms: 100,
            isoi_ms: 50,
            amplitude: 255,
            repetitions: 1,
        };
        assert_eq!(
            m.encode(),
            vec![0xA5, 0x08, 0x11, 0x00, 0x64, 0x00, 0x32, 0x00, 0xFF, 0x01, 0x59]
        );
    }

    #[test]
    fn oversized_payload_rejected() {
        let f = Frame {
            opcode: opcode::PING,
            payload: vec![0; 33],
        };
        assert!(matches!(encode_frame(&f), Err(ProtocolError::FrameTooLarge(33))));
    }

    #[test]
    fn layout_mismatch_rejected() {
        assert!(matches!(
            Frame::new(opcode::VIBE, vec![0, 1]),
            Err(ProtocolError::PayloadLength { expected: 4, found: 2, .. })
        ));
        assert!(matches!(Frame::new(0x42, vec![]), Err(ProtocolError::UnknownOpcode(0x42))));
    }

    #[test]
    fn typed_view_rejects_bad_enums() {
        let f = Frame::new(opcode::ROTATION, vec![0, 200, 0, 200, 0, 3, 3, 255]).unwrap();
        assert!(matches!(Message::try_from(&f), Err(ProtocolError::InvalidPayload { .. })));
    }

    #[test]
    fn display_lists_fields() {
        let m = Message::Rotation {
            direction: RotationDirection::Cw,
            on_ms: 200,
            off_ms: 200,
            shape: WaveformShape::DecreasingRamp,
            count: 3,
            amplitude: 255,
        };
        assert_eq!(m.to_string(), "ROTATION dir=cw on_ms=200 off_ms=200 shape=dec count=3 amp=255");
    }
}
