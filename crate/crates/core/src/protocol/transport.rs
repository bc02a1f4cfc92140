//! Byte-stream plumbing between a host and a [`DeviceState`].

use std::io::{self, Read, Write};

use super::decoder::{Decoder, Diagnostic};
use super::device::DeviceState;
use super::frame::{encode_frame, Frame};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ServeReport {
    pub frames: u64,
    pub replies: u64,
    pub naks: u64,
    pub diagnostics: Vec<Diagnostic>,
}

/// Feeds everything read from `reader` to the device until EOF, writing each
/// reply as soon as it is produced.
pub fn serve<R: Read, W: Write>(
    mut reader: R,
    mut writer: W,
    device: &mut DeviceState,
) -> io::Result<ServeReport> {
    let mut decoder = Decoder::new();
    let mut report = ServeReport::default();
    let mut buf = [0u8; 256];
    loop {
        let n = match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        };
        let out = decoder.feed(&buf[..n]);
        report.diagnostics.extend(out.diagnostics);
        for frame in out.frames {
            report.frames += 1;
            match device.step(&frame) {
                Ok(Some(reply)) => {
                    writer.write_all(&encode_frame(&reply).expect("device replies are valid"))?;
                    report.replies += 1;
                }
                Ok(None) => {}
                Err(_) => report.naks += 1,
            }
        }
        writer.flush()?;
    }
    Ok(report)
}

/// Host side of a stream: sends frames and waits for decoded replies.
pub struct Client<S> {
    stream: S,
    decoder: Decoder,
    pending: std::collections::VecDeque<Frame>,
}

impl<S: Read + Write> Client<S> {
    pub fn new(stream: S) -> Self {
        Client {
            stream,
            decoder: Decoder::new(),
            pending: Default::default(),
        }
    }

    pub fn send(&mut self, frame: &Frame) -> io::Result<()> {
        let bytes = encode_frame(frame).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        self.stream.write_all(&bytes)?;
        self.stream.flush()
    }

    /// Blocks until one reply frame is decoded.
    pub fn recv(&mut self) -> io::Result<Frame> {
        let mut buf = [0u8; 64];
        while self.pending.is_empty() {
            let n = self.stream.read(&mut buf)?;
            if n == 0 {
                return Err(io::ErrorKind::UnexpectedEof.into());
            }
            self.pending.extend(self.decoder.feed(&buf[..n]).frames);
        }
        Ok(self.pending.pop_front().expect("non-empty"))
    }

    pub fn into_inner(self) -> S {
        self.stream
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Message;

    #[test]
    fn serves_in_memory_stream() {
        let mut input = Message::Ping.encode();
        input.extend([0x00, 0x13]);
        input.extend(Message::Status.encode());
        let mut output = Vec::new();
        let mut dev = DeviceState::new();
        let report = serve(&input[..], &mut output, &mut dev).unwrap();
        assert_eq!(report.frames, 2);
        assert_eq!(report.replies, 2);
        let mut expected = Message::Pong.encode();
        expected.extend(Message::StatusReply { busy: false, queued: 0 }.encode());
        assert_eq!(output, expected);
    }
}
