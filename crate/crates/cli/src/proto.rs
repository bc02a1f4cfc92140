use std::io::{self, Read, Write};
use std::net::TcpListener;

use stylus_haptics::protocol::{
    decode_all, parse_hex, serve, to_hex, DeviceState, Diagnostic, Frame, Message,
};

use crate::args::{EncodeCmd, ProtoCmd};
use crate::{usage, CliError};

fn message(cmd: EncodeCmd) -> Message {
    match cmd {
        EncodeCmd::Ping => Message::Ping,
        EncodeCmd::Stop => Message::Stop,
        EncodeCmd::Status => Message::Status,
        EncodeCmd::Vibe { channel, amp, dur } => Message::Vibe {
            channel,
            amplitude: amp,
            duration_ms: dur,
        },
        EncodeCmd::Movement { d, isoi, dir, amp, reps } => Message::Movement {
            direction: dir,
            duration_ms: d,
            isoi_ms: isoi,
            amplitude: amp,
            repetitions: reps,
        },
        EncodeCmd::Rotation {
            on,
            off,
            shape,
            dir,
            count,
            amp,
        } => Message::Rotation {
            direction: dir,
            on_ms: on,
            off_ms: off,
            shape,
            count,
            amplitude: amp,
        },
    }
}

fn describe(frame: &Frame) -> String {
    match Message::try_from(frame) {
        Ok(m) => m.to_string(),
        Err(e) => format!("FRAME opcode=0x{:02X} payload={} ({e})", frame.opcode, to_hex(&frame.payload)),
    }
}

fn describe_diag(d: &Diagnostic) -> String {
    match d {
        Diagnostic::Resync => "# resync".into(),
        Diagnostic::IllegalLength(len) => format!("# illegal length 0x{len:02X}"),
        Diagnostic::IllegalOpcode { opcode, len } => format!("# illegal opcode 0x{opcode:02X} for length {len}"),
        Diagnostic::CrcMismatch { expected, found } => {
            format!("# crc mismatch expected=0x{expected:02X} found=0x{found:02X}")
        }
    }
}

pub fn run(cmd: ProtoCmd) -> Result<(), CliError> {
    match cmd {
        ProtoCmd::Encode(cmd) => {
            println!("{}", to_hex(&message(cmd).encode()));
            Ok(())
        }
        ProtoCmd::Decode { hex } => {
            let text = match hex {
                Some(h) => h,
                None => {
                    let mut s = String::new();
                    io::stdin().read_to_string(&mut s)?;
                    s
                }
            };
            let bytes = parse_hex(&text).map_err(usage)?;
            // diagnostics are reported in stream order relative to each other,
            // frames first
            let (out, stats) = decode_all(&bytes);
            let mut w = io::stdout().lock();
            for f in &out.frames {
                writeln!(w, "{}", describe(f))?;
            }
            for d in &out.diagnostics {
                writeln!(w, "{}", describe_diag(d))?;
            }
            writeln!(
                w,
                "# frames={} resyncs={} crc_failures={} header_failures={} skipped_bytes={}",
                stats.frames, stats.resyncs, stats.crc_failures, stats.header_failures, stats.skipped_bytes
            )?;
            Ok(())
        }
        ProtoCmd::Serve { listen } => {
            let mut device = DeviceState::new();
            let report = match listen {
                Some(addr) => {
                    let listener = TcpListener::bind(&addr).map_err(|e| usage(format!("{addr}: {e}")))?;
                    eprintln!("listening on {}", listener.local_addr()?);
                    let (stream, _) = listener.accept()?;
                    serve(stream.try_clone()?, stream, &mut device)?
                }
                None => serve(io::stdin().lock(), io::stdout().lock(), &mut device)?,
            };
            eprintln!(
                "# frames={} replies={} naks={} diagnostics={}",
                report.frames,
                report.replies,
                report.naks,
                report.diagnostics.len()
            );
            Ok(())
        }
    }
}
