use std::collections::VecDeque;

use super::frame::{opcode, Frame};
use super::{Message, ProtocolError};
use crate::movement::{schedule_movement, MovementSpec};
use crate::rotation::{schedule_rotation, RotationSpec};
use crate::timeline::{ActuationTimeline, Pulse};

/// Effects waiting behind the one playing.
pub const QUEUE_DEPTH: usize = 4;

/// Emulated stylus firmware.
///
/// Replies are returned to the caller. The playback clock only moves through
/// [`DeviceState::tick`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeviceState {
    current: Option<ActuationTimeline>,
    clock_ms: f64,
    queue: VecDeque<ActuationTimeline>,
}

impl DeviceState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn busy(&self) -> bool {
        self.current
            .as_ref()
            .is_some_and(|tl| self.clock_ms < tl.total_duration_ms())
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    pub fn clock_ms(&self) -> f64 {
        self.clock_ms
    }

    pub fn current_timeline(&self) -> Option<&ActuationTimeline> {
        self.current.as_ref()
    }

    pub fn queued_timelines(&self) -> impl Iterator<Item = &ActuationTimeline> {
        self.queue.iter()
    }

    /// Executes one frame. On error the state is left untouched.
    pub fn step(&mut self, frame: &Frame) -> Result<Option<Frame>, ProtocolError> {
        let msg = Message::try_from(frame)?;
        let timeline = match msg {
            Message::Ping => return Ok(Some(Message::Pong.to_frame())),
            Message::Status => {
                let reply = Message::StatusReply {
                    busy: self.busy(),
                    queued: self.queued() as u8,
                };
                return Ok(Some(reply.to_frame()));
            }
            Message::Stop => {
                self.current = None;
                self.queue.clear();
                self.clock_ms = 0.0;
                return Ok(None);
            }
            Message::Pong | Message::StatusReply { .. } => {
                return Err(ProtocolError::Nak {
                    opcode: frame.opcode,
                    reason: "reply opcode sent to device".into(),
                })
            }
            Message::Vibe {
                channel,
                amplitude,
                duration_ms,
            } => {
                if amplitude == 0 || duration_ms == 0 {
                    return Err(nak(opcode::VIBE, "amplitude and duration must be nonzero"));
                }
                let pulse = Pulse::square(0.0, duration_ms as f64, amplitude as f64 / 255.0);
                ActuationTimeline::new().with_pulse(channel, pulse)
            }
            Message::Movement {
                direction,
                duration_ms,
                isoi_ms,
                amplitude,
                repetitions,
            } => {
                let mut spec = MovementSpec::new(direction, duration_ms as f64, isoi_ms as f64);
                spec.amplitude = amplitude as f64 / 255.0;
                spec.repetitions = repetitions as u32;
                schedule_movement(&spec).map_err(|e| nak(opcode::MOVEMENT, &e.to_string()))?
            }
            Message::Rotation {
                direction,
                on_ms,
                off_ms,
                shape,
                count,
                amplitude,
            } => {
                let mut spec = RotationSpec::new(direction, on_ms as f64, off_ms as f64, shape)
                    .with_count(count as u32);
                spec.amplitude = amplitude as f64 / 255.0;
                schedule_rotation(&spec).map_err(|e| nak(opcode::ROTATION, &e.to_string()))?
            }
        };
        self.enqueue(timeline);
        Ok(None)
    }

    fn enqueue(&mut self, timeline: ActuationTimeline) {
        if !self.busy() && self.queue.is_empty() {
            self.current = Some(timeline);
            self.clock_ms = 0.0;
            return;
        }
        if self.queue.len() == QUEUE_DEPTH {
            self.queue.pop_front();
        }
        self.queue.push_back(timeline);
    }

    /// Advances playback by `dt_ms`, rolling leftover time into queued effects.
    pub fn tick(&mut self, dt_ms: f64) {
        if !(dt_ms > 0.0) {
            return;
        }
        let mut left = dt_ms;
        loop {
            let Some(tl) = &self.current else { return };
            let remaining = tl.total_duration_ms() - self.clock_ms;
            if left < remaining {
                self.clock_ms += left;
                return;
            }
            left -= remaining.max(0.0);
            match self.queue.pop_front() {
                Some(next) => {
                    self.current = Some(next);
                    self.clock_ms = 0.0;
                }
                None => {
                    self.clock_ms = tl.total_duration_ms();
                    return;
                }
            }
        }
    }
}

fn nak(opcode: u8, reason: &str) -> ProtocolError {
    ProtocolError::Nak {
        opcode,
        reason: reason.to_string(),
    }
}

/// Functional form of [`DeviceState::step`].
pub fn virtual_device_step(
    state: &DeviceState,
    frame: &Frame,
) -> (DeviceState, Result<Option<Frame>, ProtocolError>) {
    let mut next = state.clone();
    let reply = next.step(frame);
    if reply.is_err() {
        next = state.clone();
    }
    (next, reply)
}
