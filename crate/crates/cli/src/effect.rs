use stylus_haptics::movement::{schedule_movement, MovementSpec};
use stylus_haptics::rotation::{schedule_rotation, RotationSpec};
use stylus_haptics::timeline::ActuationTimeline;

use crate::args::{EffectCmd, MovementArgs, RotationArgs};
use crate::{output, usage, CliError};

pub fn movement_timeline(a: &MovementArgs) -> Result<ActuationTimeline, CliError> {
    let mut spec = MovementSpec::new(a.dir, a.d, a.isoi);
    spec.amplitude = a.amp;
    spec.repetitions = a.reps;
    spec.inter_rep_gap_ms = a.gap;
    schedule_movement(&spec).map_err(usage)
}

pub fn rotation_spec(a: &RotationArgs) -> RotationSpec {
    let mut spec = RotationSpec::new(a.dir, a.on, a.off, a.shape).with_count(a.count);
    spec.amplitude = a.amp;
    spec
}

pub fn rotation_timeline(a: &RotationArgs) -> Result<ActuationTimeline, CliError> {
    schedule_rotation(&rotation_spec(a)).map_err(usage)
}

fn checked(tl: ActuationTimeline) -> Result<ActuationTimeline, CliError> {
    tl.validate().map_err(|v| usage(format!("invalid timeline: {}", v[0])))?;
    Ok(tl)
}

pub fn run(cmd: EffectCmd) -> Result<(), CliError> {
    let (tl, out) = match cmd {
        EffectCmd::Movement { effect, out } => (movement_timeline(&effect)?, out),
        EffectCmd::Rotation { effect, out } => (rotation_timeline(&effect)?, out),
    };
    let tl = checked(tl)?;
    let mut w = output(out.as_deref())?;
    tl.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}
