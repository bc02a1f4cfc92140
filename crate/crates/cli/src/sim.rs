use std::io::Write;

use stylus_haptics::motor::{
    asymmetry_metrics, simulate_erm, simulate_motor, DcMotorParams, ErmParams, MotorError,
};

use crate::args::{SimCmd, SimOpts};
use crate::effect::{movement_timeline, rotation_timeline};
use crate::{output, usage, CliError};

fn motor_error(e: MotorError) -> CliError {
    match e {
        MotorError::Divergence { .. } => CliError::Numerical(e.to_string()),
        other => usage(other),
    }
}

fn dt_s(opts: &SimOpts) -> Result<f64, CliError> {
    if !(opts.dt_us > 0.0 && opts.dt_us.is_finite()) {
        return Err(usage(format!("--dt-us must be > 0, got {}", opts.dt_us)));
    }
    Ok(opts.dt_us * 1e-6)
}

pub fn run(cmd: SimCmd) -> Result<(), CliError> {
    match cmd {
        SimCmd::Torque { effect, opts } => {
            let dt = dt_s(&opts)?;
            let mut params = match &opts.params {
                Some(p) => DcMotorParams::load(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
                None => DcMotorParams::default(),
            };
            if let Some(mode) = opts.off_mode {
                params.off_mode = mode;
            }
            let tl = rotation_timeline(&effect)?;
            let tail = opts.tail_ms.unwrap_or_else(|| params.default_tail_ms());
            let profile = simulate_motor(&params, &tl, dt, tail).map_err(motor_error)?;
            let m = asymmetry_metrics(&profile, effect.dir.casing_sign()).map_err(motor_error)?;
            let summary = format!(
                "# peak_fwd={:.6e} peak_rev={:.6e} A={:.6} net={:.3e}",
                m.peak_intended, m.peak_opposite, m.ratio, m.net_impulse
            );
            write_with_summary(opts.out.as_deref(), |w| profile.write_csv(w), &summary)
        }
        SimCmd::Erm { effect, channel, opts } => {
            let dt = dt_s(&opts)?;
            let mut params = match &opts.params {
                Some(p) => ErmParams::load(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
                None => ErmParams::default(),
            };
            if let Some(mode) = opts.off_mode {
                params.motor.off_mode = mode;
            }
            let tl = movement_timeline(&effect)?;
            let tail = opts.tail_ms.unwrap_or_else(|| params.motor.default_tail_ms());
            let profile = simulate_erm(&params, &tl, channel, dt, tail).map_err(motor_error)?;
            let peak = profile.samples.iter().map(|s| s.force_n).fold(0.0, f64::max);
            let summary = format!("# channel={channel} peak_force={peak:.6e}");
            write_with_summary(opts.out.as_deref(), |w| profile.write_csv(w), &summary)
        }
    }
}

/// The summary line trails the CSV on stdout, or goes alone to stdout when
/// the CSV is written to a file.
fn write_with_summary(
    out: Option<&std::path::Path>,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    summary: &str,
) -> Result<(), CliError> {
    let mut w = output(out)?;
    body(&mut w)?;
    if out.is_none() {
        writeln!(w, "{summary}")?;
    }
    w.flush()?;
    if out.is_some() {
        println!("{summary}");
    }
    Ok(())
}
