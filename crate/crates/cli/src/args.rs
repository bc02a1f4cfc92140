use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stylus_haptics::motor::OffMode;
use stylus_haptics::movement::MovementDirection;
use stylus_haptics::rotation::RotationDirection;
use stylus_haptics::timeline::{Channel, WaveformShape};

fn parse_with<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn parse_off_mode(s: &str) -> Result<OffMode, String> {
    match s {
        "brake" => Ok(OffMode::Brake),
        "coast" => Ok(OffMode::Coast),
        _ => Err(format!("unknown off mode `{s}` (brake|coast)")),
    }
}

fn parse_vibe_channel(s: &str) -> Result<Channel, String> {
    match parse_with::<Channel>(s)? {
        Channel::Motor => Err("expected a vibration channel (tip|end)".into()),
        ch => Ok(ch),
    }
}

#[derive(Debug, Parser)]
#[command(name = "hapti", version, about = "Stylus haptic effects, actuator simulation and perception studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render an effect as a timeline CSV.
    #[command(subcommand)]
    Effect(EffectCmd),
    /// Simulate an actuator driven by an effect.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Encode, decode or serve protocol frames.
    #[command(subcommand)]
    Proto(ProtoCmd),
    /// Run a simulated study.
    #[command(subcommand)]
    Exp(ExpCmd),
}

#[derive(Debug, Args)]
pub struct MovementArgs {
    /// Stimulus duration, ms.
    #[arg(long)]
    pub d: f64,
    /// Inter-stimulus onset interval, ms.
    #[arg(long)]
    pub isoi: f64,
    #[arg(long, value_parser = parse_with::<MovementDirection>)]
    pub dir: MovementDirection,
    #[arg(long, default_value_t = 1.0)]
    pub amp: f64,
    #[arg(long, default_value_t = 1)]
    pub reps: u32,
    /// Gap between repetitions, ms.
    #[arg(long, default_value_t = stylus_haptics::movement::DEFAULT_INTER_REP_GAP_MS)]
    pub gap: f64,
}

#[derive(Debug, Args)]
pub struct RotationArgs {
    /// On-time, ms.
    #[arg(long)]
    pub on: f64,
    /// Off-time, ms.
    #[arg(long)]
    pub off: f64,
    #[arg(long, value_parser = parse_with::<WaveformShape>, default_value = "square")]
    pub shape: WaveformShape,
    #[arg(long, value_parser = parse_with::<RotationDirection>)]
    pub dir: RotationDirection,
    #[arg(long, default_value_t = stylus_haptics::rotation::DEFAULT_PULSE_COUNT)]
    pub count: u32,
    #[arg(long, default_value_t = 1.0)]
    pub amp: f64,
}

#[derive(Debug, Subcommand)]
pub enum EffectCmd {
    /// Two-motor apparent movement along the stylus.
    Movement {
        #[command(flatten)]
        effect: MovementArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Torque pulse train about the long axis.
    Rotation {
        #[command(flatten)]
        effect: RotationArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SimOpts {
    /// key=value parameter file.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Integration step, microseconds.
    #[arg(long, default_value_t = 10.0)]
    pub dt_us: f64,
    /// Simulated time after the effect ends, ms. Defaults to a settle time.
    #[arg(long)]
    pub tail_ms: Option<f64>,
    /// Overrides the parameter file.
    #[arg(long, value_parser = parse_off_mode)]
    pub off_mode: Option<OffMode>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SimCmd {
    /// Casing torque of the DC motor under a rotation effect.
    Torque {
        #[command(flatten)]
        effect: RotationArgs,
        #[command(flatten)]
        opts: SimOpts,
    },
    /// Vibration force of one ERM under a movement effect.
    Erm {
        #[command(flatten)]
        effect: MovementArgs,
        #[arg(long, value_parser = parse_vibe_channel, default_value = "tip")]
        channel: Channel,
        #[command(flatten)]
        opts: SimOpts,
    },
}

#[derive(Debug, Subcommand)]
pub enum ProtoCmd {
    /// Print the frame for a command as hex.
    #[command(subcommand)]
    Encode(EncodeCmd),
    /// Decode a hex dump into frames.
    Decode {
        /// Hex bytes; read from stdin when absent.
        #[arg(long)]
        hex: Option<String>,
    },
    /// Run the virtual device over stdin/stdout, or one TCP connection.
    Serve {
        /// Address to accept a single connection on, e.g. 127.0.0.1:7000.
        #[arg(long)]
        listen: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum EncodeCmd {
    Ping,
    Stop,
    Status,
    Vibe {
        #[arg(long, value_parser = parse_vibe_channel)]
        channel: Channel,
        #[arg(long, default_value_t = 255)]
        amp: u8,
        #[arg(long)]
        dur: u16,
    },
    Movement {
        #[arg(long)]
        d: u16,
        #[arg(long)]
        isoi: u16,
        #[arg(long, value_parser = parse_with::<MovementDirection>)]
        dir: MovementDirection,
        #[arg(long, default_value_t = 255)]
        amp: u8,
        #[arg(long, default_value_t = 1)]
        reps: u8,
    },
    Rotation {
        #[arg(long)]
        on: u16,
        #[arg(long)]
        off: u16,
        #[arg(long, value_parser = parse_with::<WaveformShape>, default_value = "square")]
        shape: WaveformShape,
        #[arg(long, value_parser = parse_with::<RotationDirection>)]
        dir: RotationDirection,
        #[arg(long, default_value_t = 3)]
        count: u8,
        #[arg(long, default_value_t = 255)]
        amp: u8,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExpCmd {
    /// Run experiment 1, 2, 3 or the tops game.
    Run(ExpRun),
}

#[derive(Debug, Args)]
pub struct ExpRun {
    /// 1, 2, 3 or tops.
    pub experiment: String,
    /// Game condition (NVH, OH, OV, VH, MVH); all conditions when absent.
    #[arg(long)]
    pub condition: Option<String>,
    #[arg(long)]
    pub participants: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the result CSVs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value harness config; falls back to $HAPTI_CONFIG.
    #[arg(long)]
    pub config: Option<PathBuf>,
}
