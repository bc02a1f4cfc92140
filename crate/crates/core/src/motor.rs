//! Brushed DC motor and ERM actuator simulation.
//!
//! The armature is modelled by the usual two-state linear ODE
//!
//! ```text
//! L di/dt = v(t) - R i - k_e w
//! J dw/dt = k_t i - b w
//! ```
//!
//! integrated with fixed-step classical RK4. The torque on the casing is the
//! reaction to the rotor's angular acceleration, `-J dw/dt`. Each sample
//! reports the mean casing torque over the step that follows it, so summing
//! `tau * dt` reproduces `-J (w_end - w_start)` to rounding.

use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::config::{ConfigError, KeyValues};
use crate::timeline::{ActuationTimeline, Channel, GRID_EPS};

/// Ratio between the shortest time constant and the largest accepted step.
const MIN_STEPS_PER_TIME_CONSTANT: f64 = 5.0;

/// Time constants of tail appended after the last pulse by default.
pub const DEFAULT_TAIL_TIME_CONSTANTS: f64 = 16.0;

/// Peaks below this are treated as absent when forming the asymmetry ratio.
const PEAK_FLOOR_NM: f64 = 1e-12;

pub const DEFAULT_DT_S: f64 = 10e-6;

#[derive(Debug, Error)]
pub enum MotorError {
    #[error("step size {dt_s} s outside (0, {max_s}] s")]
    StepSize { dt_s: f64, max_s: f64 },
    #[error("state diverged at t = {t_s} s")]
    Divergence { t_s: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// What the driver does with the winding outside a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffMode {
    /// Winding shorted through the driver (dynamic braking).
    #[default]
    Brake,
    /// Winding open; no current, rotor decays under friction.
    Coast,
}

impl FromStr for OffMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "brake" => Ok(OffMode::Brake),
            "coast" => Ok(OffMode::Coast),
            _ => Err(format!("unknown off mode `{s}`")),
        }
    }
}

impl fmt::Display for OffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OffMode::Brake => "brake",
            OffMode::Coast => "coast",
        })
    }
}

/// Electromechanical constants, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcMotorParams {
    pub resistance: f64,
    pub inductance: f64,
    pub torque_constant: f64,
    pub back_emf_constant: f64,
    pub rotor_inertia: f64,
    pub viscous_friction: f64,
    /// Terminal voltage at drive level 1.0.
    pub supply_voltage: f64,
    pub off_mode: OffMode,
}

impl Default for DcMotorParams {
    /// A 13 mm coreless micromotor class.
    fn default() -> Self {
        DcMotorParams {
            resistance: 10.0,
            inductance: 0.5e-3,
            torque_constant: 0.005,
            back_emf_constant: 0.005,
            rotor_inertia: 1e-7,
            viscous_friction: 1e-7,
            supply_voltage: 3.0,
            off_mode: OffMode::Brake,
        }
    }
}

const MOTOR_KEYS: [&str; 8] = ["R", "L", "k_t", "k_e", "J", "b", "v_supply", "off_mode"];

impl DcMotorParams {
    pub fn validate(&self) -> Result<(), MotorError> {
        let positive = [
            ("R", self.resistance),
            ("L", self.inductance),
            ("k_t", self.torque_constant),
            ("k_e", self.back_emf_constant),
            ("J", self.rotor_inertia),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(MotorError::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.viscous_friction.is_finite() && self.viscous_friction >= 0.0) {
            return Err(MotorError::InvalidParams("b must be >= 0".into()));
        }
        if !self.supply_voltage.is_finite() {
            return Err(MotorError::InvalidParams("v_supply must be finite".into()));
        }
        Ok(())
    }

    /// Terminal angular velocity under full drive, rad/s.
    pub fn omega_max(&self) -> f64 {
        self.torque_constant * self.supply_voltage
            / (self.resistance * self.viscous_friction + self.torque_constant * self.back_emf_constant)
    }

    pub fn electrical_time_constant(&self) -> f64 {
        self.inductance / self.resistance
    }

    /// Speed time constant with the winding closed, `J R / (R b + k_t k_e)`.
    pub fn mechanical_time_constant(&self) -> f64 {
        self.rotor_inertia * self.resistance
            / (self.resistance * self.viscous_friction + self.torque_constant * self.back_emf_constant)
    }

    /// Decay constant of the rotor after the last pulse.
    pub fn settle_time_constant(&self) -> f64 {
        match self.off_mode {
            OffMode::Coast if self.viscous_friction > 0.0 => self.rotor_inertia / self.viscous_friction,
            _ => self.mechanical_time_constant(),
        }
    }

    /// Largest step accepted by the integrator.
    pub fn max_step_s(&self) -> f64 {
        let friction = self.viscous_friction.max(f64::MIN_POSITIVE);
        let fastest = self.electrical_time_constant().min(self.rotor_inertia / friction);
        fastest / MIN_STEPS_PER_TIME_CONSTANT
    }

    /// Tail long enough for the rotor to come back to rest.
    pub fn default_tail_ms(&self) -> f64 {
        DEFAULT_TAIL_TIME_CONSTANTS * self.settle_time_constant() * 1e3
    }

    /// Overrides defaults with the keys present in `kv`.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, MotorError> {
        kv.reject_unknown(&MOTOR_KEYS)?;
        Self::apply(Self::default(), kv)
    }

    fn apply(mut p: Self, kv: &KeyValues) -> Result<Self, MotorError> {
        let fields: [(&str, &mut f64); 7] = [
            ("R", &mut p.resistance),
            ("L", &mut p.inductance),
            ("k_t", &mut p.torque_constant),
            ("k_e", &mut p.back_emf_constant),
            ("J", &mut p.rotor_inertia),
            ("b", &mut p.viscous_friction),
            ("v_supply", &mut p.supply_voltage),
        ];
        for (key, slot) in fields {
            if let Some(v) = kv.parsed::<f64>(key)? {
                *slot = v;
            }
        }
        if let Some(v) = kv.parsed::<OffMode>("off_mode")? {
            p.off_mode = v;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MotorError> {
        Self::from_key_values(&KeyValues::load(path)?)
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "R={}\nL={}\nk_t={}\nk_e={}\nJ={}\nb={}\nv_supply={}\noff_mode={}\n",
            self.resistance,
            self.inductance,
            self.torque_constant,
            self.back_emf_constant,
            self.rotor_inertia,
            self.viscous_friction,
            self.supply_voltage,
            self.off_mode
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorState {
    pub t_s: f64,
    pub omega: f64,
    pub current: f64,
    /// Casing torque, N·m.
    pub tau_casing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorqueProfile {
    pub dt_s: f64,
    pub samples: Vec<MotorState>,
}

impl TorqueProfile {
    pub fn last(&self) -> Option<&MotorState> {
        self.samples.last()
    }

    /// `sum(tau * dt)`, N·m·s.
    pub fn net_impulse(&self) -> f64 {
        self.samples.iter().map(|s| s.tau_casing).sum::<f64>() * self.dt_s
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t_s,omega_rad_s,current_a,tau_casing_nm")?;
        for s in &self.samples {
            writeln!(out, "{:.9},{:.9e},{:.9e},{:.9e}", s.t_s, s.omega, s.current, s.tau_casing)?;
        }
        Ok(())
    }
}

/// Eccentric rotating mass vibrator: a small DC motor with an off-centre mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErmParams {
    pub motor: DcMotorParams,
    /// kg
    pub eccentric_mass: f64,
    /// m
    pub eccentric_radius: f64,
}

impl Default for ErmParams {
    /// Roughly a 10 mm coin vibrator: ~11k rpm at 3 V.
    fn default() -> Self {
        ErmParams {
            motor: DcMotorParams {
                resistance: 30.0,
                inductance: 1.5e-3,
                torque_constant: 0.0025,
                back_emf_constant: 0.0025,
                rotor_inertia: 2e-9,
                viscous_friction: 1e-8,
                supply_voltage: 3.0,
                off_mode: OffMode::Brake,
            },
            eccentric_mass: 2e-4,
            eccentric_radius: 1e-3,
        }
    }
}

impl ErmParams {
    pub fn validate(&self) -> Result<(), MotorError> {
        self.motor.validate()?;
        if !(self.eccentric_mass > 0.0 && self.eccentric_radius > 0.0) {
            return Err(MotorError::InvalidParams("eccentric mass and radius must be > 0".into()));
        }
        Ok(())
    }

    /// Centripetal force magnitude at `omega`, N.
    pub fn force_at(&self, omega: f64) -> f64 {
        self.eccentric_mass * self.eccentric_radius * omega * omega
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self, MotorError> {
        let mut known = MOTOR_KEYS.to_vec();
        known.extend(["eccentric_mass", "eccentric_radius"]);
        kv.reject_unknown(&known)?;
        let base = ErmParams::default();
        let mut p = ErmParams {
            motor: DcMotorParams::apply(base.motor, kv)?,
            ..base
        };
        if let Some(m) = kv.parsed::<f64>("eccentric_mass")? {
            p.eccentric_mass = m;
        }
        if let Some(r) = kv.parsed::<f64>("eccentric_radius")? {
            p.eccentric_radius = r;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MotorError> {
        Self::from_key_values(&KeyValues::load(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    pub t_s: f64,
    pub omega: f64,
    pub force_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceProfile {
    pub dt_s: f64,
    pub samples: Vec<ForceSample>,
}

impl ForceProfile {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t_s,omega_rad_s,force_n")?;
        for s in &self.samples {
            writeln!(out, "{:.9},{:.9e},{:.9e}", s.t_s, s.omega, s.force_n)?;
        }
        Ok(())
    }
}

struct Plant<'a> {
    p: &'a DcMotorParams,
    timeline: &'a ActuationTimeline,
    channel: Channel,
    /// Past this instant the channel is idle and lookups are skipped.
    idle_from_ms: f64,
    // reciprocals hoisted out of the inner loop
    inv_l: f64,
    inv_j: f64,
}

/// Seconds to milliseconds, rounded to the nanosecond so grid edges land exactly.
fn to_ms(t_s: f64) -> f64 {
    (t_s * 1e9).round() / 1e6
}

impl Plant<'_> {
    /// Whether the winding is open at `t_s`.
    fn open_circuit(&self, t_s: f64) -> bool {
        self.p.off_mode == OffMode::Coast && self.drive(t_s).is_none()
    }

    /// Drive level, `None` between pulses.
    fn drive(&self, t_s: f64) -> Option<f64> {
        // idle edges and step points are far apart, so the unrounded compare is exact enough
        if t_s * 1e3 >= self.idle_from_ms {
            return None;
        }
        let t_ms = to_ms(t_s);
        self.timeline
            .active_pulse(self.channel, t_ms)
            .map(|_| self.timeline.sample(self.channel, t_ms))
    }

    /// `(di/dt, dw/dt)` at `t_s`.
    fn derivative(&self, t_s: f64, current: f64, omega: f64) -> (f64, f64) {
        let p = self.p;
        let level = match self.drive(t_s) {
            None if p.off_mode == OffMode::Coast => return (0.0, -p.viscous_friction * omega * self.inv_j),
            None => 0.0,
            Some(level) => level,
        };
        let v = p.supply_voltage * level;
        let di = (v - p.resistance * current - p.back_emf_constant * omega) * self.inv_l;
        let dw = (p.torque_constant * current - p.viscous_friction * omega) * self.inv_j;
        (di, dw)
    }

    fn rk4(&self, t: f64, h: f64, i: f64, w: f64) -> (f64, f64) {
        let (a1, b1) = self.derivative(t, i, w);
        let (a2, b2) = self.derivative(t + 0.5 * h, i + 0.5 * h * a1, w + 0.5 * h * b1);
        let (a3, b3) = self.derivative(t + 0.5 * h, i + 0.5 * h * a2, w + 0.5 * h * b2);
        let (a4, b4) = self.derivative(t + h, i + h * a3, w + h * b3);
        (
            i + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
            w + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
        )
    }
}

fn step_count(duration_s: f64, dt_s: f64) -> usize {
    let ratio = duration_s / dt_s;
    (ratio - 1e-9 * ratio.max(1.0)).ceil().max(0.0) as usize
}

/// Integrates the motor driven by `channel` of `timeline`, starting from rest.
pub fn simulate_channel(
    params: &DcMotorParams,
    timeline: &ActuationTimeline,
    channel: Channel,
    dt_s: f64,
    tail_ms: f64,
) -> Result<TorqueProfile, MotorError> {
    params.validate()?;
    let max_s = params.max_step_s();
    if !(dt_s > 0.0 && dt_s <= max_s * (1.0 + 1e-9)) {
        return Err(MotorError::StepSize { dt_s, max_s });
    }
    if !(tail_ms.is_finite() && tail_ms >= 0.0) {
        return Err(MotorError::InvalidArgument(format!("tail must be >= 0 ms, got {tail_ms}")));
    }
    if let Err(v) = timeline.validate() {
        let list: Vec<String> = v.iter().map(ToString::to_string).collect();
        return Err(MotorError::InvalidTimeline(list.join("; ")));
    }

    let plant = Plant {
        p: params,
        timeline,
        channel,
        idle_from_ms: timeline
            .pulses(channel)
            .iter()
            .map(|p| p.end_ms() - GRID_EPS)
            .fold(f64::NEG_INFINITY, f64::max),
        inv_l: 1.0 / params.inductance,
        inv_j: 1.0 / params.rotor_inertia,
    };
    let steps = step_count((timeline.total_duration_ms() + tail_ms) * 1e-3, dt_s);
    let j = params.rotor_inertia;
    let mut samples = Vec::with_capacity(steps + 1);
    let (mut i, mut w) = (0.0_f64, 0.0_f64);
    for k in 0..steps {
        let t = k as f64 * dt_s;
        if plant.open_circuit(t) {
            i = 0.0;
        }
        let (ni, nw) = plant.rk4(t, dt_s, i, w);
        if !(ni.is_finite() && nw.is_finite()) {
            return Err(MotorError::Divergence { t_s: t + dt_s });
        }
        samples.push(MotorState {
            t_s: t,
            omega: w,
            current: i,
            tau_casing: -j * (nw - w) / dt_s,
        });
        i = ni;
        w = nw;
    }
    let t_end = steps as f64 * dt_s;
    if plant.open_circuit(t_end) {
        i = 0.0;
    }
    let (_, dw) = plant.derivative(t_end, i, w);
    samples.push(MotorState {
        t_s: t_end,
        omega: w,
        current: i,
        tau_casing: -j * dw,
    });
    Ok(TorqueProfile { dt_s, samples })
}

/// Casing torque profile of the stylus DC motor.
pub fn simulate_motor(
    params: &DcMotorParams,
    timeline: &ActuationTimeline,
    dt_s: f64,
    tail_ms: f64,
) -> Result<TorqueProfile, MotorError> {
    simulate_channel(params, timeline, Channel::Motor, dt_s, tail_ms)
}

/// Vibration force envelope `m r w^2` of the ERM on a vibration channel.
pub fn simulate_erm(
    params: &ErmParams,
    timeline: &ActuationTimeline,
    channel: Channel,
    dt_s: f64,
    tail_ms: f64,
) -> Result<ForceProfile, MotorError> {
    if channel == Channel::Motor {
        return Err(MotorError::InvalidArgument("ERM runs on a vibration channel".into()));
    }
    params.validate()?;
    let profile = simulate_channel(&params.motor, timeline, channel, dt_s, tail_ms)?;
    Ok(ForceProfile {
        dt_s,
        samples: profile
            .samples
            .iter()
            .map(|s| ForceSample {
                t_s: s.t_s,
                omega: s.omega,
                force_n: params.force_at(s.omega),
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetryMetrics {
    /// Largest casing torque in the intended direction, N·m.
    pub peak_intended: f64,
    /// Largest casing torque against it, N·m.
    pub peak_opposite: f64,
    /// `peak_intended / peak_opposite`; infinite without an opposite kick, 1 for a flat profile.
    pub ratio: f64,
    pub net_impulse: f64,
}

pub fn asymmetry_metrics(profile: &TorqueProfile, intended_sign: f64) -> Result<AsymmetryMetrics, MotorError> {
    if profile.samples.is_empty() {
        return Err(MotorError::InvalidArgument("empty profile".into()));
    }
    if intended_sign != 1.0 && intended_sign != -1.0 {
        return Err(MotorError::InvalidArgument("intended sign must be +1 or -1".into()));
    }
    let (mut fwd, mut rev) = (0.0_f64, 0.0_f64);
    for s in &profile.samples {
        let v = intended_sign * s.tau_casing;
        fwd = fwd.max(v);
        rev = rev.max(-v);
    }
    let ratio = if fwd < PEAK_FLOOR_NM && rev < PEAK_FLOOR_NM {
        1.0
    } else if rev < PEAK_FLOOR_NM {
        f64::INFINITY
    } else {
        fwd / rev
    };
    Ok(AsymmetryMetrics {
        peak_intended: fwd,
        peak_opposite: rev,
        ratio,
        net_impulse: profile.net_impulse(),
    })
}
