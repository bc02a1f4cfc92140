//! End-to-end acceptance checks. Each test prints one `criterion N ... PASS|FAIL`
//! line straight to stdout so the verdicts show up even when output is captured.

use std::io::Write;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stylus_haptics::harness::{
    compare_conditions, exp1_pooled, rm_anova_oneway, run_experiment1, run_experiment2, run_experiment3,
    run_spinning_tops, Condition, ExperimentResult, HarnessConfig, EXP2_GRID_MS, POOLED,
};
use stylus_haptics::motor::{asymmetry_metrics, simulate_motor, DcMotorParams, OffMode};
use stylus_haptics::movement::{dominant, schedule_movement, MovementDirection, MovementSpec, PerceptLabel, GRID_MS};
use stylus_haptics::protocol::{
    decode_all, encode_frame, opcode, payload_len, Decoder, DeviceState, Frame, Message,
};
use stylus_haptics::rotation::{schedule_rotation, RotationDirection, RotationSpec};
use stylus_haptics::timeline::{ActuationTimeline, Channel, Pulse, WaveformShape};

/// Criteria run one at a time so the timed ones do not share the CPU.
fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n:>2} {name}: {verdict} ({detail})");
    let _ = out.flush();
    assert!(ok, "criterion {n} {name} failed: {detail}");
}

fn metrics(params: &DcMotorParams, on: f64, off: f64, shape: WaveformShape, dt_s: f64) -> (f64, f64, f64) {
    let spec = RotationSpec::new(RotationDirection::Cw, on, off, shape);
    let tl = schedule_rotation(&spec).unwrap();
    let profile = simulate_motor(params, &tl, dt_s, params.default_tail_ms()).unwrap();
    let m = asymmetry_metrics(&profile, RotationDirection::Cw.casing_sign()).unwrap();
    (m.peak_intended, m.peak_opposite, m.ratio)
}

#[test]
fn criterion_01_conservation() {
    let _serial = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let started = Instant::now();
    let mut worst = 0.0_f64;
    for i in 0..100 {
        let on = rng.random_range(25..=575) as f64;
        let off = rng.random_range(0..=575) as f64;
        let shape = WaveformShape::ALL[i % 3];
        let dir = RotationDirection::ALL[rng.random_range(0..2)];
        let params = DcMotorParams {
            off_mode: if i % 2 == 0 { OffMode::Brake } else { OffMode::Coast },
            ..DcMotorParams::default()
        };
        let tl = schedule_rotation(&RotationSpec::new(dir, on, off, shape)).unwrap();
        let profile = simulate_motor(&params, &tl, 10e-6, params.default_tail_ms()).unwrap();
        worst = worst.max(profile.net_impulse().abs());
    }
    let elapsed = started.elapsed();
    report(
        1,
        "conservation",
        worst < 1e-9 && elapsed < Duration::from_secs(10),
        &format!("max |net| = {worst:.2e} N m s, {:.2} s", elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_02_steady_state() {
    let _serial = serial();
    let params = DcMotorParams::default();
    let tau = params.mechanical_time_constant();
    // rounded up onto the 0.1 ms grid
    let hold_ms = (20.0 * tau * 1e4).ceil() / 10.0;
    // drive past the checkpoint so the sample there is still powered
    let tl = ActuationTimeline::new().with_pulse(Channel::Motor, Pulse::square(0.0, hold_ms + 10.0, 1.0));
    let profile = simulate_motor(&params, &tl, 10e-6, 0.0).unwrap();
    let at = profile
        .samples
        .iter()
        .find(|s| s.t_s >= hold_ms * 1e-3)
        .expect("profile covers the hold");
    let w_max = params.torque_constant * params.supply_voltage
        / (params.resistance * params.viscous_friction + params.torque_constant * params.back_emf_constant);
    let speed_err = (at.omega - w_max).abs() / w_max;
    report(
        2,
        "steady state",
        speed_err < 0.005 && at.tau_casing.abs() < 1e-6,
        &format!("|dw|/w_max = {speed_err:.2e}, |tau| = {:.2e} N m", at.tau_casing.abs()),
    );
}

#[test]
fn criterion_03_convergence() {
    let _serial = serial();
    let params = DcMotorParams::default();
    let (f10, r10, _) = metrics(&params, 200.0, 200.0, WaveformShape::Square, 10e-6);
    let (f5, r5, _) = metrics(&params, 200.0, 200.0, WaveformShape::Square, 5e-6);
    let df = ((f10 - f5) / f5).abs();
    let dr = ((r10 - r5) / r5).abs();
    report(
        3,
        "convergence",
        df < 1e-3 && dr < 1e-3,
        &format!("peak_intended {df:.2e}, peak_opposite {dr:.2e} relative"),
    );
}

#[test]
fn criterion_04_waveform_ordering() {
    let _serial = serial();
    let params = DcMotorParams::default();
    let a = |shape| metrics(&params, 200.0, 200.0, shape, 1e-6).2;
    let (sq, inc, dec) = (
        a(WaveformShape::Square),
        a(WaveformShape::IncreasingRamp),
        a(WaveformShape::DecreasingRamp),
    );
    report(
        4,
        "waveform ordering",
        dec > sq && sq > inc,
        &format!("A dec {dec:.4} > square {sq:.4} > inc {inc:.4}"),
    );
}

fn exp3_row(r: &ExperimentResult, shape: &str) -> f64 {
    r.summary_row(&format!("shape={shape} on_ms=200 off_ms=200 direction={POOLED}"))
        .expect("(200,200) summary row")
        .mean
}

#[test]
fn criterion_05_experiment3() {
    let _serial = serial();
    let mut ok = true;
    let mut detail = Vec::new();
    for seed in [0, 7] {
        let cfg = HarnessConfig {
            seed,
            participants: Some(10),
            ..HarnessConfig::default()
        };
        let started = Instant::now();
        let r = run_experiment3(&cfg).unwrap();
        let elapsed = started.elapsed();
        let got = [exp3_row(&r, "square"), exp3_row(&r, "inc"), exp3_row(&r, "dec")];
        for (g, want) in got.iter().zip([90.0, 78.0, 95.5]) {
            ok &= (g - want).abs() <= 3.0;
        }
        ok &= elapsed < Duration::from_secs(5);
        detail.push(format!(
            "seed {seed}: {:.1}/{:.1}/{:.1} in {:.3} s",
            got[0],
            got[1],
            got[2],
            elapsed.as_secs_f64()
        ));
    }
    report(5, "experiment 3 reproduction", ok, &detail.join("; "));
}

#[test]
fn criterion_06_experiment1_regions() {
    let _serial = serial();
    let r = run_experiment1(&HarnessConfig::default()).unwrap();
    let label = |d, isoi| dominant(&exp1_pooled(&r, d, isoi).map(|v| v / 100.0));
    let mut ok = label(50.0, 50.0) == PerceptLabel::SingleStationary && label(50.0, 400.0) == PerceptLabel::Discrete;
    for d in GRID_MS.into_iter().filter(|&d| d >= 100.0) {
        for isoi in [50.0, 100.0, 200.0] {
            ok &= label(d, isoi) == PerceptLabel::Continuous;
        }
    }
    let mut worst = 0.0_f64;
    for d in GRID_MS {
        for isoi in GRID_MS {
            for l in PerceptLabel::ALL {
                let (d_key, i_key) = (format!("{d}"), format!("{isoi}"));
                let mean = |dir: MovementDirection| r.cell_mean(&[&d_key, &i_key, dir.name(), l.name()]).unwrap();
                worst = worst.max((mean(MovementDirection::TipToEnd) - mean(MovementDirection::EndToTip)).abs());
            }
        }
    }
    ok &= worst < 3.0;
    report(
        6,
        "experiment 1 regions",
        ok,
        &format!("labels as expected, max direction difference {worst:.2} points"),
    );
}

#[test]
fn criterion_07_experiment2_monotone() {
    let _serial = serial();
    let r = run_experiment2(&HarnessConfig::default()).unwrap();
    let diag: Vec<f64> = EXP2_GRID_MS
        .iter()
        .map(|&v| {
            r.summary_row(&format!("on_ms={v} off_ms={v} direction={POOLED}"))
                .unwrap()
                .mean
        })
        .collect();
    let monotone = diag.windows(2).all(|w| w[1] >= w[0]);
    let cw = r.summary_row("on_ms=all off_ms=all direction=cw").unwrap().mean;
    let ccw = r.summary_row("on_ms=all off_ms=all direction=ccw").unwrap().mean;
    report(
        7,
        "experiment 2 monotonicity",
        monotone && (cw - ccw).abs() < 3.0,
        &format!("diagonal {diag:.1?}, cw-ccw {:.2}", cw - ccw),
    );
}

#[test]
fn criterion_08_spinning_tops() {
    let _serial = serial();
    let cfg = HarnessConfig::default();
    let run = |c| run_spinning_tops(c, &cfg).unwrap();
    let mean = |r: &ExperimentResult, c: Condition, m: &str| {
        r.summary_row(&format!("condition={} measure={m}", c.name())).unwrap().mean
    };
    let (nvh, oh, ov, vh, mvh) = (
        run(Condition::Nvh),
        run(Condition::Oh),
        run(Condition::Ov),
        run(Condition::Vh),
        run(Condition::Mvh),
    );
    let nvh_d = mean(&nvh, Condition::Nvh, "direction");
    let nvh_b = mean(&nvh, Condition::Nvh, "box");
    let oh_d = mean(&oh, Condition::Oh, "direction");
    let oh_b = mean(&oh, Condition::Oh, "box");
    let ov_d = mean(&ov, Condition::Ov, "direction");
    let vh_d = mean(&vh, Condition::Vh, "direction");
    let mvh_d = mean(&mvh, Condition::Mvh, "direction");
    let an = compare_conditions(&vh, &mvh, "direction").unwrap();
    let ok = (40.0..=60.0).contains(&nvh_d)
        && (23.0..=43.0).contains(&nvh_b)
        && (76.0..=86.0).contains(&oh_d)
        && (60.0..=70.0).contains(&oh_b)
        && ov_d == 100.0
        && vh_d >= 95.0
        && mvh_d < vh_d
        && an.p < 0.001;
    report(
        8,
        "spinning tops",
        ok,
        &format!(
            "NVH {nvh_d:.1}/{nvh_b:.1}, OH {oh_d:.1}/{oh_b:.1}, OV {ov_d:.1}, VH {vh_d:.1}, MVH {mvh_d:.1}, p={:.1e}",
            an.p
        ),
    );
}

#[test]
fn criterion_09_anova_identity() {
    let _serial = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let n = rng.random_range(3..=20);
        let data: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)])
            .collect();
        let f = rm_anova_oneway(&data).unwrap().f;
        let diffs: Vec<f64> = data.iter().map(|r| r[0] - r[1]).collect();
        let nf = n as f64;
        let mean = diffs.iter().sum::<f64>() / nf;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let t2 = mean * mean / (var / nf);
        worst = worst.max(((f - t2) / t2).abs());
    }
    let identical: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 3.5, i as f64 * 3.5]).collect();
    let f0 = rm_anova_oneway(&identical).unwrap().f;
    report(
        9,
        "anova identity",
        worst < 1e-9 && f0 == 0.0,
        &format!("max relative |F - t^2| = {worst:.2e}, identical columns F = {f0}"),
    );
}

const OPCODES: [u8; 8] = [
    opcode::PING,
    opcode::VIBE,
    opcode::MOVEMENT,
    opcode::ROTATION,
    opcode::STOP,
    opcode::STATUS,
    opcode::PONG,
    opcode::STATUS_REPLY,
];

fn random_frame(rng: &mut impl Rng) -> Frame {
    let op = OPCODES[rng.random_range(0..OPCODES.len())];
    let payload = (0..payload_len(op).unwrap()).map(|_| rng.random()).collect();
    Frame::new(op, payload).unwrap()
}

fn random_effect(rng: &mut impl Rng) -> Message {
    if rng.random_bool(0.5) {
        Message::Rotation {
            direction: RotationDirection::ALL[rng.random_range(0..2)],
            on_ms: rng.random_range(1..2000),
            off_ms: rng.random_range(0..2000),
            shape: WaveformShape::ALL[rng.random_range(0..3)],
            count: rng.random_range(1..10),
            amplitude: rng.random_range(1..=255),
        }
    } else {
        Message::Movement {
            direction: MovementDirection::ALL[rng.random_range(0..2)],
            duration_ms: rng.random_range(1..1000),
            isoi_ms: rng.random_range(0..1000),
            amplitude: rng.random_range(1..=255),
            repetitions: rng.random_range(1..5),
        }
    }
}

fn direct_timeline(msg: &Message) -> ActuationTimeline {
    match *msg {
        Message::Rotation {
            direction,
            on_ms,
            off_ms,
            shape,
            count,
            amplitude,
        } => {
            let mut spec = RotationSpec::new(direction, on_ms as f64, off_ms as f64, shape).with_count(count as u32);
            spec.amplitude = amplitude as f64 / 255.0;
            schedule_rotation(&spec).unwrap()
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
            schedule_movement(&spec).unwrap()
        }
        _ => unreachable!(),
    }
}

#[test]
fn criterion_10_protocol() {
    let _serial = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = Vec::new();

    let frames: Vec<Frame> = (0..10_000).map(|_| random_frame(&mut rng)).collect();
    let bad_round_trips = frames
        .iter()
        .filter(|f| {
            let bytes = encode_frame(f).unwrap();
            let (out, _) = decode_all(&bytes);
            out.frames.len() != 1 || &out.frames[0] != *f || encode_frame(&out.frames[0]).unwrap() != bytes
        })
        .count();
    if bad_round_trips > 0 {
        failures.push(format!("{bad_round_trips} round trips"));
    }

    let junk: Vec<u8> = (0..1 << 20).map(|_| rng.random()).collect();
    let mut dec = Decoder::new();
    for chunk in junk.chunks(4096) {
        dec.feed(chunk);
    }
    let junk_frames = dec.stats().frames;

    // frames interleaved with noise must decode the same however the stream is cut
    let mut stream = Vec::new();
    for f in frames.iter().take(200) {
        if rng.random_bool(0.3) {
            stream.extend((0..rng.random_range(1..6)).map(|_| rng.random::<u8>()));
        }
        stream.extend(encode_frame(f).unwrap());
    }
    let (whole, whole_stats) = decode_all(&stream);
    let mut split_mismatch = 0;
    for _ in 0..100 {
        let mut cuts: Vec<usize> = (0..rng.random_range(1..40)).map(|_| rng.random_range(0..=stream.len())).collect();
        cuts.sort_unstable();
        let mut dec = Decoder::new();
        let (mut got, mut prev) = (Vec::new(), 0);
        for cut in cuts.into_iter().chain([stream.len()]) {
            got.extend(dec.feed(&stream[prev..cut]).frames);
            prev = cut;
        }
        if got != whole.frames || dec.stats() != whole_stats {
            split_mismatch += 1;
        }
    }
    if split_mismatch > 0 {
        failures.push(format!("{split_mismatch} splits"));
    }

    let mut device_mismatch = 0;
    for _ in 0..1000 {
        let msg = random_effect(&mut rng);
        let mut device = DeviceState::new();
        let reply = device.step(&msg.to_frame()).unwrap();
        if reply.is_some() || device.current_timeline() != Some(&direct_timeline(&msg)) {
            device_mismatch += 1;
        }
    }
    if device_mismatch > 0 {
        failures.push(format!("{device_mismatch} device timelines"));
    }

    report(
        10,
        "protocol",
        failures.is_empty(),
        &if failures.is_empty() {
            format!(
                "10000 round trips, 1 MiB junk ({junk_frames} accidental frames), 100 splits, 1000 device timelines"
            )
        } else {
            failures.join(", ")
        },
    );
}

fn csv_bytes(r: &ExperimentResult) -> Vec<u8> {
    let mut out = Vec::new();
    r.write_records(&mut out).unwrap();
    r.write_summary(&mut out).unwrap();
    out
}

#[test]
fn criterion_11_determinism() {
    let _serial = serial();
    let cfg = HarnessConfig {
        seed: 42,
        ..HarnessConfig::default()
    };
    let runs = |cfg: &HarnessConfig| -> Vec<Vec<u8>> {
        let mut all = vec![
            csv_bytes(&run_experiment1(cfg).unwrap()),
            csv_bytes(&run_experiment2(cfg).unwrap()),
            csv_bytes(&run_experiment3(cfg).unwrap()),
        ];
        all.extend(Condition::ALL.map(|c| csv_bytes(&run_spinning_tops(c, cfg).unwrap())));
        all
    };
    let (a, b) = (runs(&cfg), runs(&cfg));
    let identical = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    report(
        11,
        "determinism",
        identical == a.len(),
        &format!("{identical}/{} result CSVs byte-identical", a.len()),
    );
}
