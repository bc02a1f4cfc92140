use std::io::{self, Write};
use std::path::PathBuf;

use stylus_haptics::harness::{
    compare_conditions, exp1_pooled, run_experiment1, run_experiment2, run_experiment3, run_spinning_tops_with,
    cohort, Condition, ExperimentResult, HarnessConfig, TOPS_PARTICIPANTS,
};
use stylus_haptics::movement::{dominant, GRID_MS};

use crate::args::{ExpCmd, ExpRun};
use crate::{usage, CliError};

const CONFIG_ENV: &str = "HAPTI_CONFIG";

fn config(run: &ExpRun) -> Result<HarnessConfig, CliError> {
    let path = run
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut cfg = match &path {
        Some(p) => HarnessConfig::load(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => HarnessConfig::default(),
    };
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    if let Some(n) = run.participants {
        cfg.participants = Some(n);
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn emit(result: &ExperimentResult, run: &ExpRun, w: &mut impl Write) -> Result<(), CliError> {
    if let Some(dir) = &run.out {
        result.write_to_dir(dir)?;
    }
    result.write_summary(w)?;
    Ok(())
}

fn print_exp1_grid(result: &ExperimentResult, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "d_ms,isoi_ms,single,discrete,continuous,dominant")?;
    for d in GRID_MS {
        for isoi in GRID_MS {
            let p = exp1_pooled(result, d, isoi);
            writeln!(
                w,
                "{d},{isoi},{:.1},{:.1},{:.1},{}",
                p[0],
                p[1],
                p[2],
                dominant(&p.map(|v| v / 100.0))
            )?;
        }
    }
    Ok(())
}

fn run_tops(run: &ExpRun, cfg: &HarnessConfig, w: &mut impl Write) -> Result<(), CliError> {
    let wanted: Vec<Condition> = match &run.condition {
        Some(c) => {
            let c: Condition = c.parse().map_err(usage)?;
            vec![c]
        }
        None => Condition::ALL.to_vec(),
    };
    let people = cohort(cfg.seed, cfg.participants.unwrap_or(TOPS_PARTICIPANTS), &cfg.population);
    let mut runs: Vec<(Condition, ExperimentResult)> = Vec::new();
    let get = |c: Condition, runs: &mut Vec<(Condition, ExperimentResult)>| -> Result<usize, CliError> {
        if let Some(i) = runs.iter().position(|(k, _)| *k == c) {
            return Ok(i);
        }
        let mut r = run_spinning_tops_with(c, &people, cfg).map_err(usage)?;
        r.name = format!("tops_{}", c.name().to_lowercase());
        runs.push((c, r));
        Ok(runs.len() - 1)
    };
    let pairs: Vec<(Condition, Condition)> = match &run.condition {
        Some(_) => vec![(wanted[0].partner(), wanted[0])],
        None => vec![
            (Condition::Nvh, Condition::Oh),
            (Condition::Ov, Condition::Vh),
            (Condition::Vh, Condition::Mvh),
        ],
    };
    for &c in &wanted {
        let i = get(c, &mut runs)?;
        emit(&runs[i].1, run, w)?;
    }
    for (a, b) in pairs {
        let (ia, ib) = (get(a, &mut runs)?, get(b, &mut runs)?);
        let an = compare_conditions(&runs[ia].1, &runs[ib].1, "direction").map_err(usage)?;
        writeln!(
            w,
            "# rm-anova direction {a} vs {b}: F({},{})={:.4} p={:.3e}",
            an.df_num, an.df_den, an.f, an.p
        )?;
    }
    Ok(())
}

pub fn run(cmd: ExpCmd) -> Result<(), CliError> {
    let ExpCmd::Run(run) = cmd;
    let cfg = config(&run)?;
    if run.condition.is_some() && run.experiment != "tops" {
        return Err(usage("--condition only applies to `tops`"));
    }
    let mut w = io::stdout().lock();
    match run.experiment.as_str() {
        "1" => {
            let r = run_experiment1(&cfg).map_err(usage)?;
            if let Some(dir) = &run.out {
                r.write_to_dir(dir)?;
            }
            print_exp1_grid(&r, &mut w)?;
        }
        "2" => emit(&run_experiment2(&cfg).map_err(usage)?, &run, &mut w)?,
        "3" => emit(&run_experiment3(&cfg).map_err(usage)?, &run, &mut w)?,
        "tops" => run_tops(&run, &cfg, &mut w)?,
        other => return Err(usage(format!("unknown experiment `{other}` (1|2|3|tops)"))),
    }
    w.flush()?;
    Ok(())
}
