//! `fibdisc` — fixed-volume discrepancy of Fibonacci lattice point sets.
//!
//! Exit codes: 0 success, 1 failed invariant (`check`), 2 validation
//! error, 3 infeasible volume.

mod args;
mod checks;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;
use fibdisc::discrepancy::{
    fixed_volume_discrepancy_nonperiodic, fixed_volume_discrepancy_periodic, l2_norm_series,
    shape_grid, DiscrepancyResult, PNorm, SpectralTruncation,
};
use fibdisc::lattice::{fibonacci_point_set, FibIndex};
use fibdisc::splines::SmoothBox;
use fibdisc::study::{
    bound_constants_report, gamma_table, scaling_table, worst_box_profile, Setting, StudyGrids,
    VolumePolicy,
};

use args::{parse_range, Cli, Command, ConfigMap, DiscrepancyArgs, PointsArgs, StudyArgs};

const DEFAULT_SEED: u64 = 20260811;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Infeasible(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<fibdisc::Error> for CliError {
    fn from(e: fibdisc::Error) -> Self {
        match e {
            fibdisc::Error::InfeasibleVolume { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn require<T>(slot: Option<T>, flag: &str) -> Result<T, CliError> {
    slot.ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let config = match &cli.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::empty(),
    };
    match cli.command {
        Command::Points(a) => cmd_points(a, &config),
        Command::Discrepancy(a) => cmd_discrepancy(a, &config),
        Command::Study(a) => cmd_study(a, &config),
        Command::Check(mut a) => {
            config.fill(&mut a.suite, "suite")?;
            config.fill(&mut a.seed, "seed")?;
            let pass = checks::run(a.suite.as_deref(), a.seed.unwrap_or(DEFAULT_SEED))?;
            Ok(if pass { 0 } else { 1 })
        }
    }
}

fn cmd_points(mut a: PointsArgs, config: &ConfigMap) -> Result<u8, CliError> {
    config.fill(&mut a.n, "n")?;
    config.fill(&mut a.out, "out")?;
    let n = require(a.n, "n")?;
    if n < 2 {
        return Err(CliError::Usage(format!("points requires n >= 2, got {n}")));
    }
    let index = FibIndex::new(n)?;
    let pts = fibonacci_point_set::<f64>(index)?;
    output::write_out(a.out.as_deref(), &output::points_csv(&pts))?;
    Ok(0)
}

fn cmd_discrepancy(mut a: DiscrepancyArgs, config: &ConfigMap) -> Result<u8, CliError> {
    config.fill(&mut a.n, "n")?;
    config.fill(&mut a.r, "r")?;
    config.fill(&mut a.p, "p")?;
    config.fill(&mut a.v, "v")?;
    config.fill(&mut a.periodic, "periodic")?;
    config.fill(&mut a.shapes, "shapes")?;
    config.fill(&mut a.shifts, "shifts")?;
    config.fill(&mut a.centers, "centers")?;
    config.fill(&mut a.cutoff, "cutoff")?;
    config.fill(&mut a.tail_target, "tail-target")?;
    config.fill(&mut a.out, "out")?;

    let n = require(a.n, "n")?;
    let r = require(a.r, "r")?;
    let v = require(a.v, "v")?;
    let periodic = a.periodic.unwrap_or(true);
    let shapes = a.shapes.unwrap_or(33);
    let index = FibIndex::new(n)?;

    let (p_label, res): (Option<String>, DiscrepancyResult<f64>) = if periodic {
        let p = PNorm::parse(&require(a.p, "p")?)?;
        let shifts = a
            .shifts
            .unwrap_or(if p == PNorm::Infinity { 512 } else { 256 });
        let res = if p.is_two() && (a.cutoff.is_some() || a.tail_target.is_some()) {
            series_sup(index, r, v, shapes, a.cutoff, a.tail_target)?
        } else {
            if a.cutoff.is_some() || a.tail_target.is_some() {
                return Err(CliError::Usage(
                    "the truncated-series engine requires the periodic setting with p = 2".into(),
                ));
            }
            fixed_volume_discrepancy_periodic::<f64>(index, r, v, p, shapes, shifts)?
        };
        (Some(p.to_string()), res)
    } else {
        if a.cutoff.is_some() || a.tail_target.is_some() {
            return Err(CliError::Usage(
                "the truncated-series engine requires the periodic setting with p = 2".into(),
            ));
        }
        let centers = a.centers.unwrap_or(64);
        let res = fixed_volume_discrepancy_nonperiodic::<f64>(index, r, v, shapes, centers)?;
        (a.p, res)
    };

    let json = output::discrepancy_json(n, index.count(), r, p_label.as_deref(), v, periodic, &res);
    output::write_out(a.out.as_deref(), &json)?;
    Ok(0)
}

/// Truncated Parseval series, sup over shapes; the cutoff either given or
/// grown until the certified tail meets the target.
fn series_sup(
    index: FibIndex,
    r: u32,
    v: f64,
    shapes: u32,
    cutoff: Option<i64>,
    tail_target: Option<f64>,
) -> Result<DiscrepancyResult<f64>, CliError> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(CliError::Infeasible(format!(
            "infeasible volume {v}: need 0 < v <= 1"
        )));
    }
    let rt = r as f64;
    let mut best: Option<DiscrepancyResult<f64>> = None;
    for u1 in shape_grid(r, v, shapes) {
        let u2 = v / (rt * rt * u1);
        let b = SmoothBox::new(r, vec![rt * u1 / 2.0, rt * u2 / 2.0], vec![u1, u2])?;
        let trunc = match (cutoff, tail_target) {
            (Some(k), _) => SpectralTruncation::certify(index, &b, k)?,
            (None, Some(target)) => {
                if !target.is_finite() || target <= 0.0 {
                    return Err(CliError::Usage(format!(
                        "tail target must be positive, got {target}"
                    )));
                }
                let mut k = 256i64;
                loop {
                    let t = SpectralTruncation::certify(index, &b, k)?;
                    if t.certified_tail <= target || k >= (1 << 21) {
                        break t;
                    }
                    k *= 2;
                }
            }
            (None, None) => unreachable!("series engine requires a cutoff or a tail target"),
        };
        let candidate = l2_norm_series(index, &b, &trunc)?;
        if best.as_ref().is_none_or(|b| candidate.value > b.value) {
            best = Some(candidate);
        }
    }
    let mut winner = best.expect("shape grid is non-empty");
    winner.shape_samples = shapes;
    Ok(winner)
}

fn cmd_study(mut a: StudyArgs, config: &ConfigMap) -> Result<u8, CliError> {
    config.fill(&mut a.n, "n")?;
    config.fill(&mut a.r, "r")?;
    config.fill(&mut a.p, "p")?;
    config.fill(&mut a.v, "v")?;
    config.fill(&mut a.v_policy, "v-policy")?;
    config.fill(&mut a.v_grid, "v-grid")?;
    config.fill(&mut a.periodic, "periodic")?;
    config.fill(&mut a.shapes, "shapes")?;
    config.fill(&mut a.shifts, "shifts")?;
    config.fill(&mut a.centers, "centers")?;
    config.fill(&mut a.samples, "samples")?;
    config.fill(&mut a.d, "d")?;
    config.fill(&mut a.seed, "seed")?;
    config.fill(&mut a.out, "out")?;

    let modes = a.gamma as u8 + a.profile as u8 + a.constants as u8;
    if modes > 1 {
        return Err(CliError::Usage(
            "--gamma, --profile and --constants are mutually exclusive".into(),
        ));
    }

    if a.gamma {
        let range = parse_range(&require(a.n, "n")?)?;
        let rows = gamma_table(range)?;
        output::write_out(a.out.as_deref(), &output::gamma_csv(&rows))?;
        return Ok(0);
    }

    if a.constants {
        let report = bound_constants_report(
            a.r.unwrap_or(2),
            a.d.unwrap_or(2),
            a.samples.unwrap_or(200),
            a.seed.unwrap_or(DEFAULT_SEED),
        )?;
        output::write_out(a.out.as_deref(), &output::constants_json(&report))?;
        return Ok(0);
    }

    let setting = resolve_setting(a.periodic, a.p.as_deref())?;
    let default_shifts = match setting {
        Setting::Periodic(PNorm::Infinity) => 512,
        _ => 256,
    };
    let grids = StudyGrids {
        shapes: a.shapes.unwrap_or(33),
        shifts: a.shifts.unwrap_or(default_shifts),
        centers: a.centers.unwrap_or(64),
    };
    let r = require(a.r, "r")?;

    if a.profile {
        let (lo, hi) = parse_range(&require(a.n, "n")?)?;
        if lo != hi {
            return Err(CliError::Usage(
                "--profile takes a single index, not a range".into(),
            ));
        }
        let index = FibIndex::new(lo)?;
        let v_grid = parse_volume_grid(&require(a.v_grid, "v-grid")?)?;
        let rows = worst_box_profile(index, r, setting, &v_grid, grids)?;
        output::write_out(a.out.as_deref(), &output::profile_csv(&rows))?;
        return Ok(0);
    }

    let range = parse_range(&require(a.n, "n")?)?;
    let policy = match (&a.v, &a.v_policy) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give either --v or --v-policy, not both".into(),
            ))
        }
        (Some(v), None) => VolumePolicy::Fixed(*v),
        (None, Some(spec)) => parse_volume_policy(spec)?,
        (None, None) => {
            return Err(CliError::Usage(
                "missing required flag --v (or --v-policy)".into(),
            ))
        }
    };
    let rows = scaling_table(r, setting, range, &policy, grids)?;
    output::write_out(a.out.as_deref(), &output::study_csv(&rows))?;
    Ok(0)
}

fn resolve_setting(periodic: Option<bool>, p: Option<&str>) -> Result<Setting, CliError> {
    if periodic.unwrap_or(true) {
        let p = p.ok_or_else(|| CliError::Usage("missing required flag --p".into()))?;
        Ok(Setting::Periodic(PNorm::parse(p)?))
    } else {
        Ok(Setting::NonPeriodic)
    }
}

fn parse_volume_policy(spec: &str) -> Result<VolumePolicy, CliError> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("volume policy {spec:?}: expected kind:args")))?;
    let bad = |what: &str| CliError::Usage(format!("volume policy {spec:?}: {what}"));
    match kind {
        "fixed" => Ok(VolumePolicy::Fixed(
            rest.parse().map_err(|_| bad("cannot parse volume"))?,
        )),
        "prop" => Ok(VolumePolicy::Proportional(
            rest.parse().map_err(|_| bad("cannot parse factor"))?,
        )),
        "list" => {
            let vs = rest
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad("cannot parse volume list"))?;
            if vs.is_empty() {
                return Err(bad("empty volume list"));
            }
            Ok(VolumePolicy::List(vs))
        }
        _ => Err(bad("unknown kind (fixed, prop, list)")),
    }
}

/// `lo:hi:count` log-spaced, or a comma-separated list.
fn parse_volume_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |what: &str| CliError::Usage(format!("volume grid {spec:?}: {what}"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected lo:hi:count"));
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad("cannot parse lo"))?;
        let hi: f64 = parts[1].parse().map_err(|_| bad("cannot parse hi"))?;
        let count: usize = parts[2].parse().map_err(|_| bad("cannot parse count"))?;
        if !(lo > 0.0 && hi >= lo && count >= 1) {
            return Err(bad("need 0 < lo <= hi and count >= 1"));
        }
        if count == 1 {
            return Ok(vec![(lo.ln() * 0.5 + hi.ln() * 0.5).exp()]);
        }
        Ok((0..count)
            .map(|i| {
                let f = i as f64 / (count - 1) as f64;
                (lo.ln() + (hi.ln() - lo.ln()) * f).exp()
            })
            .collect())
    } else {
        let vs = spec
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("cannot parse list"))?;
        if vs.is_empty() {
            return Err(bad("empty list"));
        }
        Ok(vs)
    }
}
