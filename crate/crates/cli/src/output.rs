//! Output assembly: CSV and JSON built row by row, written to stdout or the
//! configured file and nowhere else. Floats use Rust's shortest round-trip
//! formatting, so identical runs produce byte-identical files.

use std::io::Write;
use std::path::Path;

use fibdisc::discrepancy::DiscrepancyResult;
use fibdisc::lattice::PointSet;
use fibdisc::study::{ConstantsReport, GammaRow, ProfileRow, StudyRow};
use serde_json::json;

use crate::CliError;

pub fn write_out(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| CliError::Io(format!("cannot write stdout: {e}")))
        }
    }
}

pub fn points_csv(pts: &PointSet<f64>) -> String {
    let mut s = String::from("mu,x1,x2\n");
    for (i, p) in pts.points().iter().enumerate() {
        s.push_str(&format!("{},{},{}\n", i + 1, p[0], p[1]));
    }
    s
}

/// JSON record mirroring [`DiscrepancyResult`] plus the run parameters.
#[allow(clippy::too_many_arguments)]
pub fn discrepancy_json(
    n: u32,
    b_n: i64,
    r: u32,
    p: Option<&str>,
    v: f64,
    periodic: bool,
    res: &DiscrepancyResult<f64>,
) -> String {
    let p_value = match p {
        // "inf" parses as an infinite f64, which JSON cannot carry; keep the literal
        Some(p) => match p.parse::<f64>() {
            Ok(num) if num.is_finite() => json!(num),
            _ => json!(p),
        },
        None => json!(null),
    };
    let record = json!({
        "subcommand": "discrepancy",
        "n": n,
        "b_n": b_n,
        "r": r,
        "p": p_value,
        "v": v,
        "periodic": periodic,
        "value": res.value,
        "method": res.method.as_str(),
        "tail_bound": res.tail_bound,
        "grid": res.grid,
        "shape_samples": res.shape_samples,
        "argmax_shape": res.argmax_shape,
        "cutoff": res.cutoff,
    });
    format!("{}\n", serde_json::to_string_pretty(&record).unwrap())
}

pub const STUDY_HEADER: &str = "n,b_n,r,p,v,value,normalizer,ratio,method,S,M,K,tail";

pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut s = format!("{STUDY_HEADER}\n");
    for row in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.n,
            row.b_n,
            row.r,
            row.setting.p_label(),
            row.v,
            row.value,
            row.normalizer,
            row.ratio,
            row.method.as_str(),
            row.shapes,
            row.grid,
            row.cutoff,
            row.tail,
        ));
    }
    s
}

pub fn gamma_csv(rows: &[GammaRow]) -> String {
    let mut s = String::from("n,b_n,min_norm,ratio\n");
    for row in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            row.n, row.b_n, row.min_norm, row.ratio
        ));
    }
    s
}

pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let mut s = String::from("v,value,u1,u2,normalizer,ratio\n");
    for row in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.v, row.value, row.argmax_shape[0], row.argmax_shape[1], row.normalizer, row.ratio,
        ));
    }
    s
}

pub fn constants_json(report: &ConstantsReport) -> String {
    let record = json!({
        "subcommand": "study --constants",
        "seed": report.seed,
        "samples": report.samples,
        "r": report.r,
        "d": report.d,
        "gamma_hat": report.gamma_hat,
        "sigma_c": report.sigma_c,
        "sigma_argmax": { "u": report.sigma_argmax.0, "t": report.sigma_argmax.1 },
        "majorant_sum_c1": report.majorant_sum_c1,
        "majorant_sum_argmax": { "u": report.majorant_sum_argmax.0, "t": report.majorant_sum_argmax.1 },
        "shell_count_c2": report.shell_count_c2,
        "shell_count_ref_n": report.shell_count_ref_n,
        "shell_count_argmax": report.shell_count_argmax,
    });
    format!("{}\n", serde_json::to_string_pretty(&record).unwrap())
}
