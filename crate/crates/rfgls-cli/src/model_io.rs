//! Persistence of fit artifacts: the serialized forest, the parameter
//! estimation report, and the kriging context (locations, working spec,
//! residuals).

use std::path::Path;

use rfgls::{forest_from_str, forest_to_string, CovarianceSpec, FitReport, ForestModel, KrigingContext, Location};

use crate::csvio::fmt_f64;
use crate::CliError;

pub const FOREST_FILE: &str = "forest.txt";
pub const REPORT_FILE: &str = "report.json";
pub const KRIGING_FILE: &str = "kriging.txt";

pub fn save_fit(dir: &Path, forest: &ForestModel, report: &FitReport, ctx: &KrigingContext) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let write = |name: &str, text: String| -> Result<(), CliError> {
        std::fs::write(dir.join(name), text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", dir.join(name).display())))
    };
    write(FOREST_FILE, forest_to_string(forest))?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Runtime(format!("report serialization: {e}")))?;
    write(REPORT_FILE, json + "\n")?;
    write(KRIGING_FILE, kriging_to_string(ctx))?;
    Ok(())
}

pub fn load_forest(dir: &Path) -> Result<ForestModel, CliError> {
    let path = dir.join(FOREST_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    forest_from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn load_kriging(dir: &Path) -> Result<Option<KrigingContext>, CliError> {
    let path = dir.join(KRIGING_FILE);
    match std::fs::read_to_string(&path) {
        Ok(text) => kriging_from_str(&text)
            .map(Some)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::Config(format!("cannot read {}: {e}", path.display()))),
    }
}

fn kriging_to_string(ctx: &KrigingContext) -> String {
    let two_d = matches!(ctx.train_locations.first(), Some(Location::Two(..)));
    let mut out = format!(
        "KRIGING v1 n={} dim={}\n",
        ctx.residuals.len(),
        if two_d { 2 } else { 1 }
    );
    out.push_str(&format!(
        "spec exponential {} {} {}\n",
        fmt_f64(ctx.spec.sigma2),
        fmt_f64(ctx.spec.phi),
        fmt_f64(ctx.spec.tau2)
    ));
    for (loc, r) in ctx.train_locations.iter().zip(&ctx.residuals) {
        let (a, b) = loc.coords();
        if two_d {
            out.push_str(&format!("{} {} {}\n", fmt_f64(a), fmt_f64(b), fmt_f64(*r)));
        } else {
            out.push_str(&format!("{} {}\n", fmt_f64(a), fmt_f64(*r)));
        }
    }
    out
}

fn kriging_from_str(text: &str) -> Result<KrigingContext, rfgls::Error> {
    let bad = |msg: &str| rfgls::Error::InvalidInput(format!("kriging parse: {msg}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    if !header.starts_with("KRIGING v1") {
        return Err(bad("missing magic"));
    }
    let dim: usize = header
        .split_whitespace()
        .find_map(|t| t.strip_prefix("dim=").and_then(|v| v.parse().ok()))
        .ok_or_else(|| bad("header dim"))?;
    let spec_line = lines.next().ok_or_else(|| bad("missing spec"))?;
    let toks: Vec<&str> = spec_line.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "spec" || toks[1] != "exponential" {
        return Err(bad("malformed spec line"));
    }
    let parse = |s: &str| s.parse::<f64>().map_err(|_| bad("bad spec value"));
    let spec = CovarianceSpec::exponential(parse(toks[2])?, parse(toks[3])?, parse(toks[4])?);
    let mut locations = Vec::new();
    let mut residuals = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad("bad row value")))
            .collect::<Result<_, _>>()?;
        if vals.len() != dim + 1 {
            return Err(bad("row width mismatch"));
        }
        locations.push(if dim == 2 {
            Location::Two(vals[0], vals[1])
        } else {
            Location::One(vals[0])
        });
        residuals.push(vals[dim]);
    }
    KrigingContext::new(locations, spec, residuals)
}
