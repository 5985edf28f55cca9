//! Strict CSV reading and writing. Floats are written with 17 significant
//! digits so every file round-trips bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use rfgls::{Figure2Row, Location, ResultRecord, SpatialDataset};

use crate::CliError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parse a dataset CSV with header `y,x1,...,xD,loc1[,loc2]`.
pub fn parse_dataset(path: &Path) -> Result<SpatialDataset, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let bad_header = || {
        CliError::Config(format!(
            "{}: header must be y,x1,...,xD,loc1[,loc2], found '{header}'",
            path.display()
        ))
    };
    if cols.len() < 3 || cols[0] != "y" {
        return Err(bad_header());
    }
    let two_d = *cols.last().unwrap() == "loc2";
    let loc_cols = if two_d { 2 } else { 1 };
    let d = cols.len() - 1 - loc_cols;
    if d == 0 {
        return Err(bad_header());
    }
    for (k, name) in cols[1..=d].iter().enumerate() {
        if *name != format!("x{}", k + 1) {
            return Err(bad_header());
        }
    }
    if cols[1 + d] != "loc1" {
        return Err(bad_header());
    }

    let mut y = Vec::new();
    let mut covariates = Vec::new();
    let mut locations = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(CliError::Config(format!(
                "{} line {}: expected {} fields, found {}",
                path.display(),
                lineno + 1,
                cols.len(),
                fields.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64, CliError> {
            if s.is_empty() {
                return Err(CliError::Config(format!(
                    "{} line {}: missing value in column {what}",
                    path.display(),
                    lineno + 1
                )));
            }
            let v: f64 = s.parse().map_err(|_| {
                CliError::Config(format!(
                    "{} line {}: cannot parse '{s}' in column {what}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Config(format!(
                    "{} line {}: non-finite value in column {what}",
                    path.display(),
                    lineno + 1
                )));
            }
            Ok(v)
        };
        y.push(parse(fields[0], "y")?);
        for k in 0..d {
            covariates.push(parse(fields[1 + k], &format!("x{}", k + 1))?);
        }
        let l1 = parse(fields[1 + d], "loc1")?;
        if two_d {
            locations.push(Location::Two(l1, parse(fields[2 + d], "loc2")?));
        } else {
            locations.push(Location::One(l1));
        }
    }
    if y.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    SpatialDataset::new(y, covariates, d, locations)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_dataset(data: &SpatialDataset) -> String {
    let d = data.n_features();
    let two_d = matches!(data.locations.first(), Some(Location::Two(..)));
    let mut out = String::from("y");
    for k in 1..=d {
        let _ = write!(out, ",x{k}");
    }
    out.push_str(",loc1");
    if two_d {
        out.push_str(",loc2");
    }
    out.push('\n');
    for i in 0..data.len() {
        out.push_str(&fmt_f64(data.y[i]));
        for v in data.row(i) {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        let (a, b) = data.locations[i].coords();
        out.push(',');
        out.push_str(&fmt_f64(a));
        if two_d {
            out.push(',');
            out.push_str(&fmt_f64(b));
        }
        out.push('\n');
    }
    out
}

pub const RESULTS_HEADER: &str =
    "mean_kind,sigma2,phi,tau2_frac,n,replicate,method,mise,relative_mse,runtime_ms,seed";

pub fn write_results(records: &[ResultRecord], timings: bool) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        let runtime = if timings { r.runtime_ms } else { 0 };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.mean_kind,
            fmt_f64(r.sigma2),
            fmt_f64(r.phi),
            fmt_f64(r.tau2_frac),
            r.n,
            r.replicate,
            r.method.as_str(),
            fmt_f64(r.mise),
            fmt_f64(r.relative_mse),
            runtime,
            r.seed
        );
    }
    out
}

pub const FIGURE2_HEADER: &str =
    "replicate,cart_cutoff,dart_cutoff,cart_left,cart_right,dart_left,dart_right";

pub fn write_figure2(rows: &[Figure2Row]) -> String {
    let mut out = String::from(FIGURE2_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.replicate,
            fmt_f64(r.cart_cutoff),
            fmt_f64(r.dart_cutoff),
            fmt_f64(r.cart_left),
            fmt_f64(r.cart_right),
            fmt_f64(r.dart_left),
            fmt_f64(r.dart_right)
        );
    }
    out
}

pub fn write_predictions(preds: &[f64]) -> String {
    let mut out = String::from("prediction\n");
    for p in preds {
        out.push_str(&fmt_f64(*p));
        out.push('\n');
    }
    out
}

/// Parse a prediction-points CSV with header `x1,...,xD[,loc1[,loc2]]`.
/// Returns the covariate rows and, when location columns exist, the
/// locations.
pub fn parse_points(path: &Path) -> Result<(Vec<Vec<f64>>, Option<Vec<Location>>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let loc_cols = if cols.last() == Some(&"loc2") {
        2
    } else if cols.last() == Some(&"loc1") {
        1
    } else {
        0
    };
    let d = cols.len() - loc_cols;
    for (k, name) in cols[..d].iter().enumerate() {
        if *name != format!("x{}", k + 1) {
            return Err(CliError::Config(format!(
                "{}: header must be x1,...,xD[,loc1[,loc2]], found '{header}'",
                path.display()
            )));
        }
    }
    let mut rows = Vec::new();
    let mut locs = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(CliError::Config(format!(
                "{} line {}: expected {} fields, found {}",
                path.display(),
                lineno + 1,
                cols.len(),
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                CliError::Config(format!("{} line {}: bad value '{s}'", path.display(), lineno + 1))
            })
        };
        let mut row = Vec::with_capacity(d);
        for f in &fields[..d] {
            row.push(parse(f)?);
        }
        rows.push(row);
        match loc_cols {
            1 => locs.push(Location::One(parse(fields[d])?)),
            2 => locs.push(Location::Two(parse(fields[d])?, parse(fields[d + 1])?)),
            _ => {}
        }
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    Ok((rows, if loc_cols > 0 { Some(locs) } else { None }))
}
