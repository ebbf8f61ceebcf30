//! `odmr-temp`: temperatures from zero-field splittings or resonance pairs.
//!
//! Input rows hold `D` (Hz), `D, σ_D`, or `f₋, σ₋, f₊, σ₊`, separated by
//! commas or whitespace. `#` starts a comment; one header line is allowed
//! before the first row.

use std::fmt::Write as _;
use std::path::PathBuf;

use nvrelax_core::{zfs_from_resonances, Config, Estimate};

use crate::output::{emit, read_input, CmdResult, Failure, Manifest, Status};

pub struct OdmrTemp {
    pub input: PathBuf,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub line: usize,
    pub d: Estimate,
}

/// Parses every row, collecting all malformed lines before failing.
pub fn parse_rows(text: &str) -> Result<Vec<Row>, Vec<String>> {
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let mut header_allowed = true;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let values: Result<Vec<f64>, &str> = fields.iter().map(|f| f.parse::<f64>().map_err(|_| *f)).collect();
        let values = match values {
            Ok(v) => v,
            Err(_) if header_allowed && fields.iter().all(|f| f.parse::<f64>().is_err()) => {
                header_allowed = false;
                continue;
            }
            Err(bad) => {
                errors.push(format!("line {line}: `{bad}` is not a number"));
                continue;
            }
        };
        header_allowed = false;
        if values.iter().any(|v| !v.is_finite()) {
            errors.push(format!("line {line}: values must be finite"));
            continue;
        }
        let d = match values[..] {
            [d] => Estimate::exact(d),
            [d, s] => Estimate::new(d, s),
            [fm, sm, fp, sp] => zfs_from_resonances(Estimate::new(fm, sm), Estimate::new(fp, sp)),
            _ => {
                errors.push(format!(
                    "line {line}: expected 1, 2 or 4 columns (D | D, sigma | f-, sigma-, f+, sigma+), got {}",
                    values.len()
                ));
                continue;
            }
        };
        if d.std_error < 0.0 {
            errors.push(format!("line {line}: uncertainties must be >= 0"));
            continue;
        }
        rows.push(Row { line, d });
    }
    if errors.is_empty() {
        Ok(rows)
    } else {
        Err(errors)
    }
}

pub fn odmr_temp(cfg: &Config, args: &OdmrTemp, mut manifest: Manifest) -> CmdResult<Status> {
    let text = read_input(&args.input)?;
    let rows = parse_rows(&text).map_err(|errs| {
        Failure::Validation(format!("{}:\n  {}", args.input.display(), errs.join("\n  ")))
    })?;
    if rows.is_empty() {
        return Err(Failure::Validation(format!("{}: no data rows", args.input.display())));
    }
    manifest.inputs.push(args.input.display().to_string());
    let thermo = cfg.physics.thermometer();
    let mut out = String::from("input_line,d_hz,d_std_hz,temperature_k,temperature_std_k\n");
    for r in &rows {
        let t = thermo.temperature(r.d);
        let _ = writeln!(out, "{},{},{},{},{}", r.line, r.d.value, r.d.std_error, t.value, t.std_error);
    }
    emit(args.out.as_deref(), &manifest, &out)?;
    Ok(Status::Success)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonance_pairs_average_to_d() {
        let rows = parse_rows("# f- s- f+ s+\n2.84e9 10 2.90e9 10\n").unwrap();
        assert_eq!(rows[0].line, 2);
        assert!((rows[0].d.value - 2.87e9).abs() < 1e-3);
    }

    #[test]
    fn header_only_allowed_once() {
        let errs = parse_rows("d\n2.87e9\nd\n").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].starts_with("line 3"));
    }
}
