//! Spectrum files: `#` header lines of `key = value`, then a
//! `wavelength_nm,counts_per_s` table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::Spectrum;

use super::basis::BasisSet;

pub const ROLE_SAMPLE: &str = "sample";
pub const ROLE_MINUS_PRE: &str = "nv_minus_pre";
pub const ROLE_ZERO_PRE: &str = "nv_zero_pre";
/// One spectrum of the κ calibration series.
pub const ROLE_KAPPA_SERIES: &str = "kappa_series";
pub const ROLE_BASIS_MINUS: &str = "basis_minus";
pub const ROLE_BASIS_ZERO: &str = "basis_zero";

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFile {
    pub role: String,
    pub spectrum: Spectrum,
    /// Every header entry, including the ones parsed into `spectrum`.
    pub header: BTreeMap<String, String>,
}

/// Serializes a spectrum. `extra` lines (e.g. a run manifest) are written
/// verbatim after the metadata, each prefixed with `# `.
pub fn write_spectrum(spectrum: &Spectrum, role: &str, fields: &[(&str, String)], extra: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# role = {role}");
    let _ = writeln!(out, "# laser_power_w = {}", spectrum.laser_power);
    let _ = writeln!(out, "# temperature_k = {}", spectrum.temperature);
    let _ = writeln!(out, "# exposure_s = {}", spectrum.exposure);
    for (k, v) in fields {
        let _ = writeln!(out, "# {k} = {v}");
    }
    for line in extra {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("wavelength_nm,counts_per_s\n");
    for (l, v) in spectrum.wavelengths.iter().zip(&spectrum.intensities) {
        let _ = writeln!(out, "{l},{v}");
    }
    out
}

pub fn read_spectrum(text: &str) -> Result<SpectrumFile> {
    let mut header = BTreeMap::new();
    let mut wl = Vec::new();
    let mut y = Vec::new();
    let mut seen_columns = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if !seen_columns {
            if line.replace(' ', "") != "wavelength_nm,counts_per_s" {
                return Err(Error::parse(line_no, format!("expected column header, found `{line}`")));
            }
            seen_columns = true;
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(line_no, "expected two comma-separated columns"));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("`{}` is not a number", s.trim())))
        };
        wl.push(parse(a)?);
        y.push(parse(b)?);
    }
    if !seen_columns {
        return Err(Error::parse(0, "missing `wavelength_nm,counts_per_s` table"));
    }
    let num = |key: &str| -> Result<f64> {
        let v = header
            .get(key)
            .ok_or_else(|| Error::parse(0, format!("header lacks `{key}`")))?;
        v.parse()
            .map_err(|_| Error::parse(0, format!("header `{key}` = `{v}` is not a number")))
    };
    let spectrum = Spectrum::new(wl, y, num("laser_power_w")?, num("temperature_k")?, num("exposure_s")?)?;
    let role = header.get("role").cloned().unwrap_or_else(|| ROLE_SAMPLE.to_string());
    Ok(SpectrumFile {
        role,
        spectrum,
        header,
    })
}

/// The two basis functions as spectrum files, tagged with their roles and
/// carrying both δ values.
pub fn write_basis(basis: &BasisSet, temperature: f64, extra: &[String]) -> (String, String) {
    let fields = [
        ("delta0", basis.delta0.to_string()),
        ("delta_minus", basis.delta_minus.to_string()),
    ];
    let make = |y: &Vec<f64>| Spectrum {
        wavelengths: basis.wavelength_grid.clone(),
        intensities: y.clone(),
        laser_power: 0.0,
        temperature,
        exposure: 1.0,
    };
    (
        write_spectrum(&make(&basis.basis_minus), ROLE_BASIS_MINUS, &fields, extra),
        write_spectrum(&make(&basis.basis_zero), ROLE_BASIS_ZERO, &fields, extra),
    )
}

/// Reassembles a basis from its two files.
pub fn read_basis(minus: &SpectrumFile, zero: &SpectrumFile) -> Result<BasisSet> {
    if minus.role != ROLE_BASIS_MINUS || zero.role != ROLE_BASIS_ZERO {
        return Err(Error::Structure(format!(
            "expected roles {ROLE_BASIS_MINUS}/{ROLE_BASIS_ZERO}, got {}/{}",
            minus.role, zero.role
        )));
    }
    if !minus.spectrum.same_grid(&zero.spectrum) {
        return Err(Error::Shape("basis files are on different grids".into()));
    }
    let delta = |key: &str| -> Result<f64> {
        minus
            .header
            .get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(0, format!("basis header lacks `{key}`")))
    };
    Ok(BasisSet {
        wavelength_grid: minus.spectrum.wavelengths.clone(),
        basis_minus: minus.spectrum.intensities.clone(),
        basis_zero: zero.spectrum.intensities.clone(),
        delta0: delta("delta0")?,
        delta_minus: delta("delta_minus")?,
    })
}
