//! Plain-text constellation export.
//!
//! ```text
//! # comment lines are ignored
//! layout = 4 12 20 28
//! symmetry = quadrant
//! radii = 0.25 0.5 0.75 1
//! symbol = 0, 0.785398163397, 5
//! ```
//!
//! One `symbol = ring, angle_rad, label` record per slot, in slot order within
//! each ring. Angles carry 12 significant digits; radii are written at full
//! precision. On import, symmetric constellations are re-folded so mirror
//! images are exact again.

use std::f64::consts::TAU;
use std::fmt::Write;

use super::chromosome::encode_with_tolerance;
use super::{decode, Constellation, Mapping, RingLayout, SymmetryClass};
use crate::{Error, Result};

/// Tolerance for mirror images read back from 12-digit angles.
const IMPORT_TOLERANCE: f64 = 1e-9;

/// Format with 12 significant digits, fixed-point.
pub(crate) fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (11 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn write_constellation(c: &Constellation) -> String {
    let mut out = String::new();
    let counts: Vec<String> = c.layout().counts().iter().map(|n| n.to_string()).collect();
    let radii: Vec<String> = c.radii().iter().map(|r| format!("{r}")).collect();
    writeln!(out, "layout = {}", counts.join(" ")).unwrap();
    writeln!(out, "symmetry = {}", c.symmetry()).unwrap();
    writeln!(out, "radii = {}", radii.join(" ")).unwrap();
    out.push_str("# symbol = ring, angle_rad, label\n");
    for s in c.symbols() {
        writeln!(out, "symbol = {}, {}, {}", s.ring, sig12(s.angle), s.label).unwrap();
    }
    out
}

pub fn parse_constellation(text: &str) -> Result<Constellation> {
    let bad = |msg: String| Error::Config(format!("constellation file: {msg}"));
    let mut layout: Option<Vec<usize>> = None;
    let mut symmetry = SymmetryClass::None;
    let mut radii: Option<Vec<f64>> = None;
    let mut records: Vec<(usize, f64, u8)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected `key = value`", lineno + 1)))?;
        let value = value.trim();
        let num_err = |_| bad(format!("line {}: bad number", lineno + 1));
        match key.trim() {
            "layout" => {
                layout = Some(
                    value
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(format!("line {}: bad layout", lineno + 1)))?,
                )
            }
            "symmetry" => {
                symmetry = SymmetryClass::from_name(value)
                    .ok_or_else(|| bad(format!("unknown symmetry `{value}`")))?
            }
            "radii" => {
                radii = Some(
                    value
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(num_err)?,
                )
            }
            "symbol" => {
                let f: Vec<&str> = value.split(',').map(str::trim).collect();
                if f.len() != 3 {
                    return Err(bad(format!(
                        "line {}: expected ring, angle, label",
                        lineno + 1
                    )));
                }
                let ring = f[0]
                    .parse()
                    .map_err(|_| bad(format!("line {}: bad ring", lineno + 1)))?;
                let angle: f64 = f[1].parse().map_err(num_err)?;
                let label: u32 = f[2]
                    .parse()
                    .map_err(|_| bad(format!("line {}: bad label", lineno + 1)))?;
                if label >= 64 {
                    return Err(Error::LabelOutOfRange(label));
                }
                records.push((ring, angle, label as u8));
            }
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }
    let counts = layout.ok_or_else(|| bad("missing layout".into()))?;
    let radii = radii.ok_or_else(|| bad("missing radii".into()))?;
    let layout = RingLayout::new(counts)?;
    if records.len() != layout.size() {
        return Err(bad(format!(
            "{} symbols for layout {layout}",
            records.len()
        )));
    }
    let mut angles = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for (index, &(ring, angle, label)) in records.iter().enumerate() {
        if ring != layout.ring_of(index) {
            return Err(bad(format!("symbol {index} is listed on ring {ring}")));
        }
        angles.push(if angle >= TAU { angle - TAU } else { angle });
        labels.push(label);
    }
    let mapping = Mapping::new(layout, labels)?;
    let loose = Constellation::new(radii, angles, mapping.clone(), symmetry)?;
    if symmetry == SymmetryClass::None {
        return Ok(loose);
    }
    decode(&encode_with_tolerance(&loose, IMPORT_TOLERANCE)?, &mapping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_uniform, BundledMapping};

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(std::f64::consts::FRAC_PI_4), "0.785398163397");
        assert_eq!(sig12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(sig12(0.0), "0");
    }

    #[test]
    fn export_import_restores_symmetric_constellation() {
        let m = BundledMapping::Proposed4_12_20_28.mapping();
        let c = build_uniform(
            m.layout(),
            &[0.3, 0.55, 0.8, 1.0],
            &m,
            SymmetryClass::Vertical,
        )
        .unwrap();
        let back = parse_constellation(&write_constellation(&c)).unwrap();
        assert_eq!(back.mapping(), c.mapping());
        assert_eq!(back.radii(), c.radii());
        for (a, b) in back.angles().iter().zip(c.angles()) {
            assert!((a - b).abs() < 1e-11);
        }
        // re-folded: mirror images are exact again
        assert!(crate::geometry::encode(&back).is_ok());
    }

    #[test]
    fn import_rejects_garbage() {
        assert!(parse_constellation("layout = 2\nradii = 1\nsymbol = 0, 0.0, 0\n").is_err());
        assert!(parse_constellation("bogus = 1\n").is_err());
    }
}
