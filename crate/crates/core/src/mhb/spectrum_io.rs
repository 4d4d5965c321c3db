use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use nalgebra::DMatrix;

use super::ShapeSpectrum;
use crate::error::{Error, Result};

const MAGIC: &str = "mhrecon-spectrum 1";

/// Spectrum text: header lines, then one `λ βx βy βz` row per mode.
pub fn write_spectrum(spectrum: &ShapeSpectrum, eigenvalues: &[f64], mesh_hash: &str) -> Result<String> {
    if eigenvalues.len() < spectrum.len() {
        return Err(Error::Validation(format!(
            "{} eigenvalues for {} coefficients",
            eigenvalues.len(),
            spectrum.len()
        )));
    }
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "mesh_hash {mesh_hash}");
    let _ = writeln!(s, "count {}", spectrum.len());
    let _ = writeln!(s, "band_size {}", spectrum.band_size());
    for i in 0..spectrum.len() {
        let c = spectrum.coeffs.row(i);
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e} {:.16e}", eigenvalues[i], c[0], c[1], c[2]);
    }
    Ok(s)
}

/// Parsed spectrum file: (spectrum, eigenvalues, mesh hash).
pub fn read_spectrum<R: Read>(reader: R) -> Result<(ShapeSpectrum, Vec<f64>, String)> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, l)) => Ok((n + 1, l?)),
            None => Err(Error::Parse { line: 0, msg: format!("missing {what}") }),
        }
    };
    let (n, magic) = next("header")?;
    if magic.trim() != MAGIC {
        return Err(Error::Parse { line: n, msg: "not a spectrum file".into() });
    }
    let field = |(n, l): (usize, String), key: &str| -> Result<String> {
        l.strip_prefix(key)
            .map(|v| v.trim().to_string())
            .ok_or(Error::Parse { line: n, msg: format!("expected `{key}`") })
    };
    let hash = field(next("mesh_hash")?, "mesh_hash")?;
    let count_line = next("count")?;
    let ln = count_line.0;
    let count: usize = field(count_line, "count")?
        .parse()
        .map_err(|_| Error::Parse { line: ln, msg: "bad count".into() })?;
    let band_line = next("band_size")?;
    let ln = band_line.0;
    let band: usize = field(band_line, "band_size")?
        .parse()
        .map_err(|_| Error::Parse { line: ln, msg: "bad band size".into() })?;
    let mut lambda = Vec::with_capacity(count);
    let mut coeffs = DMatrix::zeros(count, 3);
    for i in 0..count {
        let (n, l) = next("spectrum row")?;
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line: n, msg: "bad number".into() })?;
        if vals.len() != 4 {
            return Err(Error::Parse { line: n, msg: format!("expected 4 columns, found {}", vals.len()) });
        }
        lambda.push(vals[0]);
        for c in 0..3 {
            coeffs[(i, c)] = vals[c + 1];
        }
    }
    Ok((ShapeSpectrum::new(coeffs, band), lambda, hash))
}
