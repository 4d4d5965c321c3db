use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use num_complex::Complex64;

use super::directions::{from_angles, to_angles, DirectionSet};
use crate::error::{Error, Result};
use crate::mesh::Vec3;

const MAGIC: &str = "mhrecon-farfield 1";

/// Far-field values indexed by (wavenumber, incidence, observation).
///
/// Storage is wavenumber-major, then incidence, then observation. For
/// phaseless data only magnitudes are kept (stored as real values).
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldDataset {
    pub wavenumbers: Vec<f64>,
    pub incidences: Vec<Vec3>,
    pub observations: DirectionSet,
    pub values: Vec<Complex64>,
    pub phaseless: bool,
}

impl FarFieldDataset {
    pub fn zeros(wavenumbers: Vec<f64>, incidences: Vec<Vec3>, observations: DirectionSet) -> Self {
        let n = wavenumbers.len() * incidences.len() * observations.len();
        Self { wavenumbers, incidences, observations, values: vec![Complex64::new(0.0, 0.0); n], phaseless: false }
    }

    pub fn index(&self, freq: usize, inc: usize, obs: usize) -> usize {
        (freq * self.incidences.len() + inc) * self.observations.len() + obs
    }

    pub fn get(&self, freq: usize, inc: usize, obs: usize) -> Complex64 {
        self.values[self.index(freq, inc, obs)]
    }

    /// Values of one (wavenumber, incidence) channel.
    pub fn channel(&self, freq: usize, inc: usize) -> &[Complex64] {
        let s = self.index(freq, inc, 0);
        &self.values[s..s + self.observations.len()]
    }

    pub fn channel_mut(&mut self, freq: usize, inc: usize) -> &mut [Complex64] {
        let s = self.index(freq, inc, 0);
        let q = self.observations.len();
        &mut self.values[s..s + q]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// Phaseless view.
    pub fn to_phaseless(&self) -> Self {
        let mut out = self.clone();
        out.values = self.values.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect();
        out.phaseless = true;
        out
    }

    /// Unweighted Euclidean norm of all values.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z *= s);
        out
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.wavenumbers == other.wavenumbers
            && self.incidences.len() == other.incidences.len()
            && self.incidences.iter().zip(&other.incidences).all(|(a, b)| (a - b).norm() < 1e-12)
            && self.observations.len() == other.observations.len()
            && self.observations.directions.iter().zip(&other.observations.directions).all(|(a, b)| (a - b).norm() < 1e-12)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "phaseless {}", self.phaseless);
        let _ = writeln!(s, "wavenumbers {}", self.wavenumbers.len());
        for k in &self.wavenumbers {
            let _ = writeln!(s, "{k:.16e}");
        }
        let _ = writeln!(s, "incidences {}", self.incidences.len());
        for d in &self.incidences {
            let (t, p) = to_angles(d);
            let _ = writeln!(s, "{t:.16e} {p:.16e}");
        }
        let _ = writeln!(s, "observations {}", self.observations.len());
        for (d, w) in self.observations.directions.iter().zip(&self.observations.weights) {
            let (t, p) = to_angles(d);
            let _ = writeln!(s, "{t:.16e} {p:.16e} {w:.16e}");
        }
        let _ = writeln!(s, "values {}", self.values.len());
        for z in &self.values {
            if self.phaseless {
                let _ = writeln!(s, "{:.16e}", z.norm());
            } else {
                let _ = writeln!(s, "{:.16e} {:.16e}", z.re, z.im);
            }
        }
        s
    }

    pub fn from_text<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines().enumerate().filter(|(_, l)| {
            l.as_ref().map(|l| !l.trim().is_empty() && !l.starts_with('#')).unwrap_or(true)
        });
        let mut next = || -> Result<(usize, String)> {
            match lines.next() {
                Some((n, l)) => Ok((n + 1, l?)),
                None => Err(Error::Parse { line: 0, msg: "unexpected end of file".into() }),
            }
        };
        let nums = |(n, l): &(usize, String), count: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse { line: *n, msg: "bad number".into() })?;
            if v.len() != count {
                return Err(Error::Parse { line: *n, msg: format!("expected {count} values, found {}", v.len()) });
            }
            Ok(v)
        };
        let header = |(n, l): (usize, String), key: &str| -> Result<String> {
            l.strip_prefix(key)
                .map(|v| v.trim().to_string())
                .ok_or(Error::Parse { line: n, msg: format!("expected `{key}`") })
        };
        let count = |line: (usize, String), key: &str| -> Result<usize> {
            let n = line.0;
            header(line, key)?.parse().map_err(|_| Error::Parse { line: n, msg: format!("bad {key} count") })
        };

        let first = next()?;
        if first.1.trim() != MAGIC {
            return Err(Error::Parse { line: first.0, msg: "not a far-field file".into() });
        }
        let pl = next()?;
        let ln = pl.0;
        let phaseless = match header(pl, "phaseless")?.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(Error::Parse { line: ln, msg: format!("bad phaseless flag `{other}`") }),
        };
        let nk = count(next()?, "wavenumbers")?;
        let mut wavenumbers = Vec::with_capacity(nk);
        for _ in 0..nk {
            wavenumbers.push(nums(&next()?, 1)?[0]);
        }
        let ni = count(next()?, "incidences")?;
        let mut incidences = Vec::with_capacity(ni);
        for _ in 0..ni {
            let v = nums(&next()?, 2)?;
            incidences.push(from_angles(v[0], v[1]));
        }
        let nq = count(next()?, "observations")?;
        let mut dirs = Vec::with_capacity(nq);
        let mut weights = Vec::with_capacity(nq);
        for _ in 0..nq {
            let v = nums(&next()?, 3)?;
            dirs.push(from_angles(v[0], v[1]));
            weights.push(v[2]);
        }
        let vl = next()?;
        let vline = vl.0;
        let nv = count(vl, "values")?;
        if nv != nk * ni * nq {
            return Err(Error::Parse { line: vline, msg: format!("expected {} values, header says {nv}", nk * ni * nq) });
        }
        let mut values = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = next()?;
            if phaseless {
                values.push(Complex64::new(nums(&line, 1)?[0], 0.0));
            } else {
                let v = nums(&line, 2)?;
                values.push(Complex64::new(v[0], v[1]));
            }
        }
        Ok(Self { wavenumbers, incidences, observations: DirectionSet { directions: dirs, weights }, values, phaseless })
    }
}
