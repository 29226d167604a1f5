use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::spectra::WavenumberAxis;
use crate::{Error, LoadError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExpertSource {
    File(PathBuf),
    Synthetic,
    Inline,
}

/// Expert-chosen feature locations in cm⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertFeatureSet {
    pub wavenumbers: Vec<f64>,
    pub source: ExpertSource,
}

impl ExpertFeatureSet {
    pub fn new(wavenumbers: Vec<f64>, source: ExpertSource) -> Self {
        Self { wavenumbers, source }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut set = parse_expert(file)?;
        set.source = ExpertSource::File(path.to_path_buf());
        Ok(set)
    }

    /// Errors when any location falls outside `[axis.lo(), axis.hi()]`.
    pub fn check_axis(&self, axis: &WavenumberAxis) -> Result<()> {
        match self.wavenumbers.iter().find(|&&w| w < axis.lo() || w > axis.hi()) {
            Some(w) => Err(Error::invalid(format!(
                "expert wavenumber {w} lies outside the axis range [{}, {}]",
                axis.lo(),
                axis.hi()
            ))),
            None => Ok(()),
        }
    }
}

/// One wavenumber per line; blank lines and lines starting with `#` are skipped.
pub fn parse_expert<R: Read>(reader: R) -> Result<ExpertFeatureSet> {
    let mut wavenumbers = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| LoadError::from(csv::Error::from(e)))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => wavenumbers.push(v),
            _ => {
                return Err(LoadError::InvalidExpertLine {
                    line: i + 1,
                    value: t.to_string(),
                }
                .into())
            }
        }
    }
    Ok(ExpertFeatureSet::new(wavenumbers, ExpertSource::Inline))
}

pub fn write_expert<W: Write>(wavenumbers: &[f64], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# expert feature wavenumbers (cm^-1)")?;
    for v in wavenumbers {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        let set = parse_expert("# header\n100.5\n\n  200 \n#x\n3e2\n".as_bytes()).unwrap();
        assert_eq!(set.wavenumbers, vec![100.5, 200.0, 300.0]);
    }

    #[test]
    fn rejects_garbage() {
        let err = parse_expert("1\nfoo\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Load(LoadError::InvalidExpertLine { line: 2, .. })));
        assert!(parse_expert("inf\n".as_bytes()).is_err());
    }

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        write_expert(&[1.25, 1000.0 / 3.0], &mut buf).unwrap();
        assert_eq!(
            parse_expert(buf.as_slice()).unwrap().wavenumbers,
            vec![1.25, 1000.0 / 3.0]
        );
    }

    #[test]
    fn axis_range_check() {
        let axis = WavenumberAxis::new(vec![100.0, 200.0], 7.1).unwrap();
        assert!(ExpertFeatureSet::new(vec![150.0], ExpertSource::Inline)
            .check_axis(&axis)
            .is_ok());
        assert!(ExpertFeatureSet::new(vec![250.0], ExpertSource::Inline)
            .check_axis(&axis)
            .is_err());
    }
}
