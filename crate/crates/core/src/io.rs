//! JSON files for measures and point clouds. Floats are written with 17
//! significant digits so that every value round-trips exactly.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::measures::DiscreteMeasure;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use std::io::{self, Write};
use std::path::Path;

/// Formats a float with 17 significant digits (`-inf`, `inf`, `NaN` for non-finite).
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Pretty JSON formatter that writes floats through [`fmt17`].
struct Sig17Formatter<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17Formatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes any value as pretty JSON with 17-digit floats. Non-finite
/// floats become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, Sig17Formatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// How the masses of a file should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightConvention {
    /// masses sum to one
    Probability,
    /// masses are arclength shares, summing to the curve length
    Length,
    Unspecified,
}

/// On-disk measure / point-cloud record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub d: usize,
    pub atoms: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightConvention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
    /// Run metadata (tool, version, flags, seed) attached by the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<serde_json::Value>,
}

impl MeasureFile {
    pub fn from_measure(mu: &DiscreteMeasure) -> Self {
        Self {
            d: mu.dim(),
            atoms: mu.atoms().iter().map(|p| p.0.clone()).collect(),
            masses: mu.masses().to_vec(),
            weights: None,
            provenance: None,
            run: None,
        }
    }

    pub fn into_measure(self) -> Result<DiscreteMeasure> {
        if self.atoms.len() != self.masses.len() {
            return Err(Error::Validation(format!(
                "{} atoms but {} masses",
                self.atoms.len(),
                self.masses.len()
            )));
        }
        for (k, a) in self.atoms.iter().enumerate() {
            if a.len() != self.d {
                return Err(Error::Validation(format!(
                    "atom {k} has {} coordinates, expected {}",
                    a.len(),
                    self.d
                )));
            }
        }
        DiscreteMeasure::new(
            self.d,
            self.atoms.into_iter().map(Point).collect(),
            self.masses,
        )
        .map_err(|e| match e {
            Error::Validation(_) => e,
            other => Error::Validation(other.to_string()),
        })
    }
}

pub fn read_measure_file(path: &Path) -> Result<MeasureFile> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    read_measure_file(path)?.into_measure()
}

pub fn write_measure(path: &Path, mu: &DiscreteMeasure) -> Result<()> {
    write_json(path, &MeasureFile::from_measure(mu))
}
