//! File formats and atomic output.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use attnflow_core::scenario::RunConfig;
use attnflow_core::Trajectory;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::{CliError, CliResult};

pub const TRAJECTORY_FORMAT: &str = "attnflow-trajectory/1";

/// Contents of `trajectory.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub format: String,
    /// The configuration that produced the run, when known.
    pub config: Option<RunConfig>,
    pub trajectory: Trajectory,
}

/// JSON formatter writing every float with 17 significant digits
/// (`d.dddddddddddddddde±x`), so output bytes depend only on the values.
struct Fixed17<F>(F);

macro_rules! delegate {
    ($($name:ident $(, $arg:ident: $ty:ty)*);* $(;)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl<F: Formatter> Formatter for Fixed17<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    delegate! {
        begin_array;
        end_array;
        begin_array_value, first: bool;
        end_array_value;
        begin_object;
        end_object;
        begin_object_key, first: bool;
        end_object_key;
        begin_object_value;
        end_object_value;
    }
}

pub fn to_json<T: Serialize>(value: &T, pretty: bool) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    let result = if pretty {
        let mut s =
            serde_json::Serializer::with_formatter(&mut out, Fixed17(PrettyFormatter::new()));
        value.serialize(&mut s)
    } else {
        let mut s = serde_json::Serializer::with_formatter(&mut out, Fixed17(CompactFormatter));
        value.serialize(&mut s)
    };
    result.map_err(|e| CliError::Config(format!("cannot serialize output: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::io("cannot create temp file in", dir, e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::io("cannot write", path, e))?;
    tmp.persist(path)
        .map_err(|e| CliError::io("cannot write", path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T, pretty: bool) -> CliResult<()> {
    write_atomic(path, &to_json(value, pretty)?)
}

pub fn ensure_dir(dir: &Path) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io("cannot create directory", dir, e))?;
    Ok(dir.to_path_buf())
}

/// Parses JSON, reporting the field path of the first error.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &Path) -> CliResult<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() && path != "." {
            CliError::InvalidParameter {
                path,
                reason: format!("{inner} (in {})", what.display()),
            }
        } else {
            CliError::Config(format!("cannot parse {}: {inner}", what.display()))
        }
    })
}

pub fn read_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_json(&text, path)
}

pub fn read_trajectory(path: &Path) -> CliResult<TrajectoryFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io("cannot read", path, e))?;
    let file: TrajectoryFile = parse_json(&text, path)?;
    if file.format != TRAJECTORY_FORMAT {
        return Err(CliError::Config(format!(
            "{}: unsupported format {:?}, expected {TRAJECTORY_FORMAT:?}",
            path.display(),
            file.format
        )));
    }
    Ok(file)
}

/// `t,token,x0,...,x{d-1}` rows for every recorded step.
pub fn positions_csv(trajectory: &Trajectory) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "token".to_string()];
    header.extend((0..trajectory.dim()).map(|k| format!("x{k}")));
    let csv_err = |e: csv::Error| CliError::Config(format!("cannot format csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for (t, config) in trajectory.configs.iter().enumerate() {
        for (i, row) in config.rows().enumerate() {
            let mut record = vec![t.to_string(), i.to_string()];
            record.extend(row.iter().map(|x| x.to_string()));
            w.write_record(&record).map_err(csv_err)?;
        }
    }
    w.into_inner()
        .map_err(|e| CliError::Config(format!("cannot format csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let bytes = to_json(&vec![0.1, 1.0, -2.5e-300, 0.0], false).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(
            text,
            "[1.0000000000000001e-1,1.0000000000000000e0,-2.5000000000000000e-300,0.0000000000000000e0]\n"
        );
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, vec![0.1, 1.0, -2.5e-300, 0.0]);
    }

    #[test]
    fn pretty_output_keeps_structure() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<u32>,
        }
        let text = String::from_utf8(
            to_json(
                &S {
                    a: 0.5,
                    b: vec![1, 2],
                },
                true,
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(
            text,
            "{\n  \"a\": 5.0000000000000000e-1,\n  \"b\": [\n    1,\n    2\n  ]\n}\n"
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
