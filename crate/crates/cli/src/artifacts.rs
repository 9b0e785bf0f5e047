//! JSON artifacts exchanged between subcommands and their gnuplot rendering.
//!
//! Every artifact is `{"kind": ..., "data": ...}`. `plotdata` turns each
//! input into one whitespace-separated file named after the input stem, with
//! a `#` header naming the columns.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use radial_dirac::asymptotics::AsymptoticComparison;
use radial_dirac::boundedness::RTrace;
use radial_dirac::subordinacy::{Census, SubordinacyReport};
use serde::{Deserialize, Serialize};

use crate::{CliError, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Artifact {
    RTrace(RTrace),
    RatioTail(SubordinacyReport),
    Residuals(AsymptoticComparison),
    Census(Census),
}

impl Artifact {
    pub fn write_dat<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        match self {
            Artifact::RTrace(t) => t.write_table(out),
            Artifact::RatioTail(r) => r.write_table(out),
            Artifact::Residuals(c) => {
                writeln!(out, "# r_window_center residual")?;
                for w in &c.windows {
                    if let Some(res) = w.residual {
                        writeln!(out, "{} {}", w.center, res)?;
                    }
                }
                Ok(())
            }
            Artifact::Census(c) => c.write_table(out),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path.to_path_buf())
}

pub fn write_text(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    fs::write(path, text)?;
    Ok(path.to_path_buf())
}

pub fn read_artifact(path: &Path) -> Result<Artifact, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::Usage(format!(
            "{}: not a known artifact (at `{}`: {})",
            path.display(),
            e.path(),
            e.inner()
        ))
    })
}

pub fn plotdata(inputs: &[PathBuf], out: &Path) -> Result<Outcome, CliError> {
    let artifacts = inputs
        .iter()
        .map(|p| read_artifact(p).map(|a| (p, a)))
        .collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(out)?;
    let mut outcome = Outcome::default();
    for (path, artifact) in artifacts {
        let stem = path
            .file_stem()
            .ok_or_else(|| CliError::Usage(format!("{}: no file name", path.display())))?;
        let target = out.join(stem).with_extension("dat");
        if outcome.written.contains(&target) {
            return Err(CliError::Usage(format!("two inputs map to {}", target.display())));
        }
        let mut w = BufWriter::new(File::create(&target)?);
        artifact.write_dat(&mut w)?;
        w.flush()?;
        outcome.written.push(target);
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use radial_dirac::boundedness::RForm;

    fn trace() -> Artifact {
        Artifact::RTrace(RTrace {
            grid: vec![1.0, 2.0],
            r_values: vec![1.5, 1.25],
            norm_sq: vec![1.0, 1.0],
            lower_bound: vec![1.0, 1.0],
            form: RForm::General,
            eps: None,
            quotient_variations: Vec::new(),
        })
    }

    #[test]
    fn r_trace_has_four_columns() {
        let mut buf = Vec::new();
        trace().write_dat(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# r R norm_sq bound\n"));
        assert_eq!(text.lines().nth(1).unwrap().split_whitespace().count(), 4);
    }

    #[test]
    fn artifact_round_trip() {
        let a = trace();
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.starts_with("{\"kind\":\"r_trace\""));
        assert_eq!(serde_json::from_str::<Artifact>(&json).unwrap(), a);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(serde_json::from_str::<Artifact>("{\"kind\":\"spline\",\"data\":{}}").is_err());
    }
}
