//! CSV output with a self-describing comment header.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::{render_config, ParsedConfig};
use crate::error::{Error, Result};
use crate::experiments::{SweepResult, SweepSpec};

pub const CSV_COLUMNS: [&str; 11] = [
    "scheme",
    "axis_name",
    "axis_value",
    "n_devices",
    "mean_throughput",
    "std_throughput",
    "mean_latency_slots",
    "std_latency_slots",
    "mean_finish_std",
    "nonconverged",
    "reps",
];

/// What produced a results file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    /// Command line or preset name.
    pub source: String,
    pub spec: SweepSpec,
    pub version: &'static str,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(source: impl Into<String>, spec: &SweepSpec) -> Self {
        RunManifest {
            source: source.into(),
            spec: spec.clone(),
            version: env!("CARGO_PKG_VERSION"),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    fn write_header<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "# mmtc-qra {}", self.version)?;
        writeln!(w, "# source: {}", self.source)?;
        writeln!(w, "# timestamp_unix: {}", self.timestamp_unix)?;
        writeln!(w, "# master_seed: {}", self.spec.base.seed)?;
        writeln!(
            w,
            "# aggregation: means over converged episodes; throughput is the mean of per-episode ratios; \
             mean_finish_std is the per-episode sample std of device finish frames, averaged"
        )?;
        for line in render_config(&ParsedConfig::Sweep(self.spec.clone())).lines() {
            writeln!(w, "# config: {line}")?;
        }
        Ok(())
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.9}")
    }
}

/// Write the manifest header, a column row and one row per grid point.
pub fn write_csv<W: Write>(result: &SweepResult, manifest: &RunManifest, mut w: W) -> Result<()> {
    if result.rows.is_empty() {
        return Err(Error::contract("no rows to write"));
    }
    let io_err = |source: io::Error| Error::Io {
        path: "<output>".into(),
        source,
    };
    manifest.write_header(&mut w).map_err(io_err)?;

    let mut csv = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Io {
        path: "<output>".into(),
        source: e.into(),
    };
    csv.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for row in &result.rows {
        csv.write_record([
            row.scheme.to_string(),
            result.axis.to_string(),
            row.axis_value.to_string(),
            row.config.n_devices.to_string(),
            num(row.throughput.mean),
            num(row.throughput.std),
            num(row.latency.mean),
            num(row.latency.std),
            num(row.mean_finish_std),
            row.nonconverged.to_string(),
            row.reps.to_string(),
        ])
        .map_err(csv_err)?;
    }
    csv.flush().map_err(io_err)
}

pub fn emit_csv(result: &SweepResult, manifest: &RunManifest, path: &Path) -> Result<()> {
    let with_path = |e: Error| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    };
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(result, manifest, BufWriter::new(file)).map_err(with_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_sweep, Axis};
    use crate::model::{Scheme, SimConfig};
    use crate::rewards::RewardScheme;

    fn tiny() -> SweepSpec {
        SweepSpec {
            base: SimConfig {
                n_slots: 8,
                n_devices: 8,
                packets_per_device: 3,
                seed: 11,
                ..SimConfig::new(Scheme::PacketBased)
            },
            axis: Axis::LoadingFactor,
            grid: vec![1.0],
            schemes: vec![RewardScheme::PacketBased],
            reps: 3,
            loads: vec![],
        }
    }

    fn render(spec: &SweepSpec) -> String {
        let res = run_sweep(spec, Some(1)).unwrap();
        let mut buf = Vec::new();
        write_csv(&res, &RunManifest::new("test", spec), &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn single_point_gives_one_row() {
        let text = render(&tiny());
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0], CSV_COLUMNS.join(","));
        assert!(data[1].starts_with("packet,loading_factor,1,8,"));
        assert!(text.contains("# master_seed: 11"));
        assert!(text.contains("# config: sweep_axis = loading_factor"));
    }

    #[test]
    fn unwritable_path_is_reported() {
        let spec = tiny();
        let res = run_sweep(&spec, Some(1)).unwrap();
        let path = Path::new("/nonexistent-dir/out.csv");
        let err = emit_csv(&res, &RunManifest::new("t", &spec), path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"), "{err}");
    }

    #[test]
    fn empty_result_is_rejected() {
        let res = SweepResult {
            axis: Axis::LoadingFactor,
            rows: vec![],
        };
        assert!(write_csv(&res, &RunManifest::new("t", &tiny()), Vec::new()).is_err());
    }
}
