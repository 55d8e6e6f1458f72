use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use super::{RunOutput, RunRecord};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}`; expected csv or json")),
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One row per record. Parameter and outcome columns are the union over all
/// records, prefixed `param.` and `outcome.`; absent entries are empty.
pub fn records_to_csv(records: &[RunRecord]) -> Result<String> {
    let params: BTreeSet<&String> = records.iter().flat_map(|r| r.params.iter().map(|(k, _)| k)).collect();
    let outcomes: BTreeSet<&String> = records.iter().flat_map(|r| r.outcome.keys()).collect();

    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["run_id", "recipe", "seed", "status", "error", "version", "wall_time_s"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(params.iter().map(|k| format!("param.{k}")));
    header.extend(outcomes.iter().map(|k| format!("outcome.{k}")));
    wtr.write_record(&header)?;

    for r in records {
        let mut row = vec![
            r.run_id.clone(),
            r.recipe.to_string(),
            r.seed.to_string(),
            r.status.clone(),
            r.error.clone().unwrap_or_default(),
            r.version.clone(),
            r.wall_time_s.to_string(),
        ];
        row.extend(params.iter().map(|k| r.params.get(k).map(|v| v.to_string()).unwrap_or_default()));
        row.extend(outcomes.iter().map(|k| r.outcome.get(*k).map(cell).unwrap_or_default()));
        wtr.write_record(&row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is valid UTF-8"))
}

pub fn records_to_json(records: &[RunRecord]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(records)?;
    s.push('\n');
    Ok(s)
}

/// Writes `record.<fmt>` plus `trajectory_<id>.csv`, `steps_<id>.csv` and one
/// `<series>_<id>.csv` per series of every run.
pub fn write_outputs(outputs: &[RunOutput], dir: &Path, format: OutputFormat) -> Result<()> {
    fs::create_dir_all(dir)?;
    let records: Vec<RunRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    match format {
        OutputFormat::Csv => fs::write(dir.join("record.csv"), records_to_csv(&records)?)?,
        OutputFormat::Json => fs::write(dir.join("record.json"), records_to_json(&records)?)?,
    }
    for out in outputs {
        let id = &out.record.run_id;
        if let Some(traj) = &out.trajectory {
            traj.write_csv(BufWriter::new(File::create(dir.join(format!("trajectory_{id}.csv")))?))?;
            traj.write_steps_csv(BufWriter::new(File::create(dir.join(format!("steps_{id}.csv")))?))?;
        }
        for s in &out.series {
            let mut wtr = csv::Writer::from_path(dir.join(format!("{}_{id}.csv", s.name)))?;
            wtr.write_record(&s.header)?;
            for row in &s.rows {
                wtr.write_record(row.iter().map(f64::to_string))?;
            }
            wtr.flush()?;
        }
    }
    Ok(())
}
