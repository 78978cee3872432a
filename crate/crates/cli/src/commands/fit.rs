use serde::{Deserialize, Serialize};
use zne_core::inference::{extrapolate, FactoryHistory, FitDiagnostics};

use crate::{emit, read_input, CliError, FitArgs};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    scale: f64,
    value: f64,
}

#[derive(Serialize)]
struct Report {
    zne_value: f64,
    diagnostics: FitDiagnostics,
}

/// Reads `scale,value` rows; the header is mandatory.
pub fn read_points(text: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::input(format!("bad CSV: {e}")))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["scale", "value"] {
        return Err(CliError::input(format!(
            "expected header `scale,value`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut scales = Vec::new();
    let mut values = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| CliError::input(format!("row {}: {e}", i + 1)))?;
        scales.push(row.scale);
        values.push(row.value);
    }
    Ok((scales, values))
}

pub fn execute(args: &FitArgs) -> Result<(), CliError> {
    let (scales, values) = read_points(&read_input(&args.data, "data")?)?;
    let history = FactoryHistory::from_pairs(scales, values).map_err(|e| CliError::input(e.to_string()))?;
    let (zne_value, diagnostics) = extrapolate(&args.factory, &history)?;
    let mut text = serde_json::to_string_pretty(&Report { zne_value, diagnostics }).expect("infallible");
    text.push('\n');
    emit(args.output.as_deref(), &text)
}
