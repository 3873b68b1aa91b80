use flipcode::experiments::Curve;
use serde_json::Value;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Ten significant digits, scientific notation: stable across runs and
/// platforms.
fn sig(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn write_curve(dir: &Path, file_name: &str, curve: &Curve) -> io::Result<PathBuf> {
    let mut text = String::from("x,y,y_err,shots\n");
    for i in 0..curve.len() {
        text.push_str(&format!(
            "{},{},{},{}\n",
            sig(curve.x[i]),
            sig(curve.y[i]),
            sig(curve.y_err[i]),
            curve.shots[i]
        ));
    }
    let path = dir.join(file_name);
    fs::write(&path, text)?;
    Ok(path)
}

pub fn write_json(dir: &Path, file_name: &str, value: &Value) -> io::Result<PathBuf> {
    let path = dir.join(file_name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// Fit output file for an experiment: `<name>_fit.json`, collapsing a
/// trailing `_curve` so `gamma_curve` pairs with `gamma_fit.json`.
pub fn fit_file_name(experiment: &str) -> String {
    let stem = experiment.strip_suffix("_curve").unwrap_or(experiment);
    format!("{stem}_fit.json")
}
