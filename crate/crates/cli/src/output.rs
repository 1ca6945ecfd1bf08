//! File emission. Floats are always written with 17 significant digits.

use std::fs;
use std::path::Path;

use fluctlab::distributions::EnergyDistribution;
use fluctlab::thermo::FluctuationReport;

use crate::CliError;

/// 17 significant digits, round-trip exact.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn json_float(x: f64) -> String {
    if x.is_finite() {
        float(x)
    } else {
        "null".into()
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Metadata echoed at the top of a report document.
pub struct ReportHeader<'a> {
    pub name: &'a str,
    pub dim: usize,
    pub beta: f64,
    pub seed: u64,
    pub channel: &'a str,
    pub unital: bool,
    pub threshold: f64,
}

pub fn report_json(h: &ReportHeader, r: &FluctuationReport) -> String {
    let violations = r.violations(h.threshold);
    let mut out = String::from("{\n");
    out += &format!("  \"name\": {},\n", json_str(h.name));
    out += &format!("  \"dim\": {},\n", h.dim);
    out += &format!("  \"beta\": {},\n", json_float(h.beta));
    out += &format!("  \"seed\": {},\n", h.seed);
    out += &format!("  \"channel\": {},\n", json_str(h.channel));
    out += &format!("  \"unital\": {},\n", h.unital);
    out += &format!("  \"threshold\": {},\n", json_float(h.threshold));
    out += &format!("  \"passed\": {},\n", violations.is_empty());
    let block = |pairs: Vec<(&str, f64)>| {
        pairs
            .iter()
            .map(|(k, v)| format!("    {}: {}", json_str(k), json_float(*v)))
            .collect::<Vec<_>>()
            .join(",\n")
    };
    out += &format!("  \"report\": {{\n{}\n  }},\n", block(r.fields().to_vec()));
    let residuals = r.residuals.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    out += &format!("  \"residuals\": {{\n{}\n  }},\n", block(residuals));
    out += &format!("  \"max_residual\": {},\n", json_float(r.max_residual()));
    let names: Vec<String> = violations.iter().map(|(k, _)| json_str(k)).collect();
    out += &format!("  \"violations\": [{}]\n}}\n", names.join(", "));
    out
}

pub fn distribution_csv(p: &EnergyDistribution) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["delta_u", "mass"])?;
    for a in p.atoms() {
        w.write_record([float(a.delta_u), float(a.mass)])?;
    }
    Ok(finish(w))
}

pub(crate) fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer cannot fail");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

pub fn summary_text(h: &ReportHeader, r: &FluctuationReport) -> String {
    let mut out = format!(
        "scenario {} (d = {}, beta = {}, channel {}, {})\n",
        h.name,
        h.dim,
        h.beta,
        h.channel,
        if h.unital { "unital" } else { "non-unital" }
    );
    for (k, v) in r.fields() {
        out += &format!("  {k:<16} {v:>24.12}\n");
    }
    out += &format!("max residual {:.3e} (threshold {:.1e})\n", r.max_residual(), h.threshold);
    let violations = r.violations(h.threshold);
    if violations.is_empty() {
        out += "all identities hold\n";
    } else {
        for (k, v) in violations {
            out += &format!("VIOLATION {k} = {v:.3e}\n");
        }
    }
    out
}
