use std::path::{Path, PathBuf};

use fluctlab::thermo::{analyze, Analysis, REPORT_FIELDS};

use crate::campaign;
use crate::output::{self, distribution_csv, float, report_json, summary_text, ReportHeader};
use crate::scenario::{BatchSpec, ScenarioFile, DEFAULT_RESIDUAL_TOL};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct Options {
    pub out: PathBuf,
    /// Residual threshold; overrides the file's `identity_rtol`.
    pub tol: Option<f64>,
    /// Overrides the seed in the scenario or batch file.
    pub seed: Option<u64>,
}

impl Options {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            out: out.into(),
            tol: None,
            seed: None,
        }
    }

    fn threshold(&self, from_file: Option<f64>, origin: &Path) -> Result<f64, CliError> {
        let tol = self.tol.or(from_file).unwrap_or(DEFAULT_RESIDUAL_TOL);
        if tol.is_finite() && tol > 0.0 {
            Ok(tol)
        } else {
            Err(CliError::Invalid {
                path: origin.to_path_buf(),
                message: format!("residual threshold must be positive, got {tol}"),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Violation,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Violation => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    /// Same text as `summary.txt`.
    pub summary: String,
}

fn load_scenario(path: &Path, opts: &Options) -> Result<ScenarioFile, CliError> {
    let mut file = ScenarioFile::load(path)?;
    if let Some(seed) = opts.seed {
        file.seed = seed;
    }
    Ok(file)
}

fn header<'a>(file: &'a ScenarioFile, a: &'a Analysis, label: &'a str, threshold: f64) -> ReportHeader<'a> {
    ReportHeader {
        name: &file.name,
        dim: file.dim,
        beta: file.beta,
        seed: file.seed,
        channel: label,
        unital: a.unital,
        threshold,
    }
}

/// Analyses one scenario file. Writes `report.json`, `pf.csv`, `pb.csv`
/// (normalized backward), `pb_unnormalized.csv` and `summary.txt`.
pub fn run(path: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let file = load_scenario(path, opts)?;
    let threshold = opts.threshold(file.tolerances.identity_rtol, path)?;
    let scenario = file.resolve(path)?;
    let a = analyze(&scenario)?;
    let h = header(&file, &a, scenario.channel.label(), threshold);
    let summary = summary_text(&h, &a.report);

    output::ensure_dir(&opts.out)?;
    output::write(&opts.out.join("report.json"), &report_json(&h, &a.report))?;
    output::write(&opts.out.join("pf.csv"), &distribution_csv(&a.forward)?)?;
    output::write(&opts.out.join("pb.csv"), &distribution_csv(&a.backward)?)?;
    output::write(&opts.out.join("pb_unnormalized.csv"), &distribution_csv(&a.backward_raw)?)?;
    output::write(&opts.out.join("summary.txt"), &summary)?;

    let status = if a.report.violations(threshold).is_empty() {
        Status::Pass
    } else {
        Status::Violation
    };
    Ok(Outcome { status, summary })
}

/// Parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Beta,
    /// First parameter of the channel preset.
    ChannelP,
}

impl SweepParam {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "beta" => Ok(SweepParam::Beta),
            "channel.p" => Ok(SweepParam::ChannelP),
            other => Err(CliError::UnknownParam(other.to_string())),
        }
    }

    fn name(self) -> &'static str {
        match self {
            SweepParam::Beta => "beta",
            SweepParam::ChannelP => "channel.p",
        }
    }

    fn apply(self, file: &mut ScenarioFile, value: f64, origin: &Path) -> Result<(), CliError> {
        match self {
            SweepParam::Beta => file.beta = value,
            SweepParam::ChannelP => {
                if file.channel.preset.is_none() || file.channel.params.is_empty() {
                    return Err(CliError::Invalid {
                        path: origin.to_path_buf(),
                        message: "channel.p sweeps need a preset channel with at least one parameter".into(),
                    });
                }
                file.channel.params[0] = value;
            }
        }
        Ok(())
    }
}

/// Re-runs a scenario once per value and writes one row per value to `sweep.csv`.
pub fn sweep(path: &Path, param: &str, values: &[f64], opts: &Options) -> Result<Outcome, CliError> {
    let param = SweepParam::parse(param)?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::EmptySweep);
    }
    let base = load_scenario(path, opts)?;
    let threshold = opts.threshold(base.tolerances.identity_rtol, path)?;

    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut file = base.clone();
        param.apply(&mut file, value, path)?;
        let scenario = file.resolve(path)?;
        rows.push((value, analyze(&scenario)?));
    }

    let residual_names: Vec<String> = rows[0].1.report.residuals.keys().cloned().collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head: Vec<&str> = vec![param.name(), "unital"];
    head.extend(REPORT_FIELDS);
    head.extend(residual_names.iter().map(String::as_str));
    head.extend(["max_residual", "passed"]);
    w.write_record(&head)?;

    let mut summary = format!("sweep of {} over {} value(s) on {}\n", param.name(), values.len(), base.name);
    let mut failed = 0;
    for (value, a) in &rows {
        let r = &a.report;
        let passed = r.violations(threshold).is_empty();
        failed += usize::from(!passed);
        let mut record = vec![float(*value), a.unital.to_string()];
        record.extend(r.fields().iter().map(|(_, v)| float(*v)));
        record.extend(residual_names.iter().map(|k| float(r.residuals[k])));
        record.extend([float(r.max_residual()), passed.to_string()]);
        w.write_record(&record)?;
        summary += &format!(
            "  {} = {:<10} gamma {:>14.9} X {:>14.9} K {:>12.9} dS {:>14.9} max residual {:.2e}{}\n",
            param.name(),
            value,
            r.gamma,
            r.x,
            r.kl,
            r.delta_s,
            r.max_residual(),
            if passed { "" } else { "  VIOLATION" }
        );
    }
    summary += &format!("{} of {} rows within threshold {:.1e}\n", rows.len() - failed, rows.len(), threshold);

    output::ensure_dir(&opts.out)?;
    output::write(&opts.out.join("sweep.csv"), &output::finish(w))?;
    output::write(&opts.out.join("summary.txt"), &summary)?;
    let status = if failed == 0 { Status::Pass } else { Status::Violation };
    Ok(Outcome { status, summary })
}

/// Runs a randomized campaign. Writes `batch.csv` and `summary.txt`.
pub fn batch(path: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let mut spec = BatchSpec::load(path)?;
    if let Some(seed) = opts.seed {
        spec.seed = seed;
    }
    let threshold = opts.threshold(spec.tolerances.identity_rtol, path)?;
    let results = campaign::evaluate(&spec, threshold)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "dim", "unital", "gamma", "x", "kl", "delta_u", "delta_s", "max_residual"])?;
    let mut aggregate = 0.0f64;
    let mut failures = Vec::new();
    let mut unital = 0;
    for c in &results {
        let r = &c.analysis.report;
        w.write_record([
            c.seed.to_string(),
            c.dim.to_string(),
            c.analysis.unital.to_string(),
            float(r.gamma),
            float(r.x),
            float(r.kl),
            float(r.delta_u),
            float(r.delta_s),
            float(c.max_residual),
        ])?;
        aggregate = if aggregate.is_nan() || c.max_residual.is_nan() {
            f64::NAN
        } else {
            aggregate.max(c.max_residual)
        };
        unital += usize::from(c.analysis.unital);
        if !c.violations.is_empty() {
            failures.push(c);
        }
    }

    let mut summary = format!(
        "batch of {} scenario(s), seeds {}..={}, {} unital\n",
        results.len(),
        campaign::case_seed(&spec, 0),
        campaign::case_seed(&spec, spec.count - 1),
        unital
    );
    summary += &format!("aggregate max residual {} (threshold {})\n", float(aggregate), float(threshold));
    if spec.unital_only {
        let worst = results
            .iter()
            .map(|c| (c.analysis.report.gamma - 1.0).abs())
            .fold(0.0, f64::max);
        summary += &format!("unital check max |gamma - 1| {} (bound {})\n", float(worst), float(campaign::UNITAL_GAMMA_TOL));
    }
    for c in &failures {
        let names: Vec<String> = c.violations.iter().map(|(k, v)| format!("{k} = {v:.3e}")).collect();
        summary += &format!("VIOLATION seed {}: {}\n", c.seed, names.join(", "));
    }
    output::ensure_dir(&opts.out)?;
    output::write(&opts.out.join("batch.csv"), &output::finish(w))?;
    output::write(&opts.out.join("summary.txt"), &summary)?;
    let status = if failures.is_empty() { Status::Pass } else { Status::Violation };
    Ok(Outcome { status, summary })
}
