//! Job description: a JSON file, command-line flags, or both, with flags
//! taking precedence field by field.

use std::path::Path;
use std::sync::Arc;

use gauge_core::funcdsl::{catalog_entry, parse, CATALOG_NAMES};
use gauge_core::integrator::{DecomposeOptions, TotalOptions, DEFAULT_ANCHOR_DEPTH, DEFAULT_EPSILONS};
use gauge_core::{Interval, RefinementSchedule, SingularFunctionModel};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Integrate,
    Verify,
    Residues,
    Partition,
    Parse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BuilderKind {
    Anchored,
    #[default]
    Straddle,
    Cousin,
}

/// Every field optional so that a file and flags can be layered.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    #[serde(rename = "F")]
    pub primitive: Option<String>,
    #[serde(rename = "f")]
    pub derivative: Option<String>,
    #[serde(rename = "E")]
    pub exceptional: Option<Vec<f64>>,
    pub span: Option<[f64; 2]>,
    pub catalog: Option<String>,
    pub command: Option<Command>,
    #[serde(alias = "epsilons")]
    pub epsilon: Option<Vec<f64>>,
    pub anchor: Option<f64>,
    pub max_depth: Option<usize>,
    pub tol: Option<f64>,
    pub div_threshold: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<OutputFormat>,
    pub builder: Option<BuilderKind>,
}

impl JobSpec {
    pub fn from_file(path: &Path) -> Result<JobSpec, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read job file {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("job file {}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: JobSpec) -> JobSpec {
        // An explicit function replaces a catalog choice underneath it.
        let base_catalog = if over.primitive.is_some() { None } else { self.catalog };
        JobSpec {
            primitive: over.primitive.or(self.primitive),
            derivative: over.derivative.or(self.derivative),
            exceptional: over.exceptional.or(self.exceptional),
            span: over.span.or(self.span),
            catalog: over.catalog.or(base_catalog),
            command: over.command.or(self.command),
            epsilon: over.epsilon.or(self.epsilon),
            anchor: over.anchor.or(self.anchor),
            max_depth: over.max_depth.or(self.max_depth),
            tol: over.tol.or(self.tol),
            div_threshold: over.div_threshold.or(self.div_threshold),
            seed: over.seed.or(self.seed),
            output: over.output.or(self.output),
            builder: over.builder.or(self.builder),
        }
    }
}

/// A validated job.
#[derive(Debug, Clone)]
pub struct Job {
    pub model: SingularFunctionModel,
    pub epsilons: Vec<f64>,
    pub anchor: Option<f64>,
    pub max_depth: usize,
    pub tol: f64,
    pub div_threshold: f64,
    pub seed: u64,
    pub output: OutputFormat,
    pub builder: BuilderKind,
}

fn parse_def(label: &str, text: &str) -> Result<gauge_core::funcdsl::FunctionDef, CliError> {
    parse(text).map_err(|e| CliError::Parse { label: label.to_owned(), text: text.to_owned(), error: e })
}

impl Job {
    pub fn resolve(spec: JobSpec) -> Result<Job, CliError> {
        // `F` may name a catalog entry when no derivative is given.
        let catalog_name = spec.catalog.clone().or_else(|| {
            spec.primitive.as_deref().filter(|n| spec.derivative.is_none() && CATALOG_NAMES.contains(n)).map(Into::into)
        });
        let (primitive, derivative, default_e, default_span, provenance) = match &catalog_name {
            Some(name) => {
                let entry = catalog_entry(name).map_err(|e| CliError::Usage(e.to_string()))?;
                (
                    entry.primitive.to_owned(),
                    entry.derivative.to_owned(),
                    Some(entry.exceptional.to_vec()),
                    Some([entry.span.0, entry.span.1]),
                    format!("catalog:{name}"),
                )
            }
            None => {
                let primitive = spec
                    .primitive
                    .clone()
                    .ok_or_else(|| CliError::Usage("no function given: use --catalog or --function".into()))?;
                let derivative = spec
                    .derivative
                    .clone()
                    .ok_or_else(|| CliError::Usage("--derivative is required unless a catalog entry is used".into()))?;
                let provenance = format!("F = {primitive}");
                (primitive, derivative, None, None, provenance)
            }
        };
        let f_def = parse_def("F", &primitive)?;
        let df_def = parse_def("f", &derivative)?;

        let [a, b] = spec
            .span
            .or(default_span)
            .ok_or_else(|| CliError::Usage("--span is required for a custom function".into()))?;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(CliError::Usage(format!("span [{a}, {b}] must satisfy a < b")));
        }
        let span = Interval::new(a, b).map_err(|e| CliError::Usage(e.to_string()))?;
        let mut exceptional = spec.exceptional.clone().or(default_e).unwrap_or_default();
        exceptional.sort_by(f64::total_cmp);
        let model = SingularFunctionModel::new(Arc::new(f_def), Arc::new(df_def), &exceptional, span, provenance)
            .map_err(|e| CliError::Usage(e.to_string()))?;

        let epsilons = spec.epsilon.clone().unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
        if epsilons.is_empty() || epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(CliError::Usage("epsilon values must be positive".into()));
        }
        let mut sorted = epsilons.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Usage("epsilon values must be distinct".into()));
        }
        if let Some(r) = spec.anchor {
            if !(r.is_finite() && r > 0.0) {
                return Err(CliError::Usage(format!("anchor radius {r} must be positive")));
            }
        }
        let tol = spec.tol.unwrap_or(1e-6);
        let div_threshold = spec.div_threshold.unwrap_or(1e12);
        if !(tol.is_finite() && tol > 0.0 && div_threshold.is_finite() && div_threshold > 0.0) {
            return Err(CliError::Usage("tol and div-threshold must be positive".into()));
        }
        Ok(Job {
            model,
            epsilons,
            anchor: spec.anchor,
            max_depth: spec.max_depth.unwrap_or(20),
            tol,
            div_threshold,
            seed: spec.seed.unwrap_or(0),
            output: spec.output.unwrap_or_default(),
            builder: spec.builder.unwrap_or_default(),
        })
    }

    pub fn schedule(&self) -> RefinementSchedule {
        let s = RefinementSchedule::for_model(&self.model);
        match self.anchor {
            Some(r) => s.with_radius(r),
            None => s,
        }
    }

    pub fn total_options(&self) -> TotalOptions {
        TotalOptions { epsilons: self.epsilons.clone(), anchor_radius: self.anchor, ..TotalOptions::default() }
    }

    pub fn decompose_options(&self) -> DecomposeOptions {
        let mut opts = DecomposeOptions { total: self.total_options(), schedule: Some(self.schedule()), ..Default::default() };
        for seq in [&mut opts.kh, &mut opts.anchors] {
            seq.tol = self.tol;
            seq.div_threshold = self.div_threshold;
        }
        opts.kh.max_depth = self.max_depth;
        opts.anchors.max_depth = self.max_depth.max(DEFAULT_ANCHOR_DEPTH);
        opts
    }
}
