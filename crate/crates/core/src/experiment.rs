//! End-to-end sweep: baseline first, then scenarios on a worker pool.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::ecg::{electrode_traces, derive_leads, recording_from_traces, LeadOperator, Normalization, QrsRecording};
use crate::eikonal::{EikonalProblem, RootNode};
use crate::error::{Error, Result};
use crate::fiber::{assign_fibers, FiberFrame};
use crate::mesh::Mesh;
use crate::plot::{emit_plots, PlotOutput};
use crate::qrs::{dissimilarity_report, qrs_features, write_feature_csv, DissimilarityReport, QrsFeatures};
use crate::scenario::{build_cv_field, ScenarioSpec, Zone};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub activation: ActivationSummary,
    pub scar_elements: usize,
    pub border_elements: usize,
    pub recording: QrsRecording<f64>,
    pub features: QrsFeatures<f64>,
    /// Largest Einthoven and Goldberger identity residuals.
    pub residuals: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioStatus {
    Ok(Box<ScenarioResult>),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub name: String,
    /// File name of the recording inside the output directory.
    pub recording_file: String,
    pub status: ScenarioStatus,
}

impl ReportEntry {
    pub fn result(&self) -> Option<&ScenarioResult> {
        match &self.status {
            ScenarioStatus::Ok(r) => Some(r),
            ScenarioStatus::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Baseline first, then scenarios in catalogue order.
    pub entries: Vec<ReportEntry>,
    /// Successful non-baseline scenarios against the baseline.
    pub dissimilarity: DissimilarityReport<f64>,
    pub normalization: Normalization<f64>,
}

impl ExperimentReport {
    pub fn baseline(&self) -> &ScenarioResult {
        self.entries[0].result().expect("baseline always succeeds")
    }

    pub fn get(&self, name: &str) -> Option<&ScenarioResult> {
        self.entries.iter().find(|e| e.name == name).and_then(ReportEntry::result)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().filter_map(|e| match &e.status {
            ScenarioStatus::Failed(m) => Some((e.name.as_str(), m.as_str())),
            ScenarioStatus::Ok(_) => None,
        })
    }

    /// One row per entry: status, activation summary, zone sizes and lead identity residuals.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "scenario,status,act_min_ms,act_max_ms,act_mean_ms,qrs_duration_ms,scar_elements,border_elements,einthoven_residual,goldberger_residual,recording,error"
        )?;
        for e in &self.entries {
            match &e.status {
                ScenarioStatus::Ok(r) => writeln!(
                    w,
                    "{},ok,{:.6},{:.6},{:.6},{:.6},{},{},{:.3e},{:.3e},{},",
                    e.name,
                    r.activation.min,
                    r.activation.max,
                    r.activation.mean,
                    r.features.duration,
                    r.scar_elements,
                    r.border_elements,
                    r.residuals.0,
                    r.residuals.1,
                    e.recording_file
                )?,
                ScenarioStatus::Failed(m) => writeln!(w, "{},failed,,,,,,,,,,\"{}\"", e.name, m.replace('"', "'"))?,
            }
        }
        Ok(())
    }

    /// Writes every CSV and SVG; returns the paths written and any plot warnings.
    pub fn write(&self, dir: &Path) -> Result<(Vec<PathBuf>, Vec<String>)> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut emit = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> Result<()>| -> Result<()> {
            let path = dir.join(name);
            let mut w = BufWriter::new(File::create(&path)?);
            f(&mut w)?;
            w.flush()?;
            written.push(path);
            Ok(())
        };
        emit("summary.csv", &|w| self.write_summary_csv(w))?;
        emit("dissimilarity.csv", &|w| self.dissimilarity.write_csv(w))?;
        emit("pairwise.csv", &|w| self.dissimilarity.write_pairwise_csv(w))?;
        let rows: Vec<(String, QrsFeatures<f64>)> =
            self.entries.iter().filter_map(|e| e.result().map(|r| (e.name.clone(), r.features.clone()))).collect();
        emit("features.csv", &|w| write_feature_csv(&rows, w))?;
        for e in &self.entries {
            if let Some(r) = e.result() {
                emit(&e.recording_file, &|w| r.recording.write_csv(w))?;
            }
        }
        let PlotOutput { files, warnings } = emit_plots(self, dir)?;
        written.extend(files);
        Ok((written, warnings))
    }
}

/// Immutable state shared by all scenario runs.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub mesh: Mesh<f64>,
    pub fibers: Vec<FiberFrame<f64>>,
    pub roots: Vec<RootNode<f64>>,
    pub leads: LeadOperator<f64>,
}

fn recording_file(name: &str) -> String {
    format!("qrs_{name}.csv")
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mesh = config.mesh.load()?;
        Self::with_mesh(config, mesh)
    }

    pub fn with_mesh(config: ExperimentConfig, mesh: Mesh<f64>) -> Result<Self> {
        config.validate()?;
        let fibers = assign_fibers(&mesh, config.fibers.alpha_endo, config.fibers.alpha_epi)?;
        let roots = config.roots.iter().map(|r| r.root()).collect::<Result<_>>()?;
        let leads = LeadOperator::for_set(&mesh, &config.electrodes)?;
        Ok(Experiment { config, mesh, fibers, roots, leads })
    }

    fn simulate(&self, spec: &ScenarioSpec<f64>, norm: Option<&Normalization<f64>>) -> Result<(ScenarioResult, Normalization<f64>)> {
        let cv = build_cv_field(&self.mesh, &self.fibers, spec, &self.config.base_cv)?;
        let act = EikonalProblem::new(&self.mesh, &cv)?.solve(&self.roots)?;
        let raw = electrode_traces(&self.leads, &act, &self.config.template, self.config.sample_period)?;
        let norm = match norm {
            Some(n) => *n,
            None => Normalization::from_baseline(&derive_leads(&raw.traces)?)?,
        };
        let recording = recording_from_traces(&raw, &norm)?;
        let features = qrs_features(&recording)?;
        let count = |z: Zone| cv.zones.iter().filter(|&&x| x == z).count();
        let result = ScenarioResult {
            activation: ActivationSummary { min: act.min(), max: act.max(), mean: act.mean() },
            scar_elements: count(Zone::Scar),
            border_elements: count(Zone::Border),
            residuals: recording.identity_residuals(),
            recording,
            features,
        };
        Ok((result, norm))
    }

    /// Runs the configured selection.
    pub fn run(&self) -> Result<ExperimentReport> {
        let specs = self.config.selected_scenarios()?;
        self.run_specs(&specs[0], &specs[1..])
    }

    /// Runs `baseline`, then `scenarios` in the given order.
    ///
    /// A failing scenario is recorded and does not stop the others; a failing
    /// baseline is an error since it fixes the normalisation.
    pub fn run_specs(&self, baseline: &ScenarioSpec<f64>, scenarios: &[ScenarioSpec<f64>]) -> Result<ExperimentReport> {
        let (base, norm) = self.simulate(baseline, None)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.jobs)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        let outcomes: Vec<ScenarioStatus> = pool.install(|| {
            scenarios
                .par_iter()
                .map(|s| match self.simulate(s, Some(&norm)) {
                    Ok((r, _)) => ScenarioStatus::Ok(Box::new(r)),
                    Err(e) => ScenarioStatus::Failed(e.to_string()),
                })
                .collect()
        });
        let mut entries = vec![ReportEntry {
            name: baseline.name.clone(),
            recording_file: recording_file(&baseline.name),
            status: ScenarioStatus::Ok(Box::new(base)),
        }];
        for (s, status) in scenarios.iter().zip(outcomes) {
            entries.push(ReportEntry { name: s.name.clone(), recording_file: recording_file(&s.name), status });
        }
        let ok: Vec<(String, QrsRecording<f64>)> =
            entries[1..].iter().filter_map(|e| e.result().map(|r| (e.name.clone(), r.recording.clone()))).collect();
        let dissimilarity = dissimilarity_report(&entries[0].result().expect("baseline").recording, &ok)?;
        Ok(ExperimentReport { entries, dissimilarity, normalization: norm })
    }
}

/// Builds, runs and writes the experiment described by `config`.
pub fn run_experiment(config: ExperimentConfig) -> Result<(ExperimentReport, Vec<String>)> {
    let dir = config.output_dir.clone();
    let report = Experiment::new(config)?.run()?;
    let (_, warnings) = report.write(&dir)?;
    Ok((report, warnings))
}
