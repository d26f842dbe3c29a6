//! One function per subcommand. Each reads its inputs from the output
//! directory, computes everything, then commits its artifacts in one go.

mod data;
mod explain;
mod model;
mod pps;
mod search;

pub use data::{datagen, ingest};
pub use explain::explain;
pub use model::{evaluate, train, EvalSplit};
pub use pps::pps;
pub use search::search;

use std::path::{Path, PathBuf};

use darkwann_core::dataset::{apply_normalize, load_csv, FeatureSchema, FlowDataset, MissingValuePolicy, NormStats};

use crate::artifacts::Artifacts;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const TRAIN_CSV: &str = "train.csv";
pub const VAL_CSV: &str = "val.csv";
pub const TEST_CSV: &str = "test.csv";
pub const NORM_STATS: &str = "norm_stats.json";
pub const SCHEMA: &str = "schema.json";
pub const LOAD_REPORT: &str = "load_report.json";
pub const PPS_MATRIX: &str = "pps_matrix.csv";
pub const SELECTED: &str = "selected_features.txt";
pub const HISTORY: &str = "search_history.csv";
pub const BEST_GENOME: &str = "best_genome.json";
pub const POPULATION: &str = "population.csv";
pub const MODEL: &str = "model.json";
pub const TRAIN_REPORT: &str = "train_report.csv";
pub const TRAIN_CONFUSION: &str = "train_confusion.csv";
pub const EVAL_REPORT: &str = "eval_report.csv";
pub const EVAL_CONFUSION: &str = "eval_confusion.csv";
pub const SHAP_BAR: &str = "shap_bar.csv";
pub const SHAP_BEESWARM: &str = "shap_beeswarm.csv";
pub const SHAP_FORCE: &str = "shap_force.csv";
pub const SHAP_MANIFEST: &str = "shap_manifest.json";
pub const SYNTH_CSV: &str = "synth.csv";
pub const SYNTH_SPEC: &str = "synth_spec.json";

/// Everything a command needs besides its own flags.
pub struct Context {
    pub config: RunConfig,
    pub overwrite: bool,
    pub quiet: bool,
}

impl Context {
    pub fn out(&self) -> &Path {
        &self.config.out_dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out().join(name)
    }

    pub fn artifacts(&self) -> Artifacts {
        Artifacts::new(self.out(), self.overwrite)
    }

    pub fn say(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            println!("{msg}");
        }
    }

    fn require(&self, name: &str, producer: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(CliError::Data(format!("{} not found; run `darkwann {producer}` first", p.display())))
        }
    }

    fn read_json<T: serde::de::DeserializeOwned>(&self, name: &str, producer: &str) -> Result<T> {
        let p = self.require(name, producer)?;
        let text = std::fs::read_to_string(&p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        let s: FeatureSchema = self.read_json(SCHEMA, "ingest")?;
        // re-run constructor checks on the stored schema
        let names: Vec<String> = s.category_names();
        Ok(FeatureSchema::with_category_names(s.names().to_vec(), s.label_name(), &names)?)
    }

    pub fn norm_stats(&self) -> Result<NormStats> {
        self.read_json(NORM_STATS, "ingest")
    }

    /// A split as written by ingest (raw values).
    pub fn raw_split(&self, name: &str) -> Result<FlowDataset> {
        let p = self.require(name, "ingest")?;
        let (ds, _) = load_csv(&p, &self.schema()?, MissingValuePolicy::DropRow)
            .map_err(|e| CliError::from(e).context(p.display()))?;
        Ok(ds)
    }

    /// Selected features when selection is enabled and has been run.
    pub fn feature_selection(&self) -> Result<Option<Vec<String>>> {
        let p = self.path(SELECTED);
        if !self.config.pps.use_selection || !p.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        Ok(Some(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()))
    }

    /// Raw split restricted to the selected features.
    pub fn raw_selected(&self, name: &str) -> Result<FlowDataset> {
        let ds = self.raw_split(name)?;
        match self.feature_selection()? {
            Some(names) => Ok(ds.select_features(&names)?),
            None => Ok(ds),
        }
    }

    /// Normalised split restricted to the selected features.
    pub fn normalized_selected(&self, name: &str) -> Result<FlowDataset> {
        let ds = apply_normalize(&self.raw_split(name)?, &self.norm_stats()?)?;
        match self.feature_selection()? {
            Some(names) => Ok(ds.select_features(&names)?),
            None => Ok(ds),
        }
    }
}
