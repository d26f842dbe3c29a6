use std::collections::BTreeSet;

use darkwann_core::dataset::{
    fit_normalize, load_csv, stratified_split, synth_generate, write_csv, FeatureSchema, LoadReport,
};
use serde::Serialize;

use super::*;
use crate::config::SchemaKind;

/// Schema for `schema = "header"`: every column but the label is a feature.
fn header_schema(path: &Path, label: &str, categories: &[String]) -> Result<FeatureSchema> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label)
        .ok_or_else(|| CliError::Data(format!("{}: missing label column `{label}`", path.display())))?;
    let names: Vec<String> = headers.iter().enumerate().filter(|&(i, _)| i != label_idx).map(|(_, h)| h.to_string()).collect();
    let categories: Vec<String> = if categories.is_empty() {
        let mut seen = BTreeSet::new();
        for rec in rdr.records() {
            seen.insert(rec?.get(label_idx).unwrap_or("").trim().to_string());
        }
        let ids: Option<Vec<usize>> = seen.iter().map(|s| s.parse().ok()).collect();
        match ids {
            // numeric labels are category ids 0..=max
            Some(ids) => (0..=ids.into_iter().max().unwrap_or(0)).map(|i| i.to_string()).collect(),
            None => seen.into_iter().collect(),
        }
    } else {
        categories.to_vec()
    };
    Ok(FeatureSchema::with_category_names(names, label, &categories)?)
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    source: String,
    load: Option<&'a LoadReport>,
    split_seed: u64,
    train: usize,
    val: usize,
    test: usize,
}

pub fn ingest(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let outputs = [TRAIN_CSV, VAL_CSV, TEST_CSV, NORM_STATS, SCHEMA, LOAD_REPORT];
    let mut art = ctx.artifacts();
    art.guard(&outputs)?;

    let (ds, report, source) = match (&cfg.data.csv, cfg.synth_spec()) {
        (Some(path), _) => {
            let schema = match cfg.data.schema {
                SchemaKind::CicDarknet => FeatureSchema::cic_darknet(),
                SchemaKind::Header => header_schema(path, &cfg.data.label_column, &cfg.data.categories)?,
            };
            let (ds, report) =
                load_csv(path, &schema, cfg.data.missing).map_err(|e| CliError::from(e).context(path.display()))?;
            (ds, Some(report), path.display().to_string())
        }
        (None, Some(spec)) => (synth_generate(&spec)?, None, format!("synthetic blobs, seed {}", spec.seed)),
        (None, None) => return Err(CliError::Usage("set data.csv or a [data.synth] section".into())),
    };
    let seed = cfg.split_seed();
    let (train, val, test) = stratified_split(&ds, cfg.data.split, seed)?;
    // statistics come from the training split only
    let (_, stats) = fit_normalize(&train);

    for (name, split) in [(TRAIN_CSV, &train), (VAL_CSV, &val), (TEST_CSV, &test)] {
        art.add_with(name, |buf| write_csv(split, buf))?;
    }
    art.add_json(NORM_STATS, &stats)?;
    art.add_json(SCHEMA, ds.schema())?;
    let summary = IngestSummary {
        source,
        load: report.as_ref(),
        split_seed: seed,
        train: train.len(),
        val: val.len(),
        test: test.len(),
    };
    art.add_json(LOAD_REPORT, &summary)?;
    art.commit()?;
    if let Some(r) = &report {
        ctx.say(r);
    }
    ctx.say(format!(
        "split {} records into train {} / val {} / test {} -> {}",
        ds.len(),
        train.len(),
        val.len(),
        test.len(),
        ctx.out().display()
    ));
    Ok(())
}

#[derive(Serialize)]
struct SynthManifest {
    #[serde(flatten)]
    spec: darkwann_core::dataset::SynthSpec,
    informative_features: Vec<String>,
}

pub fn datagen(ctx: &Context) -> Result<()> {
    let spec = ctx.config.synth_spec().ok_or_else(|| CliError::Usage("datagen needs a [data.synth] section".into()))?;
    let mut art = ctx.artifacts();
    art.guard(&[SYNTH_CSV, SYNTH_SPEC])?;
    let ds = synth_generate(&spec)?;
    let names = spec.feature_names();
    let informative_features = spec.informative_features().into_iter().map(|i| names[i].clone()).collect();
    art.add_with(SYNTH_CSV, |buf| write_csv(&ds, buf))?;
    art.add_json(SYNTH_SPEC, &SynthManifest { spec, informative_features })?;
    art.commit()?;
    ctx.say(format!("wrote {} synthetic records to {}", ds.len(), ctx.path(SYNTH_CSV).display()));
    Ok(())
}
