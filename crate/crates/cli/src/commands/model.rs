use std::time::Instant;

use darkwann_core::metrics::{evaluate as evaluate_metrics, EvalReport};
use darkwann_core::reservoir::{Prediction, ReservoirGenome, ReservoirModel};

use super::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalSplit {
    Train,
    Val,
    Test,
}

impl EvalSplit {
    fn file(self) -> &'static str {
        match self {
            EvalSplit::Train => TRAIN_CSV,
            EvalSplit::Val => VAL_CSV,
            EvalSplit::Test => TEST_CSV,
        }
    }
}

fn load_genome(path: &Path) -> Result<ReservoirGenome> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let g: ReservoirGenome =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    g.validate().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(g)
}

/// Predictions and report for a raw dataset already restricted to the
/// model's features.
fn score(model: &ReservoirModel, ds: &FlowDataset, train_time_s: f64) -> Result<EvalReport> {
    let preds: Vec<Prediction> = model.predict_rows(&ds.feature_rows())?;
    let predicted: Vec<usize> = preds.iter().map(|p| p.category).collect();
    let probs: Vec<Vec<f64>> = preds.into_iter().map(|p| p.probabilities).collect();
    Ok(evaluate_metrics(&ds.labels(), &predicted, &probs, ds.schema().n_categories(), train_time_s)?)
}

fn add_report(art: &mut crate::artifacts::Artifacts, report: &EvalReport, names: &[String], files: [&str; 2]) -> Result<()> {
    art.add_with(files[0], |buf| report.write_csv(buf))?;
    art.add_with(files[1], |buf| report.confusion.write_csv(names, buf))
}

pub fn train(ctx: &Context, genome: Option<&str>, genome_file: Option<&Path>) -> Result<()> {
    let cfg = &ctx.config;
    let mut art = ctx.artifacts();
    art.guard(&[MODEL, TRAIN_REPORT, TRAIN_CONFUSION])?;
    let genome = match (genome, genome_file.or(cfg.reservoir.genome_file.as_deref())) {
        (Some(notation), _) => {
            let mut c = cfg.clone();
            c.reservoir.genome = notation.to_string();
            c.genome_from_notation()?
        }
        (None, Some(path)) => load_genome(path)?,
        (None, None) => cfg.genome_from_notation()?,
    };
    let train = ctx.normalized_selected(TRAIN_CSV)?;
    let test = ctx.raw_selected(TEST_CSV)?;

    let mut model = ReservoirModel::build(genome, train.n_features(), cfg.encode_mode())?;
    let start = Instant::now();
    model.fit(&train, cfg.reservoir.ridge_c, cfg.reservoir.readout)?;
    let train_time_s = start.elapsed().as_secs_f64();

    let report = score(&model, &test, train_time_s)?;
    art.add_with(MODEL, |buf| model.save(buf))?;
    add_report(&mut art, &report, &model.category_names, [TRAIN_REPORT, TRAIN_CONFUSION])?;
    art.commit()?;
    ctx.say(format!("{} trained on {} records, evaluated on {} test records", model.genome, train.len(), test.len()));
    ctx.say(&report);
    Ok(())
}

/// TT column of the training report, if one exists.
fn recorded_train_time(ctx: &Context) -> Result<f64> {
    let p = ctx.path(TRAIN_REPORT);
    if !p.exists() {
        return Ok(0.0);
    }
    let mut rdr = csv::Reader::from_path(&p)?;
    let col = rdr.headers()?.iter().position(|h| h == "TT");
    let row = rdr.records().next().transpose()?;
    Ok(match (col, row) {
        (Some(c), Some(r)) => r.get(c).and_then(|v| v.parse().ok()).unwrap_or(0.0),
        _ => 0.0,
    })
}

pub fn load_model(ctx: &Context) -> Result<ReservoirModel> {
    let p = ctx.require(MODEL, "train")?;
    let file = std::fs::File::open(&p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
    ReservoirModel::load(std::io::BufReader::new(file)).map_err(|e| CliError::from(e).context(p.display()))
}

pub fn evaluate(ctx: &Context, split: EvalSplit) -> Result<()> {
    let mut art = ctx.artifacts();
    art.guard(&[EVAL_REPORT, EVAL_CONFUSION])?;
    let model = load_model(ctx)?;
    let ds = ctx.raw_split(split.file())?.select_features(&model.feature_names)?;
    let report = score(&model, &ds, recorded_train_time(ctx)?)?;
    add_report(&mut art, &report, &model.category_names, [EVAL_REPORT, EVAL_CONFUSION])?;
    art.commit()?;
    ctx.say(format!("{} on {} ({} records)", model.genome, split.file(), ds.len()));
    ctx.say(&report);
    Ok(())
}
