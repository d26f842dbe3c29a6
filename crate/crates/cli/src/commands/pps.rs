use darkwann_core::pps::{pps_matrix, select_features, PpsConfig};

use super::*;

fn read_scores(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let name = rec.get(0).unwrap_or("").trim().to_string();
        let raw = rec.get(1).unwrap_or("").trim();
        let score: f64 = raw
            .parse()
            .map_err(|_| CliError::Data(format!("{}: bad score `{raw}` for `{name}`", path.display())))?;
        out.push((name, score));
    }
    Ok(out)
}

pub fn pps(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let mut art = ctx.artifacts();
    let selected = if let Some(path) = &cfg.pps.replay_scores {
        art.guard(&[SELECTED])?;
        select_features(&read_scores(path)?, cfg.pps.threshold)?
    } else {
        art.guard(&[PPS_MATRIX, SELECTED])?;
        let train = ctx.raw_split(TRAIN_CSV)?;
        let label = train.schema().label_name().to_string();
        let mut targets = vec![label.clone()];
        targets.extend(cfg.pps.extra_targets.iter().cloned());
        let pcfg = PpsConfig { folds: cfg.pps.folds, max_depth: cfg.pps.max_depth, seed: cfg.pps_seed() };
        let matrix = pps_matrix(&train, &targets, &pcfg)?;
        art.add_with(PPS_MATRIX, |buf| matrix.write_csv(buf))?;
        let scores = matrix.column_scores(&label).expect("label is a target");
        select_features(&scores, cfg.pps.threshold)?
    };
    let mut text = selected.join("\n");
    text.push('\n');
    art.add(SELECTED, text.into_bytes());
    art.commit()?;
    ctx.say(format!("selected {} features with score > {}", selected.len(), cfg.pps.threshold));
    for name in &selected {
        ctx.say(format!("  {name}"));
    }
    Ok(())
}
