use darkwann_core::seed::derive_seed;
use darkwann_core::shapley::{
    exact_shapley, export_plot_data, permutations_for_draws, sampled_shapley, BackgroundSet, ManifestEntry,
    ModelPredictor, PlotKind, PlotManifest, Predictor, ShapleyExplanation, MAX_EXACT_FEATURES,
};

use super::model::load_model;
use super::*;
use crate::config::DEFAULT_PERMUTATIONS;

/// Bound on |sum(phi) - (prediction - base)| reported for sampled runs. The
/// permutation walk telescopes, so observed gaps are far smaller.
const SAMPLED_TOLERANCE: f64 = 0.02;
const EXACT_TOLERANCE: f64 = 1e-9;

pub fn explain(ctx: &Context, rows: Option<usize>, exact: bool) -> Result<()> {
    let cfg = &ctx.config.shapley;
    let mut art = ctx.artifacts();
    art.guard(&[SHAP_BAR, SHAP_BEESWARM, SHAP_FORCE, SHAP_MANIFEST])?;
    let model = load_model(ctx)?;
    let predictor = ModelPredictor::new(&model)?;
    let names = model.feature_names.clone();
    let test = ctx.raw_split(TEST_CSV)?.select_features(&names)?;
    let train = ctx.raw_split(TRAIN_CSV)?.select_features(&names)?;

    let seed = ctx.config.shapley_seed();
    let background = BackgroundSet::sample(&train.feature_rows(), cfg.background_size, derive_seed(seed, "background", &[]))?;
    let m = names.len();
    let active: Vec<usize> = (0..m).collect();
    let want_exact = exact || cfg.exact;
    let use_exact = want_exact && m <= MAX_EXACT_FEATURES;
    if want_exact && !use_exact {
        ctx.say(format!("note: {m} features exceed the exact limit of {MAX_EXACT_FEATURES}; using sampled mode"));
    }
    let permutations = cfg
        .permutations
        .or(cfg.draws.map(|d| permutations_for_draws(d, m)))
        .unwrap_or(DEFAULT_PERMUTATIONS);

    let n_rows = rows.unwrap_or(cfg.rows).min(test.len());
    if n_rows == 0 {
        return Err(CliError::Data("no test rows to explain".into()));
    }
    let instances: Vec<Vec<f64>> = test.feature_rows().into_iter().take(n_rows).collect();
    let mut explanations: Vec<ShapleyExplanation> = Vec::with_capacity(n_rows);
    for (i, x) in instances.iter().enumerate() {
        let probs = predictor.predict_proba(x);
        let target = cfg.target.unwrap_or_else(|| darkwann_core::reservoir::argmax(&probs));
        let e = if use_exact {
            exact_shapley(&predictor, x, &background, target, &active)?
        } else {
            sampled_shapley(&predictor, x, &background, target, &active, permutations, derive_seed(seed, "row", &[i as u64]))?
        };
        explanations.push(e);
    }

    for (kind, file) in [(PlotKind::Bar, SHAP_BAR), (PlotKind::Beeswarm, SHAP_BEESWARM)] {
        let data = export_plot_data(&explanations, kind, &names)?;
        art.add_with(file, |buf| data.write_csv(buf))?;
    }
    let force = export_plot_data(&explanations[..1], PlotKind::Force, &names)?;
    art.add_with(SHAP_FORCE, |buf| force.write_csv(buf))?;
    let manifest = PlotManifest {
        method: if use_exact { "exact" } else { "sampled" }.into(),
        seed: (!use_exact).then_some(seed),
        permutations: (!use_exact).then_some(permutations),
        background: background.origin().to_string(),
        background_size: background.len(),
        efficiency_tolerance: if use_exact { EXACT_TOLERANCE } else { SAMPLED_TOLERANCE },
        n_evaluations: explanations[0].n_evaluations,
        total_evaluations: explanations.iter().map(|e| e.n_evaluations).sum(),
        files: vec![SHAP_BAR.into(), SHAP_BEESWARM.into(), SHAP_FORCE.into()],
        explanations: explanations.iter().enumerate().map(|(i, e)| ManifestEntry::new(i, e)).collect(),
    };
    art.add_json(SHAP_MANIFEST, &manifest)?;
    art.commit()?;

    ctx.say(format!(
        "explained {n_rows} test rows ({}; {} evaluations each)",
        manifest.method, manifest.n_evaluations
    ));
    if let darkwann_core::shapley::PlotData::Bar(top) = export_plot_data(&explanations, PlotKind::Bar, &names)? {
        for f in top.iter().take(10) {
            ctx.say(format!("  {:<32} {:.5}", f.feature, f.mean_abs_phi));
        }
    }
    Ok(())
}
