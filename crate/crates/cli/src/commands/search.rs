use darkwann_core::search::{run_search, write_history_csv, write_population_csv};

use super::*;

pub fn search(ctx: &Context) -> Result<()> {
    let mut art = ctx.artifacts();
    art.guard(&[HISTORY, BEST_GENOME, POPULATION])?;
    let train = ctx.normalized_selected(TRAIN_CSV)?;
    let val = ctx.normalized_selected(VAL_CSV)?;
    let config = ctx.config.search_config();
    let out = run_search(&train, &val, &config)?;
    art.add_with(HISTORY, |buf| write_history_csv(&out.history, buf))?;
    art.add_json(BEST_GENOME, &out.best.genome)?;
    art.add_with(POPULATION, |buf| write_population_csv(&out.population, buf))?;
    art.commit()?;
    for h in &out.history {
        ctx.say(format!(
            "generation {:>3}: best {:.4}  mean {:.4}  complexity {}",
            h.generation, h.best_fitness, h.mean_fitness, h.best_complexity
        ));
    }
    let b = &out.best;
    ctx.say(format!(
        "best: {} fitness {:.4} (min {:.4}), {} connections -> {}",
        b.genome,
        b.fitness_mean,
        b.fitness_min,
        b.complexity,
        ctx.path(BEST_GENOME).display()
    ));
    Ok(())
}
