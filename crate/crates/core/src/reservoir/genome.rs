use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Activation, ReservoirError, Result};

pub const DEFAULT_LEAK_RATE: f64 = 0.5;
pub const DEFAULT_DENSITY: f64 = 0.3;
pub const DEFAULT_SPECTRAL_RADIUS: f64 = 0.9;
pub const DEFAULT_INPUT_SCALE: f64 = 1.0;

/// Searchable description of a stacked reservoir.
///
/// Layer `l` (0-based) is driven by the input when `l == 0`, otherwise by the
/// current state of layer `l - 1`, plus any skip connections `(from, l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirGenome {
    pub layer_sizes: Vec<usize>,
    pub leak_rates: Vec<f64>,
    pub activations: Vec<Activation>,
    /// Fraction of non-zero recurrent connections in every layer.
    pub density: f64,
    pub spectral_radius: f64,
    pub input_scale: f64,
    /// Extra feed-forward links between non-adjacent layers, `from < to`.
    pub inter_layer_skips: BTreeSet<(usize, usize)>,
    pub seed: u64,
}

impl ReservoirGenome {
    /// Genome with the given layer sizes and default hyperparameters
    /// (tanh, leak 0.5, density 0.3, spectral radius 0.9, input scale 1).
    pub fn from_sizes(layer_sizes: Vec<usize>, seed: u64) -> Self {
        let n = layer_sizes.len();
        Self {
            layer_sizes,
            leak_rates: vec![DEFAULT_LEAK_RATE; n],
            activations: vec![Activation::Tanh; n],
            density: DEFAULT_DENSITY,
            spectral_radius: DEFAULT_SPECTRAL_RADIUS,
            input_scale: DEFAULT_INPUT_SCALE,
            inter_layer_skips: BTreeSet::new(),
            seed,
        }
    }

    /// Parses layer-size notation such as `13-11-09` or `(13-11-09)`.
    pub fn parse_sizes(notation: &str) -> Result<Vec<usize>> {
        let body = notation.trim().trim_start_matches('(').trim_end_matches(')');
        let sizes = body
            .split('-')
            .map(|p| p.trim().parse::<usize>().ok().filter(|&s| s > 0))
            .collect::<Option<Vec<_>>>()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| ReservoirError::ParseGenome(notation.to_string()))?;
        Ok(sizes)
    }

    /// Layer sizes as two-digit dash-separated notation, e.g. `11-17-09`.
    pub fn notation(&self) -> String {
        self.layer_sizes.iter().map(|s| format!("{s:02}")).collect::<Vec<_>>().join("-")
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len()
    }

    pub fn total_units(&self) -> usize {
        self.layer_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ReservoirError::InvalidGenome(m));
        let n = self.layer_sizes.len();
        if n == 0 {
            return bad("at least one layer is required".into());
        }
        if self.leak_rates.len() != n || self.activations.len() != n {
            return bad(format!(
                "per-layer lists disagree: {} sizes, {} leak rates, {} activations",
                n,
                self.leak_rates.len(),
                self.activations.len()
            ));
        }
        if self.layer_sizes.contains(&0) {
            return bad("layer sizes must be positive".into());
        }
        if let Some(a) = self.leak_rates.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return bad(format!("leak rate {a} outside (0, 1]"));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad(format!("density {} outside (0, 1]", self.density));
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius < 1.0) {
            return bad(format!("spectral radius {} outside (0, 1)", self.spectral_radius));
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return bad(format!("input scale {} must be positive", self.input_scale));
        }
        if let Some(&(f, t)) = self.inter_layer_skips.iter().find(|&&(f, t)| f >= t || t >= n) {
            return bad(format!("skip ({f}, {t}) must satisfy from < to < {n}"));
        }
        Ok(())
    }
}

impl fmt::Display for ReservoirGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Reservoir ({})", self.notation())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn notation_round_trip() {
        assert_eq!(ReservoirGenome::parse_sizes("(13-11-09)").unwrap(), vec![13, 11, 9]);
        assert_eq!(ReservoirGenome::parse_sizes("13-11-9").unwrap(), vec![13, 11, 9]);
        let g = ReservoirGenome::from_sizes(vec![11, 17, 9], 0);
        assert_eq!(g.notation(), "11-17-09");
        assert_eq!(g.to_string(), "Reservoir (11-17-09)");
        for bad in ["", "13--9", "0-3", "a-b"] {
            assert!(ReservoirGenome::parse_sizes(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn validation() {
        let good = ReservoirGenome::from_sizes(vec![4, 3], 1);
        assert!(good.validate().is_ok());
        let mut g = good.clone();
        g.spectral_radius = 1.0;
        assert!(g.validate().is_err());
        let mut g = good.clone();
        g.density = 0.0;
        assert!(g.validate().is_err());
        let mut g = good.clone();
        g.leak_rates.pop();
        assert!(g.validate().is_err());
        let mut g = good.clone();
        g.inter_layer_skips.insert((1, 1));
        assert!(g.validate().is_err());
        let mut g = good;
        g.inter_layer_skips.insert((0, 1));
        assert!(g.validate().is_ok());
    }
}
