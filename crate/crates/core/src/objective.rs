use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::instance::Instance;

/// Which fairness (or efficiency) criterion is being optimised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Individual fairness: maximise the minimum match probability.
    Ifm,
    /// Group fairness: maximise the minimum mean match probability of a group.
    Gfm,
    /// Vertex-weighted matching: maximise the weighted sum of match probabilities.
    Vom,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Ifm, Objective::Gfm, Objective::Vom];

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Ifm => "ifm",
            Objective::Gfm => "gfm",
            Objective::Vom => "vom",
        }
    }

    /// Evaluates the objective on per-agent match rates (or masses).
    ///
    /// For IFM, agents without neighbours are left out of the minimum; the
    /// minimum over an empty set is 0.
    pub fn evaluate(self, instance: &Instance, rates: &[f64]) -> f64 {
        match self {
            Objective::Ifm => {
                let m = (0..instance.n_offline())
                    .filter(|&i| !instance.offline_edges(i).is_empty())
                    .map(|i| rates[i])
                    .fold(f64::INFINITY, f64::min);
                if m.is_finite() {
                    m
                } else {
                    0.0
                }
            }
            Objective::Gfm => {
                let m = instance
                    .groups()
                    .iter()
                    .map(|g| group_mean(g, rates))
                    .fold(f64::INFINITY, f64::min);
                if m.is_finite() {
                    m
                } else {
                    0.0
                }
            }
            Objective::Vom => instance
                .weights()
                .iter()
                .zip(rates)
                .map(|(w, r)| w * r)
                .sum(),
        }
    }
}

pub(crate) fn group_mean(group: &[usize], rates: &[f64]) -> f64 {
    group.iter().map(|&i| rates[i]).sum::<f64>() / group.len() as f64
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ifm" => Ok(Objective::Ifm),
            "gfm" => Ok(Objective::Gfm),
            "vom" => Ok(Objective::Vom),
            other => Err(format!("unknown objective `{other}` (expected ifm, gfm or vom)")),
        }
    }
}
