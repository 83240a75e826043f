//! Online SAEM and online CEM.

use rand::Rng as _;

use super::batch::flat_params;
use super::variational::absorbed_view;
use super::{class_log_scores, mstep, softmax, warm_start, Algorithm, FitConfig, OnlineFitter};
use crate::error::{Error, Result};
use crate::family::{complete_log_likelihood_natural, ModelParams, Natural};
use crate::graph::Graph;
use crate::rng::Rng;
use crate::stats::{argmax, neighbor_masses, Assignment, Labels, PairConvention, SuffStats, Tau};
use serde::{Deserialize, Serialize};

/// Label choice for an arriving node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Draw from the conditional.
    #[default]
    Gibbs,
    /// Take the conditional's mode.
    Argmax,
}

/// Hard labels plus running exact statistics.
#[derive(Clone, Debug)]
pub struct HardOnline {
    labels: Labels,
    stats: SuffStats,
    params: ModelParams,
    nat: Natural,
    convention: PairConvention,
    sampling: Sampling,
    rng: Rng,
}

impl HardOnline {
    pub fn warm_start(g: &Graph, q: usize, cfg: &FitConfig, sampling: Sampling, mut rng: Rng) -> Result<Self> {
        let conv = cfg.convention.effective(g);
        let (tau, n0) = warm_start(g, q, cfg, &mut rng)?;
        let labels = Labels::new(tau.argmax(), q)?;
        let stats = SuffStats::over_prefix(g, &labels, n0, conv);
        let params = mstep(&flat_params(g, q, conv)?, &stats);
        let nat = params.natural();
        Ok(HardOnline { labels, stats, params, nat, convention: conv, sampling, rng })
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn stats(&self) -> &SuffStats {
        &self.stats
    }

    /// Conditional of node `i`'s label given the labels of the nodes
    /// `< limit` other than `i` itself, written into `probs`.
    fn conditional(&self, g: &Graph, i: usize, limit: usize, others: &[f64], probs: &mut [f64]) {
        let q = self.params.q();
        let mut out_mass = vec![0.0; q];
        let mut in_mass = vec![0.0; q];
        neighbor_masses(g, i, limit, &self.labels, &mut out_mass, &mut in_mass);
        class_log_scores(
            &self.nat,
            g.is_directed(),
            self.convention.includes_diagonal(),
            &out_mass,
            &in_mass,
            others,
            g.self_loop(i) as f64,
            probs,
        );
    }

    fn choose(&mut self, scores: &mut [f64]) -> usize {
        match self.sampling {
            Sampling::Argmax => argmax(scores),
            Sampling::Gibbs => {
                softmax(scores);
                let u: f64 = self.rng.random();
                let mut acc = 0.0;
                for (k, &p) in scores.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return k;
                    }
                }
                scores.len() - 1
            }
        }
    }

    fn refresh(&mut self) {
        self.params = mstep(&self.params, &self.stats);
        self.nat = self.params.natural();
    }
}

impl OnlineFitter for HardOnline {
    fn algorithm(&self) -> Algorithm {
        match self.sampling {
            Sampling::Gibbs => Algorithm::OnlineSaem,
            Sampling::Argmax => Algorithm::OnlineCem,
        }
    }

    fn absorbed(&self) -> usize {
        self.labels.len()
    }

    fn absorb_next(&mut self, g: &Graph) -> Result<()> {
        let i = self.labels.len();
        let q = self.params.q();
        let mut scores = vec![0.0; q];
        let counts = self.stats.counts().to_vec();
        self.conditional(g, i, i, &counts, &mut scores);
        let z = self.choose(&mut scores);
        self.stats.increment(g, &self.labels, z)?;
        self.labels.push(z);
        self.refresh();
        Ok(())
    }

    fn refine(&mut self, g: &Graph) -> Result<()> {
        let m = self.labels.len();
        let q = self.params.q();
        let mut others = self.stats.counts().to_vec();
        let mut scores = vec![0.0; q];
        for i in 0..m {
            let old = self.labels.get(i);
            others[old] -= 1.0;
            self.conditional(g, i, m, &others, &mut scores);
            let z = self.choose(&mut scores);
            others[z] += 1.0;
            self.labels.set(i, z);
        }
        let view = absorbed_view(g, m);
        self.stats = SuffStats::over_prefix(&view, &self.labels, m, self.convention);
        self.refresh();
        Ok(())
    }

    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn tau(&self) -> Tau {
        Tau::one_hot(self.labels.as_slice(), self.params.q())
    }

    fn criterion(&self, g: &Graph) -> Result<f64> {
        let view = absorbed_view(g, self.labels.len());
        complete_log_likelihood_natural(&view, self.labels.as_slice(), &self.params, self.convention)
    }

    fn reset_labels(&mut self, g: &Graph, labels: &[usize]) -> Result<()> {
        let m = self.labels.len();
        if labels.len() != m {
            return Err(Error::dim("labels do not match the absorbed nodes"));
        }
        self.labels = Labels::new(labels.to_vec(), self.params.q())?;
        self.stats = SuffStats::over_prefix(&absorbed_view(g, m), &self.labels, m, self.convention);
        self.refresh();
        Ok(())
    }

    fn clone_box(&self) -> Box<dyn OnlineFitter> {
        Box::new(self.clone())
    }
}
