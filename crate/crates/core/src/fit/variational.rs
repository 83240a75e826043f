//! Online variational EM.

use std::borrow::Cow;

use super::batch::{batch_estep, flat_params};
use super::{apply_floor, class_log_scores, lower_bound, mstep, softmax, warm_start, Algorithm, FitConfig, OnlineFitter};
use crate::error::{Error, Result};
use crate::family::{ModelParams, Natural};
use crate::graph::Graph;
use crate::rng::Rng;
use crate::stats::{argmax, neighbor_masses, PairConvention, SuffStats, Tau};

pub(crate) fn absorbed_view(g: &Graph, m: usize) -> Cow<'_, Graph> {
    if m == g.n() {
        Cow::Borrowed(g)
    } else {
        Cow::Owned(g.prefix(m))
    }
}

/// Soft assignments plus running expected statistics.
#[derive(Clone, Debug)]
pub struct VariationalState {
    tau: Tau,
    stats: SuffStats,
    params: ModelParams,
    nat: Natural,
    convention: PairConvention,
    floor: f64,
    degenerate: bool,
    mstep_every: usize,
    pending: usize,
}

impl VariationalState {
    pub fn warm_start(g: &Graph, q: usize, cfg: &FitConfig, rng: &mut Rng) -> Result<Self> {
        let conv = cfg.convention.effective(g);
        let (mut tau, n0) = warm_start(g, q, cfg, rng)?;
        if cfg.degenerate_tau {
            tau = Tau::one_hot(&tau.argmax(), q);
        }
        let stats = SuffStats::over_prefix(g, &tau, n0, conv);
        let params = mstep(&flat_params(g, q, conv)?, &stats);
        Ok(Self::from_parts(tau, stats, params, cfg, conv))
    }

    /// State resuming from explicit rows and parameters over the first
    /// `tau.n()` nodes of `g`.
    pub fn resume(g: &Graph, tau: Tau, params: ModelParams, cfg: &FitConfig) -> Result<Self> {
        let conv = cfg.convention.effective(g);
        let stats = SuffStats::over_prefix(g, &tau, tau.n(), conv);
        Ok(Self::from_parts(tau, stats, params, cfg, conv))
    }

    fn from_parts(tau: Tau, stats: SuffStats, params: ModelParams, cfg: &FitConfig, convention: PairConvention) -> Self {
        let nat = params.natural();
        VariationalState {
            tau,
            stats,
            params,
            nat,
            convention,
            floor: cfg.tau_floor,
            degenerate: cfg.degenerate_tau,
            mstep_every: cfg.mstep_every,
            pending: 0,
        }
    }

    pub fn stats(&self) -> &SuffStats {
        &self.stats
    }

    pub fn tau_ref(&self) -> &Tau {
        &self.tau
    }

    fn refresh(&mut self) {
        self.params = mstep(&self.params, &self.stats);
        self.nat = self.params.natural();
        self.pending = 0;
    }
}

impl OnlineFitter for VariationalState {
    fn algorithm(&self) -> Algorithm {
        Algorithm::OnlineVem
    }

    fn absorbed(&self) -> usize {
        self.tau.n()
    }

    fn absorb_next(&mut self, g: &Graph) -> Result<()> {
        let i = self.tau.n();
        let q = self.params.q();
        let mut out_mass = vec![0.0; q];
        let mut in_mass = vec![0.0; q];
        let mut row = vec![0.0; q];
        neighbor_masses(g, i, i, &self.tau, &mut out_mass, &mut in_mass);
        let loop_value = g.self_loop(i) as f64;
        class_log_scores(
            &self.nat,
            g.is_directed(),
            self.convention.includes_diagonal(),
            &out_mass,
            &in_mass,
            self.stats.counts(),
            loop_value,
            &mut row,
        );
        if self.degenerate {
            let best = argmax(&row);
            row.fill(0.0);
            row[best] = 1.0;
        } else {
            softmax(&mut row);
            apply_floor(&mut row, self.floor);
        }
        let inc = self.stats.node_increment(&row, &out_mass, &in_mass, loop_value);
        self.stats.apply(&inc);
        self.tau.push_row(&row);
        self.pending += 1;
        if self.pending >= self.mstep_every || self.tau.n() == g.n() {
            self.refresh();
        }
        Ok(())
    }

    fn refine(&mut self, g: &Graph) -> Result<()> {
        let m = self.tau.n();
        let view = absorbed_view(g, m);
        batch_estep(&view, &mut self.tau, &self.params, self.convention, 0.0, 1, self.floor, self.degenerate)?;
        self.stats = SuffStats::over_prefix(&view, &self.tau, m, self.convention);
        self.refresh();
        Ok(())
    }

    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn tau(&self) -> Tau {
        self.tau.clone()
    }

    fn criterion(&self, g: &Graph) -> Result<f64> {
        lower_bound(&absorbed_view(g, self.tau.n()), &self.tau, &self.params, self.convention)
    }

    fn reset_labels(&mut self, g: &Graph, labels: &[usize]) -> Result<()> {
        let m = self.tau.n();
        if labels.len() != m || labels.iter().any(|&z| z >= self.params.q()) {
            return Err(Error::dim("labels do not match the absorbed nodes"));
        }
        self.tau = Tau::one_hot(labels, self.params.q());
        self.stats = SuffStats::over_prefix(&absorbed_view(g, m), &self.tau, m, self.convention);
        self.refresh();
        Ok(())
    }

    fn clone_box(&self) -> Box<dyn OnlineFitter> {
        Box::new(self.clone())
    }
}
