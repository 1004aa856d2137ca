//! One Gibbs sweep: data augmentation, conjugate measurement updates and
//! Metropolis updates for the dropout model.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::config::{FaultInjection, SamplerConfig};
use super::layout::{FitMode, Layout};
use crate::error::{Error, Result};
use crate::model::{
    dot, CompletedOutcomes, DropoutParams, DyadPanel, MeasurementParams, Member, ModelSpec,
    NormalPrior, RandomEffects,
};
use crate::rng::SimRng;
use crate::stats::{inv_gamma, log_hazard_pair, logistic, normal_logpdf, std_normal};

/// Everything the chain updates.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    pub measurement: MeasurementParams,
    pub dropout: DropoutParams,
    pub effects: RandomEffects,
    /// Observed outcomes plus the current augmented values.
    pub outcomes: CompletedOutcomes,
}

impl SamplerState {
    /// Coefficients zero, variances one, random effects zero and missing
    /// outcomes filled by carrying the last value forward.
    pub fn initial(panel: &DyadPanel, model: &ModelSpec, layout: &Layout) -> SamplerState {
        let mut outcomes = CompletedOutcomes::from_panel(panel);
        for s in &layout.slots {
            let prev = outcomes.get(s.member, s.dyad, s.time - 1);
            outcomes.set(s.member, s.dyad, s.time, prev);
        }
        SamplerState {
            measurement: MeasurementParams::zeros(model.order, panel),
            dropout: DropoutParams::zeros(model.hazard.clone(), panel.n_times()),
            effects: RandomEffects::zeros(panel.n_dyads()),
            outcomes,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Counter {
    pub accepted: u64,
    pub proposed: u64,
}

impl Counter {
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Random-walk proposal for one member's hazard coefficients.
#[derive(Debug, Clone)]
struct BlockProposal {
    chol: DMatrix<f64>,
    log_scale: f64,
}

pub struct Sampler<'a> {
    panel: &'a DyadPanel,
    config: SamplerConfig,
    mode: FitMode,
    layout: Layout,
    pub state: SamplerState,
    rng: SimRng,
    proposals: [BlockProposal; 2],
    c_log_scale: Vec<f64>,
    pub aug_counter: Counter,
    pub block_counter: [Counter; 2],
    pub c_counter: Counter,
    iteration: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(
        panel: &'a DyadPanel,
        model: &ModelSpec,
        config: &SamplerConfig,
        mode: FitMode,
        rng: SimRng,
    ) -> Result<Sampler<'a>> {
        let layout = Layout::new(panel, &model.hazard, mode);
        let state = SamplerState::initial(panel, model, &layout);
        Sampler::with_state(panel, model, config, mode, rng, state)
    }

    pub fn with_state(
        panel: &'a DyadPanel,
        model: &ModelSpec,
        config: &SamplerConfig,
        mode: FitMode,
        rng: SimRng,
        state: SamplerState,
    ) -> Result<Sampler<'a>> {
        if model.order != 1 {
            return Err(Error::UnsupportedOrder(model.order));
        }
        for m in Member::BOTH {
            for &c in &model.hazard.covariates[m.index()] {
                if c >= panel.n_covariates(m) {
                    return Err(Error::Config(format!(
                        "hazard covariate index {c} out of range for member {}",
                        m.number()
                    )));
                }
            }
        }
        config.prior.validate()?;
        let layout = Layout::new(panel, &model.hazard, mode);
        let proposals = [0, 1].map(|k| {
            let d = layout.n_static[k] + usize::from(model.hazard.current_outcome);
            BlockProposal {
                chol: DMatrix::identity(d, d) * config.adaptation.initial_block_sd,
                log_scale: 0.0,
            }
        });
        let c_sd = config.adaptation.initial_c_sd.ln();
        let mut sampler = Sampler {
            panel,
            config: config.clone(),
            mode,
            c_log_scale: vec![c_sd; panel.n_dyads()],
            layout,
            state,
            rng,
            proposals,
            aug_counter: Counter::default(),
            block_counter: [Counter::default(), Counter::default()],
            c_counter: Counter::default(),
            iteration: 0,
        };
        if sampler.adapting() {
            for m in Member::BOTH {
                sampler.refresh_block_proposal(m);
            }
        }
        Ok(sampler)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn mode(&self) -> FitMode {
        self.mode
    }

    pub fn into_parts(self) -> (SamplerState, SimRng) {
        (self.state, self.rng)
    }

    fn adapting(&self) -> bool {
        self.config.adaptation.enabled && self.iteration < self.config.burn_in
    }

    fn has_dropout_model(&self) -> bool {
        self.mode == FitMode::Selection
    }

    /// Transition mean of `y_{k,i,t}` without the dyad intercept.
    #[inline]
    fn mean_wo_b(&self, m: Member, i: usize, t: usize) -> f64 {
        let coef = &self.state.measurement.members[m.index()];
        let g = &self.state.outcomes;
        let p = m.other();
        coef.alpha
            + coef.beta[0] * g.get(m, i, t - 1)
            + coef.gamma[0] * g.get(p, i, t - 1)
            + dot(&coef.beta_x, self.panel.covariates(m, i, t))
            + dot(&coef.gamma_x, self.panel.covariates(p, i, t))
    }

    /// Hazard linear predictor at `(m, i, t)` without the `φ·y` term.
    fn hazard_eta_without_current(&self, m: Member, i: usize, t: usize) -> f64 {
        let drop = &self.state.dropout;
        let coef = drop.member(m);
        let mut eta = self.state.effects.c[i] + coef.xi;
        let x = self.panel.covariates(m, i, t);
        for (psi, &c) in coef.psi.iter().zip(&drop.hazard.covariates[m.index()]) {
            eta += psi * x[c];
        }
        for (lag, d) in coef.delta.iter().enumerate() {
            let l = lag + 1;
            if l < t {
                eta += d * drop
                    .hazard
                    .lag_transform
                    .apply(self.state.outcomes.get(m, i, t - l));
            }
        }
        eta
    }

    /// Steps (1)–(3): redraw every missing outcome from its full conditional.
    ///
    /// The Gaussian part of each conditional (own transition, plus the next
    /// wave's own and partner transitions when the value is used as a lag)
    /// is sampled exactly. At a member's dropout wave the hazard factor is
    /// handled by an independence Metropolis step with the Gaussian as
    /// proposal, so the acceptance ratio is the ratio of hazards.
    pub fn augment_missing(&mut self) {
        let use_hazard = self.state.dropout.hazard.current_outcome
            && self.config.fault != Some(FaultInjection::DropHazardFactor);
        for idx in 0..self.layout.slots.len() {
            let s = self.layout.slots[idx];
            let (m, i, t) = (s.member, s.dyad, s.time);
            let p = m.other();
            let b = self.state.effects.b[i];
            let own = &self.state.measurement.members[m.index()];
            let par = &self.state.measurement.members[p.index()];
            let mut prec = 1.0 / own.sigma2;
            let mut num = (b + self.mean_wo_b(m, i, t)) / own.sigma2;
            if s.next {
                let y = self.state.outcomes.get(m, i, t);
                let r_own = self.state.outcomes.get(m, i, t + 1)
                    - (b + self.mean_wo_b(m, i, t + 1) - own.beta[0] * y);
                let r_par = self.state.outcomes.get(p, i, t + 1)
                    - (b + self.mean_wo_b(p, i, t + 1) - par.gamma[0] * y);
                prec += own.beta[0] * own.beta[0] / own.sigma2
                    + par.gamma[0] * par.gamma[0] / par.sigma2;
                num += own.beta[0] * r_own / own.sigma2 + par.gamma[0] * r_par / par.sigma2;
            }
            let proposal = num / prec + std_normal(&mut self.rng) / prec.sqrt();
            if s.hazard && use_hazard {
                let phi = self.state.dropout.member(m).phi;
                let base = self.hazard_eta_without_current(m, i, t);
                let current = self.state.outcomes.get(m, i, t);
                let log_ratio = log_hazard_pair(base + phi * proposal).0
                    - log_hazard_pair(base + phi * current).0;
                let accept = log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio;
                self.aug_counter.record(accept);
                if accept {
                    self.state.outcomes.set(m, i, t, proposal);
                }
            } else {
                self.state.outcomes.set(m, i, t, proposal);
            }
        }
    }

    /// Step (4): dyad intercepts from their normal full conditionals.
    pub fn draw_b(&mut self) {
        let tau2 = self.state.measurement.tau_b2;
        for i in 0..self.layout.n_dyads {
            let mut prec = 1.0 / tau2;
            let mut num = 0.0;
            for m in Member::BOTH {
                let k = m.index();
                let s2 = self.state.measurement.members[k].sigma2;
                for &(_, t) in &self.layout.rows[k][self.layout.dyad_rows[k][i].clone()] {
                    let r = self.state.outcomes.get(m, i, t) - self.mean_wo_b(m, i, t);
                    prec += 1.0 / s2;
                    num += r / s2;
                }
            }
            self.state.effects.b[i] = num / prec + std_normal(&mut self.rng) / prec.sqrt();
        }
    }

    fn residual_ss(&self, m: Member) -> f64 {
        self.layout.rows[m.index()]
            .iter()
            .map(|&(i, t)| {
                let r = self.state.outcomes.get(m, i, t)
                    - self.state.effects.b[i]
                    - self.mean_wo_b(m, i, t);
                r * r
            })
            .sum()
    }

    /// Step (5): residual variance of member `m`.
    pub fn draw_sigma2(&mut self, m: Member) {
        let prior = &self.config.prior;
        let mut shape = prior.ig_shape + self.layout.n_rows(m) as f64 / 2.0;
        if self.config.fault == Some(FaultInjection::SigmaShapeOffByOne) {
            shape += 1.0;
        }
        let scale = prior.ig_scale + self.residual_ss(m) / 2.0;
        self.state.measurement.members[m.index()].sigma2 = inv_gamma(&mut self.rng, shape, scale);
    }

    /// Step (6).
    pub fn draw_tau_b2(&mut self) {
        let n = self.state.effects.b.len() as f64;
        let ss: f64 = self.state.effects.b.iter().map(|b| b * b).sum();
        let prior = &self.config.prior;
        self.state.measurement.tau_b2 = inv_gamma(
            &mut self.rng,
            prior.ig_shape + n / 2.0,
            prior.ig_scale + ss / 2.0,
        );
    }

    /// Step (11).
    pub fn draw_tau_c2(&mut self) {
        let n = self.state.effects.c.len() as f64;
        let ss: f64 = self.state.effects.c.iter().map(|c| c * c).sum();
        let prior = &self.config.prior;
        self.state.dropout.tau_c2 = inv_gamma(
            &mut self.rng,
            prior.ig_shape + n / 2.0,
            prior.ig_scale + ss / 2.0,
        );
    }

    /// Normal equations `(ZᵀZ, Zᵀ(y − b))` for member `m`.
    pub fn normal_equations(&self, m: Member) -> (DMatrix<f64>, DVector<f64>) {
        let coef = &self.state.measurement.members[m.index()];
        let dim = coef.n_coefficients();
        let mut ztz = DMatrix::<f64>::zeros(dim, dim);
        let mut zty = DVector::<f64>::zeros(dim);
        let mut z = vec![0.0; dim];
        let p = m.other();
        for &(i, t) in &self.layout.rows[m.index()] {
            z[0] = 1.0;
            z[1] = self.state.outcomes.get(m, i, t - 1);
            z[2] = self.state.outcomes.get(p, i, t - 1);
            let xo = self.panel.covariates(m, i, t);
            let xp = self.panel.covariates(p, i, t);
            z[3..3 + xo.len()].copy_from_slice(xo);
            z[3 + xo.len()..].copy_from_slice(xp);
            let y = self.state.outcomes.get(m, i, t) - self.state.effects.b[i];
            for a in 0..dim {
                zty[a] += z[a] * y;
                for c in 0..=a {
                    ztz[(a, c)] += z[a] * z[c];
                }
            }
        }
        for a in 0..dim {
            for c in 0..a {
                ztz[(c, a)] = ztz[(a, c)];
            }
        }
        (ztz, zty)
    }

    /// Steps (7)–(8): measurement coefficients of member `m`.
    pub fn draw_eta(&mut self, m: Member) -> Result<()> {
        let (ztz, zty) = self.normal_equations(m);
        let s2 = self.state.measurement.members[m.index()].sigma2;
        let dim = zty.len();
        let mut prec = &ztz / s2;
        let mut h = &zty / s2;
        match self.config.prior.coef_prior {
            Some(NormalPrior { mean, variance }) => {
                for a in 0..dim {
                    prec[(a, a)] += 1.0 / variance;
                    h[a] += mean / variance;
                }
            }
            None => check_full_rank(&ztz, &self.eta_names(m), m)?,
        }
        let chol = prec.cholesky().ok_or_else(|| Error::Singular {
            member: m.number(),
            column: "design".into(),
            with: Vec::new(),
        })?;
        let mean = chol.solve(&h);
        let z = DVector::from_fn(dim, |_, _| std_normal(&mut self.rng));
        // prec = L Lᵀ, so L⁻ᵀ z has covariance prec⁻¹
        let noise = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .expect("Cholesky factor is non-singular");
        let draw = mean + noise;
        self.state.measurement.members[m.index()].set_coefficients(draw.as_slice());
        Ok(())
    }

    fn eta_names(&self, m: Member) -> Vec<String> {
        let mut names = vec!["alpha".to_string(), "beta".into(), "gamma".into()];
        names.extend(
            self.panel
                .covariate_names(m)
                .iter()
                .map(|c| format!("beta_x.{c}")),
        );
        names.extend(
            self.panel
                .covariate_names(m.other())
                .iter()
                .map(|c| format!("gamma_x.{c}")),
        );
        names
    }

    fn block_dim(&self, m: Member) -> usize {
        self.layout.n_static[m.index()] + usize::from(self.state.dropout.hazard.current_outcome)
    }

    /// Hazard log likelihood of member `m` for coefficient block `w`,
    /// plus the block's log prior.
    fn block_log_target(&self, m: Member, w: &[f64]) -> f64 {
        let k = m.index();
        let ns = self.layout.n_static[k];
        let with_phi = self.state.dropout.hazard.current_outcome;
        let feats = &self.layout.risk_static[k];
        let mut lp = 0.0;
        for (r, &(i, t, event)) in self.layout.risk[k].iter().enumerate() {
            let mut eta = self.state.effects.c[i] + dot(&w[..ns], &feats[r * ns..(r + 1) * ns]);
            if with_phi {
                eta += w[ns] * self.state.outcomes.get(m, i, t);
            }
            let (lh, ls) = log_hazard_pair(eta);
            lp += if event { lh } else { ls };
        }
        lp + self.block_log_prior(w)
    }

    fn block_log_prior(&self, w: &[f64]) -> f64 {
        let prior = &self.config.prior;
        let with_phi = self.state.dropout.hazard.current_outcome;
        let d = w.len();
        let mut lp = 0.0;
        for (a, &v) in w.iter().enumerate() {
            let is_phi = with_phi && a == d - 1;
            let p = if is_phi {
                prior.phi_prior.or(prior.dropout_coef_prior)
            } else {
                prior.dropout_coef_prior
            };
            if let Some(NormalPrior { mean, variance }) = p {
                lp += -0.5 * (v - mean) * (v - mean) / variance;
            }
        }
        lp
    }

    /// Proposal covariance from the inverse Fisher information of the
    /// hazard block at the current state.
    fn refresh_block_proposal(&mut self, m: Member) {
        let k = m.index();
        let d = self.block_dim(m);
        let ns = self.layout.n_static[k];
        let with_phi = self.state.dropout.hazard.current_outcome;
        let w = self.state.dropout.member(m).coefficients(with_phi);
        let feats = &self.layout.risk_static[k];
        let mut info = DMatrix::<f64>::zeros(d, d);
        let mut f = vec![0.0; d];
        for (r, &(i, t, _)) in self.layout.risk[k].iter().enumerate() {
            f[..ns].copy_from_slice(&feats[r * ns..(r + 1) * ns]);
            if with_phi {
                f[ns] = self.state.outcomes.get(m, i, t);
            }
            let lam = logistic(self.state.effects.c[i] + dot(&w, &f));
            let wgt = lam * (1.0 - lam);
            for a in 0..d {
                for c in 0..d {
                    info[(a, c)] += wgt * f[a] * f[c];
                }
            }
        }
        let prior = &self.config.prior;
        for a in 0..d {
            let p = if with_phi && a == d - 1 {
                prior.phi_prior.or(prior.dropout_coef_prior)
            } else {
                prior.dropout_coef_prior
            };
            if let Some(p) = p {
                info[(a, a)] += 1.0 / p.variance;
            }
        }
        let ridge = 1e-6 * (info.trace() / d as f64).max(1.0);
        for a in 0..d {
            info[(a, a)] += ridge;
        }
        let cov = match info.cholesky() {
            Some(c) => c.inverse(),
            None => return,
        };
        if let Some(c) = cov.cholesky() {
            let p = &mut self.proposals[k];
            p.chol = c.l();
            if self.iteration == 0 {
                p.log_scale = (2.38 / (d as f64).sqrt()).ln();
            }
        }
    }

    /// Step (9): random-walk Metropolis on `(ξ_k, ψ_k, δ_k, φ_k)`.
    pub fn draw_dropout_params(&mut self, m: Member) {
        let k = m.index();
        let with_phi = self.state.dropout.hazard.current_outcome;
        let current = self.state.dropout.member(m).coefficients(with_phi);
        let d = current.len();
        let step = {
            let p = &self.proposals[k];
            let z = DVector::from_fn(d, |_, _| std_normal(&mut self.rng));
            (&p.chol * z) * p.log_scale.exp()
        };
        let proposal: Vec<f64> = current
            .iter()
            .zip(step.iter())
            .map(|(a, b)| a + b)
            .collect();
        let log_ratio = self.block_log_target(m, &proposal) - self.block_log_target(m, &current);
        let accept = log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio;
        self.block_counter[k].record(accept);
        if accept {
            self.state
                .dropout
                .member_mut(m)
                .set_coefficients(&proposal, with_phi);
        }
        if self.adapting() {
            let target = self.config.adaptation.block_target;
            let gain = robbins_monro_gain(self.iteration);
            self.proposals[k].log_scale += gain * (f64::from(u8::from(accept)) - target);
        }
    }

    /// Step (10): random-walk Metropolis on each dyad's dropout effect `c_i`.
    pub fn draw_c(&mut self) {
        let with_phi = self.state.dropout.hazard.current_outcome;
        // Linear predictors without c_i, per member and at-risk row.
        let fixed: [Vec<f64>; 2] = [0, 1].map(|k| {
            let m = Member::from_index(k);
            let ns = self.layout.n_static[k];
            let w = self.state.dropout.members[k].coefficients(with_phi);
            let feats = &self.layout.risk_static[k];
            self.layout.risk[k]
                .iter()
                .enumerate()
                .map(|(r, &(i, t, _))| {
                    let mut eta = dot(&w[..ns], &feats[r * ns..(r + 1) * ns]);
                    if with_phi {
                        eta += w[ns] * self.state.outcomes.get(m, i, t);
                    }
                    eta
                })
                .collect()
        });
        let tau2 = self.state.dropout.tau_c2;
        let adapting = self.adapting();
        let gain = robbins_monro_gain(self.iteration);
        let target = self.config.adaptation.scalar_target;
        for i in 0..self.layout.n_dyads {
            let log_target = |c: f64| {
                let mut lp = -0.5 * c * c / tau2;
                for k in 0..2 {
                    let range = self.layout.dyad_risk[k][i].clone();
                    for r in range {
                        let (lh, ls) = log_hazard_pair(fixed[k][r] + c);
                        lp += if self.layout.risk[k][r].2 { lh } else { ls };
                    }
                }
                lp
            };
            let current = self.state.effects.c[i];
            let proposal = current + self.c_log_scale[i].exp() * std_normal(&mut self.rng);
            let log_ratio = log_target(proposal) - log_target(current);
            let accept = log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio;
            self.c_counter.record(accept);
            if accept {
                self.state.effects.c[i] = proposal;
            }
            if adapting {
                self.c_log_scale[i] += gain * (f64::from(u8::from(accept)) - target);
            }
        }
    }

    /// One full iteration of the sampler, steps (1)–(11) in order.
    pub fn sweep(&mut self) -> Result<()> {
        let it = self.iteration;
        let selection = self.has_dropout_model();
        if selection {
            self.augment_missing();
            self.check_finite(it, "augmentation", |s| {
                s.layout
                    .slots
                    .iter()
                    .all(|x| s.state.outcomes.get(x.member, x.dyad, x.time).is_finite())
            })?;
        }
        self.draw_b();
        self.check_finite(it, "b", |s| s.state.effects.b.iter().all(|v| v.is_finite()))?;
        for m in Member::BOTH {
            self.draw_sigma2(m);
        }
        self.check_finite(it, "sigma2", |s| {
            s.state
                .measurement
                .members
                .iter()
                .all(|c| c.sigma2.is_finite() && c.sigma2 > 0.0)
        })?;
        self.draw_tau_b2();
        self.check_finite(it, "tau_b2", |s| {
            s.state.measurement.tau_b2.is_finite() && s.state.measurement.tau_b2 > 0.0
        })?;
        for m in Member::BOTH {
            self.draw_eta(m)?;
            let block = format!("eta.k{}", m.number());
            let coefs = self.state.measurement.member(m).coefficients();
            self.check_block(it, &block, &coefs)?;
        }
        if selection {
            for m in Member::BOTH {
                if self.adapting() && it > 0 && it.is_multiple_of(self.config.adaptation.interval) {
                    self.refresh_block_proposal(m);
                }
                self.draw_dropout_params(m);
                let with_phi = self.state.dropout.hazard.current_outcome;
                let coefs = self.state.dropout.member(m).coefficients(with_phi);
                self.check_block(it, &format!("drop.k{}", m.number()), &coefs)?;
            }
            self.draw_c();
            self.check_finite(it, "c", |s| s.state.effects.c.iter().all(|v| v.is_finite()))?;
            self.draw_tau_c2();
            self.check_finite(it, "tau_c2", |s| {
                s.state.dropout.tau_c2.is_finite() && s.state.dropout.tau_c2 > 0.0
            })?;
        }
        self.iteration += 1;
        Ok(())
    }

    fn check_finite(&self, it: usize, block: &str, ok: impl Fn(&Self) -> bool) -> Result<()> {
        if ok(self) {
            Ok(())
        } else {
            Err(Error::NonFinite {
                iteration: it,
                block: block.to_string(),
            })
        }
    }

    fn check_block(&self, it: usize, block: &str, values: &[f64]) -> Result<()> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                iteration: it,
                block: block.to_string(),
            });
        }
        if let Some(v) = values
            .iter()
            .find(|v| v.abs() > self.config.divergence_bound)
        {
            return Err(Error::Divergence {
                iteration: it,
                block: block.to_string(),
                value: *v,
            });
        }
        Ok(())
    }

    /// Log of the complete-data joint density at the current state (the
    /// dropout part and `c` density only for the selection model).
    pub fn joint_loglik(&self) -> f64 {
        let mut total = 0.0;
        for m in Member::BOTH {
            let s2 = self.state.measurement.member(m).sigma2;
            for &(i, t) in &self.layout.rows[m.index()] {
                let mean = self.state.effects.b[i] + self.mean_wo_b(m, i, t);
                total += normal_logpdf(self.state.outcomes.get(m, i, t), mean, s2);
            }
        }
        let tau_b2 = self.state.measurement.tau_b2;
        total += self
            .state
            .effects
            .b
            .iter()
            .map(|&b| normal_logpdf(b, 0.0, tau_b2))
            .sum::<f64>();
        if self.has_dropout_model() {
            let with_phi = self.state.dropout.hazard.current_outcome;
            for m in Member::BOTH {
                let w = self.state.dropout.member(m).coefficients(with_phi);
                total += self.block_log_target(m, &w) - self.block_log_prior(&w);
            }
            let tau_c2 = self.state.dropout.tau_c2;
            total += self
                .state
                .effects
                .c
                .iter()
                .map(|&c| normal_logpdf(c, 0.0, tau_c2))
                .sum::<f64>();
        }
        total
    }
}

fn robbins_monro_gain(iteration: usize) -> f64 {
    (1.0 + iteration as f64).powf(-0.6)
}

/// Fails with the offending column and the earlier columns it depends on
/// when `ZᵀZ` is (numerically) rank deficient.
fn check_full_rank(ztz: &DMatrix<f64>, names: &[String], m: Member) -> Result<()> {
    let d = ztz.nrows();
    let scale: Vec<f64> = (0..d).map(|a| ztz[(a, a)].sqrt()).collect();
    // Cholesky of the correlation-scaled Gram matrix, column by column.
    let mut l = DMatrix::<f64>::zeros(d, d);
    let mut accepted: Vec<usize> = Vec::new();
    for c in 0..d {
        if scale[c] < 1e-12 {
            return Err(Error::Singular {
                member: m.number(),
                column: names[c].clone(),
                with: Vec::new(),
            });
        }
        let g = |a: usize, b: usize| ztz[(a, b)] / (scale[a] * scale[b]);
        for (ai, &a) in accepted.iter().enumerate() {
            let mut s = g(c, a);
            for bi in 0..ai {
                s -= l[(c, bi)] * l[(a, bi)];
            }
            l[(c, ai)] = s / l[(a, ai)];
        }
        let n = accepted.len();
        let pivot = 1.0 - (0..n).map(|bi| l[(c, bi)] * l[(c, bi)]).sum::<f64>();
        if pivot < 1e-10 {
            // Solve L Lᵀ a = g(·, c) over the accepted columns for the dependency.
            let lk = l.view((0, 0), (n, n)).into_owned();
            let rhs = DVector::from_fn(n, |bi, _| l[(c, bi)]);
            let coef = lk
                .transpose()
                .solve_upper_triangular(&rhs)
                .unwrap_or_else(|| DVector::zeros(n));
            let with = accepted
                .iter()
                .zip(coef.iter())
                .filter(|(_, v)| v.abs() > 1e-6)
                .map(|(&a, _)| names[a].clone())
                .collect();
            return Err(Error::Singular {
                member: m.number(),
                column: names[c].clone(),
                with,
            });
        }
        let row = accepted.len();
        // move the row we just filled into the accepted slot
        for bi in 0..n {
            l[(row, bi)] = l[(c, bi)];
        }
        l[(row, row)] = pivot.sqrt();
        accepted.push(c);
    }
    Ok(())
}
