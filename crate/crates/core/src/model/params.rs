use serde::{Deserialize, Serialize};

use super::panel::{DyadPanel, Member};
use crate::error::{Error, Result};

/// Transition-model coefficients for one member.
///
/// Coefficient order (the column order of the member's design matrix):
/// intercept, own lags, partner lags, own covariates, partner covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberMeasurement {
    pub alpha: f64,
    /// Own-history coefficients, lag 1 first.
    pub beta: Vec<f64>,
    /// Partner-history coefficients, lag 1 first.
    pub gamma: Vec<f64>,
    /// Own-covariate coefficients.
    pub beta_x: Vec<f64>,
    /// Partner-covariate coefficients.
    pub gamma_x: Vec<f64>,
    pub sigma2: f64,
}

impl MemberMeasurement {
    pub fn zeros(order: usize, p_own: usize, p_partner: usize) -> Self {
        MemberMeasurement {
            alpha: 0.0,
            beta: vec![0.0; order],
            gamma: vec![0.0; order],
            beta_x: vec![0.0; p_own],
            gamma_x: vec![0.0; p_partner],
            sigma2: 1.0,
        }
    }

    pub fn n_coefficients(&self) -> usize {
        1 + self.beta.len() + self.gamma.len() + self.beta_x.len() + self.gamma_x.len()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_coefficients());
        v.push(self.alpha);
        v.extend_from_slice(&self.beta);
        v.extend_from_slice(&self.gamma);
        v.extend_from_slice(&self.beta_x);
        v.extend_from_slice(&self.gamma_x);
        v
    }

    pub fn set_coefficients(&mut self, eta: &[f64]) {
        assert_eq!(eta.len(), self.n_coefficients());
        let (q, p, pp) = (self.beta.len(), self.beta_x.len(), self.gamma_x.len());
        self.alpha = eta[0];
        self.beta.copy_from_slice(&eta[1..1 + q]);
        self.gamma.copy_from_slice(&eta[1 + q..1 + 2 * q]);
        self.beta_x.copy_from_slice(&eta[1 + 2 * q..1 + 2 * q + p]);
        self.gamma_x
            .copy_from_slice(&eta[1 + 2 * q + p..1 + 2 * q + p + pp]);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementParams {
    pub members: [MemberMeasurement; 2],
    /// Variance of the shared dyad intercept `b_i`.
    pub tau_b2: f64,
}

impl MeasurementParams {
    pub fn zeros(order: usize, panel: &DyadPanel) -> Self {
        let p1 = panel.n_covariates(Member::First);
        let p2 = panel.n_covariates(Member::Second);
        MeasurementParams {
            members: [
                MemberMeasurement::zeros(order, p1, p2),
                MemberMeasurement::zeros(order, p2, p1),
            ],
            tau_b2: 1.0,
        }
    }

    pub fn member(&self, m: Member) -> &MemberMeasurement {
        &self.members[m.index()]
    }

    pub fn member_mut(&mut self, m: Member) -> &mut MemberMeasurement {
        &mut self.members[m.index()]
    }

    pub fn order(&self) -> usize {
        self.members[0].beta.len()
    }

    pub fn validate(&self) -> Result<()> {
        for m in Member::BOTH {
            let s = self.member(m).sigma2;
            if !(s > 0.0) {
                return Err(Error::Domain(format!(
                    "residual variance for member {} must be positive, got {s}",
                    m.number()
                )));
            }
        }
        if !(self.tau_b2 > 0.0) {
            return Err(Error::Domain(format!(
                "random-intercept variance must be positive, got {}",
                self.tau_b2
            )));
        }
        Ok(())
    }
}

/// Transform applied to lagged outcomes in the dropout hazard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagTransform {
    #[default]
    Identity,
    Square,
}

impl LagTransform {
    #[inline]
    pub fn apply(self, y: f64) -> f64 {
        match self {
            LagTransform::Identity => y,
            LagTransform::Square => y * y,
        }
    }
}

/// How much outcome history enters the hazard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardForm {
    /// No lagged outcomes.
    NoHistory,
    /// The most recent outcome only.
    #[default]
    Reduced,
    /// All previous outcomes, one coefficient per lag.
    FullHistory,
}

/// Structure of the dropout model (which terms are present).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardSpec {
    pub form: HazardForm,
    pub lag_transform: LagTransform,
    /// Whether the current (possibly missing) outcome enters the hazard.
    /// With `false` the coefficient on it is held at zero, i.e. MAR dropout.
    pub current_outcome: bool,
    /// Panel covariate columns used by each member's hazard.
    pub covariates: [Vec<usize>; 2],
}

impl Default for HazardSpec {
    fn default() -> Self {
        HazardSpec {
            form: HazardForm::Reduced,
            lag_transform: LagTransform::Identity,
            current_outcome: true,
            covariates: [Vec::new(), Vec::new()],
        }
    }
}

impl HazardSpec {
    pub fn n_lags(&self, n_times: usize) -> usize {
        match self.form {
            HazardForm::NoHistory => 0,
            HazardForm::Reduced => 1,
            HazardForm::FullHistory => n_times.saturating_sub(1),
        }
    }
}

/// Hazard coefficients for one member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberDropout {
    pub xi: f64,
    pub psi: Vec<f64>,
    /// Lag coefficients, lag 1 first.
    pub delta: Vec<f64>,
    pub phi: f64,
}

impl MemberDropout {
    pub fn zeros(n_psi: usize, n_lags: usize) -> Self {
        MemberDropout {
            xi: 0.0,
            psi: vec![0.0; n_psi],
            delta: vec![0.0; n_lags],
            phi: 0.0,
        }
    }

    /// Block vector `(ξ, ψ, δ, φ)`; `φ` is omitted when `with_phi` is false.
    pub fn coefficients(&self, with_phi: bool) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 + self.psi.len() + self.delta.len());
        v.push(self.xi);
        v.extend_from_slice(&self.psi);
        v.extend_from_slice(&self.delta);
        if with_phi {
            v.push(self.phi);
        }
        v
    }

    pub fn set_coefficients(&mut self, w: &[f64], with_phi: bool) {
        let (p, l) = (self.psi.len(), self.delta.len());
        assert_eq!(w.len(), 1 + p + l + usize::from(with_phi));
        self.xi = w[0];
        self.psi.copy_from_slice(&w[1..1 + p]);
        self.delta.copy_from_slice(&w[1 + p..1 + p + l]);
        if with_phi {
            self.phi = w[1 + p + l];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropoutParams {
    pub members: [MemberDropout; 2],
    /// Variance of the shared dyad dropout effect `c_i`.
    pub tau_c2: f64,
    pub hazard: HazardSpec,
}

impl DropoutParams {
    pub fn zeros(hazard: HazardSpec, n_times: usize) -> Self {
        let l = hazard.n_lags(n_times);
        DropoutParams {
            members: [
                MemberDropout::zeros(hazard.covariates[0].len(), l),
                MemberDropout::zeros(hazard.covariates[1].len(), l),
            ],
            tau_c2: 1.0,
            hazard,
        }
    }

    pub fn member(&self, m: Member) -> &MemberDropout {
        &self.members[m.index()]
    }

    pub fn member_mut(&mut self, m: Member) -> &mut MemberDropout {
        &mut self.members[m.index()]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_c2 > 0.0) {
            return Err(Error::Domain(format!(
                "dropout random-effect variance must be positive, got {}",
                self.tau_c2
            )));
        }
        Ok(())
    }
}

/// Dyad-level random effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomEffects {
    /// Measurement-model intercepts.
    pub b: Vec<f64>,
    /// Dropout-model intercepts.
    pub c: Vec<f64>,
}

impl RandomEffects {
    pub fn zeros(n: usize) -> Self {
        RandomEffects {
            b: vec![0.0; n],
            c: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalPrior {
    pub mean: f64,
    pub variance: f64,
}

/// Priors. Regression and hazard coefficients default to flat priors; the
/// four variance components share an inverse-gamma `IG(a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub ig_shape: f64,
    pub ig_scale: f64,
    /// Informative prior on `φ_1` and `φ_2` (sensitivity analyses).
    pub phi_prior: Option<NormalPrior>,
    /// Independent normal prior on every measurement coefficient; `None` is flat.
    pub coef_prior: Option<NormalPrior>,
    /// Independent normal prior on every hazard coefficient; `None` is flat.
    /// `phi_prior`, when set, takes precedence for `φ`.
    pub dropout_coef_prior: Option<NormalPrior>,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            ig_shape: 0.1,
            ig_scale: 0.1,
            phi_prior: None,
            coef_prior: None,
            dropout_coef_prior: None,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ig_shape > 0.0 && self.ig_scale > 0.0) {
            return Err(Error::Config(format!(
                "inverse-gamma hyperparameters must be positive (a = {}, b = {})",
                self.ig_shape, self.ig_scale
            )));
        }
        for (name, p) in [
            ("phi_prior", self.phi_prior),
            ("coef_prior", self.coef_prior),
            ("dropout_coef_prior", self.dropout_coef_prior),
        ] {
            if let Some(p) = p {
                if !(p.variance > 0.0) || !p.mean.is_finite() {
                    return Err(Error::Config(format!(
                        "{name} needs a finite mean and positive variance"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when every parameter has a proper prior.
    pub fn is_proper(&self) -> bool {
        self.coef_prior.is_some() && self.dropout_coef_prior.is_some()
    }
}

/// Model structure shared by every fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Transition order `q`.
    pub order: usize,
    pub hazard: HazardSpec,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            order: 1,
            hazard: HazardSpec::default(),
        }
    }
}
