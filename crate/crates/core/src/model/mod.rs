//! Domain types and exact density evaluation.

mod likelihood;
mod panel;
mod params;

pub(crate) use likelihood::dot;
pub use likelihood::{
    dropout_logprob, hazard, hazard_covariates, hazard_eta_at, hazard_lags,
    hazard_linear_predictor, joint_loglik, measurement_loglik, member_dropout_loglik,
    transition_loglik_term, transition_mean,
};
pub use panel::{CompletedOutcomes, DyadPanel, Member, OutcomeSource, PanelData};
pub use params::{
    DropoutParams, HazardForm, HazardSpec, LagTransform, MeasurementParams, MemberDropout,
    MemberMeasurement, ModelSpec, NormalPrior, PriorSpec, RandomEffects,
};

#[cfg(test)]
mod tests;
