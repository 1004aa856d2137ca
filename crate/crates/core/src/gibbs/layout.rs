//! Index structures fixed for the lifetime of a fit: which transitions enter
//! the measurement likelihood, which outcomes are augmented, and which
//! member-waves are at risk of dropout.

use std::ops::Range;

use crate::model::{DyadPanel, HazardSpec, Member};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Full selection model: augmentation, measurement and dropout blocks.
    Selection,
    /// Measurement model only, on transitions whose outcome and both lags
    /// are observed.
    MeasurementOnly,
}

/// A missing outcome updated by data augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugSlot {
    pub member: Member,
    pub dyad: usize,
    pub time: usize,
    /// The slot is the member's dropout wave, so its hazard factor applies.
    pub hazard: bool,
    /// The next wave's transitions use this value as a lag.
    pub next: bool,
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub n_dyads: usize,
    pub n_times: usize,
    /// Measurement transitions `(dyad, time)` per member, grouped by dyad.
    pub rows: [Vec<(usize, usize)>; 2],
    pub dyad_rows: [Vec<Range<usize>>; 2],
    /// Augmentation slots in update order.
    pub slots: Vec<AugSlot>,
    /// At-risk member-waves `(dyad, time, event)` per member, grouped by dyad.
    pub risk: [Vec<(usize, usize, bool)>; 2],
    pub dyad_risk: [Vec<Range<usize>>; 2],
    /// Static hazard features per at-risk row: 1, covariates, transformed lags.
    pub risk_static: [Vec<f64>; 2],
    pub n_static: [usize; 2],
}

impl Layout {
    pub fn new(panel: &DyadPanel, hazard: &HazardSpec, mode: FitMode) -> Layout {
        let n = panel.n_dyads();
        let j = panel.n_times();
        let mut rows = [Vec::new(), Vec::new()];
        let mut dyad_rows = [Vec::with_capacity(n), Vec::with_capacity(n)];
        let mut slots = Vec::new();
        let mut risk = [Vec::new(), Vec::new()];
        let mut dyad_risk = [Vec::with_capacity(n), Vec::with_capacity(n)];
        let n_lags = hazard.n_lags(j);
        let n_static = [0, 1].map(|k| 1 + hazard.covariates[k].len() + n_lags);
        let mut risk_static = [Vec::new(), Vec::new()];

        for i in 0..n {
            let end = panel.last_needed_time(i);
            for m in Member::BOTH {
                let k = m.index();
                let start = rows[k].len();
                for t in 2..=j {
                    let keep = match mode {
                        FitMode::Selection => t <= end,
                        FitMode::MeasurementOnly => {
                            let d_own = panel.dropout_time(m, i);
                            let d_par = panel.dropout_time(m.other(), i);
                            t < d_own && t - 1 < d_par
                        }
                    };
                    if keep {
                        rows[k].push((i, t));
                    }
                }
                dyad_rows[k].push(start..rows[k].len());
            }

            if mode == FitMode::Selection {
                // The earlier dropper is updated first so that the later
                // dropper's terminal draw sees its partner's fresh lag.
                let order = if panel.dropout_time(Member::Second, i)
                    <= panel.dropout_time(Member::First, i)
                {
                    [Member::Second, Member::First]
                } else {
                    [Member::First, Member::Second]
                };
                for m in order {
                    let d = panel.dropout_time(m, i);
                    for t in d..=end {
                        slots.push(AugSlot {
                            member: m,
                            dyad: i,
                            time: t,
                            hazard: t == d,
                            next: t < end,
                        });
                    }
                }
                for m in Member::BOTH {
                    let k = m.index();
                    let start = risk[k].len();
                    let d = panel.dropout_time(m, i);
                    for t in 2..=d.min(j) {
                        risk[k].push((i, t, t == d));
                        risk_static[k].push(1.0);
                        let x = panel.covariates(m, i, t);
                        risk_static[k].extend(hazard.covariates[k].iter().map(|&c| x[c]));
                        for lag in 1..=n_lags {
                            let y = if lag >= t {
                                0.0
                            } else {
                                // lags before the dropout wave are observed
                                hazard
                                    .lag_transform
                                    .apply(panel_outcome(panel, m, i, t - lag))
                            };
                            risk_static[k].push(y);
                        }
                    }
                    dyad_risk[k].push(start..risk[k].len());
                }
            } else {
                for k in 0..2 {
                    dyad_risk[k].push(0..0);
                }
            }
        }

        Layout {
            n_dyads: n,
            n_times: j,
            rows,
            dyad_rows,
            slots,
            risk,
            dyad_risk,
            risk_static,
            n_static,
        }
    }

    pub fn n_rows(&self, member: Member) -> usize {
        self.rows[member.index()].len()
    }
}

fn panel_outcome(panel: &DyadPanel, m: Member, i: usize, t: usize) -> f64 {
    use crate::model::OutcomeSource;
    panel
        .outcome(m, i, t)
        .expect("pre-dropout outcomes are observed")
}
