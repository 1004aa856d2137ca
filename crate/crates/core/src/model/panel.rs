use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two members of a dyad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Member {
    First,
    Second,
}

impl Member {
    pub const BOTH: [Member; 2] = [Member::First, Member::Second];

    pub fn index(self) -> usize {
        match self {
            Member::First => 0,
            Member::Second => 1,
        }
    }

    pub fn from_index(index: usize) -> Member {
        if index == 0 {
            Member::First
        } else {
            Member::Second
        }
    }

    /// The member number used in files and parameter names (1 or 2).
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Member> {
        match n {
            1 => Some(Member::First),
            2 => Some(Member::Second),
            _ => None,
        }
    }

    pub fn other(self) -> Member {
        match self {
            Member::First => Member::Second,
            Member::Second => Member::First,
        }
    }
}

/// Anything that can answer "what is y for member k of dyad i at time t".
///
/// Times are 1-based waves. `None` means the value is not available, either
/// because it was never observed or because it has not been augmented.
pub trait OutcomeSource {
    fn outcome(&self, member: Member, dyad: usize, time: usize) -> Option<f64>;
}

/// Raw material for a [`DyadPanel`]; validated by [`DyadPanel::new`].
#[derive(Debug, Clone)]
pub struct PanelData {
    pub dyad_ids: Vec<String>,
    pub n_times: usize,
    /// Covariate column names for each member.
    pub covariate_names: [Vec<String>; 2],
    /// Per member, `outcomes[k][i * n_times + (t - 1)]`.
    pub outcomes: [Vec<Option<f64>>; 2],
    /// Per member, `covariates[k][(i * n_times + (t - 1)) * p_k + c]`.
    pub covariates: [Vec<f64>; 2],
}

/// Observed outcomes and covariates for `n` dyads over `J` waves, with
/// monotone dropout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadPanel {
    dyad_ids: Vec<String>,
    n_times: usize,
    covariate_names: [Vec<String>; 2],
    outcomes: [Vec<Option<f64>>; 2],
    covariates: [Vec<f64>; 2],
    dropout: [Vec<usize>; 2],
}

impl DyadPanel {
    pub fn new(data: PanelData) -> Result<Self> {
        let PanelData {
            dyad_ids,
            n_times,
            covariate_names,
            outcomes,
            covariates,
        } = data;
        let n = dyad_ids.len();
        if n_times < 2 && n > 0 {
            return Err(Error::InvalidPanel(format!(
                "need at least 2 waves, got {n_times}"
            )));
        }
        let mut dropout = [Vec::with_capacity(n), Vec::with_capacity(n)];
        for m in Member::BOTH {
            let k = m.index();
            let p = covariate_names[k].len();
            if outcomes[k].len() != n * n_times {
                return Err(Error::InvalidPanel(format!(
                    "member {} outcome block has {} cells, expected {}",
                    m.number(),
                    outcomes[k].len(),
                    n * n_times
                )));
            }
            if covariates[k].len() != n * n_times * p {
                return Err(Error::InvalidPanel(format!(
                    "member {} covariate block has {} cells, expected {}",
                    m.number(),
                    covariates[k].len(),
                    n * n_times * p
                )));
            }
            for (i, id) in dyad_ids.iter().enumerate() {
                let row = &outcomes[k][i * n_times..(i + 1) * n_times];
                let first_missing = row.iter().position(Option::is_none);
                let d = match first_missing {
                    Some(0) => {
                        return Err(Error::MissingBaseline {
                            dyad: id.clone(),
                            member: m.number(),
                        })
                    }
                    Some(pos) => pos + 1,
                    None => n_times + 1,
                };
                if let Some(pos) = row[d - 1..].iter().position(Option::is_some) {
                    return Err(Error::NonMonotone {
                        dyad: id.clone(),
                        member: m.number(),
                        time: d + pos,
                    });
                }
                for (t0, cell) in row.iter().enumerate() {
                    if let Some(y) = cell {
                        if !y.is_finite() {
                            return Err(Error::InvalidPanel(format!(
                                "non-finite outcome for dyad {id}, member {}, time {}",
                                m.number(),
                                t0 + 1
                            )));
                        }
                    }
                    let base = (i * n_times + t0) * p;
                    for c in 0..p {
                        if !covariates[k][base + c].is_finite() {
                            return Err(Error::MissingCovariate {
                                dyad: id.clone(),
                                member: m.number(),
                                time: t0 + 1,
                                column: covariate_names[k][c].clone(),
                            });
                        }
                    }
                }
                dropout[k].push(d);
            }
        }
        Ok(DyadPanel {
            dyad_ids,
            n_times,
            covariate_names,
            outcomes,
            covariates,
            dropout,
        })
    }

    pub fn n_dyads(&self) -> usize {
        self.dyad_ids.len()
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn dyad_id(&self, dyad: usize) -> &str {
        &self.dyad_ids[dyad]
    }

    pub fn dyad_ids(&self) -> &[String] {
        &self.dyad_ids
    }

    pub fn n_covariates(&self, member: Member) -> usize {
        self.covariate_names[member.index()].len()
    }

    pub fn covariate_names(&self, member: Member) -> &[String] {
        &self.covariate_names[member.index()]
    }

    pub fn covariates(&self, member: Member, dyad: usize, time: usize) -> &[f64] {
        let p = self.n_covariates(member);
        let base = (dyad * self.n_times + time - 1) * p;
        &self.covariates[member.index()][base..base + p]
    }

    /// Dropout time `d ∈ {2, …, J+1}`; `J+1` means the member completed.
    pub fn dropout_time(&self, member: Member, dyad: usize) -> usize {
        self.dropout[member.index()][dyad]
    }

    /// Last wave whose outcomes enter the complete-data likelihood of the
    /// dyad: `min(max(d_1, d_2), J)`.
    pub fn last_needed_time(&self, dyad: usize) -> usize {
        let d = self.dropout[0][dyad].max(self.dropout[1][dyad]);
        d.min(self.n_times)
    }

    pub fn is_completer(&self, dyad: usize) -> bool {
        self.dropout[0][dyad] > self.n_times && self.dropout[1][dyad] > self.n_times
    }

    pub fn has_dropout(&self) -> bool {
        (0..self.n_dyads()).any(|i| !self.is_completer(i))
    }

    /// Panel restricted to the given dyads, in the given order.
    pub fn subset(&self, dyads: &[usize]) -> DyadPanel {
        let j = self.n_times;
        let mut outcomes = [Vec::new(), Vec::new()];
        let mut covariates = [Vec::new(), Vec::new()];
        let mut dropout = [Vec::new(), Vec::new()];
        for m in Member::BOTH {
            let k = m.index();
            let p = self.n_covariates(m);
            for &i in dyads {
                outcomes[k].extend_from_slice(&self.outcomes[k][i * j..(i + 1) * j]);
                covariates[k].extend_from_slice(&self.covariates[k][i * j * p..(i + 1) * j * p]);
                dropout[k].push(self.dropout[k][i]);
            }
        }
        DyadPanel {
            dyad_ids: dyads.iter().map(|&i| self.dyad_ids[i].clone()).collect(),
            n_times: j,
            covariate_names: self.covariate_names.clone(),
            outcomes,
            covariates,
            dropout,
        }
    }

    /// Dyads where both members completed follow-up.
    pub fn completers(&self) -> DyadPanel {
        let keep: Vec<usize> = (0..self.n_dyads())
            .filter(|&i| self.is_completer(i))
            .collect();
        self.subset(&keep)
    }

    /// Copy in which both members leave at the earlier of their two dropout
    /// times. Masking further values based on what was already observed
    /// preserves a MAR mechanism, and leaves no observed outcome with a
    /// missing lag.
    pub fn with_dyad_level_dropout(&self) -> DyadPanel {
        let mut out = self.clone();
        let j = self.n_times;
        for i in 0..self.n_dyads() {
            let d = self.dropout[0][i].min(self.dropout[1][i]);
            for k in 0..2 {
                out.dropout[k][i] = d;
                for t in d..=j {
                    out.outcomes[k][i * j + t - 1] = None;
                }
            }
        }
        out
    }

    /// Keep only the named covariate columns for each member.
    pub fn select_covariates(&self, names: [&[String]; 2]) -> Result<DyadPanel> {
        let mut out = self.clone();
        for m in Member::BOTH {
            let k = m.index();
            let p = self.n_covariates(m);
            let idx: Vec<usize> = names[k]
                .iter()
                .map(|name| {
                    self.covariate_names[k]
                        .iter()
                        .position(|c| c == name)
                        .ok_or_else(|| {
                            Error::Config(format!(
                                "unknown covariate '{name}' for member {}",
                                m.number()
                            ))
                        })
                })
                .collect::<Result<_>>()?;
            let cells = self.n_dyads() * self.n_times;
            let mut cov = Vec::with_capacity(cells * idx.len());
            for cell in 0..cells {
                for &c in &idx {
                    cov.push(self.covariates[k][cell * p + c]);
                }
            }
            out.covariates[k] = cov;
            out.covariate_names[k] = names[k].to_vec();
        }
        Ok(out)
    }

    pub fn into_data(self) -> PanelData {
        PanelData {
            dyad_ids: self.dyad_ids,
            n_times: self.n_times,
            covariate_names: self.covariate_names,
            outcomes: self.outcomes,
            covariates: self.covariates,
        }
    }
}

impl OutcomeSource for DyadPanel {
    fn outcome(&self, member: Member, dyad: usize, time: usize) -> Option<f64> {
        if time == 0 || time > self.n_times || dyad >= self.n_dyads() {
            return None;
        }
        self.outcomes[member.index()][dyad * self.n_times + time - 1]
    }
}

/// Dense outcome grid: observed values plus whatever the sampler has
/// augmented. `NaN` marks an absent cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedOutcomes {
    n_times: usize,
    values: [Vec<f64>; 2],
}

impl CompletedOutcomes {
    pub fn from_panel(panel: &DyadPanel) -> Self {
        let values = [0, 1].map(|k| {
            panel.outcomes[k]
                .iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect::<Vec<f64>>()
        });
        CompletedOutcomes {
            n_times: panel.n_times,
            values,
        }
    }

    pub fn from_values(n_times: usize, values: [Vec<f64>; 2]) -> Self {
        CompletedOutcomes { n_times, values }
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    #[inline]
    pub fn get(&self, member: Member, dyad: usize, time: usize) -> f64 {
        self.values[member.index()][dyad * self.n_times + time - 1]
    }

    #[inline]
    pub fn set(&mut self, member: Member, dyad: usize, time: usize, y: f64) {
        self.values[member.index()][dyad * self.n_times + time - 1] = y;
    }

    pub fn values(&self, member: Member) -> &[f64] {
        &self.values[member.index()]
    }
}

impl OutcomeSource for CompletedOutcomes {
    fn outcome(&self, member: Member, dyad: usize, time: usize) -> Option<f64> {
        if time == 0 || time > self.n_times {
            return None;
        }
        self.values[member.index()]
            .get(dyad * self.n_times + time - 1)
            .copied()
            .filter(|v| !v.is_nan())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(y1: Vec<Option<f64>>, y2: Vec<Option<f64>>, j: usize) -> PanelData {
        let n = y1.len() / j;
        PanelData {
            dyad_ids: (0..n).map(|i| format!("d{i}")).collect(),
            n_times: j,
            covariate_names: [vec!["x".into()], vec!["x".into()]],
            outcomes: [y1, y2],
            covariates: [vec![0.0; n * j], vec![0.0; n * j]],
        }
    }

    #[test]
    fn completers_get_j_plus_one() {
        let p = DyadPanel::new(data(
            vec![Some(1.0), Some(2.0), Some(3.0)],
            vec![Some(1.0), Some(2.0), Some(3.0)],
            3,
        ))
        .unwrap();
        assert_eq!(p.dropout_time(Member::First, 0), 4);
        assert_eq!(p.dropout_time(Member::Second, 0), 4);
        assert_eq!(p.last_needed_time(0), 3);
        assert!(p.is_completer(0));
    }

    #[test]
    fn dropout_time_is_first_missing_wave() {
        let p = DyadPanel::new(data(
            vec![Some(1.0), Some(2.0), Some(3.0)],
            vec![Some(1.0), None, None],
            3,
        ))
        .unwrap();
        assert_eq!(p.dropout_time(Member::Second, 0), 2);
        assert_eq!(p.last_needed_time(0), 3);
        assert!(!p.is_completer(0));
    }

    #[test]
    fn rejects_non_monotone_and_missing_baseline() {
        let err = DyadPanel::new(data(
            vec![Some(1.0), None, Some(3.0)],
            vec![Some(1.0), Some(2.0), Some(3.0)],
            3,
        ))
        .unwrap_err();
        assert!(matches!(
            err,
            Error::NonMonotone {
                member: 1,
                time: 3,
                ..
            }
        ));
        let err = DyadPanel::new(data(
            vec![None, None, None],
            vec![Some(1.0), Some(2.0), Some(3.0)],
            3,
        ))
        .unwrap_err();
        assert!(matches!(err, Error::MissingBaseline { member: 1, .. }));
    }

    #[test]
    fn dyad_level_dropout_masks_later_member() {
        let p = DyadPanel::new(data(
            vec![Some(1.0), Some(2.0), Some(3.0)],
            vec![Some(1.0), Some(2.0), None],
            3,
        ))
        .unwrap();
        let q = p.with_dyad_level_dropout();
        assert_eq!(q.dropout_time(Member::First, 0), 3);
        assert_eq!(q.outcome(Member::First, 0, 3), None);
    }

    #[test]
    fn completed_outcomes_track_absence() {
        let p = DyadPanel::new(data(vec![Some(1.0), Some(2.0)], vec![Some(1.0), None], 2)).unwrap();
        let mut g = CompletedOutcomes::from_panel(&p);
        assert_eq!(g.outcome(Member::Second, 0, 2), None);
        g.set(Member::Second, 0, 2, 4.5);
        assert_eq!(g.outcome(Member::Second, 0, 2), Some(4.5));
    }
}
