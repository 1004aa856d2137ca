//! Long-format panel CSV: `dyad_id, member, time, y, <covariates…>`, one
//! row per subject and wave. An empty `y` cell marks a missing outcome.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{DyadPanel, Member, OutcomeSource, PanelData};

const FIXED: [&str; 4] = ["dyad_id", "member", "time", "y"];

pub fn parse_panel(path: impl AsRef<Path>) -> Result<DyadPanel> {
    read_panel(File::open(path)?)
}

struct Row {
    y: Option<f64>,
    x: Vec<f64>,
}

fn parse_number(field: &str, what: &str, line: u64) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidPanel(format!("line {line}: cannot parse {what} '{field}'")))
}

pub fn read_panel<R: Read>(input: R) -> Result<DyadPanel> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.len() < 4 || header.iter().take(4).ne(FIXED) {
        return Err(Error::InvalidPanel(format!(
            "header must start with {}",
            FIXED.join(",")
        )));
    }
    let cov_names: Vec<String> = header.iter().skip(4).map(str::to_string).collect();
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut cells: HashMap<(usize, u8, usize), Row> = HashMap::new();
    let mut max_time = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record[0].to_string();
        let member: u8 = record[1]
            .parse()
            .ok()
            .filter(|m| *m == 1 || *m == 2)
            .ok_or_else(|| {
                Error::InvalidPanel(format!(
                    "line {line}: member must be 1 or 2, got '{}'",
                    &record[1]
                ))
            })?;
        let time: usize = record[2].parse().ok().filter(|t| *t >= 1).ok_or_else(|| {
            Error::InvalidPanel(format!(
                "line {line}: time must be a positive integer, got '{}'",
                &record[2]
            ))
        })?;
        let y = match &record[3] {
            "" => None,
            s => Some(parse_number(s, "outcome", line)?),
        };
        let mut x = Vec::with_capacity(cov_names.len());
        for (c, name) in cov_names.iter().enumerate() {
            let field = record.get(4 + c).unwrap_or("");
            if field.is_empty() {
                return Err(Error::MissingCovariate {
                    dyad: id.clone(),
                    member,
                    time,
                    column: name.clone(),
                });
            }
            x.push(parse_number(field, name, line)?);
        }
        let next = order.len();
        let i = *index.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            next
        });
        if cells.insert((i, member, time), Row { y, x }).is_some() {
            return Err(Error::InvalidPanel(format!(
                "duplicate row for dyad {id}, member {member}, time {time}"
            )));
        }
        max_time = max_time.max(time);
    }

    let n = order.len();
    let j = max_time;
    let p = cov_names.len();
    let mut outcomes = [Vec::with_capacity(n * j), Vec::with_capacity(n * j)];
    let mut covariates = [Vec::with_capacity(n * j * p), Vec::with_capacity(n * j * p)];
    for (i, id) in order.iter().enumerate() {
        for m in Member::BOTH {
            for t in 1..=j {
                let row = cells.get(&(i, m.number(), t)).ok_or_else(|| {
                    Error::InvalidPanel(format!(
                        "dyad {id} has no row for member {}, time {t}",
                        m.number()
                    ))
                })?;
                outcomes[m.index()].push(row.y);
                covariates[m.index()].extend_from_slice(&row.x);
            }
        }
    }
    DyadPanel::new(PanelData {
        dyad_ids: order,
        n_times: j,
        covariate_names: [cov_names.clone(), cov_names],
        outcomes,
        covariates,
    })
}

/// Writes a panel whose members share covariate names. Reals use the
/// shortest representation that parses back to the same value.
pub fn write_panel<W: Write>(panel: &DyadPanel, out: W) -> Result<()> {
    let names = panel.covariate_names(Member::First);
    if names != panel.covariate_names(Member::Second) {
        return Err(Error::InvalidPanel(
            "panel files need the same covariate columns for both members".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = FIXED.to_vec();
    header.extend(names.iter().map(String::as_str));
    w.write_record(&header)?;
    for i in 0..panel.n_dyads() {
        for m in Member::BOTH {
            for t in 1..=panel.n_times() {
                let mut rec = vec![
                    panel.dyad_id(i).to_string(),
                    m.number().to_string(),
                    t.to_string(),
                    panel
                        .outcome(m, i, t)
                        .map_or(String::new(), |y| y.to_string()),
                ];
                rec.extend(panel.covariates(m, i, t).iter().map(f64::to_string));
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_panel(panel: &DyadPanel, path: impl AsRef<Path>) -> Result<()> {
    write_panel(panel, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<DyadPanel> {
        read_panel(s.as_bytes())
    }

    #[test]
    fn complete_dyad_has_no_dropout() {
        let p = read(
            "dyad_id,member,time,y,x\n\
             a,1,1,1.0,0.5\na,1,2,2.0,0.5\na,1,3,3.0,0.5\n\
             a,2,1,1.5,-1\na,2,2,2.5,-1\na,2,3,3.5,-1\n",
        )
        .unwrap();
        assert_eq!(p.dropout_time(Member::First, 0), 4);
        assert_eq!(p.dropout_time(Member::Second, 0), 4);
        assert_eq!(p.covariates(Member::Second, 0, 2), &[-1.0]);
    }

    #[test]
    fn missing_tail_sets_dropout_time() {
        let p = read(
            "dyad_id,member,time,y\n\
             a,1,1,1\na,1,2,2\na,1,3,3\na,2,1,1\na,2,2,\na,2,3,\n",
        )
        .unwrap();
        assert_eq!(p.dropout_time(Member::Second, 0), 2);
    }

    #[test]
    fn gap_then_value_is_non_monotone() {
        let e = read(
            "dyad_id,member,time,y\n\
             a,1,1,1\na,1,2,2\na,1,3,3\na,2,1,1\na,2,2,\na,2,3,4\n",
        )
        .unwrap_err();
        match e {
            Error::NonMonotone { dyad, member, .. } => {
                assert_eq!(dyad, "a");
                assert_eq!(member, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_baseline_and_covariate_are_rejected() {
        let e = read("dyad_id,member,time,y\na,1,1,\na,1,2,\na,2,1,1\na,2,2,1\n").unwrap_err();
        assert!(matches!(e, Error::MissingBaseline { member: 1, .. }));
        let e = read("dyad_id,member,time,y,x\na,1,1,1,\n").unwrap_err();
        assert!(matches!(e, Error::MissingCovariate { .. }));
    }

    #[test]
    fn structural_errors() {
        assert!(read("id,member,time,y\n").is_err());
        assert!(read("dyad_id,member,time,y\na,3,1,1\n").is_err());
        assert!(read("dyad_id,member,time,y\na,1,1,1\na,1,1,2\n").is_err());
        // member 2 has no rows
        assert!(read("dyad_id,member,time,y\na,1,1,1\na,1,2,2\n").is_err());
    }
}
