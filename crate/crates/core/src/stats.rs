//! Per-trial and between-trial statistics of estimate series.
//!
//! For each quantity a batch of trials is reduced to three numbers:
//! the mean of trial means `x̄`, the standard deviation of the trial means
//! `σ_x̄`, and the mean within-trial standard deviation `σ̄`. All standard
//! deviations are population (divide by `n`).

use std::fmt::Write as _;
use std::io::Write;

use thiserror::Error;

use crate::csv_format::fmt_sig9;
use crate::estimator::EstimateRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("trial `{0}`: no record passes the window rule")]
    EmptyWindow(String),
    #[error("need at least {needed} trials, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

/// Which records of a trial enter the statistics.
///
/// Both rules keep only in-contact, non-halted records and start each
/// quantity at its first update (`μ_c`, `r`: first gated RLS update; `μ_s`:
/// first change from the initial estimate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowRule {
    #[default]
    WholeTrial,
    /// Additionally restricted to ticks where `μ_c` or `r` was updated.
    SlipOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantityStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl QuantityStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Some(Self {
            mean,
            std: var.sqrt(),
            n,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub trial_id: String,
    pub mu_c: Option<QuantityStats>,
    pub mu_s: Option<QuantityStats>,
    pub r: Option<QuantityStats>,
    pub n_samples: usize,
}

impl TrialSummary {
    pub fn mean_mu_c(&self) -> Option<f64> {
        self.mu_c.map(|q| q.mean)
    }

    pub fn std_mu_c(&self) -> Option<f64> {
        self.mu_c.map(|q| q.std)
    }
}

pub fn summarize_trial(
    trial_id: &str,
    records: &[EstimateRecord],
    window: WindowRule,
) -> Result<TrialSummary, StatsError> {
    let base = |r: &EstimateRecord| {
        r.in_contact
            && !r.halted
            && match window {
                WindowRule::WholeTrial => true,
                WindowRule::SlipOnly => r.updated_mu_c || r.updated_r,
            }
    };
    let n_samples = records.iter().filter(|r| base(r)).count();
    if n_samples == 0 {
        return Err(StatsError::EmptyWindow(trial_id.into()));
    }

    let collect = |start: Option<usize>, value: fn(&EstimateRecord) -> f64| {
        start.and_then(|s| {
            let v: Vec<f64> = records[s..].iter().filter(|r| base(r)).map(value).collect();
            QuantityStats::from_values(&v)
        })
    };
    let first_mu_c = records.iter().position(|r| r.updated_mu_c);
    let first_r = records.iter().position(|r| r.updated_r);
    let first_mu_s = records
        .first()
        .and_then(|r0| records.iter().position(|r| r.mu_s_hat != r0.mu_s_hat));

    let summary = TrialSummary {
        trial_id: trial_id.into(),
        mu_c: collect(first_mu_c, |r| r.mu_c_hat),
        mu_s: collect(first_mu_s, |r| r.mu_s_hat),
        r: collect(first_r, |r| r.r_hat),
        n_samples,
    };
    if summary.mu_c.is_none() && summary.mu_s.is_none() && summary.r.is_none() {
        return Err(StatsError::EmptyWindow(trial_id.into()));
    }
    Ok(summary)
}

/// `x̄`, `σ_x̄`, `σ̄` of one quantity over a batch of trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantityAggregate {
    pub mean: f64,
    std_of_means: Option<f64>,
    pub mean_std: f64,
    pub n_trials: usize,
}

impl QuantityAggregate {
    pub fn from_trials(stats: &[QuantityStats]) -> Option<Self> {
        let means: Vec<f64> = stats.iter().map(|s| s.mean).collect();
        let between = QuantityStats::from_values(&means)?;
        Some(Self {
            mean: between.mean,
            std_of_means: (stats.len() >= 2).then_some(between.std),
            mean_std: stats.iter().map(|s| s.std).sum::<f64>() / stats.len() as f64,
            n_trials: stats.len(),
        })
    }

    /// Between-trial standard deviation of the means; needs two trials.
    pub fn std_of_means(&self) -> Result<f64, StatsError> {
        self.std_of_means.ok_or(StatsError::InsufficientData {
            needed: 2,
            got: self.n_trials,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mu_c: Option<QuantityAggregate>,
    pub mu_s: Option<QuantityAggregate>,
    pub r: Option<QuantityAggregate>,
    pub n_trials: usize,
}

pub fn aggregate(trials: &[TrialSummary]) -> Result<Aggregate, StatsError> {
    if trials.is_empty() {
        return Err(StatsError::InsufficientData { needed: 1, got: 0 });
    }
    let quantity = |f: fn(&TrialSummary) -> Option<QuantityStats>| {
        let stats: Vec<QuantityStats> = trials.iter().filter_map(f).collect();
        QuantityAggregate::from_trials(&stats)
    };
    Ok(Aggregate {
        mu_c: quantity(|t| t.mu_c),
        mu_s: quantity(|t| t.mu_s),
        r: quantity(|t| t.r),
        n_trials: trials.len(),
    })
}

/// One condition row of a report, e.g. `plastic with heuristics`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub condition: String,
    pub aggregate: Aggregate,
}

pub const REPORT_HEADER: [&str; 11] = [
    "condition",
    "mu_c_mean",
    "mu_c_std_of_mean",
    "mu_c_mean_std",
    "mu_s_mean",
    "mu_s_std_of_mean",
    "mu_s_mean_std",
    "r_mean",
    "r_std_of_mean",
    "r_mean_std",
    "n_trials",
];

fn triplet(q: &Option<QuantityAggregate>, fmt: impl Fn(f64) -> String) -> [String; 3] {
    match q {
        Some(q) => [
            fmt(q.mean),
            q.std_of_means().map(&fmt).unwrap_or_default(),
            fmt(q.mean_std),
        ],
        None => Default::default(),
    }
}

pub fn write_report_csv<W: Write>(rows: &[ReportRow], out: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(REPORT_HEADER)?;
    for row in rows {
        let a = &row.aggregate;
        let mut rec = vec![row.condition.clone()];
        for q in [&a.mu_c, &a.mu_s, &a.r] {
            rec.extend(triplet(q, fmt_sig9));
        }
        rec.push(a.n_trials.to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Fixed-width text rendering of a report.
pub fn render_report_table(rows: &[ReportRow]) -> String {
    let header = [
        "Condition", "mu_c", "s(mu_c)", "sd_c", "mu_s", "s(mu_s)", "sd_s", "r", "s(r)", "sd_r",
        "n",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let a = &row.aggregate;
            let mut cells = vec![row.condition.clone()];
            for q in [&a.mu_c, &a.mu_s, &a.r] {
                cells.extend(
                    triplet(q, |v| format!("{v:.4}"))
                        .into_iter()
                        .map(|s| if s.is_empty() { "-".to_string() } else { s }),
                );
            }
            cells.push(a.n_trials.to_string());
            cells
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for cells in &body {
        for (w, c) in widths.iter_mut().zip(cells) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |cells: &[String], out: &mut String| {
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{c:<w$}");
            } else {
                let _ = write!(out, "  {c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&header.map(String::from), &mut out);
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for cells in &body {
        line(cells, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(mu_c: f64) -> EstimateRecord {
        EstimateRecord {
            t: 0.0,
            mu_c_hat: mu_c,
            mu_s_hat: 1.5,
            r_hat: 0.02,
            gamma_t: 1.0,
            gamma_tau: 0.0,
            updated_mu_c: true,
            updated_r: false,
            halted: false,
            in_contact: true,
        }
    }

    fn trial(id: &str, mean: f64, std: f64) -> TrialSummary {
        TrialSummary {
            trial_id: id.into(),
            mu_c: Some(QuantityStats { mean, std, n: 10 }),
            mu_s: None,
            r: None,
            n_samples: 10,
        }
    }

    #[test]
    fn constant_series() {
        let s = summarize_trial("a", &vec![rec(0.4); 20], WindowRule::WholeTrial).unwrap();
        let q = s.mu_c.unwrap();
        assert!((q.mean - 0.4).abs() < 1e-15);
        assert!(q.std < 1e-15);
        assert!(s.r.is_none() && s.mu_s.is_none());
        assert_eq!(s.n_samples, 20);
    }

    #[test]
    fn two_point_population_std() {
        let s = summarize_trial("a", &[rec(0.3), rec(0.5)], WindowRule::WholeTrial).unwrap();
        let q = s.mu_c.unwrap();
        assert!((q.mean - 0.4).abs() < 1e-15);
        assert!((q.std - 0.1).abs() < 1e-15);
    }

    #[test]
    fn all_halted_is_empty() {
        let records: Vec<_> = (0..5)
            .map(|_| EstimateRecord {
                halted: true,
                updated_mu_c: false,
                ..rec(0.4)
            })
            .collect();
        assert_eq!(
            summarize_trial("h", &records, WindowRule::WholeTrial),
            Err(StatsError::EmptyWindow("h".into()))
        );
    }

    #[test]
    fn window_starts_at_first_update() {
        let mut records = vec![
            EstimateRecord {
                updated_mu_c: false,
                ..rec(1.3)
            };
            3
        ];
        records.extend([rec(0.3), rec(0.5)]);
        records.push(EstimateRecord {
            updated_mu_c: false,
            ..rec(0.5)
        });
        let whole = summarize_trial("w", &records, WindowRule::WholeTrial).unwrap();
        assert_eq!(whole.mu_c.unwrap().n, 3);
        let slip = summarize_trial("w", &records, WindowRule::SlipOnly).unwrap();
        assert_eq!(slip.mu_c.unwrap().n, 2);
    }

    #[test]
    fn aggregate_examples() {
        let a = aggregate(&[trial("a", 0.4, 0.1), trial("b", 0.4, 0.3)]).unwrap();
        let q = a.mu_c.unwrap();
        assert!((q.mean - 0.4).abs() < 1e-15);
        assert_eq!(q.std_of_means().unwrap(), 0.0);
        assert!((q.mean_std - 0.2).abs() < 1e-15);

        let single = aggregate(&[trial("a", 0.4, 0.1)]).unwrap().mu_c.unwrap();
        assert_eq!(single.mean, 0.4);
        assert_eq!(
            single.std_of_means(),
            Err(StatsError::InsufficientData { needed: 2, got: 1 })
        );

        let ten: Vec<_> = (0..10).map(|i| trial(&i.to_string(), 0.3, 0.05)).collect();
        let q = aggregate(&ten).unwrap().mu_c.unwrap();
        assert!(q.std_of_means().unwrap() < 1e-15);
        assert!((q.mean_std - 0.05).abs() < 1e-15);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn report_rendering() {
        let rows = vec![
            ReportRow {
                condition: "plastic no heuristics".into(),
                aggregate: aggregate(&[trial("a", 0.1101, 0.03), trial("b", 0.12, 0.02)]).unwrap(),
            },
            ReportRow {
                condition: "plastic with heuristics".into(),
                aggregate: aggregate(&[trial("a", 0.3646, 0.0275)]).unwrap(),
            },
        ];
        let mut buf = Vec::new();
        write_report_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER.join(","));
        assert!(lines[2].starts_with("plastic with heuristics,0.3646,,0.0275,,,,,,,1"));
        let table = render_report_table(&rows);
        assert_eq!(table.lines().count(), 4);
        assert!(table.contains("0.3646"));
    }

    proptest! {
        #[test]
        fn aggregate_is_permutation_invariant(
            stats in prop::collection::vec((0.0f64..1.0, 0.0f64..0.2), 2..12),
            seed in any::<u64>(),
        ) {
            let trials: Vec<_> = stats
                .iter()
                .enumerate()
                .map(|(i, &(m, s))| trial(&i.to_string(), m, s))
                .collect();
            let mut shuffled = trials.clone();
            let n = shuffled.len();
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (state >> 33) as usize % (i + 1));
            }
            let a = aggregate(&trials).unwrap().mu_c.unwrap();
            let b = aggregate(&shuffled).unwrap().mu_c.unwrap();
            prop_assert!((a.mean - b.mean).abs() < 1e-12);
            prop_assert!((a.mean_std - b.mean_std).abs() < 1e-12);
            prop_assert!((a.std_of_means().unwrap() - b.std_of_means().unwrap()).abs() < 1e-12);
        }
    }
}
