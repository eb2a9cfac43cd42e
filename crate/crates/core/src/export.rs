//! CSV tables derived from experiment records, one per plot kind.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{coupling_sensitivity_norm, CONCORDANCE_MIN_FIDELITY};
use crate::dynamics::EigenSystem;
use crate::error::{Error, Result};
use crate::network::BiasVector;
use crate::optimizer::fastest_above_threshold;
use crate::record::{write_atomic, ExperimentRecord};

/// Floor applied before taking `log10` of an infidelity.
pub const LOG_FLOOR: f64 = 1e-16;

/// Sample count of the evolution trace.
pub const EVOLUTION_SAMPLES: usize = 200;

const HISTOGRAM_BIN: f64 = 0.5;
const HISTOGRAM_MIN: f64 = -16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    TimeVsInfidelity,
    BestPerTime,
    InfidelityHistogram,
    RankVsSensitivity,
    FastestTable,
    Evolution,
}

impl PlotKind {
    pub const ALL: [PlotKind; 6] = [
        PlotKind::TimeVsInfidelity,
        PlotKind::BestPerTime,
        PlotKind::InfidelityHistogram,
        PlotKind::RankVsSensitivity,
        PlotKind::FastestTable,
        PlotKind::Evolution,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PlotKind::TimeVsInfidelity => "time-vs-infidelity",
            PlotKind::BestPerTime => "best-per-time",
            PlotKind::InfidelityHistogram => "infidelity-histogram",
            PlotKind::RankVsSensitivity => "rank-vs-sensitivity",
            PlotKind::FastestTable => "fastest-table",
            PlotKind::Evolution => "evolution",
        }
    }

    pub fn header(&self) -> &'static [&'static str] {
        match self {
            PlotKind::TimeVsInfidelity => &["T", "log10_infidelity"],
            PlotKind::BestPerTime => &["T", "best_log10_infidelity"],
            PlotKind::InfidelityHistogram => &["bin_left", "count"],
            PlotKind::RankVsSensitivity => &["rank", "log10_infidelity", "log10_sensitivity_norm"],
            PlotKind::FastestTable => &["N", "target", "T_fastest", "infidelity"],
            PlotKind::Evolution => &["t", "p_controller", "p_natural"],
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown plot kind '{s}'")))
    }
}

/// Plain decimal in the usual range, scientific notation for very small or
/// very large magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

pub fn log10_floored(x: f64) -> f64 {
    x.max(LOG_FLOOR).log10()
}

/// Renders the table for `kind`. Only `fastest-table` reads more than the
/// first record.
pub fn export_csv(records: &[ExperimentRecord], kind: PlotKind) -> Result<String> {
    let rows = match kind {
        PlotKind::FastestTable => fastest_table(records)?,
        _ => {
            let record = records
                .first()
                .ok_or_else(|| Error::Domain("no experiment record given".into()))?;
            match kind {
                PlotKind::TimeVsInfidelity => time_vs_infidelity(record),
                PlotKind::BestPerTime => best_per_time(record),
                PlotKind::InfidelityHistogram => histogram(record),
                PlotKind::RankVsSensitivity => rank_vs_sensitivity(record)?,
                PlotKind::Evolution => evolution(record)?,
                PlotKind::FastestTable => unreachable!(),
            }
        }
    };
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Record(e.to_string());
    writer.write_record(kind.header()).map_err(csv_err)?;
    for row in rows {
        writer.write_record(&row).map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Record(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Record(e.to_string()))
}

pub fn write_csv(
    records: &[ExperimentRecord],
    kind: PlotKind,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_atomic(path.as_ref(), export_csv(records, kind)?.as_bytes())
}

fn time_vs_infidelity(record: &ExperimentRecord) -> Vec<Vec<String>> {
    record
        .controllers
        .iter()
        .map(|c| vec![num(c.time), num(log10_floored(c.infidelity))])
        .collect()
}

fn best_per_time(record: &ExperimentRecord) -> Vec<Vec<String>> {
    let mut pairs: Vec<(f64, f64)> = record
        .controllers
        .iter()
        .map(|c| (c.time, c.infidelity))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs.dedup_by(|later, first| later.0 == first.0);
    pairs
        .into_iter()
        .map(|(t, inf)| vec![num(t), num(log10_floored(inf))])
        .collect()
}

fn histogram(record: &ExperimentRecord) -> Vec<Vec<String>> {
    if record.controllers.is_empty() {
        return Vec::new();
    }
    let n_bins = (-HISTOGRAM_MIN / HISTOGRAM_BIN) as usize;
    let mut counts = vec![0usize; n_bins];
    for c in record.controllers.iter() {
        let x = log10_floored(c.infidelity);
        let bin = (((x - HISTOGRAM_MIN) / HISTOGRAM_BIN).floor().max(0.0) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            vec![
                num(HISTOGRAM_MIN + i as f64 * HISTOGRAM_BIN),
                count.to_string(),
            ]
        })
        .collect()
}

fn rank_vs_sensitivity(record: &ExperimentRecord) -> Result<Vec<Vec<String>>> {
    let net = record.network()?;
    let (m, n) = record.experiment.endpoints();
    let mut rows = Vec::new();
    for c in record
        .controllers
        .iter()
        .filter(|c| c.fidelity > CONCORDANCE_MIN_FIDELITY)
    {
        let norm = match c.sensitivity_norm {
            Some(s) => s,
            None => coupling_sensitivity_norm(&net, c, m, n)?,
        };
        rows.push((c.infidelity, norm));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, (inf, s))| {
            vec![
                (i + 1).to_string(),
                num(log10_floored(inf)),
                num(log10_floored(s)),
            ]
        })
        .collect())
}

fn fastest_table(records: &[ExperimentRecord]) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for record in records {
        let (_, n) = record.experiment.endpoints();
        let threshold = record
            .controllers
            .best()
            .map(|c| record.config.threshold_for(c.objective))
            .unwrap_or(0.999);
        let mut row = vec![record.network.n_spins.to_string(), (n + 1).to_string()];
        match fastest_above_threshold(&record.controllers, threshold) {
            Some(c) => {
                row.push(num(c.time));
                row.push(num(c.infidelity));
            }
            None => {
                row.push(String::new());
                row.push(String::new());
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn evolution(record: &ExperimentRecord) -> Result<Vec<Vec<String>>> {
    let Some(best) = record.controllers.best() else {
        return Ok(Vec::new());
    };
    let net = record.network()?;
    let (m, n) = record.experiment.endpoints();
    let controlled = EigenSystem::from_network(&net, &best.bias)?;
    let natural = EigenSystem::from_network(&net, &BiasVector::zeros(net.n_spins()))?;
    Ok((0..=EVOLUTION_SAMPLES)
        .map(|i| {
            let t = if i == EVOLUTION_SAMPLES {
                best.time
            } else {
                best.time * i as f64 / EVOLUTION_SAMPLES as f64
            };
            vec![
                num(t),
                num(controlled.fidelity(m, n, t)),
                num(natural.fidelity(m, n, t)),
            ]
        })
        .collect())
}
