//! Selection metrics.
//!
//! - selection accuracy `SA = 100 · TP / (TP + FN)`
//! - false alarm rate `FAR = 100 · FP / (TP + FP)`
//! - success rate `SR = 100 · SA / (SA + FAR)`
//!
//! Everything is computed at full precision; [`DisplaySummary`] applies the
//! printed precision of published tables (SA to an integer, FAR and SR to one
//! decimal) with ties rounding toward zero.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{round_half_down, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{0} is undefined when its denominator is zero")]
    EmptyDenominator(&'static str),
    #[error("cannot aggregate an empty set of users")]
    EmptyInput,
    #[error("malformed counts table: {0}")]
    MalformedTable(String),
}

/// TP/FP/FN bookkeeping for one trial or a pooled set of trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome<T = f64> {
    pub tp: u32,
    pub fp: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
    pub selection_time_s: T,
}

impl<T: Scalar> TrialOutcome<T> {
    pub fn new(tp: u32, fp: u32, fn_: u32, selection_time_s: T) -> Self {
        Self {
            tp,
            fp,
            fn_,
            selection_time_s,
        }
    }

    pub fn attempts(&self) -> u32 {
        self.tp + self.fp + self.fn_
    }

    /// Sums counts and selection times.
    pub fn pooled<'a>(items: impl IntoIterator<Item = &'a TrialOutcome<T>>) -> TrialOutcome<T> {
        items
            .into_iter()
            .fold(TrialOutcome::default(), |acc, o| TrialOutcome {
                tp: acc.tp + o.tp,
                fp: acc.fp + o.fp,
                fn_: acc.fn_ + o.fn_,
                selection_time_s: acc.selection_time_s + o.selection_time_s,
            })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary<T = f64> {
    pub sa_pct: T,
    pub far_pct: T,
    pub sr_pct: T,
    pub avg_selection_time_s: T,
}

pub fn selection_accuracy<T: Scalar>(tp: u32, fn_: u32) -> Result<T, MetricsError> {
    ratio_pct(tp, tp + fn_, "selection accuracy")
}

pub fn false_alarm_rate<T: Scalar>(tp: u32, fp: u32) -> Result<T, MetricsError> {
    ratio_pct(fp, tp + fp, "false alarm rate")
}

pub fn success_rate<T: Scalar>(sa_pct: T, far_pct: T) -> Result<T, MetricsError> {
    let denom = sa_pct + far_pct;
    if denom <= T::zero() {
        return Err(MetricsError::EmptyDenominator("success rate"));
    }
    if far_pct == T::zero() {
        return Ok(T::hundred());
    }
    Ok(T::hundred() * sa_pct / denom)
}

fn ratio_pct<T: Scalar>(num: u32, denom: u32, what: &'static str) -> Result<T, MetricsError> {
    if denom == 0 {
        return Err(MetricsError::EmptyDenominator(what));
    }
    Ok(T::hundred() * <T as Scalar>::from_u32(num) / <T as Scalar>::from_u32(denom))
}

/// Metrics for one set of counts. `trials` divides the pooled selection time.
pub fn summarize<T: Scalar>(
    counts: &TrialOutcome<T>,
    trials: u32,
) -> Result<MetricsSummary<T>, MetricsError> {
    let sa = selection_accuracy(counts.tp, counts.fn_)?;
    let far = false_alarm_rate(counts.tp, counts.fp)?;
    let sr = success_rate(sa, far)?;
    let avg = if trials == 0 {
        T::zero()
    } else {
        counts.selection_time_s / <T as Scalar>::from_u32(trials)
    };
    Ok(MetricsSummary {
        sa_pct: sa,
        far_pct: far,
        sr_pct: sr,
        avg_selection_time_s: avg,
    })
}

type UserRow<T> = (TrialOutcome<T>, MetricsSummary<T>);

/// Arithmetic mean of per-user summaries and per-user selection times.
pub fn aggregate<T: Scalar>(
    users: &[(TrialOutcome<T>, MetricsSummary<T>)],
) -> Result<MetricsSummary<T>, MetricsError> {
    if users.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = <T as Scalar>::from_u32(users.len() as u32);
    let mean = |f: &dyn Fn(&UserRow<T>) -> T| {
        users.iter().map(f).fold(T::zero(), |a, b| a + b) / n
    };
    Ok(MetricsSummary {
        sa_pct: mean(&|u| u.1.sa_pct),
        far_pct: mean(&|u| u.1.far_pct),
        sr_pct: mean(&|u| u.1.sr_pct),
        avg_selection_time_s: mean(&|u| u.0.selection_time_s),
    })
}

/// A summary rounded to published precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplaySummary {
    pub sa_pct: f64,
    pub far_pct: f64,
    pub sr_pct: f64,
    pub avg_selection_time_s: f64,
}

impl<T: Scalar> MetricsSummary<T> {
    pub fn display(&self) -> DisplaySummary {
        let r = |x: T, d| round_half_down(x, d).to_f64().unwrap_or(f64::NAN);
        DisplaySummary {
            sa_pct: r(self.sa_pct, 0),
            far_pct: r(self.far_pct, 1),
            sr_pct: r(self.sr_pct, 1),
            avg_selection_time_s: r(self.avg_selection_time_s, 1),
        }
    }
}

impl fmt::Display for DisplaySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SA {:.0}% / FAR {:.1}% / SR {:.1}% / time {:.1} s",
            self.sa_pct, self.far_pct, self.sr_pct, self.avg_selection_time_s
        )
    }
}

// ---------------------------------------------------------------------------
// Published count tables
// ---------------------------------------------------------------------------

/// A number as printed in a table, remembering how many decimals it carried.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Printed {
    pub value: f64,
    pub decimals: u32,
}

impl Printed {
    /// Whether `x`, rounded to this cell's precision, equals the printed value.
    pub fn agrees_with(&self, x: f64) -> bool {
        let scale = 10f64.powi(self.decimals as i32);
        (round_half_down(x, self.decimals) * scale).round() == (self.value * scale).round()
    }
}

impl FromStr for Printed {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let value: f64 = s
            .parse()
            .map_err(|_| MetricsError::MalformedTable(format!("not a number: {s:?}")))?;
        let decimals = s.split_once('.').map_or(0, |(_, frac)| frac.len() as u32);
        Ok(Printed { value, decimals })
    }
}

impl fmt::Display for Printed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.*}", self.decimals as usize, self.value)
    }
}

/// One row of a per-user counts table with its printed percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct PublishedRow {
    pub user: u32,
    pub tasks: u32,
    pub tp: u32,
    pub fp: u32,
    pub fn_: u32,
    pub sa: Printed,
    pub far: Printed,
    pub sr: Printed,
    pub time_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Tasks,
    Sa,
    Far,
    Sr,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Tasks => "TP+FN",
            Field::Sa => "SA",
            Field::Far => "FAR",
            Field::Sr => "SR",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub user: u32,
    pub field: Field,
    pub published: f64,
    pub recomputed: f64,
}

impl PublishedRow {
    /// Checks the printed cells against the counts.
    ///
    /// SA and FAR are recomputed from the counts. SR is recomputed from the
    /// row's printed SA and FAR, since that is how the column was derived; a
    /// row whose SR disagrees with its own printed inputs is inconsistent.
    pub fn discrepancies(&self) -> Vec<Discrepancy> {
        let mut out = Vec::new();
        let mut flag = |field, published: f64, recomputed: f64| {
            out.push(Discrepancy {
                user: self.user,
                field,
                published,
                recomputed,
            })
        };
        // Every task ends completed or missed; wrong selections come on top.
        let settled = self.tp + self.fn_;
        if settled != self.tasks {
            flag(Field::Tasks, f64::from(self.tasks), f64::from(settled));
        }
        if let Ok(sa) = selection_accuracy::<f64>(self.tp, self.fn_) {
            if !self.sa.agrees_with(sa) {
                flag(Field::Sa, self.sa.value, sa);
            }
        }
        if let Ok(far) = false_alarm_rate::<f64>(self.tp, self.fp) {
            if !self.far.agrees_with(far) {
                flag(Field::Far, self.far.value, far);
            }
        }
        if let Ok(sr) = success_rate(self.sa.value, self.far.value) {
            if !self.sr.agrees_with(sr) {
                flag(Field::Sr, self.sr.value, sr);
            }
        }
        out
    }

    pub fn outcome(&self) -> TrialOutcome<f64> {
        TrialOutcome::new(self.tp, self.fp, self.fn_, self.time_s.unwrap_or(0.0))
    }

    pub fn printed_summary(&self) -> MetricsSummary<f64> {
        MetricsSummary {
            sa_pct: self.sa.value,
            far_pct: self.far.value,
            sr_pct: self.sr.value,
            avg_selection_time_s: self.time_s.unwrap_or(0.0),
        }
    }

    pub fn recomputed_summary(&self) -> Result<MetricsSummary<f64>, MetricsError> {
        summarize(&self.outcome(), 1)
    }
}

/// The 12-user counts table bundled with the crate.
pub const BUNDLED_COUNTS: &str = include_str!("../data/user_counts.csv");

/// Parses a counts table with header
/// `user,tasks,tp,fp,fn,sa,far,sr` and an optional trailing `time_s` column.
pub fn parse_counts(text: &str) -> Result<Vec<PublishedRow>, MetricsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| MetricsError::MalformedTable(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let required = ["user", "tasks", "tp", "fp", "fn", "sa", "far", "sr"];
    let mut idx = [0usize; 8];
    for (slot, name) in idx.iter_mut().zip(required) {
        *slot = col(name)
            .ok_or_else(|| MetricsError::MalformedTable(format!("missing column {name}")))?;
    }
    let time_col = col("time_s");
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| MetricsError::MalformedTable(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let int = |i: usize| -> Result<u32, MetricsError> {
            field(i).parse().map_err(|_| {
                MetricsError::MalformedTable(format!(
                    "row {}: bad integer {:?}",
                    line + 1,
                    field(i)
                ))
            })
        };
        let time_s = match time_col.map(field).filter(|s| !s.is_empty()) {
            Some(s) => Some(s.parse().map_err(|_| {
                MetricsError::MalformedTable(format!("row {}: bad time", line + 1))
            })?),
            None => None,
        };
        rows.push(PublishedRow {
            user: int(idx[0])?,
            tasks: int(idx[1])?,
            tp: int(idx[2])?,
            fp: int(idx[3])?,
            fn_: int(idx[4])?,
            sa: field(idx[5]).parse()?,
            far: field(idx[6]).parse()?,
            sr: field(idx[7]).parse()?,
            time_s,
        });
    }
    if rows.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(rows)
}

/// Aggregate of the printed per-user values, which is how a summary row of
/// the published tables is produced.
pub fn aggregate_printed(rows: &[PublishedRow]) -> Result<MetricsSummary<f64>, MetricsError> {
    let users: Vec<_> = rows
        .iter()
        .map(|r| (r.outcome(), r.printed_summary()))
        .collect();
    aggregate(&users)
}
