//! Classification metrics with explicit handling of undefined values:
//! entries whose denominator is zero are reported as undefined, never as 0.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::{Error, Result};

/// Confusion counts for a chosen positive label value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Confusion {
    pub true_pos: usize,
    pub true_neg: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

/// Tallies the confusion counts treating label value `positive` as positive.
pub fn confusion(y_true: &[u8], y_pred: &[u8], positive: u8) -> Result<Confusion> {
    if y_true.len() != y_pred.len() {
        return Err(Error::WidthMismatch { expected: y_true.len(), found: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut c = Confusion { true_pos: 0, true_neg: 0, false_pos: 0, false_neg: 0 };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == positive, p == positive) {
            (true, true) => c.true_pos += 1,
            (false, false) => c.true_neg += 1,
            (false, true) => c.false_pos += 1,
            (true, false) => c.false_neg += 1,
        }
    }
    Ok(c)
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

/// Balanced accuracy, plain accuracy, and per-polarity precision, recall, and
/// F-score. `None` marks metrics that are undefined by division by zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub bac: Option<f64>,
    pub acc: Option<f64>,
    pub pre_0: Option<f64>,
    pub pre_1: Option<f64>,
    pub rec_0: Option<f64>,
    pub rec_1: Option<f64>,
    pub f1_0: Option<f64>,
    pub f1_1: Option<f64>,
}

/// Computes the full report over a single label dimension.
pub fn compute_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<MetricsReport> {
    let c1 = confusion(y_true, y_pred, 1)?;
    let c0 = confusion(y_true, y_pred, 0)?;
    let precision = |c: &Confusion| ratio(c.true_pos, c.true_pos + c.false_pos);
    let recall = |c: &Confusion| ratio(c.true_pos, c.true_pos + c.false_neg);
    let f1 = |c: &Confusion| match (precision(c), recall(c)) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    let bac = match (recall(&c0), recall(&c1)) {
        (Some(a), Some(b)) => Some(0.5 * (a + b)),
        _ => None,
    };
    let acc = ratio(c1.true_pos + c1.true_neg, y_true.len());
    Ok(MetricsReport {
        bac,
        acc,
        pre_0: precision(&c0),
        pre_1: precision(&c1),
        rec_0: recall(&c0),
        rec_1: recall(&c1),
        f1_0: f1(&c0),
        f1_1: f1(&c1),
    })
}

impl Serialize for MetricsReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(untagged)]
        enum Cell {
            Value(f64),
            Undefined(&'static str),
        }
        let cell = |v: &Option<f64>| match v {
            Some(x) => Cell::Value(*x),
            None => Cell::Undefined("undefined"),
        };
        let mut s = serializer.serialize_struct("MetricsReport", 8)?;
        s.serialize_field("bac", &cell(&self.bac))?;
        s.serialize_field("acc", &cell(&self.acc))?;
        s.serialize_field("pre_0", &cell(&self.pre_0))?;
        s.serialize_field("pre_1", &cell(&self.pre_1))?;
        s.serialize_field("rec_0", &cell(&self.rec_0))?;
        s.serialize_field("rec_1", &cell(&self.rec_1))?;
        s.serialize_field("f1_0", &cell(&self.f1_0))?;
        s.serialize_field("f1_1", &cell(&self.f1_1))?;
        s.end()
    }
}
