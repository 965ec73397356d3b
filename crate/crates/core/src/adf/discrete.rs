use rand::Rng;

use super::{UpdateOutcome, UpdateWorkspace, LOG_Z_FLOOR};
use crate::error::{Error, Result};
use crate::model::{LogTarget, RngStream};

/// Fully factorized categorical distribution, one table per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorizedDiscreteApprox {
    tables: Vec<Vec<f64>>,
}

impl FactorizedDiscreteApprox {
    /// Tables must be nonnegative and each sum to one within 1e-12; they are
    /// renormalised exactly.
    pub fn new(tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::InvalidApprox("no tables".into()));
        }
        let mut tables = tables;
        for (i, t) in tables.iter_mut().enumerate() {
            if t.is_empty() || t.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidApprox(format!("table {i} is empty or has invalid entries")));
            }
            let s: f64 = t.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidApprox(format!("table {i} sums to {s}")));
            }
            t.iter_mut().for_each(|v| *v /= s);
        }
        Ok(Self { tables })
    }

    pub fn uniform(cardinalities: &[usize]) -> Self {
        Self {
            tables: cardinalities
                .iter()
                .map(|&c| vec![1.0 / c as f64; c])
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.tables.len()
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub fn marginal(&self, i: usize) -> &[f64] {
        &self.tables[i]
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.tables.iter().map(Vec::len).collect()
    }

    pub fn into_tables(self) -> Vec<Vec<f64>> {
        self.tables
    }
}

// Slot layout: the tables back to back, at `offsets[i]..offsets[i]+cards[i]`.

pub(crate) fn write_slot(q: &FactorizedDiscreteApprox, slot: &mut [f64]) {
    let mut at = 0;
    for t in &q.tables {
        slot[at..at + t.len()].copy_from_slice(t);
        at += t.len();
    }
}

pub(crate) fn read_slot(slot: &[f64], cards: &[usize], offsets: &[usize]) -> FactorizedDiscreteApprox {
    FactorizedDiscreteApprox {
        tables: cards
            .iter()
            .zip(offsets)
            .map(|(&c, &o)| slot[o..o + c].to_vec())
            .collect(),
    }
}

#[inline]
fn draw_code(table: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (v, &q) in table.iter().enumerate() {
        if q > 0.0 {
            acc += q;
            last = v;
            if u < acc {
                return v;
            }
        }
    }
    last
}

pub(crate) fn sample_slot(slot: &[f64], cards: &[usize], offsets: &[usize], rng: &mut RngStream, out: &mut [f64]) {
    for ((&c, &o), x) in cards.iter().zip(offsets).zip(out.iter_mut()) {
        let u: f64 = rng.random();
        *x = draw_code(&slot[o..o + c], u) as f64;
    }
}

/// Marginal matching of `t(θ)·q(θ)` onto a factorized table set.
///
/// When the joint cardinality is at most `samples` the joint is enumerated
/// exactly; otherwise `samples` joint draws from `q_prev` are weighted by
/// `t` and the weighted value frequencies become the new tables.
pub(crate) fn update_slot<T: LogTarget + ?Sized>(
    prev: &[f64],
    next: &mut [f64],
    cards: &[usize],
    offsets: &[usize],
    target: &T,
    ws: &mut UpdateWorkspace,
    rng: &mut RngStream,
) -> UpdateOutcome {
    let p = cards.len();
    let samples = ws.discrete_samples;
    let joint = cards.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
    let exhaustive = joint.is_some_and(|j| j <= samples);

    let UpdateWorkspace {
        log_t,
        codes,
        theta,
        ..
    } = ws;
    log_t.clear();
    codes.clear();

    if exhaustive {
        let joint = joint.unwrap_or(0);
        let counter = &mut theta[..p];
        counter.fill(0.0);
        for _ in 0..joint {
            let mut lw = 0.0;
            for i in 0..p {
                let v = counter[i] as usize;
                codes.push(v);
                lw += prev[offsets[i] + v].ln();
            }
            if lw > f64::NEG_INFINITY {
                lw += target.log_eval(counter);
            }
            log_t.push(if lw.is_nan() { f64::NEG_INFINITY } else { lw });
            for i in 0..p {
                counter[i] += 1.0;
                if (counter[i] as usize) < cards[i] {
                    break;
                }
                counter[i] = 0.0;
            }
        }
    } else {
        let th = &mut theta[..p];
        for _ in 0..samples {
            for i in 0..p {
                let u: f64 = rng.random();
                let v = draw_code(&prev[offsets[i]..offsets[i] + cards[i]], u);
                codes.push(v);
                th[i] = v as f64;
            }
            let lt = target.log_eval(th);
            log_t.push(if lt.is_nan() { f64::NEG_INFINITY } else { lt });
        }
    }

    let max = log_t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        next.copy_from_slice(prev);
        return UpdateOutcome::Degenerate;
    }
    let mut total = 0.0;
    for lt in log_t.iter_mut() {
        *lt = (*lt - max).exp();
        total += *lt;
    }
    let log_z = max + (total / if exhaustive { 1.0 } else { samples as f64 }).ln();
    if !(log_z >= LOG_Z_FLOOR) {
        next.copy_from_slice(prev);
        return UpdateOutcome::Degenerate;
    }

    let table_len = offsets[p - 1] + cards[p - 1];
    next[..table_len].fill(0.0);
    for (j, &w) in log_t.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for i in 0..p {
            next[offsets[i] + codes[j * p + i]] += w;
        }
    }
    for i in 0..p {
        let t = &mut next[offsets[i]..offsets[i] + cards[i]];
        let s: f64 = t.iter().sum();
        t.iter_mut().for_each(|v| *v /= s);
    }
    UpdateOutcome::Updated
}
