use std::io::{Read, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{ObsVector, StateVector, Trajectory};

/// Version of the [`ResultRow`] column layout.
pub const SCHEMA_VERSION: u32 = 1;

/// One output row: a run's estimates after timestep `t`.
///
/// Vector-valued fields are written as `;`-separated numbers in a single
/// column. Missing metrics are empty cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema: u32,
    pub run_id: String,
    pub seed: u64,
    pub algorithm: String,
    pub model: String,
    /// N.
    pub n: usize,
    /// M.
    pub m: usize,
    /// L.
    pub l: usize,
    pub t: usize,
    #[serde(serialize_with = "ser_list", deserialize_with = "de_list")]
    pub theta_mean: Vec<f64>,
    #[serde(serialize_with = "ser_list", deserialize_with = "de_list")]
    pub theta_sd: Vec<f64>,
    #[serde(serialize_with = "ser_list", deserialize_with = "de_list")]
    pub state_mean: Vec<f64>,
    pub ess: Option<f64>,
    pub log_evidence: Option<f64>,
    /// Squared error of `theta_mean` against the generating parameter.
    pub mse: Option<f64>,
    /// Summed per-cell KL(exact ‖ estimate).
    pub kl: Option<f64>,
    pub wall_ms: f64,
    /// Payload reallocations observed during this step.
    pub allocs: u64,
    pub adf_updates: usize,
}

fn ser_list<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let text: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    s.serialize_str(&text.join(";"))
}

fn de_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let text = String::deserialize(d)?;
    if text.is_empty() {
        return Ok(vec![]);
    }
    text.split(';')
        .map(|t| t.parse::<f64>().map_err(serde::de::Error::custom))
        .collect()
}

/// Streams rows as CSV with a header.
pub struct RowWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RowWriter<W> {
    pub fn new(w: W) -> Self {
        Self {
            inner: csv::Writer::from_writer(w),
        }
    }

    pub fn write(&mut self, row: &ResultRow) -> Result<()> {
        Ok(self.inner.serialize(row)?)
    }

    pub fn flush(&mut self) -> Result<()> {
        Ok(self.inner.flush()?)
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

pub fn write_rows<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut out = RowWriter::new(w);
    for r in rows {
        out.write(r)?;
    }
    out.flush()
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let rows: Vec<ResultRow> = csv::Reader::from_reader(r)
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    if let Some(bad) = rows.iter().find(|r| r.schema != SCHEMA_VERSION) {
        return Err(Error::Config(format!(
            "result schema {} is not supported (expected {SCHEMA_VERSION})",
            bad.schema
        )));
    }
    Ok(rows)
}

/// Writes `t, x0.., y0..` rows.
pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let d = traj.states.first().map_or(0, |s| s.len());
    let m = traj.observations.first().map_or(0, |y| y.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..d).map(|i| format!("x{i}")));
    header.extend((0..m).map(|i| format!("y{i}")));
    out.write_record(&header)?;
    for (t, (x, y)) in traj.states.iter().zip(&traj.observations).enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(x.iter().map(|v| v.to_string()));
        rec.extend(y.iter().map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a trajectory file. State columns may be absent (observations only).
pub fn read_trajectory<R: Read>(r: R) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("t") {
        return Err(Error::Config("trajectory header must start with t".into()));
    }
    let xs: Vec<usize> = (0..header.len()).filter(|&i| header[i].starts_with('x')).collect();
    let ys: Vec<usize> = (0..header.len()).filter(|&i| header[i].starts_with('y')).collect();
    if ys.is_empty() {
        return Err(Error::Config("trajectory has no observation columns".into()));
    }
    let parse = |rec: &csv::StringRecord, cols: &[usize]| -> Result<Vec<f64>> {
        cols.iter()
            .map(|&i| {
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad number {:?}: {e}", &rec[i])))
            })
            .collect()
    };
    let mut traj = Trajectory {
        states: vec![],
        observations: vec![],
    };
    for (t, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec[0].parse::<usize>().ok() != Some(t) {
            return Err(Error::Config(format!("trajectory rows must be numbered 0.., found {:?}", &rec[0])));
        }
        traj.states.push(StateVector::from(parse(&rec, &xs)?));
        traj.observations.push(ObsVector::from(parse(&rec, &ys)?));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), Just(0.0), Just(-0.5)]
    }

    prop_compose! {
        fn row()(
            run_id in "[a-z0-9-]{1,12}",
            seed in any::<u64>(),
            algorithm in prop::sample::select(vec!["api", "pf", "liu-west", "pmmh"]),
            n in 1usize..100_000, m in 0usize..500, l in 0usize..20, t in 0usize..10_000,
            theta_mean in prop::collection::vec(finite(), 0..5),
            theta_sd in prop::collection::vec(finite(), 0..5),
            state_mean in prop::collection::vec(finite(), 0..3),
            ess in prop::option::of(finite()),
            log_evidence in prop::option::of(finite()),
            mse in prop::option::of(finite()),
            kl in prop::option::of(finite()),
            wall_ms in finite(),
            allocs in any::<u64>(),
            adf_updates in 0usize..100_000,
        ) -> ResultRow {
            ResultRow {
                schema: SCHEMA_VERSION, run_id, seed, algorithm: algorithm.into(), model: "sin".into(),
                n, m, l, t, theta_mean, theta_sd, state_mean, ess, log_evidence, mse, kl, wall_ms, allocs, adf_updates,
            }
        }
    }

    proptest! {
        #[test]
        fn csv_round_trips(rows in prop::collection::vec(row(), 0..8)) {
            let mut buf = Vec::new();
            write_rows(&mut buf, &rows).unwrap();
            let back = read_rows(buf.as_slice()).unwrap();
            prop_assert_eq!(back, rows);
        }
    }

    #[test]
    fn header_lists_the_documented_columns() {
        let mut buf = Vec::new();
        let mut w = RowWriter::new(&mut buf);
        w.write(&ResultRow {
            schema: SCHEMA_VERSION,
            run_id: "x".into(),
            seed: 0,
            algorithm: "api".into(),
            model: "sin".into(),
            n: 1,
            m: 7,
            l: 0,
            t: 0,
            theta_mean: vec![-0.5],
            theta_sd: vec![0.1],
            state_mean: vec![],
            ess: Some(1.0),
            log_evidence: None,
            mse: None,
            kl: None,
            wall_ms: 0.0,
            allocs: 0,
            adf_updates: 1,
        })
        .unwrap();
        w.flush().unwrap();
        drop(w);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "schema,run_id,seed,algorithm,model,n,m,l,t,theta_mean,theta_sd,state_mean,ess,log_evidence,mse,kl,wall_ms,allocs,adf_updates"
        );
        assert_eq!(text.lines().nth(1).unwrap(), "1,x,0,api,sin,1,7,0,0,-0.5,0.1,,1.0,,,,0.0,0,1");
    }

    #[test]
    fn trajectory_round_trips() {
        let traj = Trajectory {
            states: vec![StateVector::from(vec![0.25]), StateVector::from(vec![-1.0 / 3.0])],
            observations: vec![ObsVector::from(vec![1.0]), ObsVector::from(vec![f64::MIN_POSITIVE])],
        };
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("t,x0,y0\n0,0.25,1\n"));
        assert_eq!(read_trajectory(buf.as_slice()).unwrap(), traj);
    }
}
