//! Per-router time series and relative throughput.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, BufRead};

use crate::time::SimTime;

pub const CSV_HEADER: &str =
    "time_ms,router,pit_used_bytes,contents_cum,drops_poseidon_cum,drops_pitfull_cum,drops_dup_cum,alerts_sent_cum";

/// Snapshot of one router. Counters are cumulative since the start of the
/// run; values are `f64` so averaged runs share the type.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub time: SimTime,
    pub router: String,
    pub pit_used_bytes: f64,
    pub contents_cum: f64,
    pub drops_poseidon_cum: f64,
    pub drops_pitfull_cum: f64,
    pub drops_dup_cum: f64,
    pub alerts_sent_cum: f64,
}

impl MetricsRecord {
    fn values(&self) -> [f64; 6] {
        [
            self.pit_used_bytes,
            self.contents_cum,
            self.drops_poseidon_cum,
            self.drops_pitfull_cum,
            self.drops_dup_cum,
            self.alerts_sent_cum,
        ]
    }

    fn values_mut(&mut self) -> [&mut f64; 6] {
        [
            &mut self.pit_used_bytes,
            &mut self.contents_cum,
            &mut self.drops_poseidon_cum,
            &mut self.drops_pitfull_cum,
            &mut self.drops_dup_cum,
            &mut self.alerts_sent_cum,
        ]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("runs cover different routers or sample times")]
    MismatchedTopology,
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// All samples of one run (or the mean of several), ordered by time then by
/// router order of the topology.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsBundle {
    pub records: Vec<MetricsRecord>,
}

impl MetricsBundle {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn routers(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for r in &self.records {
            if !seen.contains(&r.router.as_str()) {
                seen.push(r.router.as_str());
            }
        }
        seen
    }

    pub fn series<'a>(&'a self, router: &'a str) -> impl Iterator<Item = &'a MetricsRecord> + 'a {
        self.records.iter().filter(move |r| r.router == router)
    }

    pub fn last(&self, router: &str) -> Option<&MetricsRecord> {
        self.records.iter().rev().find(|r| r.router == router)
    }

    /// Final cumulative content count per router.
    pub fn final_contents(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for r in &self.records {
            out.insert(r.router.clone(), r.contents_cum);
        }
        out
    }

    /// Content forwarded per router after the last sample at or before `from`.
    pub fn contents_since(&self, from: SimTime) -> BTreeMap<String, f64> {
        let mut start: BTreeMap<&str, f64> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.time <= from) {
            start.insert(&r.router, r.contents_cum);
        }
        self.final_contents()
            .into_iter()
            .map(|(router, v)| {
                let s = start.get(router.as_str()).copied().unwrap_or(0.0);
                (router, v - s)
            })
            .collect()
    }

    /// Content packets forwarded by `router` in each sample interval.
    pub fn content_increments(&self, router: &str) -> Vec<f64> {
        let mut prev = 0.0;
        self.series(router)
            .map(|r| {
                let d = r.contents_cum - prev;
                prev = r.contents_cum;
                d
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            write!(out, "{},{}", r.time, r.router).unwrap();
            for v in r.values() {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(reader: impl BufRead) -> Result<Self, MetricsError> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim_end() != CSV_HEADER {
            return Err(MetricsError::Csv {
                line: 1,
                message: format!("unexpected header {header:?}"),
            });
        }
        let mut records = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| MetricsError::Csv {
                line: k + 2,
                message,
            };
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != 8 {
                return Err(bad(format!("expected 8 fields, found {}", fields.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
            let mut rec = MetricsRecord {
                time: SimTime::from_millis_f64(num(fields[0])?),
                router: fields[1].to_string(),
                pit_used_bytes: 0.0,
                contents_cum: 0.0,
                drops_poseidon_cum: 0.0,
                drops_pitfull_cum: 0.0,
                drops_dup_cum: 0.0,
                alerts_sent_cum: 0.0,
            };
            for (slot, text) in rec.values_mut().into_iter().zip(&fields[2..]) {
                *slot = num(text)?;
            }
            records.push(rec);
        }
        Ok(Self { records })
    }

    /// Element-wise mean of runs sampled at the same times on the same routers.
    pub fn mean(runs: &[MetricsBundle]) -> Result<MetricsBundle, MetricsError> {
        let Some(first) = runs.first() else {
            return Ok(MetricsBundle::default());
        };
        let mut acc = first.clone();
        for run in &runs[1..] {
            if run.records.len() != acc.records.len() {
                return Err(MetricsError::MismatchedTopology);
            }
            for (a, r) in acc.records.iter_mut().zip(&run.records) {
                if a.time != r.time || a.router != r.router {
                    return Err(MetricsError::MismatchedTopology);
                }
                for (slot, v) in a.values_mut().into_iter().zip(r.values()) {
                    *slot += v;
                }
            }
        }
        let n = runs.len() as f64;
        for a in &mut acc.records {
            for slot in a.values_mut() {
                *slot /= n;
            }
        }
        Ok(acc)
    }
}

/// Forwarded content of `run` as a percentage of `baseline`, per router.
/// `None` marks routers that forwarded nothing in the baseline.
pub fn relative_throughput(
    run: &MetricsBundle,
    baseline: &MetricsBundle,
) -> Result<BTreeMap<String, Option<f64>>, MetricsError> {
    relative_throughput_since(run, baseline, SimTime::ZERO)
}

/// Like [`relative_throughput`], counting only content forwarded after the
/// last sample taken at or before `from`.
pub fn relative_throughput_since(
    run: &MetricsBundle,
    baseline: &MetricsBundle,
    from: SimTime,
) -> Result<BTreeMap<String, Option<f64>>, MetricsError> {
    let same_horizon =
        run.records.last().map(|x| x.time) == baseline.records.last().map(|x| x.time);
    let (r, b) = (run.contents_since(from), baseline.contents_since(from));
    if !r.keys().eq(b.keys()) || !same_horizon {
        return Err(MetricsError::MismatchedTopology);
    }
    Ok(r.into_iter()
        .map(|(router, v)| {
            let base = b[&router];
            let pct = (base > 0.0).then(|| 100.0 * v / base);
            (router, pct)
        })
        .collect())
}

pub fn relative_csv(rel: &BTreeMap<String, Option<f64>>) -> String {
    let mut out = String::from("router,percent\n");
    for (router, pct) in rel {
        match pct {
            Some(p) => writeln!(out, "{router},{p:.2}").unwrap(),
            None => writeln!(out, "{router},NA").unwrap(),
        }
    }
    out
}

/// Lag (in samples) of the highest autocorrelation peak of `series` within
/// `min_lag..=max_lag`. A peak is a lag whose coefficient is at least that of
/// both neighbours.
pub fn autocorrelation_peak(
    series: &[f64],
    min_lag: usize,
    max_lag: usize,
) -> Option<(usize, f64)> {
    let n = series.len();
    if n < 3 || min_lag == 0 || max_lag + 1 >= n {
        return None;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let var: f64 = centered.iter().map(|v| v * v).sum();
    if var == 0.0 {
        return None;
    }
    let acf = |lag: usize| {
        centered
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / var
    };
    let coeffs: Vec<f64> = (0..=max_lag + 1).map(acf).collect();
    (min_lag..=max_lag)
        .filter(|&l| coeffs[l] >= coeffs[l - 1] && coeffs[l] >= coeffs[l + 1])
        .map(|l| (l, coeffs[l]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: u64, router: &str, contents: f64) -> MetricsRecord {
        MetricsRecord {
            time: SimTime::from_millis(t),
            router: router.into(),
            pit_used_bytes: 60.0,
            contents_cum: contents,
            drops_poseidon_cum: 0.0,
            drops_pitfull_cum: 1.0,
            drops_dup_cum: 0.0,
            alerts_sent_cum: 0.0,
        }
    }

    fn bundle() -> MetricsBundle {
        MetricsBundle {
            records: vec![
                rec(100, "R0", 3.0),
                rec(100, "R1", 0.0),
                rec(200, "R0", 10.0),
                rec(200, "R1", 0.0),
            ],
        }
    }

    #[test]
    fn csv_round_trip() {
        let b = bundle();
        let text = b.to_csv();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().nth(1), Some("100,R0,60,3,0,1,0,0"));
        assert_eq!(MetricsBundle::from_csv(text.as_bytes()).unwrap(), b);
    }

    #[test]
    fn relative_identity() {
        let b = bundle();
        let rel = relative_throughput(&b, &b).unwrap();
        assert_eq!(rel["R0"], Some(100.0));
        assert_eq!(rel["R1"], None);
        assert_eq!(relative_csv(&rel), "router,percent\nR0,100.00\nR1,NA\n");
    }

    #[test]
    fn window_excludes_early_content() {
        let mut run = bundle();
        run.records[2].contents_cum = 5.0;
        let rel = relative_throughput_since(&run, &bundle(), SimTime::from_millis(100)).unwrap();
        // run: 5 - 3 = 2, baseline: 10 - 3 = 7
        assert!((rel["R0"].unwrap() - 200.0 / 7.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_runs() {
        let mut other = bundle();
        other.records.retain(|r| r.router == "R0");
        assert!(matches!(
            relative_throughput(&other, &bundle()),
            Err(MetricsError::MismatchedTopology)
        ));
        assert!(matches!(
            MetricsBundle::mean(&[other, bundle()]),
            Err(MetricsError::MismatchedTopology)
        ));
    }

    #[test]
    fn increments_sum_to_final() {
        let b = bundle();
        let inc = b.content_increments("R0");
        assert_eq!(inc, vec![3.0, 7.0]);
        assert_eq!(inc.iter().sum::<f64>(), b.last("R0").unwrap().contents_cum);
    }

    #[test]
    fn mean_of_runs() {
        let mut b2 = bundle();
        b2.records[0].contents_cum = 5.0;
        let m = MetricsBundle::mean(&[bundle(), b2]).unwrap();
        assert_eq!(m.records[0].contents_cum, 4.0);
        assert_eq!(m.records[2].contents_cum, 10.0);
    }

    #[test]
    fn autocorrelation_finds_period() {
        // bursts every 40 samples
        let series: Vec<f64> = (0..300)
            .map(|i| if i % 40 < 5 { 10.0 } else { 0.0 })
            .collect();
        assert_eq!(autocorrelation_peak(&series, 10, 60).unwrap().0, 40);
    }
}
