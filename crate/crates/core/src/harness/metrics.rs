use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, TaskId};

/// One evaluation-checkpoint row for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// Nominal checkpoint step.
    pub step: u64,
    pub task: TaskId,
    /// Fraction of greedy evaluation episodes that reached the goal.
    pub eval_success: f64,
    /// Training EMA success ratio.
    pub tracked_rho: f64,
    pub alpha: f64,
    /// Distinct states visited so far by this task's training episodes.
    pub coverage: usize,
    /// Lower-1% mean key-state distance over recent training episodes.
    /// Empty before the task's first episode.
    pub key_dist_low1pct: Option<f64>,
}

pub const METRICS_HEADER: [&str; 7] = [
    "step",
    "task",
    "eval_success",
    "tracked_rho",
    "alpha",
    "coverage",
    "key_dist_low1pct",
];

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(input: R, path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}, got {}", METRICS_HEADER.join(","), header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.deserialize::<MetricsRow>().enumerate() {
        let row = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i as u64 + 2,
            message: e.to_string(),
        })?;
        if !(0.0..=1.0).contains(&row.eval_success) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                message: format!("eval_success {} outside [0, 1]", row.eval_success),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Checks `eval_success` bounds and that steps never decrease.
pub fn check_metrics(rows: &[MetricsRow]) -> Result<()> {
    for w in rows.windows(2) {
        if w[1].step < w[0].step {
            return Err(Error::Invariant(format!("metrics step went back from {} to {}", w[0].step, w[1].step)));
        }
    }
    if let Some(bad) = rows.iter().find(|r| !(0.0..=1.0).contains(&r.eval_success)) {
        return Err(Error::Invariant(format!("eval_success {} outside [0, 1]", bad.eval_success)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: u64, task: usize, key: Option<f64>) -> MetricsRow {
        MetricsRow {
            step,
            task: TaskId(task),
            eval_success: 0.5,
            tracked_rho: 0.125,
            alpha: 2.0,
            coverage: 3,
            key_dist_low1pct: key,
        }
    }

    #[test]
    fn header_and_round_trip() {
        let rows = vec![row(0, 1, None), row(10, 1, Some(1.5))];
        let mut buf = Vec::new();
        write_metrics_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("step,task,eval_success,tracked_rho,alpha,coverage,key_dist_low1pct"));
        assert_eq!(lines.next(), Some("0,1,0.5,0.125,2.0,3,"));
        assert_eq!(read_metrics_csv(text.as_bytes(), Path::new("m.csv")).unwrap(), rows);
    }

    #[test]
    fn empty_file_still_has_header() {
        let mut buf = Vec::new();
        write_metrics_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn rejects_bad_files() {
        let wrong_header = "step,task\n0,1\n";
        assert!(read_metrics_csv(wrong_header.as_bytes(), Path::new("m.csv")).is_err());
        let bad_value = "step,task,eval_success,tracked_rho,alpha,coverage,key_dist_low1pct\n0,1,1.5,0,2,1,\n";
        match read_metrics_csv(bad_value.as_bytes(), Path::new("m.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn step_order_is_checked() {
        check_metrics(&[row(0, 1, None), row(0, 2, None), row(5, 1, None)]).unwrap();
        assert!(check_metrics(&[row(5, 1, None), row(0, 1, None)]).is_err());
    }
}
