//! Task metadata embeddings and nearest-task candidate sets.
//!
//! File format: CSV with header `task_id,e0,e1,...`, one row per task, task
//! ids `1..=N` in any order but contiguous.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Normal};

use crate::variates::RngVariates;
use crate::{Error, Result, TaskId};

/// Immutable store of task embeddings plus their pairwise L2 distances.
#[derive(Debug, Clone)]
pub struct TaskEmbeddingStore {
    dim: usize,
    vectors: Vec<Vec<f64>>,
    distances: Vec<Vec<f64>>,
}

impl TaskEmbeddingStore {
    /// Builds a store from vectors in task order (`vectors[0]` is task 1).
    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::domain("at least one task embedding is required"))?;
        if dim == 0 {
            return Err(Error::domain("embedding dimension must be positive"));
        }
        if let Some(i) = vectors.iter().position(|v| v.len() != dim) {
            return Err(Error::domain(format!(
                "task {} has dimension {}, expected {dim}",
                i + 1,
                vectors[i].len()
            )));
        }
        let n = vectors.len();
        let mut distances = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = l2(&vectors[i], &vectors[j]);
                distances[i][j] = d;
                distances[j][i] = d;
            }
        }
        Ok(Self {
            dim,
            vectors,
            distances,
        })
    }

    pub fn n_tasks(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, task: TaskId) -> &[f64] {
        &self.vectors[task.index()]
    }

    pub fn distance(&self, a: TaskId, b: TaskId) -> f64 {
        self.distances[a.index()][b.index()]
    }

    pub fn distance_matrix(&self) -> &[Vec<f64>] {
        &self.distances
    }

    /// The candidate set `{ j : d(e_i, e_j) <= d_n }`, where `d_n` is the n-th
    /// smallest distance from task `i` with the self-distance counted.
    ///
    /// Because `d(e_i, e_i) = 0` always ranks first, `n = 5` yields the task
    /// itself plus its four nearest other tasks, more when distances tie at
    /// `d_n`.
    pub fn n_nearest(&self, task: TaskId, n: usize) -> Result<CandidateIndexSet> {
        let n_tasks = self.n_tasks();
        task.check(n_tasks)?;
        if n == 0 || n > n_tasks {
            return Err(Error::domain(format!("n must lie in 1..={n_tasks}, got {n}")));
        }
        let row = &self.distances[task.index()];
        let mut sorted = row.clone();
        sorted.sort_by(f64::total_cmp);
        let d_n = sorted[n - 1];
        let neighbors = row
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= d_n)
            .map(|(j, _)| TaskId::from_index(j))
            .collect();
        Ok(CandidateIndexSet { task, neighbors })
    }

    /// `n_nearest` for every task, in task order.
    pub fn all_nearest(&self, n: usize) -> Result<Vec<CandidateIndexSet>> {
        TaskId::all(self.n_tasks()).map(|t| self.n_nearest(t, n)).collect()
    }

    pub fn read_csv<R: Read>(reader: R, path: &Path) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("task_id") {
            return Err(parse_err(1, "header must start with `task_id`".into()));
        }
        let dim = header.len() - 1;
        if dim == 0 {
            return Err(parse_err(1, "header declares no embedding columns".into()));
        }
        for (k, name) in header.iter().skip(1).enumerate() {
            if name != format!("e{k}") {
                return Err(parse_err(1, format!("column {} should be `e{k}`, found `{name}`", k + 1)));
            }
        }

        let mut rows: Vec<(usize, u64, Vec<f64>)> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != dim + 1 {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, found {}", dim + 1, record.len()),
                ));
            }
            let id: usize = record[0]
                .parse()
                .map_err(|_| parse_err(line, format!("task_id `{}` is not a positive integer", &record[0])))?;
            let values = record
                .iter()
                .skip(1)
                .enumerate()
                .map(|(k, field)| {
                    field
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(line, format!("e{k} value `{field}` is not a finite number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some((_, first_line, _)) = rows.iter().find(|(other, _, _)| *other == id) {
                return Err(parse_err(
                    line,
                    format!("duplicate task_id {id} (first defined on line {first_line})"),
                ));
            }
            rows.push((id, line, values));
        }
        if rows.is_empty() {
            return Err(parse_err(1, "no task rows".into()));
        }
        let n = rows.len();
        let mut vectors: Vec<Option<Vec<f64>>> = vec![None; n];
        for (id, line, values) in rows {
            if id == 0 || id > n {
                return Err(parse_err(
                    line,
                    format!("task_id {id} outside 1..={n}; ids must be contiguous"),
                ));
            }
            vectors[id - 1] = Some(values);
        }
        Self::from_vectors(vectors.into_iter().map(|v| v.expect("ids are a permutation")).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["task_id".to_string()];
        header.extend((0..self.dim).map(|k| format!("e{k}")));
        w.write_record(&header)?;
        for (i, v) in self.vectors.iter().enumerate() {
            let mut row = vec![(i + 1).to_string()];
            row.extend(v.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Loads embeddings from a CSV file.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<TaskEmbeddingStore> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    TaskEmbeddingStore::read_csv(std::io::BufReader::new(file), path)
}

/// Tasks eligible as behavior donors for `task` by embedding proximity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateIndexSet {
    pub task: TaskId,
    pub neighbors: BTreeSet<TaskId>,
}

impl CandidateIndexSet {
    /// The trivial set holding only `task`.
    pub fn only_self(task: TaskId) -> Self {
        Self {
            task,
            neighbors: BTreeSet::from([task]),
        }
    }

    pub fn contains(&self, other: TaskId) -> bool {
        self.neighbors.contains(&other)
    }
}

/// Synthetic embeddings whose nearest-neighbor structure follows chain
/// adjacency: task `i` sits at `i` on the first axis, and every coordinate
/// carries N(0, 0.05²) jitter so that ties between `i - 1` and `i + 1` break.
pub fn synthetic_chain_embeddings(n_tasks: usize, dim: usize, seed: u64) -> Result<TaskEmbeddingStore> {
    if n_tasks == 0 || dim == 0 {
        return Err(Error::domain("n_tasks and dim must both be positive"));
    }
    let mut variates = RngVariates::seed_from_u64(seed);
    let jitter = Normal::new(0.0, 0.05).expect("valid normal");
    let vectors = (0..n_tasks)
        .map(|i| {
            (0..dim)
                .map(|k| {
                    let base = if k == 0 { (i + 1) as f64 } else { 0.0 };
                    base + jitter.sample(variates.rng())
                })
                .collect()
        })
        .collect();
    TaskEmbeddingStore::from_vectors(vectors)
}

/// Writes synthetic chain embeddings to `path`.
pub fn save_embeddings(store: &TaskEmbeddingStore, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(PathBuf::from(path), e))?;
    store.write_csv(std::io::BufWriter::new(file))
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<TaskEmbeddingStore> {
        TaskEmbeddingStore::read_csv(text.as_bytes(), Path::new("emb.csv"))
    }

    fn ids(set: &CandidateIndexSet) -> Vec<usize> {
        set.neighbors.iter().map(|t| t.0).collect()
    }

    #[test]
    fn three_four_five() {
        let s = parse("task_id,e0,e1\n1,0,0\n2,3,4\n").unwrap();
        assert_eq!(s.distance(TaskId(1), TaskId(2)), 5.0);
        assert_eq!(s.distance(TaskId(2), TaskId(1)), 5.0);
        assert_eq!(s.distance(TaskId(1), TaskId(1)), 0.0);
    }

    #[test]
    fn single_task() {
        let s = parse("task_id,e0\n1,0.5\n").unwrap();
        assert_eq!(s.distance_matrix(), &[vec![0.0]]);
        assert_eq!(ids(&s.n_nearest(TaskId(1), 1).unwrap()), vec![1]);
    }

    #[test]
    fn rows_may_come_out_of_order() {
        let s = parse("task_id,e0\n2,1\n1,0\n").unwrap();
        assert_eq!(s.vector(TaskId(1)), &[0.0]);
    }

    #[test]
    fn parse_errors_cite_lines() {
        let ragged = parse("task_id,e0,e1\n1,0,0\n2,3\n").unwrap_err().to_string();
        assert!(ragged.contains(":3:"), "{ragged}");
        let nan = parse("task_id,e0\n1,abc\n").unwrap_err().to_string();
        assert!(nan.contains(":2:") && nan.contains("abc"), "{nan}");
        let dup = parse("task_id,e0\n1,0\n1,2\n").unwrap_err().to_string();
        assert!(dup.contains(":3:") && dup.contains("duplicate"), "{dup}");
        let gap = parse("task_id,e0\n1,0\n3,2\n").unwrap_err().to_string();
        assert!(gap.contains(":3:") && gap.contains("contiguous"), "{gap}");
        assert!(parse("id,e0\n1,0\n").is_err());
        assert!(parse("task_id,e0\n").is_err());
        assert!(parse("task_id,x0\n1,0\n").is_err());
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_embeddings("/definitely/not/here.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn nearest_examples() {
        let s = TaskEmbeddingStore::from_vectors(vec![vec![0.0], vec![1.0], vec![10.0]]).unwrap();
        assert_eq!(ids(&s.n_nearest(TaskId(1), 2).unwrap()), vec![1, 2]);
        let tied = TaskEmbeddingStore::from_vectors(vec![vec![0.0], vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(ids(&tied.n_nearest(TaskId(1), 2).unwrap()), vec![1, 2, 3]);
        assert!(s.n_nearest(TaskId(4), 1).is_err());
        assert!(s.n_nearest(TaskId(0), 1).is_err());
        assert!(s.n_nearest(TaskId(1), 0).is_err());
        assert!(s.n_nearest(TaskId(1), 4).is_err());
    }

    #[test]
    fn synthetic_embeddings_follow_the_chain() {
        let s = synthetic_chain_embeddings(12, 8, 0).unwrap();
        let c = s.n_nearest(TaskId(6), 5).unwrap();
        assert_eq!(ids(&c), vec![4, 5, 6, 7, 8]);
        let edge = s.n_nearest(TaskId(1), 3).unwrap();
        assert_eq!(ids(&edge), vec![1, 2, 3]);
    }

    #[test]
    fn csv_round_trip() {
        let s = synthetic_chain_embeddings(4, 3, 1).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.vectors, s.vectors);
    }

    fn arb_vectors() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..8, 1usize..4).prop_flat_map(|(n, d)| {
            prop::collection::vec(prop::collection::vec(-5i32..5, d), n)
                .prop_map(|rows| rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect())
        })
    }

    proptest! {
        #[test]
        fn distance_matrix_is_symmetric_l2(vectors in arb_vectors()) {
            let s = TaskEmbeddingStore::from_vectors(vectors.clone()).unwrap();
            let n = vectors.len();
            for i in 0..n {
                prop_assert_eq!(s.distances[i][i], 0.0);
                for j in 0..n {
                    prop_assert_eq!(s.distances[i][j], s.distances[j][i]);
                    let direct = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    prop_assert!((s.distances[i][j] - direct).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn nearest_sets_nest_and_contain_self(vectors in arb_vectors()) {
            let s = TaskEmbeddingStore::from_vectors(vectors).unwrap();
            let n = s.n_tasks();
            for t in TaskId::all(n) {
                let mut prev: Option<CandidateIndexSet> = None;
                for k in 1..=n {
                    let c = s.n_nearest(t, k).unwrap();
                    prop_assert!(c.contains(t));
                    prop_assert!(c.neighbors.len() >= k);
                    if let Some(p) = &prev {
                        prop_assert!(p.neighbors.is_subset(&c.neighbors));
                    }
                    prev = Some(c);
                }
            }
        }

        #[test]
        fn relabeling_permutes_candidate_sets(vectors in arb_vectors(), seed in any::<u64>(), k in 1usize..8) {
            let n = vectors.len();
            let k = k.min(n);
            // Fisher-Yates driven by the seed.
            let mut perm: Vec<usize> = (0..n).collect();
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (state >> 33) as usize % (i + 1));
            }
            // Task `i` in the original becomes task `perm[i]` in the relabeled store.
            let mut relabeled = vec![Vec::new(); n];
            for (i, v) in vectors.iter().enumerate() {
                relabeled[perm[i]] = v.clone();
            }
            let a = TaskEmbeddingStore::from_vectors(vectors).unwrap();
            let b = TaskEmbeddingStore::from_vectors(relabeled).unwrap();
            for i in 0..n {
                let orig: BTreeSet<usize> = a.n_nearest(TaskId::from_index(i), k).unwrap()
                    .neighbors.iter().map(|t| perm[t.index()]).collect();
                let moved: BTreeSet<usize> = b.n_nearest(TaskId::from_index(perm[i]), k).unwrap()
                    .neighbors.iter().map(|t| t.index()).collect();
                prop_assert_eq!(orig, moved);
            }
        }
    }
}
