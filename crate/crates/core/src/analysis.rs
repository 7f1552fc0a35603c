//! Post-processing: hierarchical seed statistics, PCA, per-dimension
//! differences, trajectory tables and the acceptance verdicts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiments::{
    block_mean_alpha, manifest_path, probe_assay_path, Condition, Manifest, ProbeAssay, RunId, SeedGrid,
};
use crate::runlog::{EpisodeRecord, RunLog};

/// Inclusive linear-interpolation percentile of sorted data, `q` in [0, 1].
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn percentile(values: &[f64], q: f64) -> f64 {
    percentile_sorted(&sorted(values), q)
}

pub fn median(values: &[f64]) -> f64 {
    percentile(values, 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalSummary {
    /// Median over stage-2 seeds, per stage-1 seed.
    pub per_stage1: BTreeMap<u64, f64>,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    /// Grid cells with no value.
    pub missing: Vec<(u64, u64)>,
}

impl HierarchicalSummary {
    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Median over stage-2 seeds within each stage-1 seed, then median and
/// quartiles over stage-1 seeds. Cells of `grid` absent from `values` are
/// excluded and listed in `missing`.
pub fn hierarchical_summary(values: &BTreeMap<(u64, u64), f64>, grid: Option<SeedGrid>) -> Result<HierarchicalSummary> {
    let mut by_s1: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for (&(s1, _), &v) in values {
        by_s1.entry(s1).or_default().push(v);
    }
    if by_s1.is_empty() {
        return Err(Error::Analysis("hierarchical summary of no values".into()));
    }
    let missing = grid
        .map(|g| g.pairs().into_iter().filter(|k| !values.contains_key(k)).collect())
        .unwrap_or_default();
    let per_stage1: BTreeMap<u64, f64> = by_s1.into_iter().map(|(s, v)| (s, median(&v))).collect();
    let meds = sorted(&per_stage1.values().copied().collect::<Vec<_>>());
    Ok(HierarchicalSummary {
        median: percentile_sorted(&meds, 0.5),
        q25: percentile_sorted(&meds, 0.25),
        q75: percentile_sorted(&meds, 0.75),
        per_stage1,
        missing,
    })
}

pub type RunLogs = BTreeMap<(u64, u64), RunLog>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueRow {
    pub condition: Condition,
    pub block0: HierarchicalSummary,
    pub block2: HierarchicalSummary,
    /// Per-run `block0 - block2`, summarized.
    pub delta: HierarchicalSummary,
}

pub fn plasticity_residue(
    logs: &BTreeMap<Condition, RunLogs>,
    block_len: usize,
    grid: Option<SeedGrid>,
) -> Result<Vec<ResidueRow>> {
    let mut rows = Vec::new();
    for (&condition, runs) in logs {
        let (mut b0, mut b2, mut d) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
        for (&key, log) in runs {
            let a0 = block_mean_alpha(log, 0, block_len)?;
            let a2 = block_mean_alpha(log, 2, block_len)?;
            b0.insert(key, a0);
            b2.insert(key, a2);
            d.insert(key, a0 - a2);
        }
        if d.is_empty() {
            continue;
        }
        rows.push(ResidueRow {
            condition,
            block0: hierarchical_summary(&b0, grid)?,
            block2: hierarchical_summary(&b2, grid)?,
            delta: hierarchical_summary(&d, grid)?,
        });
    }
    Ok(rows)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and the matching unit
/// eigenvectors.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

/// Flips `axis` so its largest-magnitude component is positive.
fn canonical_sign(axis: &mut [f64]) {
    let lead = axis.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        axis.iter_mut().for_each(|x| *x = -*x);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    pub axes: [Vec<f64>; 2],
    /// All eigenvalues of the pooled covariance, descending.
    pub eigenvalues: Vec<f64>,
    /// Projected points, per input set.
    pub points: Vec<Vec<[f64; 2]>>,
    pub centroids: Vec<[f64; 2]>,
    /// Sample covariance of each set in the projected plane.
    pub covariances: Vec<[[f64; 2]; 2]>,
    /// All points identical: projections are zero.
    pub degenerate: bool,
}

fn covariance_2d(points: &[[f64; 2]]) -> ([f64; 2], [[f64; 2]; 2]) {
    let n = points.len() as f64;
    let mut c = [0.0; 2];
    for p in points {
        c[0] += p[0] / n;
        c[1] += p[1] / n;
    }
    let mut cov = [[0.0; 2]; 2];
    if points.len() > 1 {
        for p in points {
            let d = [p[0] - c[0], p[1] - c[1]];
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += d[i] * d[j] / (n - 1.0);
                }
            }
        }
    }
    (c, cov)
}

/// Two-component PCA fitted on the union of `sets`.
pub fn pca_2d(sets: &[Vec<Vec<f64>>]) -> Result<PcaProjection> {
    let all: Vec<&Vec<f64>> = sets.iter().flatten().collect();
    if all.len() < 3 {
        return Err(Error::Analysis(format!("PCA needs at least 3 points, got {}", all.len())));
    }
    let dim = all[0].len();
    if dim < 2 || all.iter().any(|p| p.len() != dim) {
        return Err(Error::Dimension {
            context: "pca_2d",
            expected: dim,
            got: all.iter().map(|p| p.len()).find(|&l| l != dim).unwrap_or(dim),
        });
    }
    let n = all.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in &all {
        mean.iter_mut().zip(p.iter()).for_each(|(m, x)| *m += x / n);
    }
    let mut cov = vec![vec![0.0; dim]; dim];
    for p in &all {
        let d: Vec<f64> = p.iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..dim {
            for j in i..dim {
                cov[i][j] += d[i] * d[j] / (n - 1.0);
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            cov[i][j] = cov[j][i];
        }
    }
    let (eigenvalues, mut vectors) = symmetric_eigen(&cov);
    let total: f64 = eigenvalues.iter().map(|v| v.abs()).sum();
    let scale: f64 = 1.0 + mean.iter().map(|m| m * m).sum::<f64>();
    let degenerate = total <= 1e-24 * scale;
    for v in vectors.iter_mut().take(2) {
        canonical_sign(v);
    }
    let axes = [vectors[0].clone(), vectors[1].clone()];
    let project = |p: &Vec<f64>| -> [f64; 2] {
        if degenerate {
            return [0.0; 2];
        }
        let mut out = [0.0; 2];
        for (k, axis) in axes.iter().enumerate() {
            out[k] = p.iter().zip(&mean).zip(axis).map(|((x, m), a)| (x - m) * a).sum();
        }
        out
    };
    let points: Vec<Vec<[f64; 2]>> = sets.iter().map(|s| s.iter().map(project).collect()).collect();
    let (centroids, covariances) = points.iter().map(|pts| covariance_2d(pts)).unzip();
    Ok(PcaProjection {
        mean,
        axes,
        eigenvalues,
        points,
        centroids,
        covariances,
        degenerate,
    })
}

/// Mean over matched rows of `a - b`.
pub fn per_dim_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<f64>> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Dimension {
            context: "per_dim_diff rows",
            expected: a.len(),
            got: b.len(),
        });
    }
    let dim = a[0].len();
    let mut out = vec![0.0; dim];
    for (x, y) in a.iter().zip(b) {
        if x.len() != dim || y.len() != dim {
            return Err(Error::Dimension {
                context: "per_dim_diff columns",
                expected: dim,
                got: if x.len() != dim { x.len() } else { y.len() },
            });
        }
        out.iter_mut().zip(x.iter().zip(y)).for_each(|(o, (p, q))| *o += p - q);
    }
    let n = a.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    Ok(out)
}

/// (α, ‖g‖) median trajectories of one condition.
pub type TrajectoryPair = (Vec<TrajectoryPoint>, Vec<TrajectoryPoint>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub episode: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Per-episode hierarchical median and quartiles of `metric`.
pub fn trajectory(runs: &RunLogs, metric: impl Fn(&EpisodeRecord) -> f64) -> Result<Vec<TrajectoryPoint>> {
    let len = runs.values().map(RunLog::len).min().unwrap_or(0);
    if runs.values().any(|l| l.len() != len) {
        return Err(Error::Analysis("trajectory over logs of unequal length".into()));
    }
    (0..len)
        .map(|e| {
            let cells: BTreeMap<(u64, u64), f64> = runs.iter().map(|(&k, l)| (k, metric(&l.records[e]))).collect();
            let s = hierarchical_summary(&cells, None)?;
            Ok(TrajectoryPoint {
                episode: e,
                median: s.median,
                q25: s.q25,
                q75: s.q75,
            })
        })
        .collect()
}

/// Trajectories of mean α and episode-end ‖g‖ per condition.
pub fn trajectory_tables(
    logs: &BTreeMap<Condition, RunLogs>,
) -> Result<BTreeMap<Condition, TrajectoryPair>> {
    logs.iter()
        .filter(|(_, runs)| !runs.is_empty())
        .map(|(&c, runs)| Ok((c, (trajectory(runs, |r| r.mean_alpha)?, trajectory(runs, |r| r.g_norm)?))))
        .collect()
}

/// Least-squares slope of `ys` against their indices.
pub fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        num += dx * (y - my);
        den += dx * dx;
    }
    num / den
}

fn range(ys: &[f64]) -> f64 {
    let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// A CSV table whose cells are numbers or text.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Num(v) => write!(out, "{v}").unwrap(),
                    Cell::Text(s) => out.push_str(s),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Cells that parse as finite numbers become `Num`; everything else is
    /// `Text`. Text cells must not contain commas.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| Error::Analysis("empty table".into()))?;
        let columns: Vec<String> = head.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let row: Vec<Cell> = line
                .split(',')
                .map(|s| match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Cell::Num(v),
                    _ => Cell::Text(s.to_string()),
                })
                .collect();
            if row.len() != columns.len() {
                return Err(Error::Analysis(format!("row has {} cells, header {}", row.len(), columns.len())));
            }
            rows.push(row);
        }
        Ok(Table { columns, rows })
    }
}

/// Everything the analysis consumes.
#[derive(Debug, Clone, Default)]
pub struct ExperimentData {
    pub grid: Option<SeedGrid>,
    pub block_len: usize,
    pub logs: BTreeMap<Condition, RunLogs>,
    pub assays: BTreeMap<(u64, u64), ProbeAssay>,
    /// Runs that were expected but failed or could not be read.
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    /// `pass`, `fail` or `incomplete`.
    pub status: String,
    pub measured: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    /// `pass`, `fail` or `incomplete`.
    pub verdict: String,
    pub criteria: Vec<CriterionResult>,
    pub missing_runs: Vec<String>,
}

fn status(ok: bool) -> String {
    if ok { "pass" } else { "fail" }.to_string()
}

fn incomplete(id: u32, name: &str, why: &str) -> CriterionResult {
    CriterionResult {
        id,
        name: name.into(),
        status: "incomplete".into(),
        measured: json!({ "reason": why }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub tables: BTreeMap<&'static str, Table>,
    pub report: AcceptanceReport,
}

fn has_runs(data: &ExperimentData, c: Condition) -> bool {
    data.logs.get(&c).is_some_and(|r| !r.is_empty())
}

fn criterion_residue(rows: &[ResidueRow], data: &ExperimentData) -> CriterionResult {
    let name = "plasticity residue ordering";
    let get = |c: Condition| rows.iter().find(|r| r.condition == c).map(|r| r.delta.median);
    let (Some(mixed), Some(persistent), Some(baseline)) =
        (get(Condition::Mixed), get(Condition::Persistent), get(Condition::Baseline))
    else {
        return incomplete(6, name, "baseline, mixed and persistent runs are required");
    };
    let complete = Condition::HISTORY.iter().all(|&c| has_runs(data, c));
    let ok = mixed > persistent && persistent > baseline && baseline >= -0.01 && mixed - baseline >= 0.02;
    CriterionResult {
        id: 6,
        name: name.into(),
        status: if complete { status(ok) } else { "incomplete".into() },
        measured: json!({
            "delta_alpha_mixed": mixed,
            "delta_alpha_persistent": persistent,
            "delta_alpha_baseline": baseline,
            "mixed_minus_baseline": mixed - baseline,
        }),
    }
}

fn criterion_shapes(traj: &BTreeMap<Condition, (Vec<TrajectoryPoint>, Vec<TrajectoryPoint>)>) -> CriterionResult {
    let name = "perspective magnitude regime shapes";
    let g = |c: Condition| traj.get(&c).map(|t| t.1.iter().map(|p| p.median).collect::<Vec<f64>>());
    let (Some(rigid), Some(open), Some(ad_p), Some(ad_n)) = (
        g(Condition::AblationRigid),
        g(Condition::AblationOpen),
        g(Condition::AdaptivePerturb),
        g(Condition::AdaptiveNoPerturb),
    ) else {
        return incomplete(7, name, "all four ablation conditions are required");
    };
    let n = rigid.len();
    if n < 6 || [&open, &ad_p, &ad_n].iter().any(|t| t.len() != n) {
        return incomplete(7, name, "trajectories too short or of unequal length");
    }
    let third = n / 3;
    let final_third = n - third;

    let rigid_slope = slope(&rigid[final_third..]);
    let rigid_growth = rigid[n - 1] / rigid[third];
    let rigid_ok = rigid_slope > 0.0 && rigid[n - 1] > 1.5 * rigid[third];

    let open_late_range = range(&open[third..]);
    let adaptive_range = range(&ad_p);
    let open_ok = open_late_range < 0.25 * adaptive_range;

    let plateau = |t: &[f64]| {
        let (early, late) = (slope(&t[..third]), slope(&t[final_third..]));
        (early, late, early > 0.0 && late > 0.0 && late < 0.3 * early)
    };
    let (p_early, p_late, p_ok) = plateau(&ad_p);
    let (n_early, n_late, n_ok) = plateau(&ad_n);

    let final_gap = (ad_p[n - 1] - ad_n[n - 1]).abs() / ad_n[n - 1].abs();
    let converge_ok = final_gap <= 0.25;

    CriterionResult {
        id: 7,
        name: name.into(),
        status: status(rigid_ok && open_ok && p_ok && n_ok && converge_ok),
        measured: json!({
            "rigid": { "final_third_slope": rigid_slope, "final_over_one_third": rigid_growth, "pass": rigid_ok },
            "open": { "late_range": open_late_range, "adaptive_total_range": adaptive_range, "pass": open_ok },
            "adaptive_perturb": { "first_third_slope": p_early, "final_third_slope": p_late, "pass": p_ok },
            "adaptive_no_perturb": { "first_third_slope": n_early, "final_third_slope": n_late, "pass": n_ok },
            "final_gnorm": { "perturb": ad_p[n - 1], "no_perturb": ad_n[n - 1], "relative_gap": final_gap, "pass": converge_ok },
        }),
    }
}

pub const LATE_ALPHA_EPISODES: usize = 30;

fn late_alpha(runs: &RunLogs, grid: Option<SeedGrid>) -> Result<f64> {
    let cells: BTreeMap<(u64, u64), f64> = runs
        .iter()
        .map(|(&k, log)| {
            let w = LATE_ALPHA_EPISODES.min(log.len()).max(1);
            let tail = &log.records[log.len().saturating_sub(w)..];
            (k, tail.iter().map(|r| r.mean_alpha).sum::<f64>() / w as f64)
        })
        .collect();
    Ok(hierarchical_summary(&cells, grid)?.median)
}

fn criterion_late_alpha(data: &ExperimentData) -> CriterionResult {
    let name = "late plasticity below unperturbed";
    if !has_runs(data, Condition::AdaptivePerturb) || !has_runs(data, Condition::AdaptiveNoPerturb) {
        return incomplete(8, name, "adaptive-perturb and adaptive-no-perturb runs are required");
    }
    let (Ok(p), Ok(n)) = (
        late_alpha(&data.logs[&Condition::AdaptivePerturb], data.grid),
        late_alpha(&data.logs[&Condition::AdaptiveNoPerturb], data.grid),
    ) else {
        return incomplete(8, name, "could not summarize late plasticity");
    };
    CriterionResult {
        id: 8,
        name: name.into(),
        status: status(p < n),
        measured: json!({ "late_alpha_perturb": p, "late_alpha_no_perturb": n }),
    }
}

fn criterion_probe(data: &ExperimentData) -> CriterionResult {
    let name = "probe assay structure";
    if data.assays.is_empty() {
        return incomplete(9, name, "no probe assays");
    }
    let runs: Vec<serde_json::Value> = data
        .assays
        .values()
        .map(|a| {
            json!({
                "run": a.run,
                "z_raw_identical": a.z_raw_identical,
                "mean_diff_norm": a.mean_diff_norm,
                "control_is_zero": a.control_is_zero,
            })
        })
        .collect();
    let ok = data
        .assays
        .values()
        .all(|a| a.z_raw_identical && a.mean_diff_norm > 0.0 && a.control_is_zero);
    CriterionResult {
        id: 9,
        name: name.into(),
        status: status(ok),
        measured: json!({ "runs": runs }),
    }
}

fn summary_cells(s: &HierarchicalSummary) -> [Cell; 3] {
    [s.median.into(), s.q25.into(), s.q75.into()]
}

/// Builds every table and the acceptance report.
pub fn analyze(data: &ExperimentData) -> Result<Analysis> {
    let mut tables = BTreeMap::new();

    let history: BTreeMap<Condition, RunLogs> = data
        .logs
        .iter()
        .filter(|(c, _)| Condition::HISTORY.contains(c))
        .map(|(&c, r)| (c, r.clone()))
        .collect();
    let residue = plasticity_residue(&history, data.block_len, data.grid)?;
    let mut t = Table::new(&[
        "condition",
        "block0_median",
        "block0_q25",
        "block0_q75",
        "block2_median",
        "block2_q25",
        "block2_q75",
        "delta_median",
        "delta_q25",
        "delta_q75",
        "runs",
    ]);
    for r in &residue {
        let mut row: Vec<Cell> = vec![r.condition.name().into()];
        row.extend(summary_cells(&r.block0));
        row.extend(summary_cells(&r.block2));
        row.extend(summary_cells(&r.delta));
        row.push(data.logs[&r.condition].len().into());
        t.push(row);
    }
    tables.insert("fig3_residue.csv", t);

    let mut pca_t = Table::new(&["run", "kind", "condition", "index", "zone", "pc1", "pc2"]);
    let mut diff_cells: Vec<BTreeMap<(u64, u64), f64>> = vec![BTreeMap::new(); crate::agent::Z_DIM];
    let mut gamma_cells: Vec<[BTreeMap<(u64, u64), f64>; 2]> = vec![Default::default(); crate::agent::Z_DIM];
    for (&key, assay) in &data.assays {
        let g2: Vec<Vec<f64>> = assay.probes.iter().map(|p| p.z_g2.clone()).collect();
        let null: Vec<Vec<f64>> = assay.probes.iter().map(|p| p.z_null.clone()).collect();
        let pca = pca_2d(&[g2, null])?;
        for (set, label) in [(0, "g2"), (1, "null")] {
            for (i, (p, probe)) in pca.points[set].iter().zip(&assay.probes).enumerate() {
                pca_t.push(vec![
                    assay.run.clone().into(),
                    "point".into(),
                    label.into(),
                    i.into(),
                    probe.zone.into(),
                    p[0].into(),
                    p[1].into(),
                ]);
            }
            let c = pca.centroids[set];
            let none = || Cell::Text(String::new());
            pca_t.push(vec![assay.run.clone().into(), "centroid".into(), label.into(), none(), none(), c[0].into(), c[1].into()]);
            for (i, row) in pca.covariances[set].iter().enumerate() {
                pca_t.push(vec![
                    assay.run.clone().into(),
                    "covariance".into(),
                    label.into(),
                    i.into(),
                    none(),
                    row[0].into(),
                    row[1].into(),
                ]);
            }
        }
        for d in 0..crate::agent::Z_DIM {
            diff_cells[d].insert(key, assay.diff_g2_null[d]);
            gamma_cells[d][0].insert(key, assay.snapshot.gamma0[d]);
            gamma_cells[d][1].insert(key, assay.snapshot.gamma2[d]);
        }
    }
    tables.insert("fig4a_pca.csv", pca_t);

    let mut diff_t = Table::new(&["dim", "median", "q25", "q75", "runs"]);
    let mut gamma_t = Table::new(&[
        "dim",
        "gamma0_median",
        "gamma0_q25",
        "gamma0_q75",
        "gamma2_median",
        "gamma2_q25",
        "gamma2_q75",
        "runs",
    ]);
    if !data.assays.is_empty() {
        for d in 0..crate::agent::Z_DIM {
            let mut row: Vec<Cell> = vec![d.into()];
            row.extend(summary_cells(&hierarchical_summary(&diff_cells[d], None)?));
            row.push(data.assays.len().into());
            diff_t.push(row);
            let mut row: Vec<Cell> = vec![d.into()];
            row.extend(summary_cells(&hierarchical_summary(&gamma_cells[d][0], None)?));
            row.extend(summary_cells(&hierarchical_summary(&gamma_cells[d][1], None)?));
            row.push(data.assays.len().into());
            gamma_t.push(row);
        }
    }
    tables.insert("fig4b_diff.csv", diff_t);
    tables.insert("fig4c_gamma.csv", gamma_t);

    let ablation: BTreeMap<Condition, RunLogs> = data
        .logs
        .iter()
        .filter(|(c, _)| Condition::ABLATION.contains(c))
        .map(|(&c, r)| (c, r.clone()))
        .collect();
    let traj = trajectory_tables(&ablation)?;
    let mut alpha_t = Table::new(&["episode", "condition", "median", "q25", "q75"]);
    let mut gnorm_t = Table::new(&["episode", "condition", "median", "q25", "q75"]);
    for (&c, (alpha, gnorm)) in &traj {
        for (t, series) in [(&mut alpha_t, alpha), (&mut gnorm_t, gnorm)] {
            for p in series {
                t.push(vec![p.episode.into(), c.name().into(), p.median.into(), p.q25.into(), p.q75.into()]);
            }
        }
    }
    tables.insert("fig5a_alpha.csv", alpha_t);
    tables.insert("fig5b_gnorm.csv", gnorm_t);

    let criteria = vec![
        criterion_residue(&residue, data),
        criterion_shapes(&traj),
        criterion_late_alpha(data),
        criterion_probe(data),
    ];
    let verdict = if !data.missing.is_empty() || criteria.iter().any(|c| c.status == "incomplete") {
        "incomplete"
    } else if criteria.iter().all(|c| c.status == "pass") {
        "pass"
    } else {
        "fail"
    };
    Ok(Analysis {
        tables,
        report: AcceptanceReport {
            verdict: verdict.into(),
            criteria,
            missing_runs: data.missing.clone(),
        },
    })
}

/// Collects logs and probe assays for `conditions` from an output
/// directory. Failed or unreadable runs are listed as missing.
pub fn load_experiment_data(out: &Path, grid: SeedGrid, block_len: usize, conditions: &[Condition]) -> ExperimentData {
    let mut data = ExperimentData {
        grid: Some(grid),
        block_len,
        ..Default::default()
    };
    for &c in conditions {
        let manifest = match Manifest::read(&manifest_path(out, c)) {
            Ok(m) => m,
            Err(_) => {
                data.missing.push(format!("{c}: no manifest"));
                continue;
            }
        };
        let mut runs = RunLogs::new();
        for (s1, s2) in grid.pairs() {
            let id = RunId { condition: c, s1, s2 };
            let entry = manifest.runs.iter().find(|r| r.stage1_seed == s1 && r.stage2_seed == s2);
            match entry.and_then(|e| e.log.as_ref().map(|l| out.join(l))) {
                Some(path) => match RunLog::read(&path) {
                    Ok(log) => {
                        runs.insert((s1, s2), log);
                    }
                    Err(e) => data.missing.push(format!("{id}: {e}")),
                },
                None => data.missing.push(format!(
                    "{id}: {}",
                    entry.and_then(|e| e.error.clone()).unwrap_or_else(|| "not run".into())
                )),
            }
            if c == Condition::Mixed {
                if let Ok(text) = std::fs::read_to_string(probe_assay_path(out, id)) {
                    if let Ok(assay) = serde_json::from_str::<ProbeAssay>(&text) {
                        data.assays.insert((s1, s2), assay);
                    }
                }
            }
        }
        data.logs.insert(c, runs);
    }
    data
}

pub fn tables_dir(out: &Path) -> PathBuf {
    out.join("tables")
}

pub fn acceptance_path(out: &Path) -> PathBuf {
    tables_dir(out).join("acceptance.json")
}

pub fn write_analysis(out: &Path, analysis: &Analysis) -> Result<()> {
    let dir = tables_dir(out);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (name, table) in &analysis.tables {
        let path = dir.join(name);
        std::fs::write(&path, table.to_csv()).map_err(|e| Error::io(&path, e))?;
    }
    let path = acceptance_path(out);
    std::fs::write(&path, serde_json::to_string_pretty(&analysis.report)?).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::G_DIM;

    #[test]
    fn percentiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.25), 2.0);
        assert_eq!(percentile(&v, 0.75), 4.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[1.0, 100.0, 2.0, 3.0, 4.0, 5.0]), 3.5);
        assert_eq!(percentile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn summaries() {
        let mut cells = BTreeMap::new();
        for s1 in 0..5u64 {
            for s2 in 0..6u64 {
                cells.insert((s1, s2), (s1 + 1) as f64);
            }
        }
        let s = hierarchical_summary(&cells, Some(SeedGrid::default())).unwrap();
        assert_eq!((s.median, s.q25, s.q75, s.iqr()), (3.0, 2.0, 4.0, 2.0));
        assert!(s.is_complete());
        cells.remove(&(2, 3));
        let s = hierarchical_summary(&cells, Some(SeedGrid::default())).unwrap();
        assert_eq!(s.missing, vec![(2, 3)]);
        assert!(hierarchical_summary(&BTreeMap::new(), None).is_err());
    }

    #[test]
    fn slopes() {
        assert!((slope(&[1.0, 3.0, 5.0, 7.0]) - 2.0).abs() < 1e-12);
        assert_eq!(slope(&[2.0; 5]), 0.0);
    }

    #[test]
    fn eigen_rank_one() {
        let dir: Vec<f64> = (0..16).map(|i| (i as f64 + 1.0).sqrt()).collect();
        let pts: Vec<Vec<f64>> = (0..10).map(|k| dir.iter().map(|d| d * k as f64).collect()).collect();
        let pca = pca_2d(&[pts]).unwrap();
        assert!(pca.eigenvalues[1].abs() < 1e-9 * pca.eigenvalues[0]);
        let unit: f64 = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        let cos: f64 = pca.axes[0].iter().zip(&dir).map(|(a, d)| a * d / unit).sum();
        assert!((cos.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_pca() {
        let pts = vec![vec![0.5; 16]; 5];
        let pca = pca_2d(&[pts.clone(), pts]).unwrap();
        assert!(pca.degenerate);
        assert!(pca.points.iter().flatten().all(|p| *p == [0.0, 0.0]));
        assert!(pca_2d(&[vec![vec![0.0; 16]; 2]]).is_err());
    }

    #[test]
    fn diffs() {
        let a = vec![vec![0.0; 16]; 3];
        assert_eq!(per_dim_diff(&a, &a).unwrap(), vec![0.0; 16]);
        let mut b = a.clone();
        b.iter_mut().for_each(|r| r[5] = 0.1);
        let d = per_dim_diff(&b, &a).unwrap();
        assert!((d[5] - 0.1).abs() < 1e-15 && d.iter().enumerate().all(|(i, v)| i == 5 || *v == 0.0));
        assert!(per_dim_diff(&a, &a[..2]).is_err());
    }

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(&["episode", "condition", "value"]);
        t.push(vec![0usize.into(), "mixed".into(), 0.1f64.into()]);
        t.push(vec![1usize.into(), "".into(), (-1e-300f64).into()]);
        assert_eq!(Table::from_csv(&t.to_csv()).unwrap(), t);
    }

    fn synthetic(alpha: impl Fn(usize) -> f64, gnorm: impl Fn(usize) -> f64) -> RunLog {
        RunLog {
            records: (0..150)
                .map(|e| EpisodeRecord {
                    episode: e,
                    block: e / 50,
                    n_p: 0,
                    perturbed_steps: 0,
                    mean_alpha: alpha(e),
                    mean_pred_error: 0.0,
                    g_norm: gnorm(e),
                    g: vec![0.0; G_DIM],
                    gamma_mean: vec![0.0; 16],
                    zone_counts: [48; 5],
                })
                .collect(),
        }
    }

    fn grid_of(f: impl Fn() -> RunLog) -> RunLogs {
        SeedGrid::new(2, 3).pairs().into_iter().map(|k| (k, f())).collect()
    }

    #[test]
    fn residue_on_synthetic_logs() {
        let mut logs = BTreeMap::new();
        for c in Condition::HISTORY {
            logs.insert(c, grid_of(|| synthetic(|_| 0.2, |_| 0.0)));
        }
        for r in plasticity_residue(&logs, 50, None).unwrap() {
            assert_eq!(r.delta.median, 0.0);
        }
        logs.insert(Condition::Mixed, grid_of(|| synthetic(|e| if e >= 100 { 0.15 } else { 0.2 }, |_| 0.0)));
        let rows = plasticity_residue(&logs, 50, None).unwrap();
        let d = |c| rows.iter().find(|r| r.condition == c).unwrap().delta.median;
        assert!((d(Condition::Mixed) - 0.05).abs() < 1e-12);
        assert!(d(Condition::Mixed) > d(Condition::Persistent));
        assert_eq!(d(Condition::Persistent), d(Condition::Baseline));
    }

    #[test]
    fn report_on_ideal_synthetic_data() {
        let mut data = ExperimentData {
            grid: Some(SeedGrid::new(2, 3)),
            block_len: 50,
            ..Default::default()
        };
        let plateau = |e: usize| 2.0 * (1.0 - (-(e as f64) / 20.0).exp());
        data.logs.insert(Condition::Baseline, grid_of(|| synthetic(|_| 0.28, plateau)));
        data.logs.insert(
            Condition::Mixed,
            grid_of(|| synthetic(|e| if e >= 100 { 0.23 } else { 0.28 }, plateau)),
        );
        data.logs.insert(
            Condition::Persistent,
            grid_of(|| synthetic(|e| if e >= 100 { 0.25 } else { 0.28 }, plateau)),
        );
        data.logs.insert(Condition::AblationRigid, grid_of(|| synthetic(|_| 0.05, |e| 0.5 + e as f64 * 0.02)));
        data.logs.insert(Condition::AblationOpen, grid_of(|| synthetic(|_| 0.8, |_| 1.0)));
        data.logs.insert(Condition::AdaptiveNoPerturb, grid_of(|| synthetic(|_| 0.28, plateau)));
        data.logs.insert(
            Condition::AdaptivePerturb,
            grid_of(|| synthetic(|e| if e >= 100 { 0.26 } else { 0.28 }, plateau)),
        );
        let a = analyze(&data).unwrap();
        let status: Vec<_> = a.report.criteria.iter().map(|c| (c.id, c.status.as_str())).collect();
        assert_eq!(status, vec![(6, "pass"), (7, "pass"), (8, "pass"), (9, "incomplete")]);
        assert_eq!(a.report.verdict, "incomplete");
        assert_eq!(a.tables["fig3_residue.csv"].rows.len(), 3);
        assert_eq!(a.tables["fig5b_gnorm.csv"].rows.len(), 4 * 150);

        let empty = analyze(&ExperimentData::default()).unwrap();
        assert_eq!(empty.report.verdict, "incomplete");
    }
}
