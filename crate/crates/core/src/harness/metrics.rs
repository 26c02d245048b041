//! Metrics CSV, its timing sidecar, and per-figure plot tables.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const METRICS_SCHEMA: &str = "# hetuav-metrics v1";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMING_FILE: &str = "metrics_timing.csv";

/// One (method, seed, episode) row. Wall time is kept out of the metrics
/// file so that reruns compare byte-for-byte; it goes to the sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub seed: u64,
    pub n_uav: usize,
    pub episode: usize,
    pub mean_reward: f64,
    pub cumulative_f1: f64,
    pub cumulative_energy_j: f64,
    pub collisions: usize,
    pub boundary_violations: usize,
    pub s2dc_iterations_mean: f64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct TimingRow<'a> {
    method: &'a str,
    seed: u64,
    n_uav: usize,
    episode: usize,
    wall_time_s: f64,
}

fn write_with_schema<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{METRICS_SCHEMA}")?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(f);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const METRICS_HEADER: [&str; 10] = [
    "method",
    "seed",
    "n_uav",
    "episode",
    "mean_reward",
    "cumulative_f1",
    "cumulative_energy_j",
    "collisions",
    "boundary_violations",
    "s2dc_iterations_mean",
];

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    for r in rows {
        let vals = [r.mean_reward, r.cumulative_f1, r.cumulative_energy_j, r.s2dc_iterations_mean];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!(
                "non-finite metric for {} seed {} episode {}",
                r.method, r.seed, r.episode
            )));
        }
    }
    write_with_schema(path, rows, &METRICS_HEADER)
}

pub fn write_timing(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let timing = rows.iter().map(|r| TimingRow {
        method: &r.method,
        seed: r.seed,
        n_uav: r.n_uav,
        episode: r.episode,
        wall_time_s: r.wall_time_s,
    });
    write_with_schema(path, timing, &["method", "seed", "n_uav", "episode", "wall_time_s"])
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path)?;
    match text.lines().next() {
        Some(l) if l.trim() == METRICS_SCHEMA => {}
        Some(l) => return Err(Error::Parse(format!("unsupported metrics schema line `{l}`"))),
        None => return Ok(Vec::new()),
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Mean and population variance.
fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n)
}

/// Writes the figure tables derived from `rows` into `dir`:
///
/// - `fig3_reward_bands.csv`: method, n_uav, episode, n_seeds, reward_mean, reward_variance
/// - `fig4_secrecy_per_seed.csv`: method, n_uav, seed, final_cumulative_f1
/// - `fig5_energy_per_seed.csv`: method, n_uav, seed, final_cumulative_energy_j
/// - `fig6_scaling.csv`: method, n_uav, n_seeds, cumulative_f1_mean, cumulative_energy_j_mean
///
/// "Final" is each cell's last episode; fig6 averages those over seeds.
pub fn emit_plot_data(rows: &[MetricsRow], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut by_episode: BTreeMap<(&str, usize, usize), Vec<f64>> = BTreeMap::new();
    let mut last: BTreeMap<(&str, usize, u64), &MetricsRow> = BTreeMap::new();
    for r in rows {
        by_episode.entry((&r.method, r.n_uav, r.episode)).or_default().push(r.mean_reward);
        let e = last.entry((&r.method, r.n_uav, r.seed)).or_insert(r);
        if r.episode >= e.episode {
            *e = r;
        }
    }

    let write = |name: &str, header: &[&str], body: Vec<Vec<String>>| -> Result<PathBuf> {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for rec in body {
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(path)
    };

    let bands = by_episode
        .iter()
        .map(|(&(m, n, e), xs)| {
            let (mean, var) = mean_var(xs);
            vec![m.to_string(), n.to_string(), e.to_string(), xs.len().to_string(), mean.to_string(), var.to_string()]
        })
        .collect();
    let secrecy = last
        .iter()
        .map(|(&(m, n, s), r)| vec![m.to_string(), n.to_string(), s.to_string(), r.cumulative_f1.to_string()])
        .collect();
    let energy = last
        .iter()
        .map(|(&(m, n, s), r)| vec![m.to_string(), n.to_string(), s.to_string(), r.cumulative_energy_j.to_string()])
        .collect();
    let mut scaling: BTreeMap<(&str, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (&(m, n, _), r) in &last {
        let e = scaling.entry((m, n)).or_default();
        e.0.push(r.cumulative_f1);
        e.1.push(r.cumulative_energy_j);
    }
    let scaling = scaling
        .iter()
        .map(|(&(m, n), (f, e))| {
            vec![m.to_string(), n.to_string(), f.len().to_string(), mean_var(f).0.to_string(), mean_var(e).0.to_string()]
        })
        .collect();

    Ok(vec![
        write(
            "fig3_reward_bands.csv",
            &["method", "n_uav", "episode", "n_seeds", "reward_mean", "reward_variance"],
            bands,
        )?,
        write("fig4_secrecy_per_seed.csv", &["method", "n_uav", "seed", "final_cumulative_f1"], secrecy)?,
        write("fig5_energy_per_seed.csv", &["method", "n_uav", "seed", "final_cumulative_energy_j"], energy)?,
        write(
            "fig6_scaling.csv",
            &["method", "n_uav", "n_seeds", "cumulative_f1_mean", "cumulative_energy_j_mean"],
            scaling,
        )?,
    ])
}
