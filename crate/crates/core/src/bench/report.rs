use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::reference::SolverRun;

use super::config::ExperimentConfig;
use super::metrics::FrameError;

/// Errors of one seed, averaged over the test set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed: u64,
    pub instances: usize,
    /// Test instances whose solver run blew up.
    pub blowups: usize,
    /// `None` when any instance blew up.
    pub e_l2: Option<f64>,
    pub e_linf: Option<f64>,
    /// Per-frame errors averaged over instances; empty when any instance blew up.
    pub per_frame: Vec<FrameError>,
}

impl SeedRow {
    pub fn is_blowup(&self) -> bool {
        self.blowups > 0
    }
}

/// Mean and population standard deviation over the seeds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        if xs.iter().all(|&x| x == xs[0]) {
            return Some(Stat {
                mean: xs[0],
                std: 0.0,
            });
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Stat {
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: String,
    pub pde: serde_json::Value,
    pub reference: SolverRun,
    /// Reference produced at reduced (desk) settings.
    pub desk_scale: bool,
    pub rows: Vec<SeedRow>,
    /// `None` when any row blew up.
    pub e_l2: Option<Stat>,
    pub e_linf: Option<Stat>,
    /// Per-frame errors averaged over rows; empty when any row blew up.
    pub per_frame: Vec<FrameError>,
    pub warnings: Vec<String>,
}

impl CaseReport {
    pub(crate) fn aggregate(&mut self) {
        let ok: Vec<&SeedRow> = self.rows.iter().filter(|r| !r.is_blowup()).collect();
        if ok.len() != self.rows.len() || ok.is_empty() {
            self.e_l2 = None;
            self.e_linf = None;
            self.per_frame.clear();
            return;
        }
        let l2: Vec<f64> = ok.iter().filter_map(|r| r.e_l2).collect();
        let linf: Vec<f64> = ok.iter().filter_map(|r| r.e_linf).collect();
        self.e_l2 = Stat::of(&l2);
        self.e_linf = Stat::of(&linf);
        let frames = ok[0].per_frame.len();
        let n = ok.len() as f64;
        self.per_frame = (0..frames)
            .map(|k| FrameError {
                e_l2: ok.iter().map(|r| r.per_frame[k].e_l2).sum::<f64>() / n,
                e_linf: ok.iter().map(|r| r.per_frame[k].e_linf).sum::<f64>() / n,
            })
            .collect();
    }

    pub fn has_blowup(&self) -> bool {
        self.rows.iter().any(SeedRow::is_blowup)
    }

    /// `frame,e_l2,e_linf` with frames numbered from 1.
    pub fn frame_csv(&self) -> String {
        let mut s = String::from("frame,e_l2,e_linf\n");
        for (k, e) in self.per_frame.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", k + 1, e.e_l2, e.e_linf));
        }
        s
    }
}

/// Wall-clock seconds; excluded from the deterministic payload.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub reference_seconds: f64,
    pub solver_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub cases: Vec<CaseReport>,
    pub timings: Timings,
}

impl Report {
    pub fn has_blowup(&self) -> bool {
        self.cases.iter().any(CaseReport::has_blowup)
    }

    /// JSON of everything except timings; identical across repeated runs.
    pub fn payload_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Write the JSON report to `path` and one `<stem>_<case>.csv` per case
    /// next to it. Returns the CSV paths.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let path = path.as_ref();
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        f.write_all(b"\n")?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("report");
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut out = Vec::new();
        for case in &self.cases {
            let csv = dir.join(format!("{stem}_{}.csv", case.case));
            fs::write(&csv, case.frame_csv())?;
            out.push(csv);
        }
        Ok(out)
    }
}
