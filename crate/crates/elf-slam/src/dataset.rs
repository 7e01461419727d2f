//! On-disk dataset format: JSON lines with base64-encoded float32 traces.
//!
//! A dataset file starts with a header line, followed by optional
//! ground-truth node and odometry lines (walk datasets), followed by echo
//! records sorted by `(step_idx, echo_idx)`.

use crate::dsp::EchoTrace;
use crate::error::{Error, Result};
use crate::linalg::Mat3;
use crate::motion::{OdometryEdge, Pose2};
use crate::scalar::Scalar;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub const DATASET_VERSION: u32 = 1;

/// Dataset header: format version, dataset kind, and a snapshot of the
/// configuration that produced it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetHeader {
    pub version: u32,
    pub kind: String,
    pub config: String,
    pub seed: u64,
}

/// One echo trace with its capture pose.
#[derive(Debug, Clone)]
pub struct EchoRecord {
    pub step_idx: u32,
    pub echo_idx: u32,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub spot_id: Option<u64>,
    pub trace: EchoTrace<f32>,
}

/// A full dataset in memory.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub header: Option<DatasetHeader>,
    pub gt_nodes: Vec<Pose2<f64>>,
    pub odometry: Vec<OdometryEdge<f64>>,
    pub records: Vec<EchoRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header {
        version: u32,
        kind: String,
        config: String,
        seed: u64,
    },
    GtNode {
        idx: usize,
        x: f64,
        y: f64,
        theta: f64,
    },
    Odometry {
        from: usize,
        to: usize,
        dx: f64,
        dy: f64,
        dtheta: f64,
        /// Upper triangle of the 3x3 information matrix, row major.
        info: [f64; 6],
    },
    Echo {
        step: u32,
        echo: u32,
        x: f64,
        y: f64,
        heading: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        spot: Option<u64>,
        trace: String,
    },
}

pub fn encode_trace_f32(trace: &EchoTrace<f32>) -> String {
    let mut bytes = Vec::with_capacity(trace.samples().len() * 4);
    for s in trace.samples() {
        bytes.extend_from_slice(&s.to_le_bytes());
    }
    B64.encode(bytes)
}

pub fn decode_trace_f32(b64: &str) -> Result<EchoTrace<f32>> {
    let bytes = B64
        .decode(b64)
        .map_err(|e| Error::Parse(format!("bad base64 trace: {e}")))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Parse("trace byte length not a multiple of 4".into()));
    }
    let samples: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EchoTrace::new(samples)
}

fn info_to_upper(m: &Mat3<f64>) -> [f64; 6] {
    [m.0[0][0], m.0[0][1], m.0[0][2], m.0[1][1], m.0[1][2], m.0[2][2]]
}

fn info_from_upper(u: &[f64; 6]) -> Mat3<f64> {
    Mat3([
        [u[0], u[1], u[2]],
        [u[1], u[3], u[4]],
        [u[2], u[4], u[5]],
    ])
}

impl Dataset {
    pub fn new(header: DatasetHeader) -> Self {
        Self {
            header: Some(header),
            ..Default::default()
        }
    }

    /// Sorts records by `(step_idx, echo_idx)`; called before saving.
    pub fn sort_records(&mut self) {
        self.records
            .sort_by_key(|r| (r.step_idx, r.echo_idx));
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        if let Some(h) = &self.header {
            let line = Line::Header {
                version: h.version,
                kind: h.kind.clone(),
                config: h.config.clone(),
                seed: h.seed,
            };
            writeln!(w, "{}", serde_json::to_string(&line).unwrap())?;
        }
        for (idx, n) in self.gt_nodes.iter().enumerate() {
            let line = Line::GtNode {
                idx,
                x: n.x,
                y: n.y,
                theta: n.theta,
            };
            writeln!(w, "{}", serde_json::to_string(&line).unwrap())?;
        }
        for e in &self.odometry {
            let line = Line::Odometry {
                from: e.from_idx,
                to: e.to_idx,
                dx: e.delta.x,
                dy: e.delta.y,
                dtheta: e.delta.theta,
                info: info_to_upper(&e.information),
            };
            writeln!(w, "{}", serde_json::to_string(&line).unwrap())?;
        }
        for r in &self.records {
            let line = Line::Echo {
                step: r.step_idx,
                echo: r.echo_idx,
                x: r.x,
                y: r.y,
                heading: r.heading,
                spot: r.spot_id,
                trace: encode_trace_f32(&r.trace),
            };
            writeln!(w, "{}", serde_json::to_string(&line).unwrap())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut ds = Dataset::default();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            match parsed {
                Line::Header {
                    version,
                    kind,
                    config,
                    seed,
                } => {
                    if version != DATASET_VERSION {
                        return Err(Error::Parse(format!(
                            "unsupported dataset version {version}"
                        )));
                    }
                    ds.header = Some(DatasetHeader {
                        version,
                        kind,
                        config,
                        seed,
                    });
                }
                Line::GtNode { idx, x, y, theta } => {
                    if idx != ds.gt_nodes.len() {
                        return Err(Error::Parse(format!(
                            "ground-truth nodes out of order at index {idx}"
                        )));
                    }
                    ds.gt_nodes.push(Pose2::new(x, y, theta));
                }
                Line::Odometry {
                    from,
                    to,
                    dx,
                    dy,
                    dtheta,
                    info,
                } => ds.odometry.push(OdometryEdge {
                    from_idx: from,
                    to_idx: to,
                    delta: Pose2::new(dx, dy, dtheta),
                    information: info_from_upper(&info),
                }),
                Line::Echo {
                    step,
                    echo,
                    x,
                    y,
                    heading,
                    spot,
                    trace,
                } => ds.records.push(EchoRecord {
                    step_idx: step,
                    echo_idx: echo,
                    x,
                    y,
                    heading,
                    spot_id: spot,
                    trace: decode_trace_f32(&trace)?,
                }),
            }
        }
        Ok(ds)
    }

    /// Echo traces grouped by step index, for per-step feature extraction.
    /// Steps are the sorted distinct step indices present.
    pub fn traces_by_step<T: Scalar>(&self) -> Vec<Vec<EchoTrace<T>>> {
        let mut by_step: Vec<(u32, Vec<EchoTrace<T>>)> = Vec::new();
        for r in &self.records {
            match by_step.iter_mut().find(|(s, _)| *s == r.step_idx) {
                Some((_, v)) => v.push(r.trace.cast()),
                None => by_step.push((r.step_idx, vec![r.trace.cast()])),
            }
        }
        by_step.sort_by_key(|(s, _)| *s);
        by_step.into_iter().map(|(_, v)| v).collect()
    }

    /// All traces in record order at the requested precision.
    pub fn traces<T: Scalar>(&self) -> Vec<EchoTrace<T>> {
        self.records.iter().map(|r| r.trace.cast()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::TRACE_LEN;

    fn toy_trace(fill: f32) -> EchoTrace<f32> {
        EchoTrace::new((0..TRACE_LEN).map(|i| fill * ((i % 7) as f32 - 3.0) / 4.0).collect())
            .unwrap()
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        let mut ds = Dataset::new(DatasetHeader {
            version: DATASET_VERSION,
            kind: "walk".into(),
            config: "walk.stride_m = 0.7".into(),
            seed: 42,
        });
        ds.gt_nodes.push(Pose2::new(0.0, 0.0, 0.0));
        ds.gt_nodes.push(Pose2::new(0.7, 0.0, 0.1));
        ds.odometry.push(OdometryEdge {
            from_idx: 0,
            to_idx: 1,
            delta: Pose2::new(0.7, 0.01, 0.1),
            information: Mat3::diag(2500.0, 2500.0, 3265.0),
        });
        ds.records.push(EchoRecord {
            step_idx: 0,
            echo_idx: 1,
            x: 0.1,
            y: 0.0,
            heading: 0.0,
            spot_id: None,
            trace: toy_trace(0.5),
        });
        ds.records.push(EchoRecord {
            step_idx: 0,
            echo_idx: 0,
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            spot_id: Some(7),
            trace: toy_trace(0.25),
        });
        ds.sort_records();
        ds.save(&path).unwrap();
        let loaded = Dataset::load(&path).unwrap();
        assert_eq!(loaded.header, ds.header);
        assert_eq!(loaded.gt_nodes.len(), 2);
        assert_eq!(loaded.odometry.len(), 1);
        assert_eq!(loaded.records.len(), 2);
        assert_eq!(loaded.records[0].echo_idx, 0);
        assert_eq!(loaded.records[0].spot_id, Some(7));
        assert_eq!(
            loaded.records[0].trace.samples(),
            ds.records[0].trace.samples()
        );
        let info = loaded.odometry[0].information;
        assert_eq!(info.0[2][2], 3265.0);
    }

    #[test]
    fn saving_twice_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        let mut ds = Dataset::new(DatasetHeader {
            version: DATASET_VERSION,
            kind: "grid".into(),
            config: String::new(),
            seed: 1,
        });
        ds.records.push(EchoRecord {
            step_idx: 3,
            echo_idx: 0,
            x: 1.25,
            y: 2.5,
            heading: 0.5,
            spot_id: Some(3),
            trace: toy_trace(1.0),
        });
        ds.save(&p1).unwrap();
        ds.save(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn bad_trace_length_is_rejected() {
        assert!(decode_trace_f32(&B64.encode([0u8; 8])).is_err());
    }
}
