//! Positive-pair samplers for the three contrastive regimes: distance-based
//! pre-training, consecutive-echo fine-tuning, and same-spot floor-level
//! retraining.

use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A training batch of `2M` spectrograms where indices `(2t, 2t+1)` are
/// positive pairs and every cross pairing acts as a negative.
#[derive(Debug, Clone)]
pub struct PairBatch<T> {
    pub specs: Vec<Spectrogram<T>>,
}

impl<T> PairBatch<T> {
    pub fn num_pairs(&self) -> usize {
        self.specs.len() / 2
    }
}

/// Source of positive-pair batches.
pub trait PairSource<T: Scalar> {
    fn next_batch(&mut self, m: usize, rng: &mut ChaCha8Rng) -> Result<PairBatch<T>>;
}

/// Positives are trace pairs captured less than `threshold_m` apart; used
/// for pre-training on synthetic grids where positions are known.
pub struct DistancePairs<T> {
    specs: Vec<Spectrogram<T>>,
    /// Indices of traces that have at least one qualifying partner.
    anchors: Vec<u32>,
    /// Per-trace neighbor lists within the threshold.
    neighbors: Vec<Vec<u32>>,
}

impl<T: Scalar> DistancePairs<T> {
    pub fn new(
        positions: &[(f64, f64)],
        specs: Vec<Spectrogram<T>>,
        threshold_m: f64,
    ) -> Result<Self> {
        if positions.len() != specs.len() {
            return Err(Error::Argument(
                "need one position per spectrogram".into(),
            ));
        }
        let n = positions.len();
        // Spatial hash with cell size = threshold keeps this near linear.
        let cell = threshold_m.max(1e-9);
        let key = |p: (f64, f64)| ((p.0 / cell).floor() as i64, (p.1 / cell).floor() as i64);
        let mut buckets: std::collections::HashMap<(i64, i64), Vec<u32>> =
            std::collections::HashMap::new();
        for (i, &p) in positions.iter().enumerate() {
            buckets.entry(key(p)).or_default().push(i as u32);
        }
        let mut neighbors = vec![Vec::new(); n];
        for (i, &p) in positions.iter().enumerate() {
            let (kx, ky) = key(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(cands) = buckets.get(&(kx + dx, ky + dy)) {
                        for &j in cands {
                            if j as usize == i {
                                continue;
                            }
                            let q = positions[j as usize];
                            let d2 = (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2);
                            if d2 < threshold_m * threshold_m {
                                neighbors[i].push(j);
                            }
                        }
                    }
                }
            }
        }
        let anchors: Vec<u32> = (0..n as u32)
            .filter(|&i| !neighbors[i as usize].is_empty())
            .collect();
        if anchors.is_empty() {
            return Err(Error::Sampling(format!(
                "no trace pair lies within {threshold_m} m"
            )));
        }
        Ok(Self {
            specs,
            anchors,
            neighbors,
        })
    }
}

impl<T: Scalar> PairSource<T> for DistancePairs<T> {
    fn next_batch(&mut self, m: usize, rng: &mut ChaCha8Rng) -> Result<PairBatch<T>> {
        let mut specs = Vec::with_capacity(2 * m);
        for _ in 0..m {
            let a = self.anchors[rng.gen_range(0..self.anchors.len())] as usize;
            let nb = &self.neighbors[a];
            let b = nb[rng.gen_range(0..nb.len())] as usize;
            specs.push(self.specs[a].clone());
            specs.push(self.specs[b].clone());
        }
        Ok(PairBatch { specs })
    }
}

/// Positives are consecutive echoes of one trajectory, the fine-tuning
/// regime: the capture gap is short enough that adjacent echoes share a
/// location at the modality's resolution.
pub struct ConsecutivePairs<T> {
    specs: Vec<Spectrogram<T>>,
}

impl<T: Scalar> ConsecutivePairs<T> {
    pub fn new(specs: Vec<Spectrogram<T>>) -> Result<Self> {
        if specs.len() < 2 {
            return Err(Error::Sampling(format!(
                "need at least 2 echoes in sequence, got {}",
                specs.len()
            )));
        }
        Ok(Self { specs })
    }

    pub fn num_positive_pairs(&self) -> usize {
        self.specs.len() - 1
    }
}

impl<T: Scalar> PairSource<T> for ConsecutivePairs<T> {
    fn next_batch(&mut self, m: usize, rng: &mut ChaCha8Rng) -> Result<PairBatch<T>> {
        let mut specs = Vec::with_capacity(2 * m);
        for _ in 0..m {
            let t = rng.gen_range(0..self.specs.len() - 1);
            specs.push(self.specs[t].clone());
            specs.push(self.specs[t + 1].clone());
        }
        Ok(PairBatch { specs })
    }
}

/// Positives are same-spot traces across any orientations; the floor-level
/// regime that reconciles phone orientation. Spots with a single trace are
/// skipped.
pub struct LocationPairs<T> {
    specs: Vec<Spectrogram<T>>,
    groups: Vec<Vec<u32>>,
}

impl<T: Scalar> LocationPairs<T> {
    pub fn new(spot_ids: &[u64], specs: Vec<Spectrogram<T>>) -> Result<Self> {
        if spot_ids.len() != specs.len() {
            return Err(Error::Argument("need one spot id per spectrogram".into()));
        }
        let mut by_spot: std::collections::BTreeMap<u64, Vec<u32>> =
            std::collections::BTreeMap::new();
        for (i, &s) in spot_ids.iter().enumerate() {
            by_spot.entry(s).or_default().push(i as u32);
        }
        let groups: Vec<Vec<u32>> = by_spot
            .into_values()
            .filter(|g| g.len() >= 2)
            .collect();
        if groups.is_empty() {
            return Err(Error::Sampling(
                "no spot has two or more traces; cannot form positive pairs".into(),
            ));
        }
        Ok(Self { specs, groups })
    }
}

impl<T: Scalar> PairSource<T> for LocationPairs<T> {
    fn next_batch(&mut self, m: usize, rng: &mut ChaCha8Rng) -> Result<PairBatch<T>> {
        let mut specs = Vec::with_capacity(2 * m);
        for _ in 0..m {
            let g = &self.groups[rng.gen_range(0..self.groups.len())];
            let a = rng.gen_range(0..g.len());
            let b = loop {
                let b = rng.gen_range(0..g.len());
                if b != a {
                    break b;
                }
            };
            specs.push(self.specs[g[a] as usize].clone());
            specs.push(self.specs[g[b] as usize].clone());
        }
        Ok(PairBatch { specs })
    }
}
