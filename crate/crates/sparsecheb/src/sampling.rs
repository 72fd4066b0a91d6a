//! Oracle access for detection and refitting: chunked evaluation of plan
//! nodes merged with anchors, a bounded memo of earlier samples and a single
//! retry per failing point.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::oracles::{Oracle, OracleError};
use crate::reconstruction::ReconstructionPlan;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SampleFailure {
    pub point: Vec<f64>,
    pub source: OracleError,
}

pub(crate) struct Sampler<'a, O: Oracle + ?Sized> {
    oracle: &'a O,
    dim: usize,
    cache: HashMap<Vec<u64>, Complex64>,
    capacity: usize,
    calls: usize,
}

impl<'a, O: Oracle + ?Sized> Sampler<'a, O> {
    /// `capacity = 0` disables memoization.
    pub fn new(oracle: &'a O, capacity: usize) -> Self {
        Self {
            oracle,
            dim: oracle.dim(),
            cache: HashMap::new(),
            capacity,
            calls: 0,
        }
    }

    /// Number of points actually passed to the oracle.
    pub fn calls(&self) -> usize {
        self.calls
    }

    /// Samples at row-major points of length `dim`.
    pub fn sample(&mut self, points: &[f64]) -> Result<Vec<Complex64>, SampleFailure> {
        let n = points.len() / self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let mut missing = Vec::new();
        let mut missing_points = Vec::new();
        for (i, p) in points.chunks_exact(self.dim).enumerate() {
            if self.capacity > 0 {
                if let Some(v) = self.cache.get(&key(p)) {
                    out[i] = *v;
                    continue;
                }
            }
            missing.push(i);
            missing_points.extend_from_slice(p);
        }
        if missing.is_empty() {
            return Ok(out);
        }
        let results = self.oracle.sample_batch(&missing_points);
        self.calls += missing.len();
        for ((&i, p), r) in missing.iter().zip(missing_points.chunks_exact(self.dim)).zip(results) {
            let v = match r {
                Ok(v) => v,
                Err(first) => {
                    log::warn!("oracle failed at {p:?} ({first}); retrying once");
                    self.calls += 1;
                    self.oracle.sample(p).map_err(|source| SampleFailure {
                        point: p.to_vec(),
                        source,
                    })?
                }
            };
            out[i] = v;
            if self.capacity > 0 && self.cache.len() < self.capacity {
                self.cache.insert(key(p), v);
            }
        }
        Ok(out)
    }

    /// Samples at every node of `plan` once per anchor; the remaining
    /// coordinates come from the anchor as (dimension, value) pairs.
    pub fn sample_plan(
        &mut self,
        plan: &ReconstructionPlan,
        anchors: &[Vec<(usize, f64)>],
    ) -> Result<Vec<Vec<Complex64>>, SampleFailure> {
        let dims = plan.dims().to_vec();
        for anchor in anchors {
            assert_eq!(dims.len() + anchor.len(), self.dim, "plan and anchor must cover every dimension");
        }
        let per = plan.node_count();
        let total = per * anchors.len();
        let mut flat = Vec::with_capacity(total);
        let mut node = vec![0.0; dims.len()];
        let mut start = 0;
        while start < total {
            let end = (start + CHUNK).min(total);
            let mut points = vec![0.0; (end - start) * self.dim];
            for (g, p) in (start..end).zip(points.chunks_exact_mut(self.dim)) {
                plan.write_node(g % per, &mut node);
                for (&d, &v) in dims.iter().zip(&node) {
                    p[d] = v;
                }
                for &(d, v) in &anchors[g / per] {
                    p[d] = v;
                }
            }
            flat.extend(self.sample(&points)?);
            start = end;
        }
        Ok(flat.chunks(per.max(1)).map(|c| c.to_vec()).collect())
    }
}

fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| v.to_bits()).collect()
}
