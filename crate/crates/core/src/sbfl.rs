//! Spectrum-based fault localization over a line coverage matrix.
//!
//! Suspiciousness is Ochiai: `ef / sqrt((ef + nf) * (ef + ep))`, with a
//! score of 0 for lines no failing test executes.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::coverage::CoverageMatrix;

pub const OCHIAI: &str = "ochiai";
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SbflCounts {
    pub line: u32,
    /// Failing tests covering the line.
    pub ef: u32,
    /// Failing tests not covering it.
    pub nf: u32,
    /// Passing tests covering it.
    pub ep: u32,
    /// Passing tests not covering it.
    pub np: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspiciousnessRanking {
    pub entries: Vec<(u32, f64)>,
    pub formula_id: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SbflError {
    NoTests,
    NoFailingTests,
    Malformed,
}

impl fmt::Display for SbflError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SbflError::NoTests => "coverage matrix has no tests",
            SbflError::NoFailingTests => "no failing tests to localize",
            SbflError::Malformed => "hit vectors do not match the verdicts",
        })
    }
}

impl core::error::Error for SbflError {}

pub fn build_counts(matrix: &CoverageMatrix) -> Result<Vec<SbflCounts>, SbflError> {
    if matrix.verdicts.is_empty() {
        return Err(SbflError::NoTests);
    }
    if matrix.lines.iter().any(|l| l.hits.len() != matrix.verdicts.len()) {
        return Err(SbflError::Malformed);
    }
    let failing = matrix.verdicts.iter().filter(|p| !**p).count() as u32;
    if failing == 0 {
        return Err(SbflError::NoFailingTests);
    }
    let passing = matrix.verdicts.len() as u32 - failing;
    Ok(matrix
        .lines
        .iter()
        .map(|l| {
            let (mut ef, mut ep) = (0, 0);
            for (hit, passed) in l.hits.iter().zip(&matrix.verdicts) {
                match (*hit, *passed) {
                    (true, false) => ef += 1,
                    (true, true) => ep += 1,
                    _ => {}
                }
            }
            SbflCounts { line: l.line, ef, nf: failing - ef, ep, np: passing - ep }
        })
        .collect())
}

pub fn ochiai(ef: u32, nf: u32, ep: u32) -> f64 {
    if ef == 0 {
        return 0.0;
    }
    let denom = libm::sqrt(f64::from(ef + nf) * f64::from(ef + ep));
    (f64::from(ef) / denom).min(1.0)
}

/// Scores every line and orders them by score, highest first, ties by line.
pub fn score(counts: &[SbflCounts]) -> SuspiciousnessRanking {
    let mut entries: Vec<(u32, f64)> = counts.iter().map(|c| (c.line, ochiai(c.ef, c.nf, c.ep))).collect();
    sort_ranking(&mut entries);
    SuspiciousnessRanking { entries, formula_id: OCHIAI }
}

pub fn sort_ranking(entries: &mut [(u32, f64)]) {
    entries.sort_by(|a, b| match b.1.total_cmp(&a.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        other => other,
    });
}

/// First `k` lines of the ranking with a non-zero score.
pub fn top_suspicious(ranking: &SuspiciousnessRanking, k: usize) -> Vec<u32> {
    ranking.entries.iter().filter(|(_, s)| *s > 0.0).take(k).map(|(line, _)| *line).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::LineHits;
    use alloc::vec;

    fn matrix(verdicts: Vec<bool>, lines: Vec<(u32, Vec<bool>)>) -> CoverageMatrix {
        CoverageMatrix {
            tests: (0..verdicts.len()).map(|i| alloc::format!("t{i}")).collect(),
            verdicts,
            lines: lines.into_iter().map(|(line, hits)| LineHits { line, hits }).collect(),
        }
    }

    #[test]
    fn counts_by_definition() {
        let m = matrix(vec![false], vec![(1, vec![true])]);
        assert_eq!(build_counts(&m).unwrap(), vec![SbflCounts { line: 1, ef: 1, nf: 0, ep: 0, np: 0 }]);
        let m = matrix(vec![false], vec![(1, vec![false])]);
        let c = build_counts(&m).unwrap()[0];
        assert_eq!((c.ef, c.nf), (0, 1));
        let m = matrix(vec![true, true], vec![(1, vec![true, false])]);
        assert_eq!(build_counts(&m), Err(SbflError::NoFailingTests));
    }

    #[test]
    fn ochiai_values() {
        assert_eq!(ochiai(1, 0, 0), 1.0);
        assert_eq!(ochiai(0, 3, 2), 0.0);
        assert!((ochiai(2, 1, 1) - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn tie_break_and_top_k() {
        let mut r = SuspiciousnessRanking { entries: vec![(7, 0.9), (3, 0.9), (12, 0.2)], formula_id: OCHIAI };
        sort_ranking(&mut r.entries);
        assert_eq!(top_suspicious(&r, 2), vec![3, 7]);
        let zeros = SuspiciousnessRanking { entries: vec![(1, 0.0), (2, 0.0), (3, 0.0)], formula_id: OCHIAI };
        assert!(top_suspicious(&zeros, 3).is_empty());
        let two = SuspiciousnessRanking { entries: vec![(4, 0.5), (9, 0.1)], formula_id: OCHIAI };
        assert_eq!(top_suspicious(&two, 5), vec![4, 9]);
    }
}
