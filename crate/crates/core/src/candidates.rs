//! Sliding-window enumeration of candidate sensor paths.

use std::io::Write;

use thiserror::Error;

use crate::geometry::AnchorSet;
use crate::Vec3;

/// Shortest admissible window.
pub const MIN_WINDOW: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum CandidateError {
    #[error("no admissible candidate: {0} anchors, need at least {MIN_WINDOW}")]
    TooFewAnchors(usize),
}

/// A contiguous anchor window `[P_i, ..., P_{i+h-1}]` and its inclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePath {
    /// 1-based start index `i`.
    pub start_index: usize,
    /// Window length `h`.
    pub length: usize,
    /// Anchor slice of the primary finger.
    pub anchors: Vec<Vec3>,
    /// Inclusion polylines: the primary anchors, then the same window on
    /// every replica finger.
    pub inclusions: Vec<Vec<Vec3>>,
    /// Inclusion cylinder radius, mm.
    pub radius: f64,
    /// `alpha_<n>`, numbered in enumeration order.
    pub label: String,
}

/// Every window with `3 <= h <= n` and `1 <= i <= n - h + 1`, ordered by
/// ascending `h` then ascending `i`.
pub fn enumerate_candidates(
    anchors: &AnchorSet,
    radius: f64,
) -> Result<Vec<CandidatePath>, CandidateError> {
    let n = anchors.len();
    if n < MIN_WINDOW {
        return Err(CandidateError::TooFewAnchors(n));
    }
    let mut out = Vec::with_capacity(candidate_count(n));
    for h in MIN_WINDOW..=n {
        for i in 1..=n - h + 1 {
            let slice = |pts: &[Vec3]| pts[i - 1..i - 1 + h].to_vec();
            let mut inclusions = vec![slice(&anchors.points)];
            inclusions.extend(anchors.replicas.iter().map(|r| slice(r)));
            out.push(CandidatePath {
                start_index: i,
                length: h,
                anchors: slice(&anchors.points),
                inclusions,
                radius,
                label: format!("alpha_{}", out.len() + 1),
            });
        }
    }
    Ok(out)
}

/// `(n - 1)(n - 2) / 2` for `n >= 3`, else 0.
pub fn candidate_count(n: usize) -> usize {
    if n < MIN_WINDOW {
        0
    } else {
        (n - 1) * (n - 2) / 2
    }
}

/// Candidate manifest: `label,start_index,length,anchors` where `anchors`
/// is a `;`-separated list of `x y z` triples.
pub fn write_manifest<W: Write>(candidates: &[CandidatePath], mut out: W) -> std::io::Result<()> {
    writeln!(out, "label,start_index,length,anchors")?;
    for c in candidates {
        let coords: Vec<String> = c
            .anchors
            .iter()
            .map(|p| format!("{:.3} {:.3} {:.3}", p.x, p.y, p.z))
            .collect();
        writeln!(
            out,
            "{},{},{},{}",
            c.label,
            c.start_index,
            c.length,
            coords.join(";")
        )?;
    }
    Ok(())
}
