//! Grouping grasps by undirected closing axis and ranking group triplets by
//! how far they are from mutually orthogonal.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grasp::GraspCandidate;

/// Default grouping tolerance: axes within 2 degrees share a group.
pub fn default_group_tol() -> f64 {
    1.0 - 2f64.to_radians().cos()
}

pub const DEFAULT_SINGULARITY_TOL: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum TripletError {
    #[error("need at least 3 grasp groups, found {0}")]
    TooFewGroups(usize),
    #[error("every triplet of grasp axes is singular (|det| <= {tol})")]
    NoValidTriplet { tol: f64 },
    #[error("no grasp candidates to group")]
    NoCandidates,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspGroup {
    /// Canonical undirected axis: first non-zero component positive.
    pub axis: Vector3<f64>,
    /// Indices into the candidate list, ascending.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    /// Group indices, ascending.
    pub groups: [usize; 3],
    pub score: f64,
    /// `|det[v_i v_j v_k]|`.
    pub determinant: f64,
}

/// Flips `v` so its first component with magnitude above 1e-12 is positive.
pub fn canonical_axis(v: &Vector3<f64>) -> Vector3<f64> {
    match v.iter().find(|c| c.abs() > 1e-12) {
        Some(&c) if c < 0.0 => -v,
        _ => *v,
    }
}

/// Greedy grouping in candidate order: each grasp joins the first group whose
/// axis is within `group_tol` (in `1 - |dot|`), otherwise it starts a new one.
pub fn group_by_axis(candidates: &[GraspCandidate], group_tol: f64) -> Result<Vec<GraspGroup>, TripletError> {
    if candidates.is_empty() {
        return Err(TripletError::NoCandidates);
    }
    let mut groups: Vec<GraspGroup> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let axis = c.closing_axis();
        match groups
            .iter_mut()
            .find(|g| g.axis.dot(&axis).abs() > 1.0 - group_tol)
        {
            Some(g) => g.members.push(i),
            None => groups.push(GraspGroup {
                axis: canonical_axis(&axis),
                members: vec![i],
            }),
        }
    }
    Ok(groups)
}

/// `|vi.vj| + |vi.vk| + |vj.vk|`; zero for an orthonormal set, three when all
/// axes coincide.
pub fn score_triplet(vi: &Vector3<f64>, vj: &Vector3<f64>, vk: &Vector3<f64>) -> f64 {
    vi.dot(vj).abs() + vi.dot(vk).abs() + vj.dot(vk).abs()
}

pub fn axis_determinant(vi: &Vector3<f64>, vj: &Vector3<f64>, vk: &Vector3<f64>) -> f64 {
    Matrix3::from_columns(&[*vi, *vj, *vk]).determinant().abs()
}

/// All non-singular 3-combinations, sorted by score with ties in
/// lexicographic group order.
pub fn enumerate_triplets(groups: &[GraspGroup], singularity_tol: f64) -> Result<Vec<Triplet>, TripletError> {
    let n = groups.len();
    if n < 3 {
        return Err(TripletError::TooFewGroups(n));
    }
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (&groups[i].axis, &groups[j].axis, &groups[k].axis);
                let determinant = axis_determinant(a, b, c);
                if determinant <= singularity_tol {
                    continue;
                }
                out.push(Triplet {
                    groups: [i, j, k],
                    score: score_triplet(a, b, c),
                    determinant,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(TripletError::NoValidTriplet { tol: singularity_tol });
    }
    // Stable sort keeps the lexicographic generation order among equal scores.
    out.sort_by(|x, y| x.score.total_cmp(&y.score));
    Ok(out)
}
