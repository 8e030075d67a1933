//! Simplicial finite sets presented by explicit face/degeneracy tables up to
//! a level cutoff, optionally pointed.
//!
//! The simplicial identities are checked exhaustively wherever both sides
//! are defined within the cutoff.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimplicialError {
    #[error("simplicial identity {identity} fails at level {level} on simplex '{simplex}'")]
    IdentityViolation {
        identity: String,
        level: usize,
        simplex: String,
    },
    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),
    #[error("invalid simplicial data: {0}")]
    Validation(String),
    #[error("simplicial file: {0}")]
    Json(String),
}

/// A simplicial finite set with levels `0..=max_level`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialFiniteSet {
    /// Simplex names per level.
    levels: Vec<Vec<String>>,
    /// `faces[n][i][s]`: the image of simplex `s` of level `n` under the
    /// `i`-th face map (`n >= 1`, `0 <= i <= n`). `faces[0]` is empty.
    faces: Vec<Vec<Vec<usize>>>,
    /// `degeneracies[n][i][s]`: the image of simplex `s` of level `n` under
    /// the `i`-th degeneracy (`0 <= i <= n`), stored for `n < max_level`.
    degeneracies: Vec<Vec<Vec<usize>>>,
    /// Basepoint: the iterated degeneracy of a chosen 0-simplex, per level.
    basepoint: Option<Vec<usize>>,
}

impl SimplicialFiniteSet {
    pub fn new(
        levels: Vec<Vec<String>>,
        faces: Vec<Vec<Vec<usize>>>,
        degeneracies: Vec<Vec<Vec<usize>>>,
        basepoint_name: Option<&str>,
    ) -> Result<Self, SimplicialError> {
        if levels.is_empty() {
            return Err(SimplicialError::Validation("need at least level 0".into()));
        }
        let max_level = levels.len() - 1;
        if faces.len() != levels.len() {
            return Err(SimplicialError::Validation(format!(
                "faces table must have {} levels",
                levels.len()
            )));
        }
        if degeneracies.len() != max_level {
            return Err(SimplicialError::Validation(format!(
                "degeneracies table must have {} levels",
                max_level
            )));
        }
        if !faces[0].is_empty() {
            return Err(SimplicialError::Validation("level 0 has no face maps".into()));
        }
        for n in 1..=max_level {
            if faces[n].len() != n + 1 {
                return Err(SimplicialError::Validation(format!(
                    "level {n} must have {} face maps",
                    n + 1
                )));
            }
            for (i, map) in faces[n].iter().enumerate() {
                if map.len() != levels[n].len() {
                    return Err(SimplicialError::Validation(format!(
                        "face map {i} at level {n} has the wrong length"
                    )));
                }
                if map.iter().any(|&t| t >= levels[n - 1].len()) {
                    return Err(SimplicialError::Validation(format!(
                        "face map {i} at level {n} has an out-of-range target"
                    )));
                }
            }
        }
        for n in 0..max_level {
            if degeneracies[n].len() != n + 1 {
                return Err(SimplicialError::Validation(format!(
                    "level {n} must have {} degeneracy maps",
                    n + 1
                )));
            }
            for (i, map) in degeneracies[n].iter().enumerate() {
                if map.len() != levels[n].len() {
                    return Err(SimplicialError::Validation(format!(
                        "degeneracy map {i} at level {n} has the wrong length"
                    )));
                }
                if map.iter().any(|&t| t >= levels[n + 1].len()) {
                    return Err(SimplicialError::Validation(format!(
                        "degeneracy map {i} at level {n} has an out-of-range target"
                    )));
                }
            }
        }
        let basepoint = match basepoint_name {
            None => None,
            Some(name) => {
                let b0 = levels[0]
                    .iter()
                    .position(|s| s == name)
                    .ok_or_else(|| {
                        SimplicialError::Validation(format!("basepoint '{name}' is not a 0-simplex"))
                    })?;
                let mut bp = vec![b0];
                for n in 0..max_level {
                    bp.push(degeneracies[n][0][bp[n]]);
                }
                Some(bp)
            }
        };
        let x = SimplicialFiniteSet {
            levels,
            faces,
            degeneracies,
            basepoint,
        };
        x.check_identities()?;
        x.check_basepoint()?;
        Ok(x)
    }

    /// Exhaustive check of the simplicial identities within the cutoff.
    fn check_identities(&self) -> Result<(), SimplicialError> {
        let top = self.max_level();
        let fail = |identity: String, level: usize, s: usize| SimplicialError::IdentityViolation {
            identity,
            level,
            simplex: self.levels[level][s].clone(),
        };
        // d_i d_j = d_{j-1} d_i for i < j, on levels n >= 2.
        for n in 2..=top {
            for j in 1..=n {
                for i in 0..j {
                    for s in 0..self.levels[n].len() {
                        let lhs = self.faces[n - 1][i][self.faces[n][j][s]];
                        let rhs = self.faces[n - 1][j - 1][self.faces[n][i][s]];
                        if lhs != rhs {
                            return Err(fail(format!("d_{i} d_{j} = d_{} d_{i}", j - 1), n, s));
                        }
                    }
                }
            }
        }
        // s_i s_j = s_{j+1} s_i for i <= j, landing within the cutoff.
        for n in 0..top.saturating_sub(1) {
            for j in 0..=n {
                for i in 0..=j {
                    for s in 0..self.levels[n].len() {
                        let lhs = self.degeneracies[n + 1][i][self.degeneracies[n][j][s]];
                        let rhs = self.degeneracies[n + 1][j + 1][self.degeneracies[n][i][s]];
                        if lhs != rhs {
                            return Err(fail(format!("s_{i} s_{j} = s_{} s_{i}", j + 1), n, s));
                        }
                    }
                }
            }
        }
        // d_i s_j relations on levels n < top (so that s_j is defined).
        for n in 0..top {
            for j in 0..=n {
                for i in 0..=n + 1 {
                    for s in 0..self.levels[n].len() {
                        let ds = self.faces[n + 1][i][self.degeneracies[n][j][s]];
                        if i == j || i == j + 1 {
                            if ds != s {
                                return Err(fail(format!("d_{i} s_{j} = id"), n, s));
                            }
                        } else if i < j {
                            let rhs = self.degeneracies[n - 1][j - 1][self.faces[n][i][s]];
                            if ds != rhs {
                                return Err(fail(format!("d_{i} s_{j} = s_{} d_{i}", j - 1), n, s));
                            }
                        } else {
                            // i > j + 1
                            let rhs = self.degeneracies[n - 1][j][self.faces[n][i - 1][s]];
                            if ds != rhs {
                                return Err(fail(format!("d_{i} s_{j} = s_{j} d_{}", i - 1), n, s));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Faces and degeneracies must preserve the basepoint simplices.
    fn check_basepoint(&self) -> Result<(), SimplicialError> {
        let Some(bp) = &self.basepoint else { return Ok(()) };
        for n in 1..=self.max_level() {
            for i in 0..=n {
                if self.faces[n][i][bp[n]] != bp[n - 1] {
                    return Err(SimplicialError::Validation(format!(
                        "face d_{i} does not preserve the basepoint at level {n}"
                    )));
                }
            }
        }
        for n in 0..self.max_level() {
            for i in 0..=n {
                if self.degeneracies[n][i][bp[n]] != bp[n + 1] {
                    return Err(SimplicialError::Validation(format!(
                        "degeneracy s_{i} does not preserve the basepoint at level {n}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level_size(&self, n: usize) -> usize {
        self.levels[n].len()
    }

    pub fn simplex_names(&self, n: usize) -> &[String] {
        &self.levels[n]
    }

    /// `faces(n)[i][s]` for level `n >= 1`.
    pub fn face_maps(&self, n: usize) -> &[Vec<usize>] {
        &self.faces[n]
    }

    pub fn degeneracy_maps(&self, n: usize) -> &[Vec<usize>] {
        &self.degeneracies[n]
    }

    pub fn is_pointed(&self) -> bool {
        self.basepoint.is_some()
    }

    pub fn basepoint_at(&self, n: usize) -> Option<usize> {
        self.basepoint.as_ref().map(|bp| bp[n])
    }

    /// Simplices at level `n` not in the image of any degeneracy.
    pub fn nondegenerate(&self, n: usize) -> Vec<usize> {
        if n == 0 {
            return (0..self.level_size(0)).collect();
        }
        let mut image = vec![false; self.level_size(n)];
        for map in &self.degeneracies[n - 1] {
            for &t in map {
                image[t] = true;
            }
        }
        (0..self.level_size(n)).filter(|&s| !image[s]).collect()
    }

    /// For each degeneracy into level `n`, the positions NOT in its image.
    pub fn degeneracy_complements(&self, n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return Vec::new();
        }
        self.degeneracies[n - 1]
            .iter()
            .map(|map| {
                let image: BTreeSet<usize> = map.iter().copied().collect();
                (0..self.level_size(n)).filter(|s| !image.contains(s)).collect()
            })
            .collect()
    }
}

/// The minimal simplicial circle `Delta[1]/dDelta[1]`: level `n` is
/// `{0, 1, ..., n}` with `0` the (totally degenerate) basepoint.
pub fn circle(max_level: usize) -> SimplicialFiniteSet {
    let levels: Vec<Vec<String>> = (0..=max_level)
        .map(|n| {
            (0..=n)
                .map(|k| if k == 0 { "*".to_string() } else { format!("c{k}") })
                .collect()
        })
        .collect();
    let mut faces = vec![Vec::new()];
    for n in 1..=max_level {
        let mut maps = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let map = (0..=n)
                .map(|k| {
                    if k == 0 {
                        0
                    } else {
                        // In Delta[1], simplex k of level n loses a vertex:
                        // the count of 1s drops exactly when position i
                        // carries a 1, i.e. when k >= n+1-i.
                        let raw = if k >= n + 1 - i { k - 1 } else { k };
                        // Level n-1 identifies the two constant maps 0 and n.
                        if raw == n {
                            0
                        } else {
                            raw
                        }
                    }
                })
                .collect();
            maps.push(map);
        }
        faces.push(maps);
    }
    let mut degeneracies = Vec::new();
    for n in 0..max_level {
        let mut maps = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let map = (0..=n)
                .map(|k| if k == 0 { 0 } else if k >= n + 1 - i { k + 1 } else { k })
                .collect();
            maps.push(map);
        }
        degeneracies.push(maps);
    }
    SimplicialFiniteSet::new(levels, faces, degeneracies, Some("*"))
        .expect("circle model satisfies the simplicial identities")
}

/// The constant simplicial set on one point (pointed).
pub fn point(max_level: usize) -> SimplicialFiniteSet {
    let levels = vec![vec!["*".to_string()]; max_level + 1];
    let mut faces = vec![Vec::new()];
    for n in 1..=max_level {
        faces.push(vec![vec![0]; n + 1]);
    }
    let degeneracies = (0..max_level).map(|n| vec![vec![0]; n + 1]).collect();
    SimplicialFiniteSet::new(levels, faces, degeneracies, Some("*")).expect("point is valid")
}

/// Levelwise cartesian product with componentwise faces and degeneracies;
/// pointed when both factors are pointed.
pub fn product(
    x: &SimplicialFiniteSet,
    y: &SimplicialFiniteSet,
) -> Result<SimplicialFiniteSet, SimplicialError> {
    if x.max_level() != y.max_level() {
        return Err(SimplicialError::CutoffMismatch(x.max_level(), y.max_level()));
    }
    let top = x.max_level();
    let pair_index = |n: usize, a: usize, b: usize| a * y.level_size(n) + b;
    let levels: Vec<Vec<String>> = (0..=top)
        .map(|n| {
            let mut names = Vec::with_capacity(x.level_size(n) * y.level_size(n));
            for a in 0..x.level_size(n) {
                for b in 0..y.level_size(n) {
                    names.push(format!("({},{})", x.simplex_names(n)[a], y.simplex_names(n)[b]));
                }
            }
            names
        })
        .collect();
    let mut faces = vec![Vec::new()];
    for n in 1..=top {
        let maps = (0..=n)
            .map(|i| {
                let mut map = Vec::with_capacity(levels[n].len());
                for a in 0..x.level_size(n) {
                    for b in 0..y.level_size(n) {
                        map.push(pair_index(
                            n - 1,
                            x.face_maps(n)[i][a],
                            y.face_maps(n)[i][b],
                        ));
                    }
                }
                map
            })
            .collect();
        faces.push(maps);
    }
    let degeneracies = (0..top)
        .map(|n| {
            (0..=n)
                .map(|i| {
                    let mut map = Vec::with_capacity(levels[n].len());
                    for a in 0..x.level_size(n) {
                        for b in 0..y.level_size(n) {
                            map.push(pair_index(
                                n + 1,
                                x.degeneracy_maps(n)[i][a],
                                y.degeneracy_maps(n)[i][b],
                            ));
                        }
                    }
                    map
                })
                .collect()
        })
        .collect();
    let basepoint_name = match (x.basepoint_at(0), y.basepoint_at(0)) {
        (Some(a), Some(b)) => Some(format!(
            "({},{})",
            x.simplex_names(0)[a],
            y.simplex_names(0)[b]
        )),
        _ => None,
    };
    SimplicialFiniteSet::new(levels, faces, degeneracies, basepoint_name.as_deref())
}

/// The `d`-fold product of circles.
pub fn torus(d: usize, max_level: usize) -> Result<SimplicialFiniteSet, SimplicialError> {
    if d == 0 {
        return Err(SimplicialError::Validation("torus dimension must be >= 1".into()));
    }
    let mut t = circle(max_level);
    for _ in 1..d {
        t = product(&t, &circle(max_level))?;
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Simplicial-set file format (JSON)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SimplicialFile {
    levels: Vec<Vec<String>>,
    /// `faces[n][i][s]` for levels `n = 0..=max_level` (`faces[0]` empty).
    faces: Vec<Vec<Vec<usize>>>,
    /// `degeneracies[n][i][s]` for levels `n = 0..max_level`.
    degeneracies: Vec<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    basepoint: Option<String>,
}

pub fn simplicial_from_json(text: &str) -> Result<SimplicialFiniteSet, SimplicialError> {
    let file: SimplicialFile =
        serde_json::from_str(text).map_err(|e| SimplicialError::Json(e.to_string()))?;
    SimplicialFiniteSet::new(file.levels, file.faces, file.degeneracies, file.basepoint.as_deref())
}

pub fn simplicial_to_json(x: &SimplicialFiniteSet) -> String {
    let file = SimplicialFile {
        levels: x.levels.clone(),
        faces: x.faces.clone(),
        degeneracies: x.degeneracies.clone(),
        basepoint: x.basepoint_at(0).map(|b| x.simplex_names(0)[b].clone()),
    };
    serde_json::to_string_pretty(&file).expect("simplicial serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_level_counts() {
        let c = circle(3);
        let counts: Vec<usize> = (0..=3).map(|n| c.level_size(n)).collect();
        assert_eq!(counts, vec![1, 2, 3, 4]);
    }

    #[test]
    fn circle_faces_of_the_one_cell_hit_the_basepoint() {
        let c = circle(3);
        assert_eq!(c.face_maps(1)[0][1], 0);
        assert_eq!(c.face_maps(1)[1][1], 0);
    }

    #[test]
    fn circle_has_no_nondegenerate_cells_above_level_one() {
        let c = circle(4);
        assert_eq!(c.nondegenerate(0).len(), 1);
        assert_eq!(c.nondegenerate(1).len(), 1);
        assert_eq!(c.nondegenerate(2).len(), 0);
        assert_eq!(c.nondegenerate(3).len(), 0);
    }

    #[test]
    fn product_with_point_keeps_level_counts() {
        let c = circle(3);
        let p = point(3);
        let cp = product(&c, &p).unwrap();
        for n in 0..=3 {
            assert_eq!(cp.level_size(n), c.level_size(n));
        }
    }

    #[test]
    fn torus_level_counts_are_squares() {
        let t = torus(2, 3).unwrap();
        let counts: Vec<usize> = (0..=3).map(|n| t.level_size(n)).collect();
        assert_eq!(counts, vec![1, 4, 9, 16]);
    }

    #[test]
    fn torus_level_two_has_two_shuffles() {
        let t = torus(2, 3).unwrap();
        assert_eq!(t.nondegenerate(2).len(), 2);
    }

    #[test]
    fn product_cutoff_mismatch() {
        assert!(matches!(
            product(&circle(3), &circle(4)),
            Err(SimplicialError::CutoffMismatch(3, 4))
        ));
    }

    #[test]
    fn json_round_trip() {
        let c = circle(3);
        let text = simplicial_to_json(&c);
        let back = simplicial_from_json(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn json_rejects_identity_violation() {
        // Two 1-simplices glued so that d_0 d_2 != d_1 d_0 at level 2.
        let mut c = circle(2);
        let text = simplicial_to_json(&c);
        let mut file: serde_json::Value = serde_json::from_str(&text).unwrap();
        // Corrupt one face entry.
        file["faces"][2][0][1] = serde_json::json!(0);
        let res = simplicial_from_json(&file.to_string());
        assert!(matches!(res, Err(SimplicialError::IdentityViolation { .. })));
        c = circle(2);
        assert_eq!(c.level_size(2), 3);
    }

    #[test]
    fn point_round_trips_and_is_constant() {
        let p = point(4);
        for n in 0..=4 {
            assert_eq!(p.level_size(n), 1);
        }
        let back = simplicial_from_json(&simplicial_to_json(&p)).unwrap();
        assert_eq!(back, p);
    }
}
