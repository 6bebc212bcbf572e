use crate::error::{Error, Result};

/// Ordered triple of distinct particle indices `(i, j, k)`.
///
/// `i` is the particle whose increment drives the update, `j` enters the
/// gradient and `k` the drift residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "[usize; 3]", into = "[usize; 3]")]
pub struct Triplet {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl Triplet {
    pub fn new(i: usize, j: usize, k: usize) -> Result<Self> {
        if i == j || j == k || i == k {
            return Err(Error::InvalidInput(format!("triplet ({i}, {j}, {k}) needs three distinct indices")));
        }
        Ok(Self { i, j, k })
    }

    pub fn max_index(&self) -> usize {
        self.i.max(self.j).max(self.k)
    }
}

impl TryFrom<[usize; 3]> for Triplet {
    type Error = Error;
    fn try_from(v: [usize; 3]) -> Result<Self> {
        Triplet::new(v[0], v[1], v[2])
    }
}

impl From<Triplet> for [usize; 3] {
    fn from(t: Triplet) -> Self {
        [t.i, t.j, t.k]
    }
}

/// The cyclic triplets `C(Pi)` of an index set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletSet {
    triplets: Vec<Triplet>,
}

impl TripletSet {
    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

/// Builds `C(Pi)` for a system of `n` particles.
///
/// With `|Pi| >= 3` the triplets are `(pi_l, pi_{l+1}, pi_{l+2})` with indices
/// taken cyclically. Smaller sets are padded with the smallest indices not in
/// `Pi`, and only the triplets that start inside `Pi` are kept, so the result
/// always has `|Pi|` elements.
pub fn build_cyclic_triplets(pi: &[usize], n: usize) -> Result<TripletSet> {
    if pi.is_empty() {
        return Err(Error::InvalidInput("index set must be non-empty".into()));
    }
    for (a, &idx) in pi.iter().enumerate() {
        if idx >= n {
            return Err(Error::InvalidInput(format!("index {idx} out of range for N = {n}")));
        }
        if pi[..a].contains(&idx) {
            return Err(Error::InvalidInput(format!("duplicate index {idx}")));
        }
    }
    let mut ext = pi.to_vec();
    if ext.len() < 3 {
        if n < 3 {
            return Err(Error::Infeasible(format!("triplets need at least 3 particles, N = {n}")));
        }
        let mut cand = 0;
        while ext.len() < 3 {
            if !ext.contains(&cand) {
                ext.push(cand);
            }
            cand += 1;
        }
    }
    let m = ext.len();
    let triplets = (0..pi.len())
        .map(|l| Triplet::new(ext[l], ext[(l + 1) % m], ext[(l + 2) % m]))
        .collect::<Result<Vec<_>>>()?;
    Ok(TripletSet { triplets })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(i: usize, j: usize, k: usize) -> Triplet {
        Triplet::new(i, j, k).unwrap()
    }

    #[test]
    fn cyclic_three() {
        let s = build_cyclic_triplets(&[2, 5, 7], 10).unwrap();
        assert_eq!(s.triplets(), &[t(2, 5, 7), t(5, 7, 2), t(7, 2, 5)]);
    }

    #[test]
    fn singleton_is_padded_with_smallest_indices() {
        let s = build_cyclic_triplets(&[4], 10).unwrap();
        assert_eq!(s.triplets(), &[t(4, 0, 1)]);
        let s = build_cyclic_triplets(&[0, 3], 10).unwrap();
        assert_eq!(s.triplets(), &[t(0, 3, 1), t(3, 1, 0)]);
    }

    #[test]
    fn full_small_system() {
        let s = build_cyclic_triplets(&[0, 1, 2], 3).unwrap();
        assert_eq!(s.triplets(), &[t(0, 1, 2), t(1, 2, 0), t(2, 0, 1)]);
    }

    #[test]
    fn invalid_sets() {
        assert!(matches!(build_cyclic_triplets(&[1, 1, 2], 5), Err(Error::InvalidInput(_))));
        assert!(matches!(build_cyclic_triplets(&[1, 2, 9], 5), Err(Error::InvalidInput(_))));
        assert!(matches!(build_cyclic_triplets(&[0], 2), Err(Error::Infeasible(_))));
        assert!(build_cyclic_triplets(&[], 5).is_err());
        assert!(Triplet::new(0, 1, 1).is_err());
        assert!(serde_json::from_str::<Triplet>("[0,2,2]").is_err());
    }
}
