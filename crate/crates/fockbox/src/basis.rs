use crate::{Error, Result};
use std::collections::HashMap;

/// Occupation-number basis with a per-mode cap `n_max` and a total cap
/// `m_max`, enumerated by total occupation and then in descending
/// lexicographic order inside each sector.
#[derive(Clone, Debug)]
pub struct FockBasis {
    pub n_modes: usize,
    pub n_max: usize,
    pub m_max: usize,
    states: Vec<Vec<u16>>,
    index: HashMap<Vec<u16>, usize>,
}

impl FockBasis {
    pub fn new(n_modes: usize, n_max: usize, m_max: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::Invalid("at least one mode is required".into()));
        }
        if n_max > u16::MAX as usize {
            return Err(Error::Invalid(format!("n_max {n_max} too large")));
        }
        let mut states = Vec::new();
        for total in 0..=m_max {
            let mut cur = vec![0u16; n_modes];
            fill(&mut cur, 0, total, n_max, &mut states);
        }
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(FockBasis { n_modes, n_max, m_max, states, index })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u16]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn vacuum(&self) -> usize {
        0
    }

    /// Total occupation of basis state `i`.
    pub fn sector(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    /// States that every single creation operator maps back into the basis.
    pub fn is_interior(&self, i: usize) -> bool {
        self.sector(i) < self.m_max && self.states[i].iter().all(|&n| (n as usize) < self.n_max)
    }

    pub fn sector_indices(&self, m: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.sector(i) == m).collect()
    }
}

fn fill(cur: &mut Vec<u16>, pos: usize, remaining: usize, n_max: usize, out: &mut Vec<Vec<u16>>) {
    if pos == cur.len() - 1 {
        if remaining <= n_max {
            cur[pos] = remaining as u16;
            out.push(cur.clone());
        }
        return;
    }
    for n in (0..=remaining.min(n_max)).rev() {
        cur[pos] = n as u16;
        fill(cur, pos + 1, remaining - n, n_max, out);
    }
    cur[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_order() {
        let b = FockBasis::new(3, 2, 6).unwrap();
        assert_eq!(b.dim(), 27);
        assert_eq!(b.state(0), &[0, 0, 0]);
        assert_eq!(b.state(1), &[1, 0, 0]);
        assert_eq!(b.state(3), &[0, 0, 1]);
        assert_eq!(b.state(4), &[2, 0, 0]);
        for i in 1..b.dim() {
            assert!(b.sector(i) >= b.sector(i - 1));
        }
        for i in 0..b.dim() {
            assert_eq!(b.index_of(b.state(i)), Some(i));
        }
    }

    #[test]
    fn total_cap_limits_sectors() {
        let b = FockBasis::new(2, 5, 3).unwrap();
        assert_eq!(b.dim(), 10);
        assert!(b.is_interior(0));
        assert!(!b.is_interior(b.dim() - 1));
        assert_eq!(b.sector_indices(2).len(), 3);
    }
}
