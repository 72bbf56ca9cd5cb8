//! Comparable allele copies between two diploid sites.
//!
//! For population `k`, copies at site `a` and site `b` are comparable when
//! both are assigned to `k`. The comparable pairs are the cross product of
//! the matching copies, giving 0, 1, 2 or 4 comparisons.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairScenario {
    NoMatch,
    Single,
    SingleDouble,
    DoubleDouble,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairMatch {
    pub scenario: PairScenario,
    /// `(copy at a, copy at b)`, copies indexed 0 and 1.
    pub comparisons: Vec<(usize, usize)>,
}

pub fn enumerate_pair_comparisons(z_a: [u16; 2], z_b: [u16; 2], k: u16) -> PairMatch {
    let at_a: Vec<usize> = (0..2).filter(|&c| z_a[c] == k).collect();
    let at_b: Vec<usize> = (0..2).filter(|&c| z_b[c] == k).collect();
    let scenario = match (at_a.len(), at_b.len()) {
        (0, _) | (_, 0) => PairScenario::NoMatch,
        (1, 1) => PairScenario::Single,
        (2, 2) => PairScenario::DoubleDouble,
        _ => PairScenario::SingleDouble,
    };
    let comparisons = at_a
        .iter()
        .flat_map(|&ca| at_b.iter().map(move |&cb| (ca, cb)))
        .collect();
    PairMatch {
        scenario,
        comparisons,
    }
}
