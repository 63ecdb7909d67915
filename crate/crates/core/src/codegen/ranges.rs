//! Loop-range decomposition shared by the emitter and its coverage tests.

/// `[lo, hi)` split into full blocks and a trailing strip:
/// blocks start at `lo, lo + block, ...` below `main_end = hi - (hi - lo) % block`,
/// and the remainder is `[main_end, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decomposition {
    pub lo: i64,
    pub hi: i64,
    pub block: i64,
    pub main_end: i64,
}

impl Decomposition {
    pub fn main_len(&self) -> i64 {
        self.main_end - self.lo
    }

    pub fn remainder_len(&self) -> i64 {
        self.hi - self.main_end
    }

    pub fn block_starts(&self) -> impl Iterator<Item = i64> {
        (self.lo..self.main_end).step_by(self.block as usize)
    }
}

pub fn render_remainder_decomposition(lo: i64, hi: i64, block: i64) -> Decomposition {
    assert!(hi >= lo && block >= 1, "invalid range or block");
    let span = hi - lo;
    Decomposition {
        lo,
        hi,
        block,
        main_end: hi - span % block,
    }
}

/// Role of one blocked dimension inside a loop nest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimRole {
    /// Outer block loop plus inner intra-block loop.
    Blocked,
    /// `[lo, main_end)` one step at a time.
    Main,
    /// `[main_end, hi)`.
    Remainder,
    /// `[lo, hi)`.
    Full,
}

/// Loop nests covering the blocked dimensions: one main nest, then one
/// remainder nest per blocked dimension. In the `k`-th remainder nest the
/// dimensions before `k` run over their main part, dimension `k` over its
/// remainder and the later ones in full, so the nests tile the box exactly.
pub fn block_nests(blocked: usize) -> Vec<Vec<DimRole>> {
    let mut nests = vec![vec![DimRole::Blocked; blocked]];
    for k in 0..blocked {
        nests.push(
            (0..blocked)
                .map(|d| match d.cmp(&k) {
                    std::cmp::Ordering::Less => DimRole::Main,
                    std::cmp::Ordering::Equal => DimRole::Remainder,
                    std::cmp::Ordering::Greater => DimRole::Full,
                })
                .collect(),
        );
    }
    nests
}

/// Indices visited along one dimension of a nest, in loop order.
pub fn role_indices(role: DimRole, d: &Decomposition) -> Vec<i64> {
    match role {
        DimRole::Blocked => d.block_starts().flat_map(|b| b..b + d.block).collect(),
        DimRole::Main => (d.lo..d.main_end).collect(),
        DimRole::Remainder => (d.main_end..d.hi).collect(),
        DimRole::Full => (d.lo..d.hi).collect(),
    }
}

/// Every point visited by the nests over the given per-dimension ranges.
pub fn enumerate_nests(ranges: &[(i64, i64)], blocks: &[i64]) -> Vec<Vec<i64>> {
    let decs: Vec<Decomposition> = ranges
        .iter()
        .zip(blocks)
        .map(|(&(lo, hi), &b)| render_remainder_decomposition(lo, hi, b))
        .collect();
    let mut out = Vec::new();
    for nest in block_nests(ranges.len()) {
        let axes: Vec<Vec<i64>> = nest
            .iter()
            .zip(&decs)
            .map(|(&r, d)| role_indices(r, d))
            .collect();
        let mut pts: Vec<Vec<i64>> = vec![Vec::new()];
        for axis in &axes {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&i| {
                        let mut q = p.clone();
                        q.push(i);
                        q
                    })
                })
                .collect();
        }
        out.extend(pts);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_division_has_empty_remainder() {
        let d = render_remainder_decomposition(1, 129, 16);
        assert_eq!((d.main_len(), d.remainder_len()), (128, 0));
    }

    #[test]
    fn block_24_leaves_8() {
        let d = render_remainder_decomposition(1, 129, 24);
        assert_eq!((d.main_len(), d.remainder_len()), (120, 8));
        assert_eq!(
            role_indices(DimRole::Remainder, &d),
            (121..129).collect::<Vec<_>>()
        );
    }

    #[test]
    fn unit_block_is_all_main() {
        let d = render_remainder_decomposition(1, 129, 1);
        assert_eq!((d.main_len(), d.remainder_len()), (128, 0));
    }

    #[test]
    fn block_larger_than_span_is_all_remainder() {
        let d = render_remainder_decomposition(4, 10, 64);
        assert_eq!((d.main_len(), d.remainder_len()), (0, 6));
    }

    #[test]
    fn two_dim_nests_cover_box_once() {
        let mut pts = enumerate_nests(&[(1, 11), (2, 9)], &[3, 4]);
        assert_eq!(pts.len(), 10 * 7);
        pts.sort();
        pts.dedup();
        assert_eq!(pts.len(), 70);
    }
}
