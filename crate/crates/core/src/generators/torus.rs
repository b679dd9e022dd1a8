use crate::spectrum::{BlockIter, BlockSource, LightIter, RawBlock};

const FIRST_WINDOW: u64 = 1 << 10;
const MAX_WINDOW: u64 = 1 << 20;

/// Squared norms `|m|^2` of nonzero `m` in Z^2 with their representation
/// counts, in increasing order.
///
/// Norms are produced window by window: all lattice points with norm in
/// `[lo, hi)` are tallied into a counting array, then the window slides on.
/// Windows double up to [`MAX_WINDOW`].
#[derive(Debug)]
pub(crate) struct Torus2;

/// Representation counts of `lo..hi`, tallied over the octant `0 <= b <= a`.
fn tally(lo: u64, hi: u64) -> Vec<u32> {
    let mut counts = vec![0u32; (hi - lo) as usize];
    // a^2 <= norm < hi and 2 a^2 >= norm >= lo
    let a_min = (lo / 2).isqrt().max(1);
    let a_max = (hi - 1).isqrt();
    for a in a_min..=a_max {
        let a2 = a * a;
        let mut b = if lo > a2 { (lo - a2 - 1).isqrt() + 1 } else { 0 };
        while b <= a {
            let n = a2 + b * b;
            if n >= hi {
                break;
            }
            if n >= lo {
                counts[(n - lo) as usize] += if b == 0 || b == a { 4 } else { 8 };
            }
            b += 1;
        }
    }
    counts
}

fn norms() -> impl Iterator<Item = (u64, u32)> + Send {
    let mut lo = 1u64;
    let mut width = FIRST_WINDOW;
    let mut buffer: Vec<(u64, u32)> = Vec::new();
    let mut pos = 0usize;
    std::iter::from_fn(move || loop {
        if pos < buffer.len() {
            pos += 1;
            return Some(buffer[pos - 1]);
        }
        let hi = lo + width;
        buffer = tally(lo, hi)
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(i, c)| (lo + i as u64, c))
            .collect();
        pos = 0;
        lo = hi;
        width = (width * 2).min(MAX_WINDOW);
    })
}

impl BlockSource for Torus2 {
    fn blocks(&self) -> BlockIter<'_> {
        Box::new(norms().map(|(n, c)| Ok(RawBlock::new(n as f64, c))))
    }

    fn light_blocks(&self) -> LightIter<'_> {
        Box::new(norms().map(|(n, c)| Ok((n as f64, c as f64))))
    }
}
