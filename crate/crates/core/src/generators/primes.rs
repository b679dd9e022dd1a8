use crate::error::Error;
use crate::spectrum::{BlockIter, BlockSource, LightIter, RawBlock};

const SEGMENT: u64 = 1 << 18;

/// Lazy segmented sieve over the primes up to `limit`. Driving the stream
/// past the limit yields a single `SieveLimitExceeded` item.
#[derive(Debug, Clone)]
pub struct PrimeSieve {
    limit: u64,
    base: Vec<u64>,
}

impl PrimeSieve {
    pub fn new(limit: u64) -> Self {
        let root = limit.isqrt() + 1;
        let mut composite = vec![false; root as usize + 1];
        let mut base = Vec::new();
        for i in 2..=root {
            if !composite[i as usize] {
                base.push(i);
                let mut j = i * i;
                while j <= root {
                    composite[j as usize] = true;
                    j += i;
                }
            }
        }
        PrimeSieve { limit, base }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Primes in `[lo, hi)`.
    fn segment(&self, lo: u64, hi: u64) -> Vec<u64> {
        let mut composite = vec![false; (hi - lo) as usize];
        for &p in &self.base {
            if p * p >= hi {
                break;
            }
            let mut j = (p * p).max(lo.div_ceil(p) * p);
            while j < hi {
                composite[(j - lo) as usize] = true;
                j += p;
            }
        }
        (lo.max(2)..hi).filter(|&n| !composite[(n - lo) as usize]).collect()
    }

    fn primes(&self) -> impl Iterator<Item = Result<u64, Error>> + Send + '_ {
        let mut lo = 0u64;
        let mut buffer = std::vec::IntoIter::default();
        let mut done = false;
        std::iter::from_fn(move || loop {
            if let Some(p) = buffer.next() {
                return Some(Ok(p));
            }
            if done {
                return None;
            }
            if lo > self.limit {
                done = true;
                return Some(Err(Error::SieveLimitExceeded { limit: self.limit }));
            }
            let hi = (lo + SEGMENT).min(self.limit + 1);
            buffer = self.segment(lo, hi).into_iter();
            lo = hi;
            if lo > self.limit && buffer.len() == 0 {
                done = true;
                return Some(Err(Error::SieveLimitExceeded { limit: self.limit }));
            }
        })
    }
}

impl BlockSource for PrimeSieve {
    fn blocks(&self) -> BlockIter<'_> {
        Box::new(self.primes().map(|p| p.map(|p| RawBlock::new(p as f64, 1u32))))
    }

    fn light_blocks(&self) -> LightIter<'_> {
        Box::new(self.primes().map(|p| p.map(|p| (p as f64, 1.0))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_primes_and_limit_marker() {
        let sieve = PrimeSieve::new(30);
        let items: Vec<_> = sieve.primes().collect();
        let primes: Vec<u64> = items.iter().filter_map(|r| r.clone().ok()).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(items.last(), Some(&Err(Error::SieveLimitExceeded { limit: 30 })));
        assert_eq!(items.len(), 11);
    }

    #[test]
    fn segments_join_seamlessly() {
        let limit = 3 * SEGMENT + 17;
        let count = PrimeSieve::new(limit).primes().filter(|r| r.is_ok()).count();
        let mut composite = vec![false; limit as usize + 1];
        let mut want = 0;
        for i in 2..=limit as usize {
            if !composite[i] {
                want += 1;
                for j in (i * i..=limit as usize).step_by(i) {
                    composite[j] = true;
                }
            }
        }
        assert_eq!(count, want);
    }
}
