//! Slow, obviously-correct reference implementations used only by tests.
//!
//! Nothing here depends on the production crates. Inputs are plain strings
//! and numbers so a bug in a shared type cannot hide in both sides.

use std::ops::Range;

/// Occurrences of `gram` in `tokens`, by scanning every start position.
pub fn count_occurrences(tokens: &[String], gram: &[String]) -> usize {
    if gram.is_empty() || gram.len() > tokens.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len())
        .filter(|&i| tokens[i..i + gram.len()] == *gram)
        .count()
}

/// Clipped and total n-gram counts of one candidate, walking distinct
/// n-grams in order of first appearance.
pub fn clipped_counts(candidate: &[String], references: &[Vec<String>], n: usize) -> (usize, usize) {
    if candidate.len() < n {
        return (0, 0);
    }
    let total = candidate.len() + 1 - n;
    let mut clipped = 0;
    for i in 0..total {
        let gram = &candidate[i..i + n];
        let first = (0..i).all(|j| candidate[j..j + n] != *gram);
        if !first {
            continue;
        }
        let own = count_occurrences(candidate, gram);
        let best_ref = references.iter().map(|r| count_occurrences(r, gram)).max().unwrap_or(0);
        clipped += own.min(best_ref);
    }
    (clipped, total)
}

/// Reference length closest to `c`; the shorter one when two are equally close.
pub fn effective_reference_length(c: usize, reference_lens: &[usize]) -> usize {
    let mut best: Option<usize> = None;
    for &r in reference_lens {
        best = match best {
            None => Some(r),
            Some(b) => {
                let db = b.abs_diff(c);
                let dr = r.abs_diff(c);
                if dr < db || (dr == db && r < b) {
                    Some(r)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BleuSettings {
    pub max_n: usize,
    pub lowercase: bool,
    /// Replaces a zero clipped count by `epsilon` (over at least one n-gram).
    pub epsilon: Option<f64>,
}

/// Corpus BLEU with uniform weights, counts summed over all segments.
pub fn brute_force_bleu(candidates: &[Vec<String>], references: &[Vec<Vec<String>>], settings: BleuSettings) -> f64 {
    let fold = |t: &Vec<String>| -> Vec<String> {
        if settings.lowercase {
            t.iter().map(|w| w.to_lowercase()).collect()
        } else {
            t.clone()
        }
    };
    let mut clipped = vec![0usize; settings.max_n];
    let mut total = vec![0usize; settings.max_n];
    let mut c_len = 0;
    let mut r_len = 0;
    for (cand, refs) in candidates.iter().zip(references) {
        let cand = fold(cand);
        let refs: Vec<Vec<String>> = refs.iter().map(fold).collect();
        for n in 1..=settings.max_n {
            let (c, t) = clipped_counts(&cand, &refs, n);
            clipped[n - 1] += c;
            total[n - 1] += t;
        }
        c_len += cand.len();
        let lens: Vec<usize> = refs.iter().map(Vec::len).collect();
        r_len += effective_reference_length(cand.len(), &lens);
    }

    let bp = if c_len == 0 {
        if r_len == 0 {
            1.0
        } else {
            0.0
        }
    } else if c_len > r_len {
        1.0
    } else {
        (1.0 - r_len as f64 / c_len as f64).exp()
    };
    let weight = 1.0 / settings.max_n as f64;
    let mut log_sum = 0.0;
    for n in 0..settings.max_n {
        let p = if clipped[n] > 0 {
            clipped[n] as f64 / total[n] as f64
        } else {
            match settings.epsilon {
                Some(eps) => eps / total[n].max(1) as f64,
                None => return 0.0,
            }
        };
        log_sum += weight * p.ln();
    }
    if bp == 0.0 {
        return 0.0;
    }
    bp * log_sum.exp()
}

/// One step of an alignment path: sentences taken from each side.
pub type Step = (usize, usize);

/// Every monotone path from (0, 0) to (n, m) using `steps`.
pub fn enumerate_paths(n: usize, m: usize, steps: &[Step]) -> Vec<Vec<Step>> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    walk(0, 0, n, m, steps, &mut path, &mut out);
    out
}

fn walk(i: usize, j: usize, n: usize, m: usize, steps: &[Step], path: &mut Vec<Step>, out: &mut Vec<Vec<Step>>) {
    if i == n && j == m {
        out.push(path.clone());
        return;
    }
    for &(a, b) in steps {
        if i + a <= n && j + b <= m && (a, b) != (0, 0) {
            path.push((a, b));
            walk(i + a, j + b, n, m, steps, path, out);
            path.pop();
        }
    }
}

/// A link of a concrete path with its spans and step cost.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLink {
    pub step: Step,
    pub src: Range<usize>,
    pub tgt: Range<usize>,
    pub cost: f64,
}

/// Cheapest path by exhaustive search.
///
/// `cost(step, src_span, tgt_span)` returns `None` for a forbidden step.
/// Path cost is the left-to-right sum of step costs. Among equal-cost paths
/// the winner is decided from the last link backwards: the link whose step
/// comes earliest in `steps` wins.
pub fn exhaustive_alignment<F>(n: usize, m: usize, steps: &[Step], cost: F) -> Option<(f64, Vec<PathLink>)>
where
    F: Fn(Step, Range<usize>, Range<usize>) -> Option<f64>,
{
    let rank = |s: &Step| steps.iter().position(|x| x == s).expect("step from the list");
    let mut best: Option<(f64, Vec<PathLink>)> = None;
    'paths: for path in enumerate_paths(n, m, steps) {
        let mut links = Vec::with_capacity(path.len());
        let (mut i, mut j) = (0, 0);
        let mut total = 0.0;
        for step in path {
            let src = i..i + step.0;
            let tgt = j..j + step.1;
            let Some(c) = cost(step, src.clone(), tgt.clone()) else {
                continue 'paths;
            };
            total += c;
            links.push(PathLink { step, src, tgt, cost: c });
            i += step.0;
            j += step.1;
        }
        let better = match &best {
            None => true,
            Some((b, current)) => {
                if total < *b {
                    true
                } else if total > *b {
                    false
                } else {
                    let a: Vec<usize> = links.iter().rev().map(|l| rank(&l.step)).collect();
                    let c: Vec<usize> = current.iter().rev().map(|l| rank(&l.step)).collect();
                    a < c
                }
            }
        };
        if better {
            best = Some((total, links));
        }
    }
    best
}

/// Status a candidate should have after `ratings`, with the decision
/// thresholds given as fractions `num / den`.
pub fn policy_status(ratings: &[u8], quorum: usize, verify: (u64, u64), reject: (u64, u64)) -> &'static str {
    if ratings.len() < quorum {
        return "pending";
    }
    let sum: u64 = ratings.iter().map(|&r| r as u64).sum();
    let k = ratings.len() as u64;
    // mean >= v/d  <=>  sum * d >= v * k
    if sum * verify.1 >= verify.0 * k {
        "verified"
    } else if sum * reject.1 < reject.0 * k {
        "rejected"
    } else {
        "pending"
    }
}

/// Every multiset of ratings in `lo..=hi` with at most `max_len` elements,
/// each listed once in non-decreasing order.
pub fn rating_multisets(lo: u8, hi: u8, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for set in &frontier {
            let start = set.last().copied().unwrap_or(lo);
            for r in start..=hi {
                let mut s: Vec<u8> = set.clone();
                s.push(r);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Drop reason the reduction filter should report, or `None` to keep.
pub fn filter_verdict(src_tokens: usize, tgt_tokens: usize, min: usize, max: usize, ratio: f64) -> Option<&'static str> {
    if src_tokens == 0 || tgt_tokens == 0 {
        return Some("empty");
    }
    for len in [src_tokens, tgt_tokens] {
        if len < min || len > max {
            return Some("length");
        }
    }
    let (long, short) = if src_tokens >= tgt_tokens {
        (src_tokens, tgt_tokens)
    } else {
        (tgt_tokens, src_tokens)
    };
    if long as f64 > ratio * short as f64 {
        return Some("ratio");
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn clipping() {
        let c = words("the the the the the the the");
        let r = vec![words("the cat is on the mat"), words("there is a cat on the mat")];
        assert_eq!(clipped_counts(&c, &r, 1), (2, 7));
    }

    #[test]
    fn path_counts() {
        let steps = [(1, 1), (1, 0), (0, 1), (2, 1), (1, 2), (2, 2)];
        assert_eq!(enumerate_paths(1, 1, &steps).len(), 3);
        assert_eq!(enumerate_paths(0, 0, &steps), vec![Vec::<Step>::new()]);
    }

    #[test]
    fn multisets() {
        // C(5 + k - 1, k) summed over k = 0..=2
        assert_eq!(rating_multisets(1, 5, 2).len(), 1 + 5 + 15);
    }

    #[test]
    fn policy() {
        assert_eq!(policy_status(&[4, 4, 4], 3, (4, 1), (5, 2)), "verified");
        assert_eq!(policy_status(&[2, 2, 3], 3, (4, 1), (5, 2)), "rejected");
        assert_eq!(policy_status(&[5, 5], 3, (4, 1), (5, 2)), "pending");
    }
}
