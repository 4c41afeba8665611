#![allow(dead_code)]

use rand::Rng;
use sigpath::{PiecewiseLinearPath, TruncatedSignature};

pub fn random_path<R: Rng>(rng: &mut R, dim: usize, knots: usize) -> PiecewiseLinearPath {
    let rows: Vec<Vec<f64>> = (0..knots)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    PiecewiseLinearPath::from_points(&rows).unwrap()
}

/// Signature by direct enumeration: the coefficient of word `w` is the sum
/// over nondecreasing segment assignments of the increment products, divided
/// by the factorial of each run of equal segments.
pub fn brute_signature(path: &PiecewiseLinearPath, depth: usize) -> TruncatedSignature {
    let d = path.dim();
    let deltas: Vec<Vec<f64>> = (1..path.len())
        .map(|j| (0..d).map(|c| path.point(j)[c] - path.point(j - 1)[c]).collect())
        .collect();
    let levels = (1..=depth)
        .map(|k| {
            (0..d.pow(k as u32))
                .map(|flat| {
                    let mut word = vec![0; k];
                    let mut r = flat;
                    for slot in word.iter_mut().rev() {
                        *slot = r % d;
                        r /= d;
                    }
                    word_coefficient(&deltas, &word)
                })
                .collect()
        })
        .collect();
    TruncatedSignature::from_levels(d, levels).unwrap()
}

fn word_coefficient(deltas: &[Vec<f64>], word: &[usize]) -> f64 {
    fn rec(deltas: &[Vec<f64>], word: &[usize], pos: usize, min_seg: usize, prev: Option<usize>, run: usize, acc: f64) -> f64 {
        if pos == word.len() {
            return acc;
        }
        let mut total = 0.0;
        for seg in min_seg..deltas.len() {
            let run_here = if prev == Some(seg) { run + 1 } else { 1 };
            let term = acc * deltas[seg][word[pos]] / run_here as f64;
            total += rec(deltas, word, pos + 1, seg, Some(seg), run_here, term);
        }
        total
    }
    if deltas.is_empty() {
        return 0.0;
    }
    rec(deltas, word, 0, 0, None, 0, 1.0)
}

/// AUROC by counting positive/negative pairs, ties worth one half.
pub fn pairwise_auroc(y: &[bool], s: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] && !y[j] {
                pairs += 1.0;
                if s[i] > s[j] {
                    wins += 1.0;
                } else if s[i] == s[j] {
                    wins += 0.5;
                }
            }
        }
    }
    if pairs == 0.0 { 0.5 } else { wins / pairs }
}

/// Relative error with an absolute floor, for finite-difference checks.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Five-point central difference of `f` along knot coordinate `k`. Exact up
/// to rounding for polynomials of degree four or less, which covers
/// signatures truncated at depth four.
pub fn stencil5(f: impl Fn(&PiecewiseLinearPath) -> f64, path: &PiecewiseLinearPath, k: usize, h: f64) -> f64 {
    let at = |step: f64| {
        let mut p = path.clone();
        p.points_mut()[k] += step;
        f(&p)
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}
