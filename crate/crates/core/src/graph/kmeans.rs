//! Deterministic Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::knn::dist2;

pub const KMEANS_SEED: u64 = 0x6b6d_6561_6e73;
pub const MAX_ITERS: usize = 50;
pub const TOLERANCE: f64 = 1e-6;

fn nearest(p: &[f64; 3], centers: &[[f64; 3]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = dist2(p, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// k-means++ seeding. Returns fewer than `k` centers when the points have
/// fewer distinct locations.
pub fn seed_plus_plus(points: &[[f64; 3]], k: usize, rng: &mut impl Rng) -> Vec<[f64; 3]> {
    if points.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut centers = vec![points[rng.gen_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let sum: f64 = d2.iter().sum();
        if !(sum > 0.0) {
            break;
        }
        let mut target = rng.gen::<f64>() * sum;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap();
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = points[pick];
        centers.push(c);
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(dist2(p, &c));
        }
    }
    centers
}

/// Lloyd iterations from `centers`. Returns `(centers, assignment)` with
/// empty clusters removed and centers equal to the mean of their members.
pub fn lloyd(points: &[[f64; 3]], mut centers: Vec<[f64; 3]>) -> (Vec<[f64; 3]>, Vec<usize>) {
    let mut assign = vec![0; points.len()];
    for _ in 0..MAX_ITERS {
        for (a, p) in assign.iter_mut().zip(points) {
            *a = nearest(p, &centers);
        }
        let (next, counts) = means(points, &assign, centers.len());
        let mut moved = 0.0f64;
        for (c, (n, &count)) in centers.iter_mut().zip(next.iter().zip(&counts)) {
            if count > 0 {
                moved = moved.max(dist2(c, n).sqrt());
                *c = *n;
            }
        }
        if moved < TOLERANCE {
            break;
        }
    }
    for (a, p) in assign.iter_mut().zip(points) {
        *a = nearest(p, &centers);
    }
    let (sums, counts) = means(points, &assign, centers.len());
    let mut remap = vec![usize::MAX; centers.len()];
    let mut kept = Vec::new();
    for c in 0..centers.len() {
        if counts[c] > 0 {
            remap[c] = kept.len();
            kept.push(sums[c]);
        }
    }
    for a in &mut assign {
        *a = remap[*a];
    }
    (kept, assign)
}

fn means(points: &[[f64; 3]], assign: &[usize], k: usize) -> (Vec<[f64; 3]>, Vec<usize>) {
    let mut sums = vec![[0.0; 3]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assign) {
        for d in 0..3 {
            sums[a][d] += p[d];
        }
        counts[a] += 1;
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            *s = s.map(|v| v / c as f64);
        }
    }
    (sums, counts)
}

/// Seeded k-means returning `(centers, assignment)`.
pub fn kmeans(points: &[[f64; 3]], k: usize) -> (Vec<[f64; 3]>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(KMEANS_SEED);
    let centers = seed_plus_plus(points, k, &mut rng);
    if centers.is_empty() {
        return (Vec::new(), Vec::new());
    }
    lloyd(points, centers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_location_collapses() {
        let pts = vec![[2.0, -1.0, 3.0]; 12];
        let (c, a) = kmeans(&pts, 4);
        assert_eq!(c, vec![[2.0, -1.0, 3.0]]);
        assert!(a.iter().all(|&x| x == 0));
    }

    #[test]
    fn deterministic() {
        let pts: Vec<[f64; 3]> = (0..200).map(|i| [(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos(), i as f64 * 0.01]).collect();
        assert_eq!(kmeans(&pts, 5), kmeans(&pts, 5));
    }
}
