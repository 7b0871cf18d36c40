//! Exact k-nearest-neighbor classification over embedding spaces, the
//! repeated split evaluation protocol, and accuracy-versus-time curves over
//! weight trajectories.
//!
//! Neighbor search is a brute-force scan: spaces stay small enough (<= 10k
//! items) that exactness is cheap, and results match the quadratic oracle by
//! construction. Ties are broken by (distance, item index) and then by the
//! smallest class label, so everything is deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingSpace, ItemKind, Metric};
use crate::error::{Error, Result};
use crate::mnist::SplitPlan;
use crate::plasticity::WeightTrajectory;
use crate::scalar::Real;

pub const N_CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Majority,
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "", deserialize = ""))]
pub struct KnnConfig<T: Real> {
    pub k: usize,
    pub metric: Metric,
    pub weighting: Weighting,
    pub epsilon: T,
}

impl<T: Real> Default for KnnConfig<T> {
    fn default() -> Self {
        Self { k: 5, metric: Metric::Cosine, weighting: Weighting::Majority, epsilon: T::from_f64_c(1e-12) }
    }
}

/// Squared-error-free distance in fixed 8-lane chunks so the summation order
/// (and therefore the result bits) never depends on anything but the data.
fn lane_sum<T: Real>(a: &[T], b: &[T], mut f: impl FnMut(T, T) -> T) -> T {
    let mut lanes = [T::zero(); 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let o = c * 8;
        for l in 0..8 {
            lanes[l] += f(a[o + l], b[o + l]);
        }
    }
    let mut tail = T::zero();
    for i in chunks * 8..a.len() {
        tail += f(a[i], b[i]);
    }
    let mut acc = T::zero();
    for l in lanes {
        acc += l;
    }
    acc + tail
}

pub fn euclidean_distance<T: Real>(a: &[T], b: &[T]) -> T {
    lane_sum(a, b, |x, y| (x - y) * (x - y)).sqrt()
}

pub fn cosine_distance<T: Real>(a: &[T], b: &[T]) -> T {
    let dot = lane_sum(a, b, |x, y| x * y);
    let na = lane_sum(a, a, |x, y| x * y).sqrt();
    let nb = lane_sum(b, b, |x, y| x * y).sqrt();
    if na == T::zero() || nb == T::zero() {
        return T::one();
    }
    T::one() - dot / (na * nb)
}

pub fn distance<T: Real>(metric: Metric, a: &[T], b: &[T]) -> T {
    match metric {
        Metric::Cosine => cosine_distance(a, b),
        Metric::Euclidean => euclidean_distance(a, b),
    }
}

fn vote<T: Real>(neighbors: &[(T, u8)], cfg: &KnnConfig<T>) -> u8 {
    let mut scores = [T::zero(); N_CLASSES];
    for &(d, label) in neighbors {
        let w = match cfg.weighting {
            Weighting::Majority => T::one(),
            Weighting::InverseDistance => T::one() / (d + cfg.epsilon),
        };
        scores[label as usize] += w;
    }
    let mut best = 0usize;
    for c in 1..N_CLASSES {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    best as u8
}

fn nearest<T: Real>(space: &EmbeddingSpace<T>, pool: &[u32], query: &[T], cfg: &KnnConfig<T>) -> Vec<(T, u8)> {
    let mut scored: Vec<(T, u32)> = pool
        .iter()
        .map(|&i| (distance(cfg.metric, space.row(i as usize), query), i))
        .collect();
    let k = cfg.k.min(scored.len());
    let cmp = |a: &(T, u32), b: &(T, u32)| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1));
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_by(cmp);
    scored.into_iter().map(|(d, i)| (d, space.labels[i as usize])).collect()
}

/// Classify one query by exact kNN over the whole space.
pub fn knn_predict<T: Real>(space: &EmbeddingSpace<T>, query: &[T], cfg: &KnnConfig<T>) -> Result<u8> {
    if space.rows() == 0 {
        return Err(Error::EmptySpace);
    }
    if query.len() != space.dim {
        return Err(Error::DimensionMismatch { query: query.len(), space: space.dim });
    }
    let pool: Vec<u32> = (0..space.rows() as u32).collect();
    Ok(vote(&nearest(space, &pool, query, cfg), cfg))
}

/// Classify against a row subset of the space (the evaluation protocols use
/// this to query a split without copying it out).
pub fn knn_predict_subset<T: Real>(space: &EmbeddingSpace<T>, pool: &[u32], query: &[T], cfg: &KnnConfig<T>) -> u8 {
    vote(&nearest(space, pool, query, cfg), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub repeats: u32,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub per_repeat: Vec<f64>,
    pub per_class_accuracy: Vec<f64>,
    /// Pooled over repeats; confusion[true][predicted].
    pub confusion: Vec<Vec<u64>>,
}

impl EvalReport {
    pub fn total_queries(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn pooled_accuracy(&self) -> f64 {
        let correct: u64 = (0..N_CLASSES).map(|c| self.confusion[c][c]).sum();
        let total = self.total_queries();
        if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        }
    }

    /// Flat CSV row: time/context column supplied by the caller.
    pub fn csv_row(&self) -> String {
        format!("{:.6},{:.6},{}", self.accuracy_mean, self.accuracy_std, self.repeats)
    }
}

/// Repeated-split evaluation: per repeat, classify the query split against a
/// space built from the embedding split; aggregate accuracy and a pooled
/// confusion matrix.
pub fn evaluate<T: Real>(items: &EmbeddingSpace<T>, plan: &SplitPlan, cfg: &KnnConfig<T>) -> Result<EvalReport> {
    items.validate()?;
    if items.rows() == 0 {
        return Err(Error::EmptySpace);
    }
    let mut per_repeat = Vec::with_capacity(plan.repeats as usize);
    let mut confusion = vec![vec![0u64; N_CLASSES]; N_CLASSES];
    for r in 0..plan.repeats {
        let (emb, query) = crate::mnist::split_indices(items.rows(), plan, r)?;
        let predictions: Vec<(u8, u8)> = query
            .par_iter()
            .map(|&q| {
                let truth = items.labels[q as usize];
                let pred = vote(&nearest(items, &emb, items.row(q as usize), cfg), cfg);
                (truth, pred)
            })
            .collect();
        let mut correct = 0u64;
        for &(truth, pred) in &predictions {
            confusion[truth as usize][pred as usize] += 1;
            if truth == pred {
                correct += 1;
            }
        }
        per_repeat.push(correct as f64 / query.len().max(1) as f64);
    }
    let mean = per_repeat.iter().sum::<f64>() / per_repeat.len().max(1) as f64;
    let std = if per_repeat.len() > 1 {
        let var = per_repeat.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (per_repeat.len() - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    let per_class_accuracy = (0..N_CLASSES)
        .map(|c| {
            let row: u64 = confusion[c].iter().sum();
            if row == 0 {
                0.0
            } else {
                confusion[c][c] as f64 / row as f64
            }
        })
        .collect();
    Ok(EvalReport {
        repeats: plan.repeats,
        accuracy_mean: mean,
        accuracy_std: std,
        per_repeat,
        per_class_accuracy,
        confusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub time_ms: f64,
    pub report: EvalReport,
}

/// Evaluate each snapshot time of a shared-clock trajectory collection
/// independently.
pub fn accuracy_vs_time<T: Real>(
    trajectories: &[WeightTrajectory<T>],
    labels: &[u8],
    plan: &SplitPlan,
    cfg: &KnnConfig<T>,
) -> Result<Vec<CurvePoint>> {
    let first = trajectories.first().ok_or(Error::EmptySpace)?;
    for (i, t) in trajectories.iter().enumerate() {
        if t.sample_ticks != first.sample_ticks || t.dim() != first.dim() {
            return Err(Error::RaggedTrajectories { index: i });
        }
    }
    let mut points = Vec::with_capacity(first.sample_ticks.len());
    for (s, &tick) in first.sample_ticks.iter().enumerate() {
        let rows: Vec<Vec<T>> = trajectories.iter().map(|t| t.vectors[s].clone()).collect();
        let space = EmbeddingSpace::from_rows(rows, labels.to_vec(), Metric::Euclidean, ItemKind::WeightVector);
        points.push(CurvePoint { time_ms: crate::time::ticks_to_ms(tick), report: evaluate(&space, plan, cfg)? });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn space(rows: Vec<Vec<f64>>, labels: Vec<u8>, metric: Metric) -> EmbeddingSpace<f64> {
        EmbeddingSpace::from_rows(rows, labels, metric, ItemKind::Graph)
    }

    fn random_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn one_item_space_always_wins() {
        let s = space(vec![vec![1.0, 0.0]], vec![7], Metric::Cosine);
        let cfg = KnnConfig::default();
        assert_eq!(knn_predict(&s, &[0.3, -0.9], &cfg).unwrap(), 7);
    }

    #[test]
    fn empty_space_rejected() {
        let s = space(vec![], vec![], Metric::Cosine);
        assert!(matches!(knn_predict(&s, &[1.0], &KnnConfig::default()), Err(Error::EmptySpace)));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = space(vec![vec![1.0, 0.0]], vec![1], Metric::Cosine);
        assert!(matches!(
            knn_predict(&s, &[1.0, 2.0, 3.0], &KnnConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cosine_scale_invariance() {
        let rows = random_rows(100, 6, 3);
        let labels: Vec<u8> = (0..100).map(|i| (i % 10) as u8).collect();
        let s1 = space(rows.clone(), labels.clone(), Metric::Cosine);
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * 37.5).collect()).collect();
        let s2 = space(scaled, labels, Metric::Cosine);
        let cfg = KnnConfig::default();
        let mut rng = stream_rng(9, 1);
        for _ in 0..50 {
            let q: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert_eq!(knn_predict(&s1, &q, &cfg).unwrap(), knn_predict(&s2, &q, &cfg).unwrap());
        }
    }

    #[test]
    fn duplicated_items_k1_perfect() {
        let rows = random_rows(30, 5, 5);
        let labels: Vec<u8> = (0..30).map(|i| (i % 10) as u8).collect();
        let s = space(rows, labels, Metric::Euclidean);
        let cfg = KnnConfig { k: 1, metric: Metric::Euclidean, weighting: Weighting::Majority, epsilon: 1e-12 };
        for i in 0..s.rows() {
            assert_eq!(knn_predict(&s, s.row(i), &cfg).unwrap(), s.labels[i]);
        }
    }

    #[test]
    fn tie_breaks_choose_smallest_label() {
        // two items equidistant from the query, k = 2, opposite labels
        let s = space(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![9, 4], Metric::Euclidean);
        let cfg = KnnConfig { k: 2, metric: Metric::Euclidean, weighting: Weighting::Majority, epsilon: 1e-12 };
        assert_eq!(knn_predict(&s, &[0.0, 0.0], &cfg).unwrap(), 4);
    }

    #[test]
    fn evaluate_deterministic_and_consistent() {
        let rows = random_rows(60, 4, 8);
        let labels: Vec<u8> = (0..60).map(|i| (i % 10) as u8).collect();
        let s = space(rows, labels, Metric::Euclidean);
        let plan = SplitPlan::new(5, 50, 10, 4);
        let cfg = KnnConfig { metric: Metric::Euclidean, ..KnnConfig::default() };
        let a = evaluate(&s, &plan, &cfg).unwrap();
        let b = evaluate(&s, &plan, &cfg).unwrap();
        assert_eq!(a, b);
        // mean of per-repeat accuracies equals pooled accuracy for equal-size queries
        assert!((a.accuracy_mean - a.pooled_accuracy()).abs() < 1e-12);
        // confusion rows sum to per-class query counts
        assert_eq!(a.total_queries(), 40);
    }

    #[test]
    fn permuted_labels_give_chance_level() {
        let rows = random_rows(400, 8, 21);
        let mut rng = stream_rng(22, 0);
        let labels: Vec<u8> = (0..400).map(|_| rng.gen_range(0..10u8)).collect();
        let s = space(rows, labels, Metric::Euclidean);
        let plan = SplitPlan::new(77, 360, 40, 5);
        let cfg = KnnConfig { metric: Metric::Euclidean, ..KnnConfig::default() };
        let report = evaluate(&s, &plan, &cfg).unwrap();
        assert!((report.accuracy_mean - 0.1).abs() < 0.06, "chance-level accuracy {}", report.accuracy_mean);
    }

    #[test]
    fn accuracy_vs_time_shapes() {
        let labels: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let trajs: Vec<WeightTrajectory<f64>> = (0..20)
            .map(|i| WeightTrajectory {
                stimulus_id: format!("s{i}"),
                sample_ticks: vec![1000, 2000, 3000],
                vectors: vec![vec![i as f64, 1.0], vec![i as f64, 2.0], vec![i as f64, 3.0]],
            })
            .collect();
        let plan = SplitPlan::new(1, 15, 5, 2);
        let cfg = KnnConfig { metric: Metric::Euclidean, weighting: Weighting::InverseDistance, ..KnnConfig::default() };
        let curve = accuracy_vs_time(&trajs, &labels, &plan, &cfg).unwrap();
        assert_eq!(curve.len(), 3);
        assert_eq!(curve[0].time_ms, 100.0);
        assert_eq!(curve[2].time_ms, 300.0);
    }

    #[test]
    fn ragged_trajectories_rejected() {
        let labels = vec![0u8, 1];
        let t0 = WeightTrajectory::<f64> {
            stimulus_id: "a".into(),
            sample_ticks: vec![1000],
            vectors: vec![vec![1.0, 2.0]],
        };
        let t1 = WeightTrajectory::<f64> {
            stimulus_id: "b".into(),
            sample_ticks: vec![2000],
            vectors: vec![vec![1.0, 2.0]],
        };
        let plan = SplitPlan::new(1, 1, 1, 1);
        let cfg = KnnConfig { metric: Metric::Euclidean, ..KnnConfig::default() };
        assert!(matches!(
            accuracy_vs_time(&[t0, t1], &labels, &plan, &cfg),
            Err(Error::RaggedTrajectories { index: 1 })
        ));
    }

    #[test]
    fn flat_trajectories_give_flat_chance_curve() {
        // weights never move: every snapshot space is identical
        let mut rng = stream_rng(31, 0);
        let labels: Vec<u8> = (0..100).map(|_| rng.gen_range(0..10u8)).collect();
        let base: Vec<Vec<f64>> = random_rows(100, 6, 32);
        let trajs: Vec<WeightTrajectory<f64>> = (0..100)
            .map(|i| WeightTrajectory {
                stimulus_id: format!("s{i}"),
                sample_ticks: vec![1000, 2000],
                vectors: vec![base[i].clone(), base[i].clone()],
            })
            .collect();
        let plan = SplitPlan::new(3, 90, 10, 3);
        let cfg = KnnConfig { metric: Metric::Euclidean, weighting: Weighting::InverseDistance, ..KnnConfig::default() };
        let curve = accuracy_vs_time(&trajs, &labels, &plan, &cfg).unwrap();
        assert_eq!(curve[0].report, curve[1].report);
        assert!(curve[0].report.accuracy_mean < 0.35);
    }
}
