use rayon::prelude::*;

use super::{CascadeClassifier, CascadeStage, WeakLearner};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

const EPS_CLAMP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    /// Per-stage detection rate on training positives.
    pub d_min: f64,
    /// Per-stage false-positive rate target.
    pub f_max: f64,
    /// Overall false-positive target; training stops once reached.
    pub f_global: f64,
    pub max_stages: usize,
    pub max_learners: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { d_min: 0.995, f_max: 0.5, f_global: 1e-3, max_stages: 10, max_learners: 50 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_min > 0.0 && self.d_min <= 1.0) {
            return Err(Error::Parameter(format!("cascade.d_min must be in (0,1], got {}", self.d_min)));
        }
        if !(self.f_max > 0.0 && self.f_max < 1.0) {
            return Err(Error::Parameter(format!("cascade.f_max must be in (0,1), got {}", self.f_max)));
        }
        if !(self.f_global >= 0.0 && self.f_global < 1.0) {
            return Err(Error::Parameter(format!("cascade.f_global must be in [0,1), got {}", self.f_global)));
        }
        if self.max_stages == 0 || self.max_learners == 0 {
            return Err(Error::Parameter("cascade stage and learner limits must be positive".into()));
        }
        Ok(())
    }
}

/// What happened in one boosting round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundStats {
    /// Sum of the sample weights after reweighting.
    pub weight_sum: f64,
    /// Error rate of the strong classifier with threshold 0.
    pub train_error: f64,
    /// Stage threshold after lowering it to meet `d_min`.
    pub threshold: f64,
    pub detection: f64,
    pub false_positive: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageReport {
    pub rounds: Vec<RoundStats>,
}

impl StageReport {
    pub fn last(&self) -> Option<&RoundStats> {
        self.rounds.last()
    }
}

/// Per-feature sample orderings, shared by every round of a stage.
struct StumpIndex<'a> {
    samples: Vec<&'a [f32]>,
    order: Vec<Vec<u32>>,
}

struct Candidate {
    error: f64,
    feature: usize,
    threshold: f64,
    polarity: i8,
}

impl<'a> StumpIndex<'a> {
    fn new(samples: Vec<&'a [f32]>) -> Result<Self> {
        let len = samples.first().map_or(0, |s| s.len());
        if samples.iter().any(|s| s.len() != len) {
            return Err(Error::Dimension("training vectors differ in length".into()));
        }
        let order = (0..len)
            .into_par_iter()
            .map(|f| {
                let mut idx: Vec<u32> = (0..samples.len() as u32).collect();
                idx.sort_by(|&a, &b| samples[a as usize][f].total_cmp(&samples[b as usize][f]));
                idx
            })
            .collect();
        Ok(StumpIndex { samples, order })
    }

    /// Exhaustive stump search. Ties go to the lowest feature index, then the
    /// lowest threshold, then polarity +1.
    fn search(&self, labels: &[bool], weights: &[f64]) -> Option<Candidate> {
        let mut total_pos = 0.0;
        let mut total_neg = 0.0;
        for (&l, &w) in labels.iter().zip(weights) {
            if l {
                total_pos += w;
            } else {
                total_neg += w;
            }
        }
        let per_feature: Vec<Option<Candidate>> = self
            .order
            .par_iter()
            .enumerate()
            .map(|(f, order)| {
                let mut best: Option<Candidate> = None;
                let (mut below_pos, mut below_neg) = (0.0, 0.0);
                for k in 0..order.len().saturating_sub(1) {
                    let i = order[k] as usize;
                    if labels[i] {
                        below_pos += weights[i];
                    } else {
                        below_neg += weights[i];
                    }
                    let v = self.samples[i][f];
                    let next = self.samples[order[k + 1] as usize][f];
                    if v >= next {
                        continue;
                    }
                    let threshold = (v as f64 + next as f64) / 2.0;
                    let err_pos = below_pos + (total_neg - below_neg);
                    let err_neg = below_neg + (total_pos - below_pos);
                    for (error, polarity) in [(err_pos, 1i8), (err_neg, -1i8)] {
                        if best.as_ref().is_none_or(|b| error < b.error) {
                            best = Some(Candidate { error, feature: f, threshold, polarity });
                        }
                    }
                }
                best
            })
            .collect();
        let mut best: Option<Candidate> = None;
        for c in per_feature.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| c.error < b.error) {
                best = Some(c);
            }
        }
        best
    }
}

fn alpha_for(error: f64) -> f64 {
    let e = error.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
    0.5 * ((1.0 - e) / e).ln()
}

/// Best single stump under the given sample weights.
pub fn train_stump(samples: &[FeatureVector], labels: &[bool], weights: &[f64]) -> Result<WeakLearner> {
    if samples.len() != labels.len() || samples.len() != weights.len() {
        return Err(Error::Dimension("samples, labels and weights differ in length".into()));
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(Error::Degenerate("stump training needs both labels".into()));
    }
    let index = StumpIndex::new(samples.iter().map(|s| s.values()).collect())?;
    let c = index
        .search(labels, weights)
        .ok_or_else(|| Error::Degenerate("every feature is constant".into()))?;
    Ok(WeakLearner { feature: c.feature, threshold: c.threshold, polarity: c.polarity, alpha: alpha_for(c.error) })
}

/// Largest threshold that lets at least `d_min` of the positives through.
fn threshold_for_detection(pos_scores: &[f64], d_min: f64) -> f64 {
    let mut sorted = pos_scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len();
    let k = (1..=n).find(|&k| k as f64 / n as f64 >= d_min).unwrap_or(n);
    sorted[k - 1]
}

/// Boosts stumps until the stage, with its threshold lowered to keep `d_min`
/// of the positives, passes at most `f_max` of the negatives.
pub fn train_stage(
    pos: &[FeatureVector],
    neg: &[FeatureVector],
    cfg: &TrainConfig,
) -> Result<(CascadeStage, StageReport)> {
    cfg.validate()?;
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Degenerate("stage training needs positives and negatives".into()));
    }
    let samples: Vec<&[f32]> = pos.iter().chain(neg).map(|v| v.values()).collect();
    let labels: Vec<bool> = (0..samples.len()).map(|i| i < pos.len()).collect();
    let index = StumpIndex::new(samples.clone())?;

    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut weights: Vec<f64> = labels.iter().map(|&l| if l { 0.5 / np } else { 0.5 / nn }).collect();
    let mut scores = vec![0.0f64; samples.len()];
    let mut learners = Vec::new();
    let mut report = StageReport::default();
    let mut threshold = 0.0;

    while learners.len() < cfg.max_learners {
        let Some(c) = index.search(&labels, &weights) else { break };
        if c.error >= 0.5 {
            break;
        }
        let learner = WeakLearner {
            feature: c.feature,
            threshold: c.threshold,
            polarity: c.polarity,
            alpha: alpha_for(c.error),
        };
        for (i, x) in samples.iter().enumerate() {
            let vote = learner.vote(x);
            scores[i] += learner.alpha * vote;
            let correct = (vote > 0.0) == labels[i];
            weights[i] *= if correct { (-learner.alpha).exp() } else { learner.alpha.exp() };
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        learners.push(learner);

        threshold = threshold_for_detection(&scores[..pos.len()], cfg.d_min);
        let detected = scores[..pos.len()].iter().filter(|&&s| s >= threshold).count();
        let false_pos = scores[pos.len()..].iter().filter(|&&s| s >= threshold).count();
        let wrong_at_zero = scores.iter().zip(&labels).filter(|(&s, &l)| (s >= 0.0) != l).count();
        let stats = RoundStats {
            weight_sum: weights.iter().sum(),
            train_error: wrong_at_zero as f64 / samples.len() as f64,
            threshold,
            detection: detected as f64 / np,
            false_positive: false_pos as f64 / nn,
        };
        report.rounds.push(stats);
        log::debug!(
            "round {}: feature {} err {:.4} det {:.4} fp {:.4}",
            learners.len(),
            c.feature,
            c.error,
            stats.detection,
            stats.false_positive
        );
        if stats.false_positive <= cfg.f_max {
            break;
        }
    }
    if learners.is_empty() {
        return Err(Error::Degenerate("no stump separates the classes better than chance".into()));
    }
    Ok((CascadeStage { learners, threshold }, report))
}

/// Trains stages until the surviving negatives fall to `f_global` of the
/// original pool, the pool empties, or `max_stages` is reached. Negatives
/// rejected by a stage are dropped before the next one is trained.
pub fn train_cascade(
    pos: &[FeatureVector],
    neg: &[FeatureVector],
    cfg: &TrainConfig,
) -> Result<(CascadeClassifier, Vec<StageReport>)> {
    cfg.validate()?;
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Degenerate("cascade training needs positives and negatives".into()));
    }
    let feature_len = pos[0].len();
    if pos.iter().chain(neg).any(|v| v.len() != feature_len) {
        return Err(Error::Dimension("training vectors differ in length".into()));
    }
    let mut pool: Vec<FeatureVector> = neg.to_vec();
    let mut stages = Vec::new();
    let mut reports = Vec::new();
    while stages.len() < cfg.max_stages && !pool.is_empty() {
        let (stage, report) = train_stage(pos, &pool, cfg)?;
        pool.retain(|v| stage.passes(v.values()));
        stages.push(stage);
        reports.push(report);
        let cumulative = pool.len() as f64 / neg.len() as f64;
        log::info!("stage {}: {} negatives left (fp {:.5})", stages.len(), pool.len(), cumulative);
        if cumulative <= cfg.f_global {
            break;
        }
    }
    Ok((CascadeClassifier::new(feature_len, stages), reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fv(v: &[f32]) -> FeatureVector {
        FeatureVector(v.to_vec())
    }

    /// Every candidate stump on a 1-D set, scored directly.
    fn brute_force_best(xs: &[f32], labels: &[bool], weights: &[f64]) -> (f64, f64, i8) {
        let mut vals: Vec<f32> = xs.to_vec();
        vals.sort_by(f32::total_cmp);
        vals.dedup();
        let mut best = (f64::INFINITY, 0.0, 1i8);
        for pair in vals.windows(2) {
            let t = (pair[0] as f64 + pair[1] as f64) / 2.0;
            for pol in [1i8, -1] {
                let l = WeakLearner { feature: 0, threshold: t, polarity: pol, alpha: 1.0 };
                let err: f64 = xs
                    .iter()
                    .zip(labels)
                    .zip(weights)
                    .filter(|((&x, &y), _)| l.predicts_positive(x) != y)
                    .map(|(_, &w)| w)
                    .sum();
                if err < best.0 {
                    best = (err, t, pol);
                }
            }
        }
        best
    }

    #[test]
    fn separable_line() {
        let samples: Vec<_> = [0.0, 1.0, 2.0, 3.0].iter().map(|&v| fv(&[v])).collect();
        let labels = [false, false, true, true];
        let s = train_stump(&samples, &labels, &[0.25; 4]).unwrap();
        assert_eq!((s.threshold, s.polarity), (1.5, 1));
        assert!(s.alpha > 10.0);
    }

    #[test]
    fn heavy_sample_is_classified_correctly() {
        // the heavy sample is a positive sitting among negatives
        let xs = [0.0f32, 1.0, 2.0, 3.0];
        let labels = [false, true, false, false];
        let weights = [0.01, 0.97, 0.01, 0.01];
        let samples: Vec<_> = xs.iter().map(|&v| fv(&[v])).collect();
        let s = train_stump(&samples, &labels, &weights).unwrap();
        let (err, t, pol) = brute_force_best(&xs, &labels, &weights);
        assert_eq!((s.threshold, s.polarity), (t, pol));
        assert!(s.predicts_positive(1.0));
        assert!((err - 0.01).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_degenerate() {
        let samples = vec![fv(&[0.0]), fv(&[1.0])];
        assert!(matches!(train_stump(&samples, &[true, true], &[0.5, 0.5]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        let samples = vec![fv(&[0.0, 0.0]), fv(&[1.0, 1.0])];
        let s = train_stump(&samples, &[false, true], &[0.5, 0.5]).unwrap();
        assert_eq!(s.feature, 0);
    }

    fn xor_set() -> (Vec<FeatureVector>, Vec<FeatureVector>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                let (x, y) = (i as f32 + 0.5 * (j % 2) as f32, j as f32);
                let v = fv(&[x, y]);
                if (i < 3) == (j < 3) {
                    pos.push(v);
                } else {
                    neg.push(v);
                }
            }
        }
        (pos, neg)
    }

    #[test]
    fn xor_needs_more_than_one_stump() {
        let (pos, neg) = xor_set();
        // no single stump separates the two classes
        let all: Vec<_> = pos.iter().chain(&neg).cloned().collect();
        let labels: Vec<bool> = (0..all.len()).map(|i| i < pos.len()).collect();
        for f in 0..2 {
            let xs: Vec<f32> = all.iter().map(|v| v.0[f]).collect();
            let (err, _, _) = brute_force_best(&xs, &labels, &vec![1.0; xs.len()]);
            assert!(err > 0.0);
        }
        let cfg = TrainConfig { f_max: 0.3, ..TrainConfig::default() };
        let (stage, report) = train_stage(&pos, &neg, &cfg).unwrap();
        assert!(stage.learners.len() > 1);
        assert!(report.last().unwrap().detection >= cfg.d_min);
    }

    #[test]
    fn separable_cascade_has_one_stage() {
        let pos: Vec<_> = (0..10).map(|i| fv(&[5.0 + i as f32, 0.0])).collect();
        let neg: Vec<_> = (0..10).map(|i| fv(&[i as f32 * 0.3, 0.0])).collect();
        let (h, reports) = train_cascade(&pos, &neg, &TrainConfig::default()).unwrap();
        assert_eq!(h.stages.len(), 1);
        assert_eq!(h.stages[0].learners.len(), 1);
        let r = reports[0].last().unwrap();
        assert_eq!((r.detection, r.false_positive, r.train_error), (1.0, 0.0, 0.0));
        assert!(pos.iter().all(|v| h.classify(v).unwrap().accepted()));
    }

    #[test]
    fn empty_pool_stops_training() {
        let pos = vec![fv(&[1.0])];
        assert!(train_cascade(&pos, &[], &TrainConfig::default()).is_err());
        let neg = vec![fv(&[0.0])];
        let (h, _) = train_cascade(&pos, &neg, &TrainConfig { f_global: 0.0, ..TrainConfig::default() }).unwrap();
        assert_eq!(h.stages.len(), 1);
    }

    proptest! {
        #[test]
        fn stump_matches_brute_force(
            data in proptest::collection::vec((0u8..12, any::<bool>(), 1u32..100), 2..24)
        ) {
            prop_assume!(data.iter().any(|d| d.1) && data.iter().any(|d| !d.1));
            let xs: Vec<f32> = data.iter().map(|d| d.0 as f32).collect();
            prop_assume!(xs.iter().any(|&x| x != xs[0]));
            let labels: Vec<bool> = data.iter().map(|d| d.1).collect();
            let total: f64 = data.iter().map(|d| d.2 as f64).sum();
            let weights: Vec<f64> = data.iter().map(|d| d.2 as f64 / total).collect();
            let samples: Vec<_> = xs.iter().map(|&x| fv(&[x])).collect();
            let s = train_stump(&samples, &labels, &weights).unwrap();
            let (err, _, _) = brute_force_best(&xs, &labels, &weights);
            let got: f64 = xs.iter().zip(&labels).zip(&weights)
                .filter(|((&x, &y), _)| s.predicts_positive(x) != y).map(|(_, &w)| w).sum();
            prop_assert!((got - err).abs() < 1e-9);
            prop_assert!(got <= 0.5 + 1e-12);
        }
    }
}
