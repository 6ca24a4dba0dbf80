use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Labeled samples stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    d_in: usize,
    classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, d_in: usize, classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("dataset needs at least one sample"));
        }
        if features.len() != labels.len() * d_in {
            return Err(Error::invalid(format!(
                "{} feature values for {} samples of width {d_in}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::invalid(format!("label {bad} outside [0, {classes})")));
        }
        Ok(Dataset { features, labels, d_in, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d_in..(i + 1) * self.d_in]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.d_in);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset::new(features, indices.iter().map(|&i| self.labels[i]).collect(), self.d_in, self.classes)
    }

    /// Contiguous range of samples.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Dataset> {
        let idx: Vec<usize> = range.collect();
        self.subset(&idx)
    }

    pub fn concat(parts: &[&Dataset]) -> Result<Dataset> {
        let first = parts.first().ok_or_else(|| Error::invalid("nothing to concatenate"))?;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for p in parts {
            if p.d_in != first.d_in || p.classes != first.classes {
                return Err(Error::invalid("datasets differ in shape"));
            }
            features.extend_from_slice(&p.features);
            labels.extend_from_slice(&p.labels);
        }
        Dataset::new(features, labels, first.d_in, first.classes)
    }

    pub fn distinct_labels(&self) -> Vec<usize> {
        let mut seen = vec![false; self.classes];
        self.labels.iter().for_each(|&l| seen[l] = true);
        (0..self.classes).filter(|&c| seen[c]).collect()
    }
}

/// Gaussian clusters with unit covariance.
///
/// Class means sit on distinct points of a cubic lattice of spacing
/// `separation` (so any two means are at least `separation` apart), chosen
/// and assigned at random. Samples are grouped by class.
pub fn make_synthetic_classification(classes: usize, d_in: usize, per_class: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 || per_class < 1 || d_in < 1 {
        return Err(Error::invalid("need classes >= 2, per_class >= 1, d_in >= 1"));
    }
    let mut rng = stream(seed, Purpose::Data, 0);
    let side = (1..).find(|&k: &usize| (k as f64).powi(d_in.min(64) as i32) >= classes as f64).unwrap();
    let lattice_size = (side as u128).checked_pow(d_in as u32).unwrap_or(u128::MAX);
    let mut chosen: Vec<u128> = Vec::with_capacity(classes);
    while chosen.len() < classes {
        let pick = if lattice_size <= 1 << 20 {
            rng.random_range(0..lattice_size as u64) as u128
        } else {
            rng.random::<u64>() as u128 % lattice_size
        };
        if !chosen.contains(&pick) {
            chosen.push(pick);
        }
    }
    let offset = (side as f64 - 1.0) / 2.0;
    let means: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&code| {
            let mut c = code;
            (0..d_in)
                .map(|_| {
                    let digit = (c % side as u128) as f64;
                    c /= side as u128;
                    (digit - offset) * separation
                })
                .collect()
        })
        .collect();

    let mut features = Vec::with_capacity(classes * per_class * d_in);
    let mut labels = Vec::with_capacity(classes * per_class);
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..per_class {
            features.extend(mean.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)));
            labels.push(c);
        }
    }
    Dataset::new(features, labels, d_in, classes)
}

/// Sample indices per node such that node `i` sees at most `max_classes`
/// labels.
///
/// Node `i` is given label slots `i*m .. (i+1)*m` (mod C), which covers
/// every class when `n*m >= C`; each class's samples are shuffled and split
/// as evenly as possible across the slots holding it.
pub fn partition_non_iid_indices(ds: &Dataset, n: usize, max_classes: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let classes = ds.classes();
    if n == 0 || max_classes == 0 {
        return Err(Error::invalid("need n >= 1 and max_classes >= 1"));
    }
    let m = max_classes.min(classes);
    if n * m < classes {
        return Err(Error::invalid(format!("{n} nodes x {m} classes cannot cover {classes} classes")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in ds.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    // slot k -> class k mod C, node i owns slots i*m..(i+1)*m
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for node in 0..n {
        for k in node * m..(node + 1) * m {
            holders[k % classes].push(node);
        }
    }
    let mut rng = stream(seed, Purpose::Partition, 0);
    let mut shards: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, idx) in by_class.iter_mut().enumerate() {
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let h = holders[c].len();
        for (p, &node) in holders[c].iter().enumerate() {
            let lo = p * idx.len() / h;
            let hi = (p + 1) * idx.len() / h;
            shards[node].extend_from_slice(&idx[lo..hi]);
        }
    }
    if let Some(empty) = shards.iter().position(|s| s.is_empty()) {
        return Err(Error::invalid(format!("node {empty} would receive no samples")));
    }
    for s in &mut shards {
        s.sort_unstable();
    }
    Ok(shards)
}

pub fn partition_non_iid(ds: &Dataset, n: usize, max_classes: usize, seed: u64) -> Result<Vec<Dataset>> {
    partition_non_iid_indices(ds, n, max_classes, seed)?.iter().map(|idx| ds.subset(idx)).collect()
}

/// Random `(train, held_out)` split with `round(frac * len)` held-out samples.
pub fn holdout_split(ds: &Dataset, frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&frac) {
        return Err(Error::invalid("holdout fraction must lie in [0, 1)"));
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut stream(seed, Purpose::Holdout, 0));
    let k = ((frac * ds.len() as f64).round() as usize).clamp(1, ds.len() - 1);
    let (held, train) = idx.split_at(k);
    let mut train = train.to_vec();
    let mut held = held.to_vec();
    train.sort_unstable();
    held.sort_unstable();
    Ok((ds.subset(&train)?, ds.subset(&held)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;

    #[test]
    fn class_counts_and_determinism() {
        let a = make_synthetic_classification(10, 3, 100, 4.0, 5).unwrap();
        assert_eq!(a.len(), 1000);
        for c in 0..10 {
            assert_eq!(a.labels().iter().filter(|&&l| l == c).count(), 100);
        }
        let b = make_synthetic_classification(10, 3, 100, 4.0, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_separated_clusters_are_linearly_separable() {
        let ds = make_synthetic_classification(2, 2, 200, 10.0, 1).unwrap();
        let mean = |c: usize| {
            let rows: Vec<&[f64]> = (0..ds.len()).filter(|&i| ds.label(i) == c).map(|i| ds.row(i)).collect();
            crate::linalg::mean_of(&rows)
        };
        let (m0, m1) = (mean(0), mean(1));
        assert!(dist(&m0, &m1) > 9.0);
        // nearest-mean rule (a linear classifier) labels every sample correctly
        for i in 0..ds.len() {
            let pred = usize::from(dist(ds.row(i), &m1) < dist(ds.row(i), &m0));
            assert_eq!(pred, ds.label(i));
        }
    }

    #[test]
    fn unique_class_per_node() {
        let ds = make_synthetic_classification(10, 2, 20, 3.0, 0).unwrap();
        let shards = partition_non_iid(&ds, 10, 1, 0).unwrap();
        for (i, s) in shards.iter().enumerate() {
            assert_eq!(s.distinct_labels(), vec![i]);
            assert_eq!(s.len(), 20);
        }
    }

    #[test]
    fn two_classes_per_node_disjoint_cover() {
        let ds = make_synthetic_classification(10, 2, 40, 3.0, 0).unwrap();
        let idx = partition_non_iid_indices(&ds, 20, 2, 4).unwrap();
        let mut all: Vec<usize> = idx.iter().flatten().copied().collect();
        for shard in &idx {
            let ds_i = ds.subset(shard).unwrap();
            assert!(ds_i.distinct_labels().len() <= 2);
        }
        all.sort_unstable();
        assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
    }

    #[test]
    fn infeasible_partition() {
        let ds = make_synthetic_classification(10, 2, 5, 3.0, 0).unwrap();
        assert!(matches!(partition_non_iid(&ds, 3, 2, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn holdout_sizes() {
        let ds = make_synthetic_classification(2, 2, 50, 3.0, 0).unwrap();
        let (tr, ho) = holdout_split(&ds, 0.2, 1).unwrap();
        assert_eq!((tr.len(), ho.len()), (80, 20));
    }
}
