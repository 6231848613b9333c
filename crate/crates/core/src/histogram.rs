//! Histogram-valued data and the L2 Wasserstein geometry on it.
//!
//! A [`Histogram`] is a sequence of weighted, non-overlapping bins with a
//! uniform density inside each bin. Its quantile function is piecewise
//! linear, so every piece can be written as `c + r(2t - 1)` for `t` in
//! `[0, 1]`. The [`QuantileProfile`] stores that center/radius form over the
//! cumulative-weight cut points, and all distances and barycenters are
//! computed on profiles.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accepted deviation of the total bin mass from 1.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Ingestion rescales weights whose total lies within this distance of 1.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

/// Cut points closer than this are treated as the same point when two
/// profiles are put on a common grid.
pub const CUT_MERGE_EPS: f64 = 1e-12;

/// Relative slack allowed when checking that consecutive bins do not overlap.
const OVERLAP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub weight: f64,
}

impl Bin {
    pub fn new(lower: f64, upper: f64, weight: f64) -> Self {
        Self { lower, upper, weight }
    }

    pub fn center(&self) -> f64 {
        (self.lower + self.upper) / 2.0
    }

    pub fn radius(&self) -> f64 {
        (self.upper - self.lower) / 2.0
    }

    fn check(&self, index: usize) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidBin {
            index,
            reason: reason.to_string(),
        };
        if !self.lower.is_finite() || !self.upper.is_finite() || !self.weight.is_finite() {
            return Err(invalid("non-finite value"));
        }
        if self.lower > self.upper {
            return Err(invalid("lower bound exceeds upper bound"));
        }
        if self.weight <= 0.0 {
            return Err(invalid("weight must be positive"));
        }
        Ok(())
    }
}

/// An ordered sequence of weighted bins whose weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Histogram {
    bins: Vec<Bin>,
}

impl Histogram {
    /// Validates and wraps `bins`.
    pub fn new(bins: Vec<Bin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidHistogram("at least one bin is required".into()));
        }
        for (i, bin) in bins.iter().enumerate() {
            bin.check(i)?;
        }
        for (i, pair) in bins.windows(2).enumerate() {
            let slack = OVERLAP_SLACK * pair[0].upper.abs().max(1.0);
            if pair[0].upper > pair[1].lower + slack {
                return Err(Error::InvalidBin {
                    index: i + 1,
                    reason: "bins overlap or are out of order".into(),
                });
            }
        }
        let total: f64 = bins.iter().map(|b| b.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidHistogram(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let hist = Self { bins };
        // Cut points must be strictly increasing once accumulated.
        let cuts = hist.cut_points();
        if cuts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidHistogram(
                "bin weights too small to resolve cumulative cut points".into(),
            ));
        }
        Ok(hist)
    }

    /// Like [`Histogram::new`], but first rescales the weights when their
    /// total is within [`RENORMALIZE_TOLERANCE`] of one.
    pub fn normalized(mut bins: Vec<Bin>) -> Result<Self> {
        let total: f64 = bins.iter().map(|b| b.weight).sum();
        if (total - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::InvalidHistogram(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            for bin in &mut bins {
                bin.weight /= total;
            }
        }
        Self::new(bins)
    }

    /// A single-bin histogram, i.e. the uniform distribution on `[lower, upper]`.
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![Bin::new(lower, upper, 1.0)])
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Cumulative weights `0 = q_0 < ... < q_h = 1`.
    pub fn cut_points(&self) -> Vec<f64> {
        let mut cuts = Vec::with_capacity(self.bins.len() + 1);
        cuts.push(0.0);
        let mut acc = 0.0;
        for bin in &self.bins {
            acc += bin.weight;
            cuts.push(acc);
        }
        // The last cut is pinned to 1 so that profiles of different
        // histograms always span the same domain.
        *cuts.last_mut().expect("non-empty") = 1.0;
        cuts
    }

    pub fn to_quantile_profile(&self) -> QuantileProfile {
        QuantileProfile {
            cut_points: self.cut_points(),
            centers: self.bins.iter().map(Bin::center).collect(),
            radii: self.bins.iter().map(Bin::radius).collect(),
        }
    }

    /// Returns the histogram with every bound moved by `delta`.
    pub fn translated(&self, delta: f64) -> Self {
        Self {
            bins: self
                .bins
                .iter()
                .map(|b| Bin::new(b.lower + delta, b.upper + delta, b.weight))
                .collect(),
        }
    }
}

impl<'de> Deserialize<'de> for Histogram {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let bins = Vec::<Bin>::deserialize(deserializer)?;
        Histogram::normalized(bins).map_err(serde::de::Error::custom)
    }
}

/// Builds an equi-depth histogram with `h` bins of weight `1/h` whose bounds
/// are the empirical quantiles of `samples` at levels `j/h`.
///
/// The quantile at level `p` is the order statistic of rank `max(1, ceil(N p))`.
pub fn build_equidepth(samples: &[f64], h: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if h == 0 {
        return Err(Error::InvalidBinCount(h));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidHistogram("non-finite sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let order_stat = |j: usize| {
        let rank = (n * j).div_ceil(h).max(1);
        sorted[rank - 1]
    };
    let weight = 1.0 / h as f64;
    let bins = (1..=h)
        .map(|j| Bin::new(order_stat(j - 1), order_stat(j), weight))
        .collect();
    Histogram::new(bins)
}

/// Center/radius form of a piecewise-linear quantile function.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileProfile {
    cut_points: Vec<f64>,
    centers: Vec<f64>,
    radii: Vec<f64>,
}

impl QuantileProfile {
    pub fn new(cut_points: Vec<f64>, centers: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        let h = centers.len();
        if h == 0 || radii.len() != h || cut_points.len() != h + 1 {
            return Err(Error::InvalidHistogram(
                "profile needs h centers, h radii and h + 1 cut points".into(),
            ));
        }
        if cut_points[0] != 0.0 || cut_points[h] != 1.0 {
            return Err(Error::InvalidHistogram("cut points must span [0, 1]".into()));
        }
        if cut_points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidHistogram(
                "cut points must be strictly increasing".into(),
            ));
        }
        if radii.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) || centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidHistogram("radii must be finite and nonnegative".into()));
        }
        let profile = Self {
            cut_points,
            centers,
            radii,
        };
        for v in 1..h {
            let prev_top = profile.centers[v - 1] + profile.radii[v - 1];
            let next_bottom = profile.centers[v] - profile.radii[v];
            if prev_top > next_bottom + OVERLAP_SLACK * prev_top.abs().max(1.0) {
                return Err(Error::InvalidHistogram(
                    "quantile function must be non-decreasing".into(),
                ));
            }
        }
        Ok(profile)
    }

    pub fn cut_points(&self) -> &[f64] {
        &self.cut_points
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Number of pieces.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Mass of piece `v`.
    pub fn weight(&self, v: usize) -> f64 {
        self.cut_points[v + 1] - self.cut_points[v]
    }

    /// Evaluates the quantile function at `s` in `[0, 1]`.
    ///
    /// At a cut point the left piece is used.
    pub fn quantile(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        let v = self
            .cut_points
            .iter()
            .skip(1)
            .position(|&q| s <= q)
            .unwrap_or(self.len() - 1);
        self.value_in_piece(v, s)
    }

    fn value_in_piece(&self, v: usize, s: f64) -> f64 {
        let t = (s - self.cut_points[v]) / self.weight(v);
        self.centers[v] + self.radii[v] * (2.0 * t - 1.0)
    }

    /// Center and radius of the restriction of piece `v` to `[s0, s1]`.
    fn sub_piece(&self, v: usize, s0: f64, s1: f64) -> (f64, f64) {
        if s0 == self.cut_points[v] && s1 == self.cut_points[v + 1] {
            return (self.centers[v], self.radii[v]);
        }
        let lo = self.value_in_piece(v, s0);
        let hi = self.value_in_piece(v, s1);
        ((lo + hi) / 2.0, (hi - lo) / 2.0)
    }

    /// Mean of the distribution.
    pub fn mean(&self) -> f64 {
        (0..self.len()).map(|v| self.weight(v) * self.centers[v]).sum()
    }

    /// Variance under the uniform-within-bin model.
    pub fn variance(&self) -> f64 {
        let second: f64 = (0..self.len())
            .map(|v| {
                let (c, r) = (self.centers[v], self.radii[v]);
                self.weight(v) * (c * c + r * r / 3.0)
            })
            .sum();
        let mean = self.mean();
        (second - mean * mean).max(0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `[min, max]` of the support.
    pub fn support(&self) -> (f64, f64) {
        let last = self.len() - 1;
        (
            self.centers[0] - self.radii[0],
            self.centers[last] + self.radii[last],
        )
    }

    /// Rebuilds the bins described by this profile.
    pub fn to_histogram(&self) -> Histogram {
        Histogram {
            bins: (0..self.len())
                .map(|v| {
                    let (c, r) = (self.centers[v], self.radii[v]);
                    Bin::new(c - r, c + r, self.weight(v))
                })
                .collect(),
        }
    }

    /// Resamples the profile on `grid`, a refinement of its own cut points.
    ///
    /// The quantile function is unchanged; only the piece boundaries move.
    pub fn refine(&self, grid: &[f64]) -> QuantileProfile {
        if grid == self.cut_points.as_slice() {
            return self.clone();
        }
        let pieces = grid.len() - 1;
        let mut centers = Vec::with_capacity(pieces);
        let mut radii = Vec::with_capacity(pieces);
        let mut v = 0;
        for w in grid.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            while v + 1 < self.len() && mid > self.cut_points[v + 1] {
                v += 1;
            }
            let s0 = if (w[0] - self.cut_points[v]).abs() <= CUT_MERGE_EPS {
                self.cut_points[v]
            } else {
                w[0]
            };
            let s1 = if (w[1] - self.cut_points[v + 1]).abs() <= CUT_MERGE_EPS {
                self.cut_points[v + 1]
            } else {
                w[1]
            };
            let (c, r) = self.sub_piece(v, s0, s1);
            centers.push(c);
            radii.push(r.max(0.0));
        }
        QuantileProfile {
            cut_points: grid.to_vec(),
            centers,
            radii,
        }
    }

    /// Returns the profile with every value moved by `delta`.
    pub fn translated(&self, delta: f64) -> Self {
        Self {
            cut_points: self.cut_points.clone(),
            centers: self.centers.iter().map(|c| c + delta).collect(),
            radii: self.radii.clone(),
        }
    }
}

/// Sorted union of several cut-point sets, merging points closer than
/// [`CUT_MERGE_EPS`].
pub fn union_cut_points<'a, I>(sets: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut all: Vec<f64> = sets.into_iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = Vec::with_capacity(all.len());
    for q in all {
        match grid.last() {
            Some(&last) if q - last <= CUT_MERGE_EPS => {}
            _ => grid.push(q),
        }
    }
    if let Some(last) = grid.last_mut() {
        *last = 1.0;
    }
    grid
}

/// Puts two profiles on the union of their cut points.
pub fn homogenize(a: &QuantileProfile, b: &QuantileProfile) -> (QuantileProfile, QuantileProfile) {
    if a.cut_points == b.cut_points {
        return (a.clone(), b.clone());
    }
    let grid = union_cut_points([a.cut_points(), b.cut_points()]);
    (a.refine(&grid), b.refine(&grid))
}

/// `(sum of w * dc^2, sum of w * dr^2)` over the common refinement of two
/// profiles, without materialising it.
pub(crate) fn center_radius_sq(a: &QuantileProfile, b: &QuantileProfile) -> (f64, f64) {
    let mut center = 0.0;
    let mut radius = 0.0;
    if a.cut_points == b.cut_points {
        for v in 0..a.len() {
            let w = a.weight(v);
            let dc = a.centers[v] - b.centers[v];
            let dr = a.radii[v] - b.radii[v];
            center += w * dc * dc;
            radius += w * dr * dr;
        }
        return (center, radius);
    }
    let (mut i, mut j) = (0, 0);
    let mut s0 = 0.0;
    while i < a.len() && j < b.len() {
        let ea = a.cut_points[i + 1];
        let eb = b.cut_points[j + 1];
        let s1 = ea.min(eb);
        if s1 > s0 {
            let (ca, ra) = a.sub_piece(i, s0.max(a.cut_points[i]), s1.min(ea));
            let (cb, rb) = b.sub_piece(j, s0.max(b.cut_points[j]), s1.min(eb));
            let w = s1 - s0;
            center += w * (ca - cb) * (ca - cb);
            radius += w * (ra - rb) * (ra - rb);
        }
        if (ea - eb).abs() <= CUT_MERGE_EPS {
            i += 1;
            j += 1;
        } else if ea < eb {
            i += 1;
        } else {
            j += 1;
        }
        s0 = s1;
    }
    (center, radius)
}

/// The `d` histograms describing one individual.
///
/// Both the bin form and the quantile profile of every variable are kept so
/// that ingested histograms serialize back unchanged while distances run on
/// the profile form.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationVector {
    histograms: Vec<Histogram>,
    profiles: Vec<QuantileProfile>,
}

impl ObservationVector {
    pub fn new(histograms: Vec<Histogram>) -> Result<Self> {
        if histograms.is_empty() {
            return Err(Error::EmptyInput);
        }
        let profiles = histograms.iter().map(Histogram::to_quantile_profile).collect();
        Ok(Self {
            histograms,
            profiles,
        })
    }

    pub fn from_profiles(profiles: Vec<QuantileProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::EmptyInput);
        }
        let histograms = profiles.iter().map(QuantileProfile::to_histogram).collect();
        Ok(Self {
            histograms,
            profiles,
        })
    }

    pub fn dim(&self) -> usize {
        self.profiles.len()
    }

    pub fn histograms(&self) -> &[Histogram] {
        &self.histograms
    }

    pub fn profiles(&self) -> &[QuantileProfile] {
        &self.profiles
    }

    pub fn profile(&self, var: usize) -> &QuantileProfile {
        &self.profiles[var]
    }

    /// Returns the observation with every variable moved by `delta`.
    pub fn translated(&self, delta: f64) -> Self {
        Self {
            histograms: self.histograms.iter().map(|h| h.translated(delta)).collect(),
            profiles: self.profiles.iter().map(|p| p.translated(delta)).collect(),
        }
    }

    /// Returns the observation resampled on the given per-variable grids.
    pub fn refined(&self, grids: &[Vec<f64>]) -> Self {
        let profiles: Vec<_> = self
            .profiles
            .iter()
            .zip(grids)
            .map(|(p, g)| p.refine(g))
            .collect();
        if profiles == self.profiles {
            return self.clone();
        }
        Self::from_profiles(profiles).expect("non-empty")
    }
}

pub(crate) fn check_dims(a: &ObservationVector, b: &ObservationVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Center and radius components of the squared Wasserstein distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WassersteinParts {
    /// Sum of `w (dc)^2`.
    pub center: f64,
    /// One third of the sum of `w (dr)^2`.
    pub radius: f64,
}

impl WassersteinParts {
    pub fn total(&self) -> f64 {
        self.center + self.radius
    }
}

/// Unchecked variant used in the training loops, where dimensions are
/// validated once per dataset.
pub(crate) fn wasserstein_parts_unchecked(a: &ObservationVector, b: &ObservationVector) -> WassersteinParts {
    let mut parts = WassersteinParts {
        center: 0.0,
        radius: 0.0,
    };
    for (pa, pb) in a.profiles.iter().zip(&b.profiles) {
        let (c, r) = center_radius_sq(pa, pb);
        parts.center += c;
        parts.radius += r / 3.0;
    }
    parts
}

pub fn wasserstein_components(a: &ObservationVector, b: &ObservationVector) -> Result<WassersteinParts> {
    check_dims(a, b)?;
    Ok(wasserstein_parts_unchecked(a, b))
}

/// Squared L2 Wasserstein distance, summed over variables.
pub fn wasserstein_sq(a: &ObservationVector, b: &ObservationVector) -> Result<f64> {
    wasserstein_components(a, b).map(|p| p.total())
}

fn common_grids(xs: &[&ObservationVector]) -> Vec<Vec<f64>> {
    let d = xs[0].dim();
    (0..d)
        .map(|var| {
            let first = xs[0].profiles[var].cut_points();
            if xs.iter().all(|x| x.profiles[var].cut_points() == first) {
                first.to_vec()
            } else {
                union_cut_points(xs.iter().map(|x| x.profiles[var].cut_points()))
            }
        })
        .collect()
}

/// Puts every observation of a dataset on common per-variable cut points.
pub fn homogenize_dataset(xs: &[ObservationVector]) -> Result<Vec<ObservationVector>> {
    let first = xs.first().ok_or(Error::EmptyInput)?;
    for x in xs {
        check_dims(first, x)?;
    }
    let refs: Vec<&ObservationVector> = xs.iter().collect();
    let grids = common_grids(&refs);
    Ok(xs.iter().map(|x| x.refined(&grids)).collect())
}

/// Weighted barycenter: per variable and per piece, the weighted means of
/// the centers and of the radii. Inputs are homogenized first.
pub fn barycenter(xs: &[ObservationVector], weights: &[f64]) -> Result<ObservationVector> {
    let refs: Vec<&ObservationVector> = xs.iter().collect();
    barycenter_of_refs(&refs, weights)
}

pub(crate) fn barycenter_of_refs(xs: &[&ObservationVector], weights: &[f64]) -> Result<ObservationVector> {
    if xs.is_empty() {
        return Err(Error::EmptyBarycenter);
    }
    if weights.len() != xs.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: weights.len(),
        });
    }
    if let Some(i) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeight(i));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyBarycenter);
    }
    for x in xs {
        check_dims(xs[0], x)?;
    }
    let grids = common_grids(xs);
    let profiles = grids
        .into_iter()
        .enumerate()
        .map(|(var, grid)| {
            let pieces = grid.len() - 1;
            let mut centers = vec![0.0; pieces];
            let mut radii = vec![0.0; pieces];
            for (x, &w) in xs.iter().zip(weights) {
                if w == 0.0 {
                    continue;
                }
                let p: Cow<'_, QuantileProfile> = if x.profiles[var].cut_points() == grid.as_slice() {
                    Cow::Borrowed(&x.profiles[var])
                } else {
                    Cow::Owned(x.profiles[var].refine(&grid))
                };
                for v in 0..pieces {
                    centers[v] += w * p.centers[v];
                    radii[v] += w * p.radii[v];
                }
            }
            for v in 0..pieces {
                centers[v] /= total;
                radii[v] /= total;
            }
            QuantileProfile {
                cut_points: grid,
                centers,
                radii,
            }
        })
        .collect();
    ObservationVector::from_profiles(profiles)
}

/// Barycenter with unit weights.
pub fn mean_barycenter(xs: &[ObservationVector]) -> Result<ObservationVector> {
    barycenter(xs, &vec![1.0; xs.len()])
}

/// Sum of squared distances from every observation to the barycenter.
pub fn total_inertia(xs: &[ObservationVector]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let center = mean_barycenter(xs)?;
    xs.iter().map(|x| wasserstein_sq(x, &center)).sum()
}
