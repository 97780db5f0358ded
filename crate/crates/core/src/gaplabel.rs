//! Diophantine gap labels `r = t p - s q`, wing assembly with wingtip
//! closure at predicted discontinuities, and a numerical jump detector that
//! checks those predictions.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::spectrum::{farey_enumerate, Gap, SpectrumCache};

/// Gap label `(t, s)`: `t` is the inverse slope of the trace line
/// `x = t theta - s`, `s` its offset.
///
/// Valid labels have `0 <= s <= t - 1` for `t > 0` and `t <= s <= -1` for
/// `t < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawLabel", into = "RawLabel")]
pub struct GapLabel {
    t: i64,
    s: i64,
}

#[derive(Serialize, Deserialize)]
struct RawLabel {
    t: i64,
    s: i64,
}

impl TryFrom<RawLabel> for GapLabel {
    type Error = Error;
    fn try_from(raw: RawLabel) -> Result<Self> {
        GapLabel::new(raw.t, raw.s)
    }
}

impl From<GapLabel> for RawLabel {
    fn from(l: GapLabel) -> Self {
        RawLabel { t: l.t, s: l.s }
    }
}

impl GapLabel {
    pub fn new(t: i64, s: i64) -> Result<Self> {
        let ok = match t {
            0 => return Err(Error::InvalidLabel { t, s, reason: "inverse slope must be nonzero" }),
            t if t > 0 => (0..t).contains(&s),
            _ => (t..=-1).contains(&s),
        };
        if ok {
            Ok(GapLabel { t, s })
        } else {
            Err(Error::InvalidLabel { t, s, reason: "offset outside the admissible range" })
        }
    }

    pub fn t(self) -> i64 {
        self.t
    }

    pub fn s(self) -> i64 {
        self.s
    }

    /// `(t, s) -> (-t, -s - 1)`. An involution; the image wing is the
    /// energy-negated source wing.
    pub fn reflect(self) -> GapLabel {
        GapLabel { t: -self.t, s: -self.s - 1 }
    }

    /// The positive-slope member of `{self, self.reflect()}`.
    pub fn positive(self) -> GapLabel {
        if self.t > 0 {
            self
        } else {
            self.reflect()
        }
    }

    /// The closed frequency interval on which `0 <= t theta - s <= 1`.
    pub fn interval(self) -> (Rational, Rational) {
        let GapLabel { t, s } = self.positive();
        let lo = Rational::reduced(s, t).expect("valid label gives a point in [0, 1]");
        let hi = Rational::reduced(s + 1, t).expect("valid label gives a point in [0, 1]");
        (lo, hi)
    }

    /// Every valid label with inverse slope `t`.
    pub fn with_slope(t: i64) -> Vec<GapLabel> {
        match t {
            0 => Vec::new(),
            t if t > 0 => (0..t).map(|s| GapLabel { t, s }).collect(),
            t => (t..=-1).map(|s| GapLabel { t, s }).collect(),
        }
    }
}

impl std::fmt::Display for GapLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.t, self.s)
    }
}

/// `r = t p - s q`. No range check: interval ends legitimately give `0` or `q`.
pub fn gap_index(label: GapLabel, theta: Rational) -> i64 {
    label.t * theta.numer() - label.s * theta.denom()
}

pub fn reflect_label(label: GapLabel) -> GapLabel {
    label.reflect()
}

/// Frequencies where the labelled gap is predicted to jump:
/// `(s0 + s) / (t0 + t)` for `0 < s <= t < t0`, restricted to the open
/// interval `(s0 / t0, (s0 + 1) / t0)`, reduced, deduplicated and sorted.
///
/// Each value is where the line `x = t0 theta - s0` meets `x = -t theta + s`.
/// Negative labels share the frequencies of their reflection.
pub fn predicted_discontinuities(label: GapLabel) -> Vec<Rational> {
    let GapLabel { t: t0, s: s0 } = label.positive();
    let (lo, hi) = label.interval();
    let mut out: Vec<Rational> = (1..t0)
        .flat_map(|t| (1..=t).map(move |s| (t, s)))
        .map(|(t, s)| Rational::reduced(s0 + s, t0 + t).expect("intersection lies in [0, 1]"))
        .filter(|x| lo < *x && *x < hi)
        .collect();
    out.sort();
    out.dedup();
    out
}

/// The frequency solving `t theta - s = 1/2`, where the labelled gap crosses
/// spectral value zero and moves fast without jumping.
pub fn pseudo_gap_theta(label: GapLabel) -> Option<Rational> {
    let GapLabel { t, s } = label.positive();
    let theta = Rational::reduced(2 * s + 1, 2 * t).ok()?;
    let (lo, hi) = label.interval();
    (lo < theta && theta < hi).then_some(theta)
}

/// Interval ends plus predicted discontinuities, ascending.
pub fn jump_points(label: GapLabel) -> Vec<Rational> {
    let (lo, hi) = label.interval();
    let mut pts = vec![lo];
    pts.extend(predicted_discontinuities(label));
    pts.push(hi);
    pts
}

/// One closed piece of a wing between consecutive jump points.
///
/// The first entry is closed at `x(2r+1)` and the last at `x(2r)`; interior
/// entries carry the labelled gap `(x(2r), x(2r+1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WingSegment {
    pub theta: Vec<Rational>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl WingSegment {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    fn negated(&self) -> WingSegment {
        WingSegment {
            theta: self.theta.clone(),
            left: self.right.iter().map(|x| -x).collect(),
            right: self.left.iter().map(|x| -x).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wing {
    pub label: GapLabel,
    pub segments: Vec<WingSegment>,
}

impl Wing {
    /// Keeps only the points with `lo <= theta <= hi`; segments left with no
    /// points are dropped.
    pub fn clipped(&self, lo: Rational, hi: Rational) -> Wing {
        let segments = self
            .segments
            .iter()
            .filter_map(|seg| {
                let keep: Vec<usize> = (0..seg.len()).filter(|&i| lo <= seg.theta[i] && seg.theta[i] <= hi).collect();
                (!keep.is_empty()).then(|| WingSegment {
                    theta: keep.iter().map(|&i| seg.theta[i]).collect(),
                    left: keep.iter().map(|&i| seg.left[i]).collect(),
                    right: keep.iter().map(|&i| seg.right[i]).collect(),
                })
            })
            .collect();
        Wing { label: self.label, segments }
    }
}

/// Assembles the wing of `label` from all rationals with denominator at most
/// `q_max`, closing wingtips at the interval ends and at every predicted
/// discontinuity.
///
/// Jump points are always included as segment ends, even when their
/// denominator exceeds `q_max`. Negative labels are built from their
/// reflection by negating energies.
pub fn build_wing(label: GapLabel, q_max: i64, lambda: f64, cache: &SpectrumCache) -> Result<Wing> {
    if q_max < label.positive().t {
        return Err(Error::InvalidArgument(format!(
            "q_max = {q_max} is below the inverse slope {} of label {label}",
            label.t.abs()
        )));
    }
    if label.t < 0 {
        let source = build_wing(label.reflect(), q_max, lambda, cache)?;
        return Ok(Wing { label, segments: source.segments.iter().map(WingSegment::negated).collect() });
    }

    let pts = jump_points(label);
    let segments =
        pts.windows(2).map(|w| build_segment(label, w[0], w[1], q_max, lambda, cache)).collect::<Result<Vec<_>>>()?;
    Ok(Wing { label, segments })
}

fn build_segment(
    label: GapLabel,
    start: Rational,
    end: Rational,
    q_max: i64,
    lambda: f64,
    cache: &SpectrumCache,
) -> Result<WingSegment> {
    let mut thetas = farey_enumerate(q_max, start, end);
    if thetas.first() != Some(&start) {
        thetas.insert(0, start);
    }
    if thetas.last() != Some(&end) {
        thetas.push(end);
    }

    // Per-theta records computed in parallel; collect keeps rational order.
    let records = thetas
        .par_iter()
        .map(|&theta| {
            let edges = cache.edges(theta, lambda)?;
            let r = gap_index(label, theta);
            let q = edges.q();
            let out_of_range = |max| Error::GapOutOfRange { r, max, theta: theta.to_string() };
            if theta == start {
                if !(0..q).contains(&r) {
                    return Err(out_of_range(q - 1));
                }
                let v = edges.x(2 * r as usize + 1);
                Ok((v, v))
            } else if theta == end {
                if !(1..=q).contains(&r) {
                    return Err(out_of_range(q));
                }
                let v = edges.x(2 * r as usize);
                Ok((v, v))
            } else {
                let g = edges.gap(r)?;
                Ok((g.left, g.right))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let (left, right) = records.into_iter().unzip();
    Ok(WingSegment { theta: thetas, left, right })
}

/// Writes the wing dump `t,s,segment,p,q,left,right` with a header row.
pub fn write_wings_csv<W: Write>(mut out: W, wings: &[Wing]) -> io::Result<()> {
    writeln!(out, "t,s,segment,p,q,left,right")?;
    for wing in wings {
        for (k, seg) in wing.segments.iter().enumerate() {
            for ((theta, l), r) in seg.theta.iter().zip(&seg.left).zip(&seg.right) {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    wing.label.t,
                    wing.label.s,
                    k,
                    theta.numer(),
                    theta.denom(),
                    l,
                    r
                )?;
            }
        }
    }
    Ok(())
}

/// Default jump threshold in energy units.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Numerical discontinuity detector for a labelled gap.
///
/// For every enumerated frequency `theta_k` the gap midpoints of the `window`
/// nearest neighbours on each side are fitted by least-squares lines, and both
/// fits are evaluated at `theta_k`. The difference of the two one-sided
/// limits is the jump magnitude. A candidate is kept only if the gaps at
/// `theta_{k-1}`, `theta_k`, `theta_{k+1}` overlap by at most
/// `max_overlap_ratio` times the magnitude: across a true jump the
/// neighbouring gaps sit on opposite sides of the gap at `theta_k`, while a
/// kink in the wing boundary leaves them overlapping. Surviving candidates
/// are thinned so that no two detections lie within `window` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpDetector {
    pub window: usize,
    pub max_overlap_ratio: f64,
}

impl Default for JumpDetector {
    fn default() -> Self {
        JumpDetector { window: 4, max_overlap_ratio: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedJump {
    pub theta: Rational,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JumpMatch {
    pub detected: Rational,
    pub predicted: Rational,
}

/// Closure offset `x(2r+1) - x(2r)` at a predicted discontinuity: the jump
/// the wing makes there in the limit of large denominators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedJump {
    pub theta: Rational,
    pub closure_offset: f64,
}

/// Detected versus predicted discontinuities for one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub label: GapLabel,
    pub q_max: i64,
    pub lambda: f64,
    pub threshold: f64,
    pub detected: Vec<DetectedJump>,
    pub predicted: Vec<Rational>,
    pub predicted_offsets: Vec<PredictedJump>,
    pub pseudo_gap_theta: Option<Rational>,
    pub matches: Vec<JumpMatch>,
    /// Detections at the pseudo-gap frequency that are not also predictions.
    pub pseudo_jumps: Vec<Rational>,
    pub unmatched_detected: Vec<Rational>,
    pub unmatched_predicted: Vec<Rational>,
    /// Unmatched predictions whose closure offset reaches the threshold.
    pub missed_significant: Vec<Rational>,
}

impl JumpReport {
    pub fn passed(&self) -> bool {
        self.unmatched_detected.is_empty() && self.missed_significant.is_empty()
    }
}

fn overlap(a: &Gap, b: &Gap) -> f64 {
    (a.right.min(b.right) - a.left.max(b.left)).max(0.0)
}

/// Least-squares line through `(xs, ys)` evaluated at `x0`; a single point
/// gives a constant.
fn extrapolate(xs: &[f64], ys: &[f64], x0: f64) -> f64 {
    let n = xs.len() as f64;
    if xs.len() == 1 {
        return ys[0];
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    my + slope * (x0 - mx)
}

impl JumpDetector {
    /// Runs the detector over the open interval of `label`.
    pub fn detect(
        &self,
        label: GapLabel,
        q_max: i64,
        lambda: f64,
        threshold: f64,
        cache: &SpectrumCache,
    ) -> Result<JumpReport> {
        if self.window == 0 {
            return Err(Error::InvalidArgument("detector window must be at least 1".into()));
        }
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
        }
        let positive = label.positive();
        if q_max < 2 * positive.t {
            return Err(Error::InvalidArgument(format!(
                "q_max = {q_max} must be at least twice the inverse slope of {label}"
            )));
        }
        let (lo, hi) = label.interval();
        let thetas: Vec<Rational> = farey_enumerate(q_max, lo, hi).into_iter().filter(|x| lo < *x && *x < hi).collect();
        // Energies of a negative label are negated; jump positions and sizes are not.
        let gaps = thetas
            .par_iter()
            .map(|&theta| cache.edges(theta, lambda)?.gap(gap_index(positive, theta)))
            .collect::<Result<Vec<Gap>>>()?;

        let xs: Vec<f64> = thetas.iter().map(|t| t.to_f64()).collect();
        let mids: Vec<f64> = gaps.iter().map(Gap::midpoint).collect();
        let n = thetas.len();
        let w = self.window;

        let mut candidates: Vec<(usize, f64)> = Vec::new();
        for k in 1..n.saturating_sub(1) {
            let below = k.saturating_sub(w)..k;
            let above = k + 1..(k + 1 + w).min(n);
            let from_below = extrapolate(&xs[below.clone()], &mids[below], xs[k]);
            let from_above = extrapolate(&xs[above.clone()], &mids[above], xs[k]);
            let magnitude = (from_above - from_below).abs();
            if magnitude < threshold {
                continue;
            }
            let shared = overlap(&gaps[k - 1], &gaps[k]) + overlap(&gaps[k], &gaps[k + 1]);
            if shared <= self.max_overlap_ratio * magnitude {
                candidates.push((k, magnitude));
            }
        }
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut accepted: Vec<(usize, f64)> = Vec::new();
        for (k, m) in candidates {
            if accepted.iter().all(|&(j, _)| k.abs_diff(j) > w) {
                accepted.push((k, m));
            }
        }
        accepted.sort_by_key(|&(k, _)| k);
        let detected: Vec<DetectedJump> =
            accepted.iter().map(|&(k, magnitude)| DetectedJump { theta: thetas[k], magnitude }).collect();

        let predicted = predicted_discontinuities(label);
        let predicted_offsets = predicted
            .iter()
            .map(|&theta| {
                let g = cache.edges(theta, lambda)?.gap(gap_index(positive, theta))?;
                Ok(PredictedJump { theta, closure_offset: g.width() })
            })
            .collect::<Result<Vec<_>>>()?;
        let pseudo = pseudo_gap_theta(label);

        let mut matches = Vec::new();
        let mut pseudo_jumps = Vec::new();
        let mut unmatched_detected = Vec::new();
        for d in &detected {
            if predicted.contains(&d.theta) {
                matches.push(JumpMatch { detected: d.theta, predicted: d.theta });
            } else if pseudo == Some(d.theta) {
                pseudo_jumps.push(d.theta);
            } else {
                unmatched_detected.push(d.theta);
            }
        }
        let unmatched_predicted: Vec<Rational> =
            predicted.iter().copied().filter(|p| !detected.iter().any(|d| d.theta == *p)).collect();
        let missed_significant = predicted_offsets
            .iter()
            .filter(|p| p.closure_offset >= threshold && unmatched_predicted.contains(&p.theta))
            .map(|p| p.theta)
            .collect();

        Ok(JumpReport {
            label,
            q_max,
            lambda,
            threshold,
            detected,
            predicted,
            predicted_offsets,
            pseudo_gap_theta: pseudo,
            matches,
            pseudo_jumps,
            unmatched_detected,
            unmatched_predicted,
            missed_significant,
        })
    }
}

/// [`JumpDetector::detect`] with the default detector.
pub fn detect_jumps(
    label: GapLabel,
    q_max: i64,
    lambda: f64,
    threshold: f64,
    cache: &SpectrumCache,
) -> Result<JumpReport> {
    JumpDetector::default().detect(label, q_max, lambda, threshold, cache)
}

/// Aggregate of [`detect_jumps`] over every label with `1 <= t <= t_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub t_range: i64,
    pub q_max: i64,
    pub lambda: f64,
    pub threshold: f64,
    pub passed: bool,
    pub reports: Vec<JumpReport>,
}

pub fn verify_conjecture(
    t_range: i64,
    q_max: i64,
    lambda: f64,
    threshold: f64,
    cache: &SpectrumCache,
) -> Result<Verification> {
    verify_labels(1, t_range, q_max, lambda, threshold, cache)
}

/// Like [`verify_conjecture`] for slopes `t_min..=t_max`.
pub fn verify_labels(
    t_min: i64,
    t_max: i64,
    q_max: i64,
    lambda: f64,
    threshold: f64,
    cache: &SpectrumCache,
) -> Result<Verification> {
    if t_min < 1 || t_max < t_min {
        return Err(Error::InvalidArgument(format!("slope range {t_min}..={t_max} is empty or non-positive")));
    }
    let labels: Vec<GapLabel> = (t_min..=t_max).flat_map(GapLabel::with_slope).collect();
    let reports =
        labels.par_iter().map(|&l| detect_jumps(l, q_max, lambda, threshold, cache)).collect::<Result<Vec<_>>>()?;
    let passed = reports.iter().all(JumpReport::passed);
    Ok(Verification { t_range: t_max, q_max, lambda, threshold, passed, reports })
}
