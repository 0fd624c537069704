//! Axial-mode harmonic search and dimension inference.
//!
//! Fundamentals are ranked by how many restored peaks sit on their integer
//! multiples. Up to three mutually non-multiple fundamentals are kept, and
//! candidates that coincide with tangential or oblique combinations of kept
//! fundamentals are discarded. On a populated spectrum this greedy choice
//! is then checked against the full rigid-mode lattice: any set of three
//! fundamentals (repeats allowed, and one of them possibly hidden under a
//! neighbouring peak) whose lattice accounts for the detected peaks better
//! replaces it. Lengths come from the low orders of each matched series.

use serde::{Deserialize, Serialize};

use super::peaks::PeakEstimate;
use crate::error::{Error, Result};
use crate::room::AirProperties;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxialSearchOptions {
    /// Harmonic tolerance as a fraction of the expected multiple.
    pub relative_tolerance: f64,
    /// Absolute tolerance floor; defaults to 1.5 grid steps.
    pub tolerance_floor_hz: Option<f64>,
    /// Hypotheses with fewer matched orders are flagged low-confidence.
    pub min_harmonics: usize,
    /// Upper frequency for harmonic matching; defaults to the highest
    /// resolved peak.
    pub max_frequency_hz: Option<f64>,
}

impl Default for AxialSearchOptions {
    fn default() -> Self {
        Self {
            relative_tolerance: 0.01,
            tolerance_floor_hz: None,
            min_harmonics: 2,
            max_frequency_hz: None,
        }
    }
}

impl AxialSearchOptions {
    fn tolerance(&self, f_step: f64, target: f64) -> f64 {
        self.tolerance_floor_hz
            .unwrap_or(1.5 * f_step)
            .max(self.relative_tolerance * target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMatch {
    pub order: u32,
    /// Restored eigenfrequency of the matched peak.
    pub frequency: f64,
    pub residual_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HypothesisFlag {
    /// Fewer matched orders than required.
    LowConfidence,
    /// One fundamental stands for more than one axis.
    Degenerate,
    /// Fundamental is an integer multiple of another axis.
    SharedSeries,
    /// Chosen through the manual override.
    Manual,
    /// Peak bandwidth could not be measured.
    Unresolved,
    /// Fundamental not seen itself; inferred from its second harmonic.
    Masked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisHypothesis {
    /// Restored eigenfrequency of the fundamental, Hz.
    pub fundamental: f64,
    pub peak: PeakEstimate,
    /// Matched orders, including the fundamental itself.
    pub harmonics: Vec<HarmonicMatch>,
    /// Harmonic count minus mean relative residual.
    pub score: f64,
    /// Number of room axes this fundamental accounts for.
    pub axes: u8,
    pub flags: Vec<HypothesisFlag>,
}

impl AxisHypothesis {
    pub fn harmonic_count(&self) -> usize {
        self.harmonics.len()
    }

    fn mean_residual(&self) -> f64 {
        let n = self.harmonics.len().max(1) as f64;
        self.harmonics
            .iter()
            .map(|h| h.residual_hz / (h.order as f64 * self.fundamental))
            .sum::<f64>()
            / n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxialSearch {
    pub hypotheses: Vec<AxisHypothesis>,
    /// Axes not accounted for by any hypothesis.
    pub missing_axes: u8,
}

impl AxialSearch {
    pub fn axis_count(&self) -> u8 {
        self.hypotheses.iter().map(|h| h.axes).sum()
    }
}

/// Detected peaks, lowest first, that set the upper edge of the lattice
/// consistency check.
const FIT_PEAKS: usize = 24;
/// Lowest resolved peaks considered as fundamentals in that check.
const POOL: usize = 14;
/// With fewer detected peaks the greedy choice stands.
const FIT_MIN_PEAKS: usize = 8;
/// Lattice matching tolerance relative to the harmonic tolerance; absorbing
/// walls shift whole mode series by about a percent.
const LATTICE_TOL: f64 = 1.5;
/// Penalty per predicted mode that no detected peak accounts for.
const MISSING_WEIGHT: f64 = 0.25;
/// Score gain needed before a fundamental without a peak of its own is used.
const MASKED_MARGIN: f64 = 1.0;
/// A mode within this fraction of a detected peak's frequency, or within its
/// half-power bandwidth, cannot show as a separate peak.
const MASK_RELATIVE: f64 = 0.05;

struct Context<'a> {
    opts: &'a AxialSearchOptions,
    f_step: f64,
    f_lim: f64,
    /// Restored frequencies of resolved peaks.
    resolved: Vec<(f64, &'a PeakEstimate)>,
    /// Best frequency of every detected peak.
    all: Vec<f64>,
    /// Half-power bandwidth of every detected peak, zero when unknown.
    widths: Vec<f64>,
}

impl Context<'_> {
    fn tol(&self, target: f64) -> f64 {
        self.opts.tolerance(self.f_step, target)
    }

    fn nearest_resolved(&self, target: f64) -> Option<(f64, usize)> {
        let tol = self.tol(target);
        self.resolved
            .iter()
            .enumerate()
            .map(|(i, (f, _))| ((f - target).abs(), i))
            .filter(|(d, _)| *d <= tol)
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    fn hypothesis(&self, f0: f64, peak: &PeakEstimate) -> AxisHypothesis {
        let mut harmonics = vec![HarmonicMatch {
            order: 1,
            frequency: f0,
            residual_hz: 0.0,
        }];
        let mut m = 2u32;
        while m as f64 * f0 <= self.f_lim + self.tol(m as f64 * f0) {
            let target = m as f64 * f0;
            if let Some((d, i)) = self.nearest_resolved(target) {
                harmonics.push(HarmonicMatch {
                    order: m,
                    frequency: self.resolved[i].0,
                    residual_hz: d,
                });
            }
            m += 1;
        }
        let mut h = AxisHypothesis {
            fundamental: f0,
            peak: *peak,
            harmonics,
            score: 0.0,
            axes: 1,
            flags: Vec::new(),
        };
        h.score = h.harmonic_count() as f64 - h.mean_residual();
        if h.harmonic_count() < self.opts.min_harmonics {
            h.flags.push(HypothesisFlag::LowConfidence);
        }
        h
    }

    /// True if a detected peak lies close enough to hide a mode at `f`.
    fn masked(&self, f: f64) -> bool {
        self.all
            .iter()
            .zip(&self.widths)
            .any(|(&p, &wp)| (f - p).abs() <= wp.max(MASK_RELATIVE * p))
    }

    /// True if one frequency is an integer multiple (≥ 2) of the other.
    fn related_by_multiple(&self, a: f64, b: f64) -> bool {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let n = (hi / lo).round();
        n >= 2.0 && (hi - n * lo).abs() <= self.tol(hi)
    }

    /// True if `f` matches a tangential or oblique rigid mode of the room
    /// spanned by the distinct fundamentals in `basis`.
    fn is_combination(&self, f: f64, basis: &[f64]) -> bool {
        if basis.len() < 2 {
            return false;
        }
        let tol = self.tol(f);
        let mut l = [0.0; 3];
        l[..basis.len().min(3)].copy_from_slice(&basis[..basis.len().min(3)]);
        lattice(l, f + tol)
            .into_iter()
            .any(|(v, on)| on.iter().filter(|&&n| n).count() >= 2 && (v - f).abs() <= tol)
    }

    /// Consistency of the rigid-mode lattice of three fundamentals (zero
    /// for an absent axis) with the detected peaks below `f_fit`: explained
    /// peaks minus a penalty for predicted modes that no peak accounts for.
    /// Modes closer than the matching tolerance count once, and a mode
    /// inside the bandwidth of a detected peak counts as hidden, not absent.
    fn lattice_fit(&self, l: [f64; 3], f_fit: f64) -> f64 {
        let mut modes: Vec<f64> = lattice(l, f_fit).into_iter().map(|(f, _)| f).collect();
        modes.sort_by(f64::total_cmp);
        let reach = |f: f64| LATTICE_TOL * self.tol(f);
        let explained = self
            .all
            .iter()
            .filter(|&&p| p <= f_fit && modes.iter().any(|&m| (m - p).abs() <= reach(m)))
            .count();
        let seen = |m: f64| {
            self.all
                .iter()
                .zip(&self.widths)
                .any(|(&p, &wp)| (m - p).abs() <= reach(m).max(wp))
        };
        let mut missing = 0;
        let mut start = 0;
        while start < modes.len() {
            let mut end = start + 1;
            while end < modes.len() && modes[end] - modes[end - 1] <= reach(modes[end]) {
                end += 1;
            }
            if !modes[start..end].iter().any(|&m| seen(m)) {
                missing += 1;
            }
            start = end;
        }
        explained as f64 - MISSING_WEIGHT * missing as f64
    }
}

/// Rigid-mode frequencies `sqrt(Σ (n_i l_i)²)` up to `f_max` and which
/// indices are nonzero; axes with `l_i = 0` are absent. The static mode is
/// skipped.
fn lattice(l: [f64; 3], f_max: f64) -> Vec<(f64, [bool; 3])> {
    let lim = f_max * f_max;
    let max = |x: f64| if x > 0.0 { (f_max / x).floor() as u32 } else { 0 };
    let mut out = Vec::new();
    for i in 0..=max(l[0]) {
        let s0 = (i as f64 * l[0]).powi(2);
        for j in 0..=max(l[1]) {
            let s1 = s0 + (j as f64 * l[1]).powi(2);
            if s1 > lim {
                break;
            }
            for k in 0..=max(l[2]) {
                let s2 = s1 + (k as f64 * l[2]).powi(2);
                if s2 > lim {
                    break;
                }
                if i + j + k > 0 {
                    out.push((s2.sqrt(), [i > 0, j > 0, k > 0]));
                }
            }
        }
    }
    out
}

/// Searches `peaks` for up to three axial fundamentals. With
/// `manual_override`, the peaks nearest the given frequencies are used
/// instead of the ranking.
pub fn find_axial_fundamentals(
    peaks: &[PeakEstimate],
    f_step: f64,
    opts: &AxialSearchOptions,
    manual_override: Option<&[f64]>,
) -> Result<AxialSearch> {
    if !(f_step > 0.0) {
        return Err(Error::domain(format!("grid step must be positive, got {f_step}")));
    }
    let resolved: Vec<(f64, &PeakEstimate)> = peaks
        .iter()
        .filter_map(|p| p.f0.filter(|_| p.is_resolved()).map(|f0| (f0, p)))
        .collect();
    let f_lim = opts
        .max_frequency_hz
        .unwrap_or_else(|| resolved.iter().map(|(f, _)| *f).fold(0.0, f64::max));
    let ctx = Context {
        opts,
        f_step,
        f_lim,
        resolved,
        all: peaks.iter().map(|p| p.best_frequency()).collect(),
        widths: peaks.iter().map(|p| p.delta_f.unwrap_or(0.0)).collect(),
    };

    if let Some(freqs) = manual_override {
        if freqs.is_empty() || freqs.len() > 3 {
            return Err(Error::invalid("manual override needs one to three frequencies"));
        }
        if peaks.is_empty() {
            return Err(Error::invalid("no peaks detected to match the manual override"));
        }
        let mut hyps = Vec::new();
        for &f in freqs {
            let p = peaks
                .iter()
                .min_by(|a, b| (a.f_m - f).abs().total_cmp(&(b.f_m - f).abs()))
                .expect("non-empty");
            let mut h = ctx.hypothesis(p.best_frequency(), p);
            h.flags.push(HypothesisFlag::Manual);
            if !p.is_resolved() {
                h.flags.push(HypothesisFlag::Unresolved);
            }
            hyps.push(h);
        }
        let missing = 3 - hyps.len() as u8;
        return Ok(AxialSearch {
            hypotheses: hyps,
            missing_axes: missing,
        });
    }

    if peaks.is_empty() {
        return Err(Error::invalid("no peaks detected in the transfer function"));
    }
    if ctx.resolved.is_empty() {
        let unresolved: Vec<String> = peaks.iter().map(|p| format!("{:.2} Hz UNRESOLVED", p.f_m)).collect();
        return Err(Error::invalid(format!(
            "no resolved peaks for the harmonic search ({} detected: {})",
            peaks.len(),
            unresolved.join(", ")
        )));
    }

    let mut cands: Vec<AxisHypothesis> = ctx
        .resolved
        .iter()
        .filter(|(f, _)| *f <= f_lim)
        .map(|(f, p)| ctx.hypothesis(*f, p))
        .collect();
    cands.sort_by(|a, b| {
        b.harmonic_count()
            .cmp(&a.harmonic_count())
            .then(a.mean_residual().total_cmp(&b.mean_residual()))
            .then(a.fundamental.total_cmp(&b.fundamental))
    });

    let mut chosen: Vec<AxisHypothesis> = Vec::new();
    for c in cands {
        if chosen.len() == 6 {
            break;
        }
        let fs: Vec<f64> = chosen.iter().map(|h| h.fundamental).collect();
        if fs
            .iter()
            .any(|&s| ctx.related_by_multiple(s, c.fundamental) || (s - c.fundamental).abs() <= ctx.tol(s))
        {
            continue;
        }
        if ctx.is_combination(c.fundamental, &fs) {
            continue;
        }
        chosen.push(c);
    }
    // drop any survivor explained by the others
    loop {
        let fs: Vec<f64> = chosen.iter().map(|h| h.fundamental).collect();
        let explained = (0..chosen.len()).rev().find(|&i| {
            let others: Vec<f64> = fs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &f)| f)
                .filter(|&f| f < fs[i])
                .collect();
            ctx.is_combination(fs[i], &others)
        });
        match explained {
            Some(i) => {
                chosen.remove(i);
            }
            None => break,
        }
    }
    chosen.truncate(3);

    // the greedy choice gives way to any three-axis set, repeats allowed,
    // whose mode lattice fits the detected peaks better; this settles equal
    // dimensions, integer dimension ratios and near coincidences such as a
    // fundamental close to sqrt(2) times another
    let f_fit = {
        let mut fs = ctx.all.clone();
        fs.sort_by(f64::total_cmp);
        fs.get(FIT_PEAKS - 1)
            .copied()
            .unwrap_or(f_lim)
            .min(f_lim.max(fs.last().copied().unwrap_or(0.0)))
    };
    let greedy = {
        let mut l = [0.0; 3];
        for (slot, h) in l.iter_mut().zip(&chosen) {
            *slot = h.fundamental;
        }
        ctx.lattice_fit(l, f_fit)
    };
    let pool: Vec<(f64, usize)> = ctx
        .resolved
        .iter()
        .enumerate()
        .filter(|(_, r)| r.0 <= f_fit)
        .take(POOL)
        .map(|(i, r)| (r.0, i))
        .collect();
    let mut best: Option<(f64, [(f64, usize); 3])> = None;
    if ctx.all.len() >= FIT_MIN_PEAKS {
        for a in 0..pool.len() {
            for b in a..pool.len() {
                for c in b..pool.len() {
                    let trial = [pool[a], pool[b], pool[c]];
                    let fit = ctx.lattice_fit(trial.map(|t| t.0), f_fit);
                    if fit > greedy && best.is_none_or(|(bf, _)| fit > bf) {
                        best = Some((fit, trial));
                    }
                }
            }
        }
        // an axis whose own peak is hidden under a neighbour still shows in
        // its second harmonic and in the cross modes it forms
        let current = best.map(|b| b.0).unwrap_or(greedy);
        let mut masked: Option<(f64, [(f64, usize); 3])> = None;
        for x in 0..pool.len() {
            for y in x..pool.len() {
                let (a, b) = (pool[x].0, pool[y].0);
                for (i, &(p, _)) in ctx.resolved.iter().enumerate().filter(|(_, r)| r.0 <= f_fit) {
                    let derived = [
                        0.5 * p,
                        (p * p - a * a).sqrt(),
                        (p * p - b * b).sqrt(),
                        (p * p - a * a - b * b).sqrt(),
                    ];
                    for c in derived {
                        if !(c > 4.0 * ctx.f_step)
                            || ctx.all.iter().any(|&q| (q - c).abs() <= ctx.tol(c))
                            || !ctx.masked(c)
                        {
                            continue;
                        }
                        let trial = [pool[x], pool[y], (c, i)];
                        let fit = ctx.lattice_fit(trial.map(|t| t.0), f_fit);
                        if fit >= current + MASKED_MARGIN && masked.is_none_or(|(bf, _)| fit > bf) {
                            masked = Some((fit, trial));
                        }
                    }
                }
            }
        }
        if masked.is_some() {
            best = masked;
        }
    }
    if let Some((_, idx)) = best {
        let mut hyps: Vec<AxisHypothesis> = Vec::new();
        for (f0, i) in idx {
            let p = ctx.resolved[i].1;
            if let Some(h) = hyps
                .iter_mut()
                .find(|h| h.peak.bin == p.bin && (h.fundamental - f0).abs() < 1e-9)
            {
                h.axes += 1;
                if !h.flags.contains(&HypothesisFlag::Degenerate) {
                    h.flags.push(HypothesisFlag::Degenerate);
                }
            } else {
                let mut h = ctx.hypothesis(f0, p);
                if (f0 - ctx.resolved[i].0).abs() > 1e-9 {
                    h.flags.push(HypothesisFlag::Masked);
                }
                hyps.push(h);
            }
        }
        let fs: Vec<f64> = hyps.iter().map(|h| h.fundamental).collect();
        for h in hyps.iter_mut() {
            if fs
                .iter()
                .any(|&o| o < h.fundamental && ctx.related_by_multiple(o, h.fundamental))
            {
                h.flags.push(HypothesisFlag::SharedSeries);
            }
        }
        hyps.sort_by(|a, b| b.score.total_cmp(&a.score));
        chosen = hyps;
    }

    let covered = chosen.iter().map(|h| h.axes).sum::<u8>();
    Ok(AxialSearch {
        hypotheses: chosen,
        missing_axes: 3u8.saturating_sub(covered),
    })
}

/// One inferred room dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisDimension {
    pub length_m: f64,
    /// Damped frequency and bandwidth of the peak the hypothesis rests on;
    /// for a masked fundamental, the peak it was inferred from.
    pub f_m: f64,
    pub delta_f: f64,
    pub fundamental_hz: f64,
    pub harmonic_count: usize,
    pub flags: Vec<HypothesisFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    /// One entry per inferred axis, in hypothesis order.
    pub axes: Vec<AxisDimension>,
    /// Inferred lengths sorted descending.
    pub sorted_m: Vec<f64>,
    /// Largest dimension reported as width, then length, then height.
    pub width_m: Option<f64>,
    pub length_m: Option<f64>,
    pub height_m: Option<f64>,
    pub missing_axes: u8,
}

/// Axis length from the first-order axial peak: `L = c / (2 sqrt(f_M² + Δf²/2))`.
pub fn axis_length(f_m: f64, delta_f: f64, air: &AirProperties) -> Result<f64> {
    let f0 = super::peaks::restore_eigenfrequency(f_m, delta_f)?;
    Ok(air.c / (2.0 * f0))
}

pub fn infer_dimensions(search: &AxialSearch, air: &AirProperties) -> Result<DimensionEstimate> {
    if search.hypotheses.is_empty() {
        return Err(Error::invalid("no axis hypotheses to infer dimensions from"));
    }
    let mut axes = Vec::new();
    for h in &search.hypotheses {
        let delta_f = h.peak.delta_f.unwrap_or(0.0);
        let length_m = series_length(h, air)?;
        for _ in 0..h.axes {
            axes.push(AxisDimension {
                length_m,
                f_m: h.peak.f_m,
                delta_f,
                fundamental_hz: h.fundamental,
                harmonic_count: h.harmonic_count(),
                flags: h.flags.clone(),
            });
        }
    }
    axes.truncate(3);
    let mut sorted_m: Vec<f64> = axes.iter().map(|a| a.length_m).collect();
    sorted_m.sort_by(|a, b| b.total_cmp(a));
    Ok(DimensionEstimate {
        width_m: sorted_m.first().copied(),
        length_m: sorted_m.get(1).copied(),
        height_m: sorted_m.get(2).copied(),
        missing_axes: 3 - sorted_m.len() as u8,
        sorted_m,
        axes,
    })
}

/// Highest axial order used for a length estimate.
const LENGTH_ORDERS: u32 = 4;

/// Axis length from the low orders of a matched series, `L = n c / (2 f_n)`
/// combined by least squares on `f_n = n f_1`. A masked fundamental has no
/// measurement of its own and only contributes through its harmonics.
fn series_length(h: &AxisHypothesis, air: &AirProperties) -> Result<f64> {
    let masked = h.flags.contains(&HypothesisFlag::Masked);
    let (num, den) = h
        .harmonics
        .iter()
        .filter(|m| m.order <= LENGTH_ORDERS && !(masked && m.order == 1))
        .fold((0.0, 0.0), |(num, den), m| {
            let n = m.order as f64;
            (num + n * m.frequency, den + n * n)
        });
    let f1 = if den == 0.0 { h.fundamental } else { num / den };
    if !(f1 > 0.0) {
        return Err(Error::invalid(format!("non-positive fundamental {f1}")));
    }
    Ok(air.c / (2.0 * f1))
}

/// Per-axis absolute errors against `truth` (x, y, z) under the assignment
/// of estimated lengths to true axes that minimises the total error. Axes
/// left without an estimate are `None`.
pub fn matched_axis_errors(estimated: &[f64], truth: [f64; 3]) -> [Option<f64>; 3] {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut best: Option<(f64, [Option<f64>; 3])> = None;
    for perm in PERMS {
        // estimate e goes to truth axis perm[e]
        let mut errs = [None; 3];
        let mut total = 0.0;
        for (e, &len) in estimated.iter().take(3).enumerate() {
            let d = (len - truth[perm[e]]).abs();
            errs[perm[e]] = Some(d);
            total += d;
        }
        if best.as_ref().is_none_or(|b| total < b.0) {
            best = Some((total, errs));
        }
    }
    best.map_or([None; 3], |b| b.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inverse::peaks::PeakStatus;

    const AIR: AirProperties = AirProperties { c: 343.0, rho: 1.20 };

    fn exact(f: f64) -> PeakEstimate {
        PeakEstimate {
            f_m: f,
            amplitude: 1.0,
            delta_f: Some(0.0),
            quality: None,
            f0: Some(f),
            status: PeakStatus::Resolved,
            bin: 0,
            prominence_db: 10.0,
        }
    }

    #[test]
    fn exact_multiple_fixture() {
        let peaks: Vec<_> = [38.11, 57.17, 63.52, 76.22, 114.33].into_iter().map(exact).collect();
        let s = find_axial_fundamentals(&peaks, 0.5, &AxialSearchOptions::default(), None).unwrap();
        let f: Vec<f64> = s.hypotheses.iter().map(|h| h.fundamental).collect();
        assert_eq!(f, vec![38.11, 57.17, 63.52]);
        let orders: Vec<u32> = s.hypotheses[0].harmonics.iter().map(|h| h.order).collect();
        assert_eq!(orders, vec![1, 2, 3]);
        assert_eq!(s.hypotheses[1].harmonic_count(), 2);
        assert!(s.hypotheses[2].flags.contains(&HypothesisFlag::LowConfidence));
        assert_eq!(s.missing_axes, 0);
    }

    #[test]
    fn single_peak_is_low_confidence() {
        let s = find_axial_fundamentals(&[exact(50.0)], 0.5, &AxialSearchOptions::default(), None).unwrap();
        assert_eq!(s.hypotheses.len(), 1);
        assert_eq!(s.hypotheses[0].harmonic_count(), 1);
        assert!(s.hypotheses[0].flags.contains(&HypothesisFlag::LowConfidence));
        assert_eq!(s.missing_axes, 2);
    }

    #[test]
    fn cube_is_triple_degenerate() {
        // rigid modes of a 3 m cube below 200 Hz
        let f1 = 343.0 / 6.0;
        let mut fs: Vec<f64> = Vec::new();
        for a in 0..4u32 {
            for b in 0..4u32 {
                for c in 0..4u32 {
                    let v = f1 * ((a * a + b * b + c * c) as f64).sqrt();
                    if v > 0.0 && v < 200.0 {
                        fs.push(v);
                    }
                }
            }
        }
        fs.sort_by(f64::total_cmp);
        fs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let peaks: Vec<_> = fs.into_iter().map(exact).collect();
        let s = find_axial_fundamentals(&peaks, 0.5, &AxialSearchOptions::default(), None).unwrap();
        assert_eq!(s.hypotheses.len(), 1);
        assert_eq!(s.hypotheses[0].axes, 3);
        assert!(s.hypotheses[0].flags.contains(&HypothesisFlag::Degenerate));
        let est = infer_dimensions(&s, &AIR).unwrap();
        assert_eq!(est.sorted_m.len(), 3);
        assert!(est.sorted_m.iter().all(|l| (l - 3.0).abs() < 1e-9));
    }

    #[test]
    fn manual_override_picks_nearest_peaks() {
        let peaks: Vec<_> = [38.11, 57.17, 63.52, 76.22, 114.33].into_iter().map(exact).collect();
        let s = find_axial_fundamentals(&peaks, 0.5, &AxialSearchOptions::default(), Some(&[76.0, 63.0])).unwrap();
        let f: Vec<f64> = s.hypotheses.iter().map(|h| h.fundamental).collect();
        assert_eq!(f, vec![76.22, 63.52]);
        assert!(s.hypotheses.iter().all(|h| h.flags.contains(&HypothesisFlag::Manual)));
        assert_eq!(s.missing_axes, 1);
    }

    #[test]
    fn no_resolved_peaks_is_an_error() {
        let mut p = exact(40.0);
        p.status = PeakStatus::Unresolved;
        p.f0 = None;
        let err = find_axial_fundamentals(&[p], 0.5, &AxialSearchOptions::default(), None).unwrap_err();
        assert!(err.to_string().contains("UNRESOLVED"));
    }

    #[test]
    fn dimension_examples() {
        assert!((axis_length(57.0, 2.0, &AIR).unwrap() - 3.0078).abs() < 1e-4);
        assert!((axis_length(38.111, 0.0, &AIR).unwrap() - 4.5).abs() < 1e-4);
    }

    #[test]
    fn unit_invariance() {
        let (f, df) = (44.7, 1.9);
        let w = 2.0 * std::f64::consts::PI;
        let l_hz = axis_length(f, df, &AIR).unwrap();
        let omega0 = ((w * f).powi(2) + (w * df).powi(2) / 2.0).sqrt();
        let l_rad = AIR.c * std::f64::consts::PI / omega0;
        assert!((l_hz - l_rad).abs() < 1e-12);
    }

    #[test]
    fn matched_errors_use_best_permutation() {
        let e = matched_axis_errors(&[4.52, 2.98, 2.69], [3.0, 4.5, 2.7]);
        let e: Vec<f64> = e.iter().map(|v| v.unwrap()).collect();
        assert!((e[0] - 0.02).abs() < 1e-12 && (e[1] - 0.02).abs() < 1e-12 && (e[2] - 0.01).abs() < 1e-12);
        let partial = matched_axis_errors(&[4.4], [3.0, 4.5, 2.7]);
        assert_eq!(partial[0], None);
        assert!((partial[1].unwrap() - 0.1).abs() < 1e-12);
    }
}
