//! Moment statistics of normalized Frobenius data and of Haar samples, and
//! scoring of empirical profiles against candidate compact groups.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lpoly::NormalizedPoly;
use crate::st_group::{exact_moments, STModel};

pub const MAX_A1_ORDER: usize = 8;
pub const MAX_A2_ORDER: usize = 4;
/// |a1| below this counts as an exact zero.
pub const ZERO_TOL: f64 = 1e-9;
pub const JACKKNIFE_BLOCKS: usize = 20;
pub const MIN_MATCH_SAMPLES: usize = 100;
pub const HISTOGRAM_BINS: usize = 50;

const A1_MATCH_ORDERS: [usize; 3] = [2, 4, 6];
const A2_MATCH_ORDERS: [usize; 2] = [1, 2];
const MIN_VARIANCE: f64 = 1e-12;

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut s = NeumaierSum::default();
    for x in values {
        s.add(x);
    }
    s.value()
}

/// Jackknife estimate of the variance of the sample mean, using contiguous
/// blocks in input order.
pub fn jackknife_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let blocks = JACKKNIFE_BLOCKS.min(n);
    let bounds: Vec<usize> = (0..=blocks).map(|b| n * b / blocks).collect();
    let sums: Vec<f64> = bounds
        .windows(2)
        .map(|w| neumaier_sum(values[w[0]..w[1]].iter().copied()))
        .collect();
    let total = neumaier_sum(sums.iter().copied());
    let loo: Vec<f64> = bounds
        .windows(2)
        .zip(&sums)
        .map(|(w, s)| (total - s) / (n - (w[1] - w[0])) as f64)
        .collect();
    let mean = neumaier_sum(loo.iter().copied()) / blocks as f64;
    let ss = neumaier_sum(loo.iter().map(|t| (t - mean) * (t - mean)));
    ss * (blocks - 1) as f64 / blocks as f64
}

/// Moments of a1 (and a2 when available), zero density, and the estimated
/// variance of each estimate. Exact reports carry zero variances and no
/// sample count.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub label: String,
    pub genus: usize,
    /// `a1[k-1]` is the k-th moment of a1.
    pub a1: Vec<f64>,
    /// `a2[k-1]` is the k-th moment of a2; empty when not available.
    pub a2: Vec<f64>,
    pub zero_density: f64,
    pub samples: Option<usize>,
    pub a1_var: Vec<f64>,
    pub a2_var: Vec<f64>,
    pub zero_var: f64,
}

impl MomentReport {
    pub fn exact(
        label: impl Into<String>,
        genus: usize,
        a1: Vec<f64>,
        a2: Vec<f64>,
        zero_density: f64,
    ) -> Self {
        let (n1, n2) = (a1.len(), a2.len());
        MomentReport {
            label: label.into(),
            genus,
            a1,
            a2,
            zero_density,
            samples: None,
            a1_var: vec![0.0; n1],
            a2_var: vec![0.0; n2],
            zero_var: 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.samples.is_none()
    }

    /// k-th moment of a1; the 0-th moment is 1.
    pub fn a1_moment(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return Some(1.0);
        }
        self.a1.get(k - 1).copied()
    }

    pub fn a2_moment(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return Some(1.0);
        }
        self.a2.get(k - 1).copied()
    }

    /// Standard error of the k-th a1 moment estimate.
    pub fn a1_stderr(&self, k: usize) -> Option<f64> {
        self.a1_var.get(k.checked_sub(1)?).map(|v| v.sqrt())
    }

    pub fn a2_stderr(&self, k: usize) -> Option<f64> {
        self.a2_var.get(k.checked_sub(1)?).map(|v| v.sqrt())
    }

    /// Nonnegative even moments, M2 <= sqrt(M4), zero density in [0, 1].
    pub fn is_consistent(&self) -> bool {
        const EPS: f64 = 1e-9;
        let even_ok = self.a1.iter().skip(1).step_by(2).all(|&m| m >= -EPS)
            && self.a2.iter().skip(1).step_by(2).all(|&m| m >= -EPS);
        let cs_ok = match (self.a1_moment(2), self.a1_moment(4)) {
            (Some(m2), Some(m4)) => m2 <= m4.max(0.0).sqrt() * (1.0 + EPS) + EPS,
            _ => true,
        };
        even_ok && cs_ok && (0.0..=1.0).contains(&self.zero_density)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, m) in self.a1.iter().enumerate() {
            let _ = writeln!(out, "group={} k={} moment={:.10}", self.label, k + 1, m);
        }
        for (k, m) in self.a2.iter().enumerate() {
            let _ = writeln!(
                out,
                "group={} coeff=a2 k={} moment={:.10}",
                self.label,
                k + 1,
                m
            );
        }
        let _ = writeln!(out, "zero_density={:.10}", self.zero_density);
        match self.samples {
            Some(n) => {
                let _ = writeln!(out, "samples={n}");
            }
            None => out.push_str("samples=exact\n"),
        }
        out
    }
}

fn mean_and_var(values: &[f64]) -> (f64, f64) {
    let mean = neumaier_sum(values.iter().copied()) / values.len() as f64;
    (mean, jackknife_variance(values))
}

fn power_moments(values: &[f64], max_order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut powers = values.to_vec();
    let mut means = Vec::with_capacity(max_order);
    let mut vars = Vec::with_capacity(max_order);
    for k in 1..=max_order {
        if k > 1 {
            for (p, v) in powers.iter_mut().zip(values) {
                *p *= v;
            }
        }
        let (m, v) = mean_and_var(&powers);
        means.push(m);
        vars.push(v);
    }
    (means, vars)
}

/// Moment report from per-sample coefficient values.
pub fn moments_from_values(
    label: impl Into<String>,
    genus: usize,
    a1: &[f64],
    a2: Option<&[f64]>,
) -> Result<MomentReport> {
    if a1.is_empty() {
        return Err(Error::EmptySample);
    }
    let (a1_m, a1_var) = power_moments(a1, MAX_A1_ORDER);
    let (a2_m, a2_var) = match a2 {
        Some(v) if genus >= 2 => {
            if v.len() != a1.len() {
                return Err(Error::InvalidArgument(
                    "a1 and a2 sample counts differ".into(),
                ));
            }
            power_moments(v, MAX_A2_ORDER)
        }
        _ => (Vec::new(), Vec::new()),
    };
    let zeros: Vec<f64> = a1
        .iter()
        .map(|x| if x.abs() < ZERO_TOL { 1.0 } else { 0.0 })
        .collect();
    let (zero_density, zero_var) = mean_and_var(&zeros);
    Ok(MomentReport {
        label: label.into(),
        genus,
        a1: a1_m,
        a2: a2_m,
        zero_density,
        samples: Some(a1.len()),
        a1_var,
        a2_var,
        zero_var,
    })
}

/// Plain averages over normalized Frobenius polynomials. a2 moments are
/// reported only when every entry carries a2 and g >= 2.
pub fn empirical_moments(aps: &[NormalizedPoly]) -> Result<MomentReport> {
    let first = aps.first().ok_or(Error::EmptySample)?;
    let genus = first.g;
    if aps.iter().any(|a| a.g != genus) {
        return Err(Error::InvalidArgument(
            "mixed genera in one sequence".into(),
        ));
    }
    let a1: Vec<f64> = aps.iter().map(|a| a.a1()).collect();
    let a2: Option<Vec<f64>> = aps.iter().map(|a| a.a2()).collect();
    moments_from_values("empirical", genus, &a1, a2.as_deref())
}

/// Per-coset reports keyed by the label the rule assigns to each prime.
pub fn component_split<F>(
    aps: &[(u64, NormalizedPoly)],
    rule: F,
) -> Result<BTreeMap<usize, MomentReport>>
where
    F: Fn(u64) -> Option<usize>,
{
    if aps.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut parts: BTreeMap<usize, Vec<NormalizedPoly>> = BTreeMap::new();
    for (p, a) in aps {
        let c = rule(*p).ok_or(Error::IncompleteRule(*p))?;
        parts.entry(c).or_default().push(a.clone());
    }
    parts
        .into_iter()
        .map(|(c, v)| {
            let mut r = empirical_moments(&v)?;
            r.label = format!("coset{c}");
            Ok((c, r))
        })
        .collect()
}

/// Outcome of scoring a report against candidate profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchVerdict {
    pub best: String,
    /// Candidate ids with their scores, in candidate order.
    pub scores: Vec<(String, f64)>,
    pub decisive: bool,
}

impl MatchVerdict {
    pub fn score(&self, id: &str) -> Option<f64> {
        self.scores.iter().find(|(n, _)| n == id).map(|(_, s)| *s)
    }

    pub fn summary_line(&self) -> String {
        format!("best={} decisive={}", self.best, u8::from(self.decisive))
    }

    pub fn to_text(&self) -> String {
        let mut out = self.summary_line();
        out.push('\n');
        for (id, s) in &self.scores {
            let _ = writeln!(out, "{id} {s:.6}");
        }
        out
    }
}

fn term(emp: f64, var: f64, exact: bool, model: f64) -> f64 {
    let w = if exact {
        1.0
    } else {
        1.0 / var.max(MIN_VARIANCE)
    };
    w * (emp - model) * (emp - model)
}

fn score(report: &MomentReport, profile: &MomentReport) -> Result<f64> {
    let exact = report.is_exact();
    let missing =
        |what: &str| Error::InvalidArgument(format!("profile {} lacks {what}", profile.label));
    let mut s = 0.0;
    for k in A1_MATCH_ORDERS {
        let emp = report
            .a1_moment(k)
            .ok_or_else(|| Error::InvalidArgument(format!("report lacks a1 moment {k}")))?;
        let model = profile.a1_moment(k).ok_or_else(|| missing("a1 moments"))?;
        s += term(emp, report.a1_var[k - 1], exact, model);
    }
    if report.genus >= 2 && !report.a2.is_empty() {
        for k in A2_MATCH_ORDERS {
            let emp = report.a2[k - 1];
            let model = profile.a2_moment(k).ok_or_else(|| missing("a2 moments"))?;
            s += term(emp, report.a2_var[k - 1], exact, model);
        }
    }
    s += term(
        report.zero_density,
        report.zero_var,
        exact,
        profile.zero_density,
    );
    Ok(s)
}

/// Scores `report` against precomputed exact profiles.
pub fn match_profiles(
    report: &MomentReport,
    profiles: &[(String, MomentReport)],
) -> Result<MatchVerdict> {
    if profiles.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two candidates".into(),
        ));
    }
    if let Some(n) = report.samples {
        if n < MIN_MATCH_SAMPLES {
            return Err(Error::InsufficientData(format!(
                "{n} samples, need at least {MIN_MATCH_SAMPLES}"
            )));
        }
    }
    if let Some((id, _)) = profiles.iter().find(|(_, p)| p.genus != report.genus) {
        return Err(Error::InvalidArgument(format!(
            "candidate {id} has a different genus than the data (g={})",
            report.genus
        )));
    }
    let scores = profiles
        .iter()
        .map(|(id, p)| Ok((id.clone(), score(report, p)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].1.total_cmp(&scores[b].1).then(a.cmp(&b)));
    let best = scores[order[0]].1;
    let second = scores[order[1]].1;
    Ok(MatchVerdict {
        best: scores[order[0]].0.clone(),
        decisive: best < 0.5 * second,
        scores,
    })
}

/// Scores `report` against the exact moment profiles of `candidates`.
pub fn match_candidates(report: &MomentReport, candidates: &[STModel]) -> Result<MatchVerdict> {
    let profiles = candidates
        .iter()
        .map(|m| Ok((m.id(), exact_moments(m, 6)?)))
        .collect::<Result<Vec<_>>>()?;
    match_profiles(report, &profiles)
}

/// Equal-width histogram of a1 values on [-2g, 2g].
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn of_a1(values: &[f64], genus: usize) -> Self {
        let hi = 2.0 * genus as f64;
        let lo = -hi;
        let mut counts = vec![0u64; HISTOGRAM_BINS];
        let width = (hi - lo) / HISTOGRAM_BINS as f64;
        for &v in values {
            let b = ((v - lo) / width).floor();
            let b = (b.max(0.0) as usize).min(HISTOGRAM_BINS - 1);
            counts[b] += 1;
        }
        Histogram { lo, hi, counts }
    }

    pub fn edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let edges = self.edges();
        let mut out = String::from("lo,hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{:.4},{:.4},{}", edges[i], edges[i + 1], c);
        }
        out
    }
}
