//! Critical site percolation on the triangular lattice in a half-plane box:
//! boundary four-point link patterns, the boundary one-arm exponent and the
//! rhombus crossing probability.
//!
//! The triangular lattice is realized as the square lattice with the extra
//! diagonal (x, y) ~ (x + 1, y + 1). Row y = 0 is the boundary. Sites are open
//! independently with probability 1/2, generated 64 at a time from a
//! ChaCha8 stream. Only clusters touching marked boundary segments are
//! explored, by flood fill.

use std::io::Write;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ode::cross_ratio;
use crate::special::{ellip_k, ellip_parameter_for_ratio, jacobi_sn};

/// Working memory per lattice site and worker (occupation, mask and
/// exploration bits, flood-fill stack), rounded up.
pub const BYTES_PER_SITE: usize = 6;
/// Default cap on total lattice memory across workers.
pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;
/// Outer-point half span used by the default four-point runs at width 512.
pub const DEFAULT_HALF_SPAN: usize = 96;

/// Condition imposed on the sides and top of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FarBoundary {
    /// Sites beyond the box are absent.
    #[default]
    Closed,
    /// All clusters touching the sides or top are identified.
    Wired,
}

/// Segment centers on the bottom row, left to right, for one target λ. Each
/// placement is a translate chosen so its conformal cross-ratio in the box is
/// as close to `lambda` as integer positions allow.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub lambda: f64,
    pub placements: Vec<[usize; 4]>,
}

/// Configuration of a four-point run.
///
/// The box is a Euclidean rectangle `aspect·L` lattice spacings wide and `L`
/// high, cut out of the triangular lattice: row y holds `width()` sites
/// starting at ⌈y/2⌉ in sheared coordinates. Every placement of every point
/// set is evaluated for every half-width in `halfwidths`, all on the same
/// samples.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub box_width: usize,
    pub aspect: f64,
    pub point_sets: Vec<PointSet>,
    pub halfwidths: Vec<usize>,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub far_boundary: FarBoundary,
    pub memory_budget: usize,
}

/// The conformal map of the box onto the upper half-plane, restricted to
/// the bottom edge: x ↦ sn((x − center)·K/half_width | m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangleMap {
    pub m: f64,
    pub quarter_period: f64,
    pub center: f64,
    pub half_width: f64,
}

impl RectangleMap {
    /// Map of the rectangle [−w/2, w/2] × [0, h].
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::DegenerateGeometry(format!("rectangle {width} x {height}")));
        }
        let m = ellip_parameter_for_ratio(2.0 * height / width)?;
        Ok(Self { m, quarter_period: ellip_k(m)?, center: 0.0, half_width: width / 2.0 })
    }

    /// Image of the bottom-edge point x on the real axis.
    pub fn image(&self, x: f64) -> Result<f64> {
        jacobi_sn((x - self.center) / self.half_width * self.quarter_period, self.m)
    }

    /// Cross-ratio of the images of four bottom-edge points.
    pub fn lambda(&self, pts: &[usize; 4]) -> Result<f64> {
        let w = pts.iter().map(|&x| self.image(x as f64)).collect::<Result<Vec<f64>>>()?;
        cross_ratio(w[0], w[1], w[2], w[3])
    }
}

impl McConfig {
    /// For each entry of `lambdas`, outer centers at c ± `half_span` for c
    /// stepping by `half_span / 4` across the central half of the bottom row,
    /// and inner centers solved for the target conformal cross-ratio.
    /// Aspect 2, closed far boundary, one worker.
    pub fn conformal(
        box_width: usize,
        lambdas: &[f64],
        halfwidths: &[usize],
        half_span: usize,
        samples: u64,
        seed: u64,
    ) -> Result<Self> {
        let mut cfg = Self {
            box_width,
            aspect: 2.0,
            point_sets: Vec::new(),
            halfwidths: halfwidths.to_vec(),
            samples,
            seed,
            workers: 1,
            far_boundary: FarBoundary::Closed,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        };
        let width = cfg.width();
        if box_width < 8 || half_span < 8 {
            return Err(Error::Misconfigured(format!("box width {box_width} or half span {half_span} < 8")));
        }
        let map = cfg.rectangle_map()?;
        let gap = 2 * halfwidths.iter().copied().max().unwrap_or(0) + 1;
        let mid = (width - 1) / 2;
        let lo = width / 4 + half_span + SEARCH_SLACK;
        let hi = (3 * width / 4).saturating_sub(half_span + SEARCH_SLACK);
        if lo > mid || hi < mid {
            return Err(Error::Misconfigured(format!(
                "half span {half_span} does not fit the central half of a box of width {width}"
            )));
        }
        let step = half_span / 4;
        let reach = ((mid - lo).min(hi - mid) / step) as isize;
        for &lambda in lambdas {
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(Error::Domain(format!("lambda = {lambda} outside (0, 1)")));
            }
            let placements = (-reach..=reach)
                .map(|k| {
                    let c = (mid as isize + k * step as isize) as usize;
                    solve_placement(&map, c - half_span, c + half_span, gap, lambda)
                })
                .collect::<Result<Vec<_>>>()?;
            cfg.point_sets.push(PointSet { lambda, placements });
        }
        Ok(cfg)
    }

    /// Sites per row.
    pub fn width(&self) -> usize {
        (self.aspect * self.box_width as f64).round() as usize
    }

    /// Number of rows, so that the Euclidean height is `box_width`.
    pub fn rows(&self) -> usize {
        (self.box_width as f64 * 2.0 / 3f64.sqrt()).round() as usize
    }

    fn storage_width(&self) -> usize {
        self.width() + (self.rows() - 1).div_ceil(2)
    }

    /// Map of the box, which extends half a spacing beyond the outermost
    /// sites on the sides and top.
    pub fn rectangle_map(&self) -> Result<RectangleMap> {
        let height = (self.rows() as f64 - 0.5) * 3f64.sqrt() / 2.0;
        let mut map = RectangleMap::new(self.width() as f64, height)?;
        map.center = (self.width() as f64 - 1.0) / 2.0;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        if self.box_width < 8 {
            return Err(Error::Misconfigured(format!("box width {} < 8", self.box_width)));
        }
        if !(self.aspect >= 2.0) {
            return Err(Error::Misconfigured(format!("aspect {} < 2", self.aspect)));
        }
        if self.samples == 0 || self.workers == 0 {
            return Err(Error::Misconfigured("samples and workers must be positive".into()));
        }
        if self.point_sets.is_empty()
            || self.halfwidths.is_empty()
            || self.point_sets.iter().any(|s| s.placements.is_empty())
        {
            return Err(Error::Misconfigured("no point sets, placements or half-widths".into()));
        }
        if self.halfwidths.contains(&0) {
            return Err(Error::Misconfigured("half-width must be at least 1".into()));
        }
        let width = self.width();
        let wmax = *self.halfwidths.iter().max().expect("non-empty");
        for pts in self.point_sets.iter().flat_map(|s| &s.placements) {
            if pts.windows(2).any(|p| p[1] <= p[0] + 2 * wmax) {
                return Err(Error::Misconfigured(format!(
                    "points {pts:?} are not ordered with disjoint segments of half-width {wmax}"
                )));
            }
            if pts[0] < width / 4 || pts[3] > 3 * width / 4 {
                return Err(Error::Misconfigured(format!(
                    "points {pts:?} leave the central half of the bottom row"
                )));
            }
        }
        let sites = (self.storage_width() + 2) * (self.rows() + 2);
        if sites.saturating_mul(BYTES_PER_SITE).saturating_mul(self.workers) > self.memory_budget {
            return Err(Error::MemoryBudget { sites, budget_bytes: self.memory_budget });
        }
        Ok(())
    }
}

/// Largest move of any center away from its symmetric starting position.
const SEARCH_SLACK: usize = 4;
/// Largest accepted miss of the target cross-ratio by a lattice placement.
const PLACEMENT_TOL: f64 = 5e-3;

/// Centers near x1 < x2 < x3 < x4 with x2, x3 symmetric about the middle
/// and spread to the conformal cross-ratio `lambda` (continuous solution),
/// then moved by at most [`SEARCH_SLACK`] sites each to the integer
/// positions nearest to `lambda`, keeping segments `gap` apart.
fn solve_placement(map: &RectangleMap, x1: usize, x4: usize, gap: usize, lambda: f64) -> Result<[usize; 4]> {
    let c = (x1 + x4) as f64 / 2.0;
    let lam = |x2: f64, x3: f64| -> Result<f64> {
        cross_ratio(map.image(x1 as f64)?, map.image(x2)?, map.image(x3)?, map.image(x4 as f64)?)
    };
    // λ decreases as the inner pair spreads.
    let (mut lo, mut hi) = (0.0f64, (x4 - x1) as f64 / 2.0);
    for _ in 0..100 {
        let b = 0.5 * (lo + hi);
        let v = if b == 0.0 { 1.0 } else { lam(c - b, c + b)? };
        if v > lambda {
            lo = b;
        } else {
            hi = b;
        }
    }
    let b = 0.5 * (lo + hi);
    let start = [x1 as f64, c - b, c + b, x4 as f64].map(|x| x.round() as isize);
    let images = |k: usize| -> Result<Vec<f64>> {
        let s = SEARCH_SLACK as isize;
        (-s..=s).map(|d| map.image((start[k] + d) as f64)).collect()
    };
    let w: Vec<Vec<f64>> = (0..4).map(images).collect::<Result<_>>()?;
    let n = 2 * SEARCH_SLACK + 1;
    let mut best: Option<([usize; 4], f64)> = None;
    for i in 0..n.pow(4) {
        let d = [i % n, i / n % n, i / n / n % n, i / n / n / n];
        let x: [isize; 4] = std::array::from_fn(|k| start[k] + d[k] as isize - SEARCH_SLACK as isize);
        if x.windows(2).any(|p| p[1] < p[0] + gap as isize) {
            continue;
        }
        let (a1, a2, a3, a4) = (w[0][d[0]], w[1][d[1]], w[2][d[2]], w[3][d[3]]);
        let err = ((a2 - a1) * (a4 - a3) / ((a3 - a1) * (a4 - a2)) - lambda).abs();
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((x.map(|v| v as usize), err));
        }
    }
    match best {
        Some((p, err)) if err <= PLACEMENT_TOL => Ok(p),
        _ => Err(Error::Misconfigured(format!("lambda = {lambda} needs segments closer than {gap} sites"))),
    }
}

/// Link-pattern counts for one point set and half-width, summed over
/// samples and translations.
///
/// Translations within one sample are correlated, so the standard error
/// uses the ratio-estimator (delta-method) variance over samples,
/// Σᵢ(Aᵢ − R̂Tᵢ)²/(ΣᵢTᵢ)², where Aᵢ and Tᵢ are the per-sample counts of the
/// pattern and of P^total. With a single translation this is the binomial
/// formula R̂(1 − R̂)/n_total.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct McTally {
    pub lambda: f64,
    pub box_width: usize,
    pub halfwidth: usize,
    pub samples: u64,
    pub placements: u64,
    pub n_1234: u64,
    pub n_12_34: u64,
    pub n_14_23: u64,
    pub n_13_24: u64,
    pub n_other: u64,
    sum_tt: u64,
    sum_aa: u64,
    sum_at: u64,
    sum_bb: u64,
    sum_bt: u64,
}

/// Column names of [`McTally::csv_row`].
pub const CSV_HEADER: &str = "lambda,L,w,samples,n_1234,n_12_34,n_14_23,ratio,stderr";

impl McTally {
    /// P^total count.
    pub fn n_total(&self) -> u64 {
        self.n_1234 + self.n_12_34 + self.n_14_23
    }

    /// n_14_23 / n_total.
    pub fn ratio(&self) -> f64 {
        self.n_14_23 as f64 / self.n_total() as f64
    }

    /// n_12_34 / n_total, the ratio of the relabeled pattern.
    pub fn ratio_12_34(&self) -> f64 {
        self.n_12_34 as f64 / self.n_total() as f64
    }

    /// Standard error of [`McTally::ratio`].
    pub fn stderr(&self) -> f64 {
        ratio_stderr(self.ratio(), self.sum_aa, self.sum_at, self.sum_tt, self.n_total())
    }

    /// Standard error of [`McTally::ratio_12_34`].
    pub fn stderr_12_34(&self) -> f64 {
        ratio_stderr(self.ratio_12_34(), self.sum_bb, self.sum_bt, self.sum_tt, self.n_total())
    }

    fn record(&mut self, counts: &[u64; 5]) {
        let [all, b, a, c, other] = *counts;
        let t = all + a + b;
        self.samples += 1;
        self.placements += all + a + b + c + other;
        self.n_1234 += all;
        self.n_12_34 += b;
        self.n_14_23 += a;
        self.n_13_24 += c;
        self.n_other += other;
        self.sum_tt += t * t;
        self.sum_aa += a * a;
        self.sum_at += a * t;
        self.sum_bb += b * b;
        self.sum_bt += b * t;
    }

    pub fn merge(&mut self, other: &McTally) {
        self.samples += other.samples;
        self.placements += other.placements;
        self.n_1234 += other.n_1234;
        self.n_12_34 += other.n_12_34;
        self.n_14_23 += other.n_14_23;
        self.n_13_24 += other.n_13_24;
        self.n_other += other.n_other;
        self.sum_tt += other.sum_tt;
        self.sum_aa += other.sum_aa;
        self.sum_at += other.sum_at;
        self.sum_bb += other.sum_bb;
        self.sum_bt += other.sum_bt;
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{},{},{},{},{},{},{:.16e},{:.16e}",
            self.lambda,
            self.box_width,
            self.halfwidth,
            self.samples,
            self.n_1234,
            self.n_12_34,
            self.n_14_23,
            self.ratio(),
            self.stderr()
        )
    }
}

fn ratio_stderr(r: f64, saa: u64, sat: u64, stt: u64, total: u64) -> f64 {
    if total == 0 {
        return f64::NAN;
    }
    let ss = saa as f64 - 2.0 * r * sat as f64 + r * r * stt as f64;
    ss.max(0.0).sqrt() / total as f64
}

fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Writes the header and one row per tally.
pub fn write_csv<W: Write>(mut out: W, tallies: &[McTally]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for t in tallies {
        writeln!(out, "{}", t.csv_row())?;
    }
    Ok(())
}

/// Splits `samples` over `workers` threads; worker i uses stream i of the
/// ChaCha8 generator seeded with `seed`.
fn run_workers<S, F>(samples: u64, seed: u64, workers: usize, job: F) -> Vec<S>
where
    S: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> S + Sync,
{
    let workers = workers.max(1) as u64;
    let job = &job;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|i| {
                let count = samples / workers + u64::from(i < samples % workers);
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i);
                    job(&mut rng, count)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Lattice of `width × height` storage sites, of which those with
/// `active(x, y)` take part, surrounded by a ring of permanently closed
/// sites so neighbour lookups need no bounds checks. Site (x, y) lives at
/// index (y + 1)·stride + x + 1. Active sites on the top row or next to an
/// inactive site in their row form the far boundary. Exploration state is a
/// bitset; cluster labels are kept only for the bottom row.
struct Lattice {
    stride: usize,
    bits: Vec<u64>,
    mask: Vec<u64>,
    far: Vec<u64>,
    seen: Vec<u64>,
    row_labels: Vec<u32>,
    clusters: u32,
    stack: Vec<u32>,
}

impl Lattice {
    fn new(width: usize, height: usize, active: impl Fn(usize, usize) -> bool) -> Self {
        let stride = width + 2;
        let sites = stride * (height + 2);
        let words = sites.div_ceil(64);
        let mut mask = vec![0u64; words];
        let mut far = vec![0u64; words];
        let on = |x: usize, y: usize| x < width && active(x, y);
        for y in 0..height {
            for x in 0..width {
                if !on(x, y) {
                    continue;
                }
                let i = (y + 1) * stride + x + 1;
                mask[i >> 6] |= 1 << (i & 63);
                if y == height - 1 || x == 0 || !on(x - 1, y) || !on(x + 1, y) {
                    far[i >> 6] |= 1 << (i & 63);
                }
            }
        }
        Self {
            stride,
            bits: vec![0; words],
            mask,
            far,
            seen: vec![0; words],
            row_labels: vec![0; stride],
            clusters: 0,
            stack: Vec::new(),
        }
    }

    #[inline]
    fn index(&self, x: usize, y: usize) -> usize {
        (y + 1) * self.stride + x + 1
    }

    #[inline]
    fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.stride - 1, idx / self.stride - 1)
    }

    fn resample(&mut self, rng: &mut ChaCha8Rng) {
        for (w, m) in self.bits.iter_mut().zip(&self.mask) {
            *w = rng.next_u64() & m;
        }
        self.seen.iter_mut().for_each(|w| *w = 0);
        self.clusters = 0;
    }

    #[inline]
    fn bit(words: &[u64], idx: usize) -> bool {
        (words[idx >> 6] >> (idx & 63)) & 1 == 1
    }

    #[inline]
    fn open(&self, idx: usize) -> bool {
        Self::bit(&self.bits, idx)
    }

    #[inline]
    fn is_far(&self, idx: usize) -> bool {
        Self::bit(&self.far, idx)
    }

    #[inline]
    fn seen(&self, idx: usize) -> bool {
        Self::bit(&self.seen, idx)
    }

    /// Cluster number of an explored bottom-row site `x`.
    #[inline]
    fn row_label(&self, x: usize) -> Option<u32> {
        let idx = self.index(x, 0);
        self.seen(idx).then(|| self.row_labels[idx - self.stride])
    }

    /// Flood-fills the open cluster of `start` as cluster number
    /// `self.clusters`. Calls `visit(idx)` for every site and stops early
    /// once it returns true.
    fn fill(&mut self, start: usize, mut visit: impl FnMut(&Self, usize) -> bool) {
        let label = self.clusters;
        self.clusters += 1;
        let s = self.stride;
        let row = s..2 * s;
        let mut stack = std::mem::take(&mut self.stack);
        stack.clear();
        self.seen[start >> 6] |= 1 << (start & 63);
        stack.push(start as u32);
        while let Some(idx) = stack.pop() {
            let idx = idx as usize;
            if row.contains(&idx) {
                self.row_labels[idx - s] = label;
            }
            if visit(self, idx) {
                break;
            }
            for n in [idx + 1, idx - 1, idx + s, idx - s, idx + s + 1, idx - s - 1] {
                let (w, b) = (n >> 6, 1u64 << (n & 63));
                if self.bits[w] & !self.seen[w] & b != 0 {
                    self.seen[w] |= b;
                    stack.push(n as u32);
                }
            }
        }
        self.stack = stack;
    }
}

/// Partition of the four segments induced by shared clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkPattern {
    All,
    P12_34,
    P14_23,
    P13_24,
    Other,
}

impl LinkPattern {
    fn slot(self) -> usize {
        match self {
            LinkPattern::All => 0,
            LinkPattern::P12_34 => 1,
            LinkPattern::P14_23 => 2,
            LinkPattern::P13_24 => 3,
            LinkPattern::Other => 4,
        }
    }
}

/// Classifies segments by the transitive closure of `linked(i, j)`.
pub fn classify(linked: impl Fn(usize, usize) -> bool) -> LinkPattern {
    let mut comp = [0usize, 1, 2, 3];
    for i in 0..4 {
        for j in i + 1..4 {
            if linked(i, j) {
                let (a, b) = (comp[i], comp[j]);
                for c in comp.iter_mut() {
                    if *c == b {
                        *c = a;
                    }
                }
            }
        }
    }
    let same = |i: usize, j: usize| comp[i] == comp[j];
    if same(0, 1) && same(0, 2) && same(0, 3) {
        LinkPattern::All
    } else if same(0, 1) && same(2, 3) && !same(0, 2) {
        LinkPattern::P12_34
    } else if same(0, 3) && same(1, 2) && !same(0, 1) {
        LinkPattern::P14_23
    } else if same(0, 2) && same(1, 3) && !same(0, 1) {
        LinkPattern::P13_24
    } else {
        LinkPattern::Other
    }
}

struct WorkerTally {
    tallies: Vec<McTally>,
    open_sites: Vec<u64>,
}

/// Runs the four-point experiment. Returns one tally per (point set,
/// half-width), point sets outermost.
pub fn run_box(cfg: &McConfig) -> Result<Vec<McTally>> {
    cfg.validate()?;
    let (storage, rows, width) = (cfg.storage_width(), cfg.rows(), cfg.width());
    let map = cfg.rectangle_map()?;
    let mut template = Vec::new();
    for set in &cfg.point_sets {
        let mut lambda = 0.0;
        for pts in &set.placements {
            lambda += map.lambda(pts)? / set.placements.len() as f64;
        }
        for &w in &cfg.halfwidths {
            template.push(McTally { lambda, box_width: cfg.box_width, halfwidth: w, ..Default::default() });
        }
    }
    let n_segments = template.len() * 4;
    let wmax = *cfg.halfwidths.iter().max().expect("validated");
    // Bottom-row sites covered by some segment.
    let mut seeds: Vec<usize> = cfg
        .point_sets
        .iter()
        .flat_map(|s| &s.placements)
        .flat_map(|pts| pts.iter().flat_map(move |&c| c - wmax..=c + wmax))
        .collect();
    seeds.sort_unstable();
    seeds.dedup();
    let wired = cfg.far_boundary == FarBoundary::Wired;
    let per_worker = run_workers(cfg.samples, cfg.seed, cfg.workers, |rng, count| {
        let mut lat = Lattice::new(storage, rows, |x, y| (y.div_ceil(2)..y.div_ceil(2) + width).contains(&x));
        let mut out = WorkerTally { tallies: template.clone(), open_sites: vec![0; n_segments] };
        let mut far: Vec<bool> = Vec::new();
        let mut seg_labels: [Vec<u32>; 4] = Default::default();
        let mut counts = vec![[0u64; 5]; template.len()];
        for _ in 0..count {
            lat.resample(rng);
            far.clear();
            for &x in &seeds {
                let idx = lat.index(x, 0);
                if lat.open(idx) && !lat.seen(idx) {
                    let mut touches = false;
                    lat.fill(idx, |l, i| {
                        touches |= l.is_far(i);
                        false
                    });
                    far.push(touches);
                }
            }
            counts.iter_mut().for_each(|c| *c = [0; 5]);
            for (p, set) in cfg.point_sets.iter().enumerate() {
                for pts in &set.placements {
                    for (wi, &w) in cfg.halfwidths.iter().enumerate() {
                        let slot = p * cfg.halfwidths.len() + wi;
                        for (k, &c) in pts.iter().enumerate() {
                            seg_labels[k].clear();
                            for x in c - w..=c + w {
                                if let Some(l) = lat.row_label(x) {
                                    if !seg_labels[k].contains(&l) {
                                        seg_labels[k].push(l);
                                    }
                                }
                            }
                            out.open_sites[slot * 4 + k] += seg_labels[k].len() as u64;
                        }
                        let touches_far = |k: usize| {
                            wired && seg_labels[k].iter().any(|&l| far[l as usize])
                        };
                        let pattern = classify(|i, j| {
                            seg_labels[i].iter().any(|l| seg_labels[j].contains(l))
                                || (touches_far(i) && touches_far(j))
                        });
                        counts[slot][pattern.slot()] += 1;
                    }
                }
            }
            for (t, c) in out.tallies.iter_mut().zip(&counts) {
                t.record(c);
            }
        }
        out
    });
    let mut tallies = template;
    let mut open_sites = vec![0u64; n_segments];
    for wt in per_worker {
        for (t, w) in tallies.iter_mut().zip(&wt.tallies) {
            t.merge(w);
        }
        for (o, w) in open_sites.iter_mut().zip(&wt.open_sites) {
            *o += w;
        }
    }
    if let Some(i) = open_sites.iter().position(|&n| n == 0) {
        return Err(Error::DegenerateGeometry(format!(
            "segment {} of tally {} never had an open site",
            i % 4 + 1,
            i / 4
        )));
    }
    Ok(tallies)
}

/// Boundary one-arm probabilities and the fitted exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct OneArmResult {
    pub radii: Vec<usize>,
    pub probability: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: u64,
    /// Minus the least-squares slope of log P against log R.
    pub exponent: f64,
}

/// Estimates P[the bottom-center site connects to lattice distance R] for
/// each R in `radii` (sup norm in lattice coordinates) and fits the decay
/// exponent.
pub fn one_arm(radii: &[usize], samples: u64, seed: u64, workers: usize) -> Result<OneArmResult> {
    if radii.len() < 4 || radii.windows(2).any(|r| r[1] <= r[0]) || radii[0] == 0 {
        return Err(Error::Misconfigured("need at least four increasing radii".into()));
    }
    if samples == 0 || workers == 0 {
        return Err(Error::Misconfigured("samples and workers must be positive".into()));
    }
    let rmax = *radii.last().expect("non-empty");
    let (width, height) = (2 * rmax + 1, rmax + 1);
    if (width * height).saturating_mul(BYTES_PER_SITE).saturating_mul(workers) > DEFAULT_MEMORY_BUDGET {
        return Err(Error::MemoryBudget { sites: width * height, budget_bytes: DEFAULT_MEMORY_BUDGET });
    }
    let per_worker = run_workers(samples, seed, workers, |rng, count| {
        let mut lat = Lattice::new(width, height, |_, _| true);
        let mut hits = vec![0u64; radii.len()];
        for _ in 0..count {
            lat.resample(rng);
            let origin = lat.index(rmax, 0);
            if !lat.open(origin) {
                continue;
            }
            let mut reach = 0usize;
            lat.fill(origin, |l, i| {
                let (x, y) = l.coords(i);
                reach = reach.max(x.abs_diff(rmax)).max(y);
                reach >= rmax
            });
            for (h, &r) in hits.iter_mut().zip(radii) {
                *h += u64::from(reach >= r);
            }
        }
        hits
    });
    let mut hits = vec![0u64; radii.len()];
    for w in per_worker {
        for (h, v) in hits.iter_mut().zip(w) {
            *h += v;
        }
    }
    if hits.contains(&0) {
        return Err(Error::DegenerateGeometry("no sample reached the largest radius".into()));
    }
    let probability: Vec<f64> = hits.iter().map(|&h| h as f64 / samples as f64).collect();
    let stderr = probability.iter().map(|&p| binomial_stderr(p, samples)).collect();
    let xs: Vec<f64> = radii.iter().map(|&r| (r as f64).ln()).collect();
    let ys: Vec<f64> = probability.iter().map(|p| p.ln()).collect();
    let exponent = -crate::closed_forms::fit_slope(&xs, &ys);
    Ok(OneArmResult { radii: radii.to_vec(), probability, stderr, samples, exponent })
}

/// Empirical crossing probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingResult {
    pub probability: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Left-right open crossing of an L×L rhombus (an L×L square in the
/// sheared coordinates). Self-duality fixes the exact value 1/2.
pub fn rhombus_crossing(side: usize, samples: u64, seed: u64, workers: usize) -> Result<CrossingResult> {
    if side < 2 || samples == 0 || workers == 0 {
        return Err(Error::Misconfigured("need side >= 2 and positive samples and workers".into()));
    }
    let per_worker = run_workers(samples, seed, workers, |rng, count| {
        let mut lat = Lattice::new(side, side, |_, _| true);
        let mut crossings = 0u64;
        for _ in 0..count {
            lat.resample(rng);
            let mut crossed = false;
            for y in 0..side {
                let idx = lat.index(0, y);
                if lat.open(idx) && !lat.seen(idx) {
                    lat.fill(idx, |l, i| {
                        crossed |= l.coords(i).0 == side - 1;
                        crossed
                    });
                    if crossed {
                        break;
                    }
                }
            }
            crossings += u64::from(crossed);
        }
        crossings
    });
    let crossings: u64 = per_worker.iter().sum();
    let probability = crossings as f64 / samples as f64;
    Ok(CrossingResult { probability, stderr: binomial_stderr(probability, samples), samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_cases() {
        assert_eq!(classify(|_, _| false), LinkPattern::Other);
        assert_eq!(classify(|_, _| true), LinkPattern::All);
        assert_eq!(classify(|i, j| (i, j) == (0, 1) || (i, j) == (2, 3)), LinkPattern::P12_34);
        assert_eq!(classify(|i, j| (i, j) == (0, 3) || (i, j) == (1, 2)), LinkPattern::P14_23);
        assert_eq!(classify(|i, j| (i, j) == (0, 2) || (i, j) == (1, 3)), LinkPattern::P13_24);
        assert_eq!(classify(|i, j| (i, j) == (0, 1) || (i, j) == (1, 2) || (i, j) == (2, 3)), LinkPattern::All);
    }

    #[test]
    fn placements_hit_conformal_lambda() {
        let cfg = McConfig::conformal(512, &[0.3, 0.5, 0.7], &[3], 128, 1, 1).unwrap();
        let map = cfg.rectangle_map().unwrap();
        for set in &cfg.point_sets {
            assert!(set.placements.len() > 1);
            for pts in &set.placements {
                assert!((map.lambda(pts).unwrap() - set.lambda).abs() < 2e-3);
            }
        }
    }

    #[test]
    fn small_spans_see_the_half_plane() {
        // Far from the sides and top, the box map is close to affine.
        let cfg = McConfig::conformal(512, &[0.5], &[1], 8, 1, 1).unwrap();
        let map = cfg.rectangle_map().unwrap();
        let pts = cfg.point_sets[0].placements[0];
        let naive = cross_ratio(pts[0] as f64, pts[1] as f64, pts[2] as f64, pts[3] as f64).unwrap();
        assert!((map.lambda(&pts).unwrap() - naive).abs() < 1e-3);
    }

    #[test]
    fn memory_budget_enforced() {
        let mut cfg = McConfig::conformal(64, &[0.5], &[2], 16, 10, 1).unwrap();
        cfg.memory_budget = 1000;
        assert!(matches!(run_box(&cfg), Err(Error::MemoryBudget { .. })));
    }
}
