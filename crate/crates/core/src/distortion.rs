//! Label distortion, mean-square distortion estimates and mapping statistics.
//!
//! The distortion between a sent and a decoded symbol is the absolute
//! difference of their labels read as integers.

use std::f64::consts::TAU;
use std::fmt::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{ChannelModel, Demodulator, ReceivedPoint};
use crate::geometry::{Constellation, MAX_SYMBOLS};
use crate::rng::{chunk_count, chunk_rng, chunk_span};
use crate::{Error, Result};

/// Largest alphabet accepted by [`exact_mse`].
pub const EXACT_MSE_LIMIT: usize = 16;

pub fn label_distortion(sent: u8, decoded: u8) -> Result<u8> {
    for l in [sent, decoded] {
        if l as usize >= MAX_SYMBOLS {
            return Err(Error::LabelOutOfRange(l as u32));
        }
    }
    Ok(sent.abs_diff(decoded))
}

/// Mean-square distortion with its spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionReport {
    /// Mean of `d²`, in squared label units.
    pub mse: f64,
    /// `√mse`, in label units.
    pub rms: f64,
    /// Half-width of the 95% confidence interval on `mse`. For quadrature
    /// results this is the integration error bound.
    pub half_width_95: f64,
    /// Monte Carlo sample count; 0 for quadrature results.
    pub n_samples: u64,
}

impl DistortionReport {
    /// Build from `Σd²` and `Σd⁴` over `n` samples.
    pub fn from_sums(sum_d2: u64, sum_d4: u64, n: u64) -> Self {
        assert!(n > 0, "empty sample");
        let rms = (sum_d2 as f64 / n as f64).sqrt();
        let half_width_95 = if n > 1 {
            // n·Σd⁴ − (Σd²)² is exact in u128
            let num = n as u128 * sum_d4 as u128 - (sum_d2 as u128) * (sum_d2 as u128);
            let var = num as f64 / (n as f64 * (n - 1) as f64);
            1.96 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        DistortionReport {
            mse: rms * rms,
            rms,
            half_width_95,
            n_samples: n,
        }
    }

    fn from_quadrature(mse: f64, error: f64) -> Self {
        let rms = mse.max(0.0).sqrt();
        DistortionReport {
            mse: rms * rms,
            rms,
            half_width_95: error.abs(),
            n_samples: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    d2: u64,
    d4: u64,
}

impl Sums {
    #[inline]
    fn add(&mut self, sent: u8, decoded: u8) {
        let d = sent.abs_diff(decoded) as u64;
        self.d2 += d * d;
        self.d4 += d * d * d * d;
    }

    fn merge(self, other: Sums) -> Sums {
        Sums {
            d2: self.d2 + other.d2,
            d4: self.d4 + other.d4,
        }
    }
}

/// Draw one simulated symbol: uniform label, then two unit normals.
#[inline]
fn draw<R: Rng>(rng: &mut R, m: u32) -> (u8, f64, f64) {
    let label = rng.random_range(0..m) as u8;
    let nx: f64 = StandardNormal.sample(rng);
    let ny: f64 = StandardNormal.sample(rng);
    (label, nx, ny)
}

#[inline]
fn received(clean: ReceivedPoint, sigma: f64, nx: f64, ny: f64) -> ReceivedPoint {
    ReceivedPoint::new(clean.i + sigma * nx, clean.q + sigma * ny)
}

fn clean_points(demod: &Demodulator, m: usize) -> Vec<ReceivedPoint> {
    (0..m as u8)
        .map(|l| demod.point(l).expect("labels are 0..M"))
        .collect()
}

/// Monte Carlo estimate of the mean-square label distortion.
///
/// Uniform random labels are transmitted and ML-demodulated. Samples are
/// generated in fixed chunks with independent streams and reduced with
/// integer sums, so the result does not depend on the worker count.
pub fn estimate_mse(
    constellation: &Constellation,
    model: &ChannelModel,
    n_symbols: u64,
    seed: u64,
) -> Result<DistortionReport> {
    if n_symbols == 0 {
        return Err(Error::Config("n_symbols must be at least 1".into()));
    }
    let n = n_symbols as usize;
    let m = constellation.size();
    let demod = Demodulator::indexed(constellation, model);
    let clean = clean_points(&demod, m);
    let sigma = model.noise_sigma(constellation);
    let sums = (0..chunk_count(n))
        .into_par_iter()
        .map(|c| {
            let (start, end) = chunk_span(c, n);
            let mut rng = chunk_rng(seed, c);
            let mut sums = Sums::default();
            for _ in start..end {
                let (label, nx, ny) = draw(&mut rng, m as u32);
                let decoded = demod.demodulate(received(clean[label as usize], sigma, nx, ny));
                sums.add(label, decoded);
            }
            sums
        })
        .reduce(Sums::default, Sums::merge);
    Ok(DistortionReport::from_sums(sums.d2, sums.d4, n_symbols))
}

/// Pre-drawn labels and unit noise for repeated MSE evaluations with a
/// frozen seed.
///
/// `bank.evaluate(c, model)` equals `estimate_mse(c, model, n, seed)` for
/// every constellation of the bank's alphabet size.
#[derive(Debug, Clone)]
pub struct SampleBank {
    alphabet: usize,
    labels: Vec<u8>,
    noise: Vec<(f64, f64)>,
}

impl SampleBank {
    pub fn new(alphabet: usize, n_symbols: u64, seed: u64) -> Result<Self> {
        if n_symbols == 0 {
            return Err(Error::Config("n_symbols must be at least 1".into()));
        }
        if alphabet == 0 || alphabet > MAX_SYMBOLS {
            return Err(Error::TooManySymbols {
                size: alphabet,
                limit: MAX_SYMBOLS,
            });
        }
        let n = n_symbols as usize;
        let mut labels = Vec::with_capacity(n);
        let mut noise = Vec::with_capacity(n);
        for c in 0..chunk_count(n) {
            let (start, end) = chunk_span(c, n);
            let mut rng = chunk_rng(seed, c);
            for _ in start..end {
                let (label, nx, ny) = draw(&mut rng, alphabet as u32);
                labels.push(label);
                noise.push((nx, ny));
            }
        }
        Ok(SampleBank {
            alphabet,
            labels,
            noise,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn evaluate(
        &self,
        constellation: &Constellation,
        model: &ChannelModel,
    ) -> Result<DistortionReport> {
        if constellation.size() != self.alphabet {
            return Err(Error::LengthMismatch(format!(
                "sample bank drawn for {} symbols, constellation has {}",
                self.alphabet,
                constellation.size()
            )));
        }
        let demod = Demodulator::indexed(constellation, model);
        let clean = clean_points(&demod, self.alphabet);
        let sigma = model.noise_sigma(constellation);
        let n = self.labels.len();
        let sums = (0..chunk_count(n))
            .into_par_iter()
            .map(|c| {
                let (start, end) = chunk_span(c, n);
                let mut sums = Sums::default();
                for (&label, &(nx, ny)) in
                    self.labels[start..end].iter().zip(&self.noise[start..end])
                {
                    let decoded = demod.demodulate(received(clean[label as usize], sigma, nx, ny));
                    sums.add(label, decoded);
                }
                sums
            })
            .reduce(Sums::default, Sums::merge);
        Ok(DistortionReport::from_sums(sums.d2, sums.d4, n as u64))
    }
}

/// Mean-square distortion by numerical integration of the noise density
/// over the ML decision regions.
///
/// Around each sent point the plane is swept in polar coordinates. Along a
/// ray the decision is the lower envelope of lines in the ray parameter, so
/// the radial integral is closed form; the angular integral uses adaptive
/// Simpson quadrature.
pub fn exact_mse(constellation: &Constellation, model: &ChannelModel) -> Result<DistortionReport> {
    let m = constellation.size();
    if m > EXACT_MSE_LIMIT {
        return Err(Error::TooManySymbols {
            size: m,
            limit: EXACT_MSE_LIMIT,
        });
    }
    let sigma = model.noise_sigma(constellation);
    if sigma == 0.0 {
        return Ok(DistortionReport::from_quadrature(0.0, 0.0));
    }
    let demod = Demodulator::indexed(constellation, model);
    let points = clean_points(&demod, m);
    let two_var = 2.0 * sigma * sigma;
    let mut total = 0.0;
    let mut error = 0.0;
    for sent in 0..m {
        let integrand = |phi: f64| ray_distortion(&points, sent, phi, two_var);
        let (value, err) = integrate(&integrand, 0.0, TAU, 1e-7 / m as f64, 64);
        total += value / TAU;
        error += err / TAU;
    }
    Ok(DistortionReport::from_quadrature(
        total / m as f64,
        error / m as f64,
    ))
}

/// `∫₀^∞ d² · density(t) · t dt` along direction `phi` from point `sent`,
/// without the `1/2π` angular factor.
fn ray_distortion(points: &[ReceivedPoint], sent: usize, phi: f64, two_var: f64) -> f64 {
    let (uy, ux) = phi.sin_cos();
    let s = points[sent];
    // ‖s + t·u − c_j‖² − t² = offset_j + t·slope_j
    let lines: Vec<(f64, f64)> = points
        .iter()
        .map(|c| {
            let (dx, dy) = (s.i - c.i, s.q - c.q);
            (dx * dx + dy * dy, 2.0 * (ux * dx + uy * dy))
        })
        .collect();
    let tail = |t: f64| (-t * t / two_var).exp();
    let mut current = sent;
    let mut t = 0.0;
    let mut acc = 0.0;
    loop {
        let (d0, b0) = lines[current];
        let mut next: Option<(f64, f64, usize)> = None;
        for (k, &(dk, bk)) in lines.iter().enumerate() {
            if bk >= b0 {
                continue;
            }
            let cross = ((dk - d0) / (b0 - bk)).max(t);
            let better = match next {
                None => true,
                Some((ct, cb, _)) => cross < ct || (cross == ct && bk < cb),
            };
            if better {
                next = Some((cross, bk, k));
            }
        }
        let d = sent.abs_diff(current) as f64;
        match next {
            Some((cross, _, k)) => {
                acc += d * d * (tail(t) - tail(cross));
                t = cross;
                current = k;
            }
            None => {
                acc += d * d * tail(t);
                return acc;
            }
        }
    }
}

/// Adaptive Simpson over `pieces` equal sub-intervals. Returns the value and
/// the summed Richardson error estimate.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, pieces: usize) -> (f64, f64) {
    let h = (b - a) / pieces as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    for k in 0..pieces {
        let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        let (v, e) = simpson(f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 40);
        value += v;
        error += e;
    }
    (value, error)
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return (left + right + delta / 15.0, delta.abs() / 15.0);
    }
    let (lv, le) = simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1);
    let (rv, re) = simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
    (lv + rv, le + re)
}

/// How cross-ring neighbours are paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborMode {
    /// Each symbol of the outer ring with its angularly nearest symbol on the
    /// inner ring, averaged over the outer ring.
    #[default]
    Directed,
    /// Union of nearest-neighbour pairs found from both rings, each
    /// unordered pair counted once.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntraRingEntry {
    pub ring: usize,
    pub name: String,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterRingEntry {
    /// The outer of the two rings; its partner is `ring - 1`.
    pub ring: usize,
    pub name: String,
    pub mean: f64,
}

/// Mean label distortion between neighbouring symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingTables {
    pub intra_ring: Vec<IntraRingEntry>,
    pub inter_ring: Vec<InterRingEntry>,
}

impl MappingTables {
    /// Comma-separated `table,rings,mean_distortion` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("table,rings,mean_distortion\n");
        for e in &self.intra_ring {
            writeln!(out, "intra,{},{}", e.name, e.mean).unwrap();
        }
        for e in &self.inter_ring {
            writeln!(out, "inter,{},{}", e.name, e.mean).unwrap();
        }
        out
    }
}

/// Display name of a ring.
pub fn ring_name(ring: usize, rings: usize) -> String {
    match ring {
        0 if rings > 1 => "Inner ring".into(),
        r if r + 1 == rings && rings > 1 => "Outer ring".into(),
        r => format!("Ring {}", r + 1),
    }
}

pub fn mapping_tables(constellation: &Constellation) -> MappingTables {
    mapping_tables_with(constellation, NeighborMode::default())
}

pub fn mapping_tables_with(constellation: &Constellation, mode: NeighborMode) -> MappingTables {
    let layout = constellation.layout();
    let rings = layout.rings();
    // (angle, label, slot) per ring, in angular order
    let ring_symbols: Vec<Vec<(f64, u8)>> = (0..rings)
        .map(|r| {
            let mut v: Vec<(f64, u8)> = constellation
                .symbols()
                .filter(|s| s.ring == r)
                .map(|s| (s.angle, s.label))
                .collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v
        })
        .collect();
    let intra_ring = ring_symbols
        .iter()
        .enumerate()
        .map(|(r, syms)| {
            let n = syms.len();
            let pairs: Vec<(u8, u8)> = match n {
                0 | 1 => Vec::new(),
                2 => vec![(syms[0].1, syms[1].1)],
                _ => (0..n).map(|k| (syms[k].1, syms[(k + 1) % n].1)).collect(),
            };
            IntraRingEntry {
                ring: r,
                name: ring_name(r, rings),
                mean: mean_distortion(&pairs),
            }
        })
        .collect();
    let inter_ring = (1..rings)
        .map(|r| {
            let (inner, outer) = (&ring_symbols[r - 1], &ring_symbols[r]);
            let mut pairs: Vec<(usize, usize)> = outer
                .iter()
                .enumerate()
                .map(|(o, s)| (nearest(inner, s.0), o))
                .collect();
            if mode == NeighborMode::Symmetric {
                pairs.extend(
                    inner
                        .iter()
                        .enumerate()
                        .map(|(i, s)| (i, nearest(outer, s.0))),
                );
                pairs.sort_unstable();
                pairs.dedup();
            }
            let labels: Vec<(u8, u8)> = pairs
                .iter()
                .map(|&(i, o)| (inner[i].1, outer[o].1))
                .collect();
            InterRingEntry {
                ring: r,
                name: format!("{} vs {}", ring_name(r, rings), ring_name(r - 1, rings)),
                mean: mean_distortion(&labels),
            }
        })
        .collect();
    MappingTables {
        intra_ring,
        inter_ring,
    }
}

/// Index of the angularly nearest entry; ties go to the earlier entry.
fn nearest(ring: &[(f64, u8)], angle: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, &(a, _)) in ring.iter().enumerate() {
        let d = (a - angle).rem_euclid(TAU);
        let d = d.min(TAU - d);
        if d < best_d - 1e-12 {
            best_d = d;
            best = k;
        }
    }
    best
}

fn mean_distortion(pairs: &[(u8, u8)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs
        .iter()
        .map(|&(a, b)| a.abs_diff(b) as f64)
        .sum::<f64>()
        / pairs.len() as f64
}

/// Comma-separated MSE-vs-SNR rows.
pub fn reports_to_csv(rows: &[(f64, DistortionReport)]) -> String {
    let mut out = String::from("snr_db,mse,rms,half_width_95,n_samples\n");
    for (snr, r) in rows {
        writeln!(
            out,
            "{snr},{},{},{},{}",
            r.mse, r.rms, r.half_width_95, r.n_samples
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Hpa;
    use crate::geometry::{build_uniform, BundledMapping, Mapping, RingLayout, SymmetryClass};

    fn ring(n: usize) -> Constellation {
        let l = RingLayout::new(vec![n]).unwrap();
        build_uniform(
            &l,
            &[1.0],
            &Mapping::identity(l.clone()),
            SymmetryClass::None,
        )
        .unwrap()
    }

    fn q_function(x: f64) -> f64 {
        0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
    }

    #[test]
    fn distortion_basics() {
        assert_eq!(label_distortion(7, 7).unwrap(), 0);
        assert_eq!(label_distortion(0, 63).unwrap(), 63);
        assert_eq!(label_distortion(63, 0).unwrap(), 63);
        assert!(label_distortion(64, 0).is_err());
    }

    #[test]
    fn report_from_sums() {
        // d values 0, 2 → d² 0, 4; mean 2; sample var of d² = 8
        let r = DistortionReport::from_sums(4, 16, 2);
        assert_eq!(r.mse, 2.0f64.sqrt() * 2.0f64.sqrt());
        assert_eq!(r.rms * r.rms, r.mse);
        assert!((r.half_width_95 - 1.96 * (8.0f64 / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn noiseless_mse_is_zero() {
        let m = BundledMapping::Proposed4_12_16_32.mapping();
        let c = build_uniform(
            m.layout(),
            &[0.25, 0.5, 0.75, 1.0],
            &m,
            SymmetryClass::Vertical,
        )
        .unwrap();
        let r = estimate_mse(&c, &ChannelModel::noiseless(Hpa::Ideal), 20_000, 3).unwrap();
        assert_eq!(r.mse, 0.0);
        assert_eq!(r.half_width_95, 0.0);
    }

    #[test]
    fn bank_matches_estimate() {
        let m = BundledMapping::Ccsds4_12_20_28.mapping();
        let c = build_uniform(
            m.layout(),
            &[0.25, 0.5, 0.75, 1.0],
            &m,
            SymmetryClass::Quadrant,
        )
        .unwrap();
        let model = ChannelModel::new(Hpa::Ideal, 10.0).unwrap();
        let bank = SampleBank::new(64, 30_000, 17).unwrap();
        assert_eq!(
            bank.evaluate(&c, &model).unwrap(),
            estimate_mse(&c, &model, 30_000, 17).unwrap()
        );
        assert!(bank.evaluate(&ring(4), &model).is_err());
    }

    #[test]
    fn exact_antipodal_matches_q_function() {
        let c = ring(2);
        for snr_db in [0.0, 3.0, 6.0] {
            let model = ChannelModel::new(Hpa::Ideal, snr_db).unwrap();
            let snr = 10f64.powf(snr_db / 10.0);
            let expected = q_function((2.0 * snr).sqrt());
            let r = exact_mse(&c, &model).unwrap();
            assert!(
                (r.mse - expected).abs() < 1e-6,
                "{snr_db}: {} vs {expected}",
                r.mse
            );
            assert!(r.half_width_95 < 1e-4);
        }
    }

    #[test]
    fn exact_qpsk_matches_closed_form() {
        // identity labels 0..3 around the ring; the error events are
        // independent per axis with p = Q(√SNR)
        let c = ring(4);
        let model = ChannelModel::new(Hpa::Ideal, 4.0).unwrap();
        let p = q_function(10f64.powf(0.4).sqrt());
        // neighbours at label distance 1 or 3, diagonal at distance 2
        let mut expected = 0.0;
        for sent in 0..4i32 {
            let adjacent = [(sent + 1) % 4, (sent + 3) % 4];
            let opposite = (sent + 2) % 4;
            for a in adjacent {
                expected += p * (1.0 - p) * ((sent - a) as f64).powi(2);
            }
            expected += p * p * ((sent - opposite) as f64).powi(2);
        }
        expected /= 4.0;
        let r = exact_mse(&c, &model).unwrap();
        assert!((r.mse - expected).abs() < 1e-6, "{} vs {expected}", r.mse);
    }

    #[test]
    fn exact_rejects_large_alphabets() {
        let m = BundledMapping::Ccsds4_12_20_28.mapping();
        let c = build_uniform(
            m.layout(),
            &[0.25, 0.5, 0.75, 1.0],
            &m,
            SymmetryClass::Quadrant,
        )
        .unwrap();
        let model = ChannelModel::new(Hpa::Ideal, 10.0).unwrap();
        assert!(matches!(
            exact_mse(&c, &model),
            Err(Error::TooManySymbols { .. })
        ));
        assert_eq!(
            exact_mse(&ring(8), &ChannelModel::noiseless(Hpa::Ideal))
                .unwrap()
                .mse,
            0.0
        );
    }

    #[test]
    fn tables_for_small_rings() {
        let t = mapping_tables(&ring(2));
        assert_eq!(t.intra_ring[0].mean, 1.0);
        assert_eq!(t.intra_ring[0].name, "Ring 1");
        assert!(t.inter_ring.is_empty());
        assert_eq!(mapping_tables(&ring(1)).intra_ring[0].mean, 0.0);
        // 0-1-2-3 around the ring: |0-1|+|1-2|+|2-3|+|3-0| = 6
        assert_eq!(mapping_tables(&ring(4)).intra_ring[0].mean, 1.5);
    }

    #[test]
    fn ccsds_reference_entries() {
        let m = BundledMapping::Ccsds4_12_20_28.mapping();
        let c = build_uniform(
            m.layout(),
            &[0.25, 0.5, 0.75, 1.0],
            &m,
            SymmetryClass::Quadrant,
        )
        .unwrap();
        let t = mapping_tables(&c);
        assert_eq!(t.intra_ring[0].name, "Inner ring");
        assert_eq!(t.intra_ring[0].mean, 24.0);
        assert_eq!(t.inter_ring[0].name, "Ring 2 vs Inner ring");
        assert_eq!(t.inter_ring[0].mean, 2.0);
        assert_eq!(t.inter_ring[2].name, "Outer ring vs Ring 3");
        let csv = t.to_csv();
        assert!(csv.contains("intra,Inner ring,24\n"), "{csv}");
        let sym = mapping_tables_with(&c, NeighborMode::Symmetric);
        assert!(sym.inter_ring.iter().all(|e| e.mean >= 0.0));
    }

    #[test]
    fn csv_layout() {
        let r = DistortionReport::from_sums(10, 50, 4);
        let csv = reports_to_csv(&[(10.0, r)]);
        assert!(csv.starts_with("snr_db,mse,rms,half_width_95,n_samples\n10,"));
        assert!(csv.trim_end().ends_with(",4"));
    }
}
