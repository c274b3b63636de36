//! Memoryless satellite channel: Saleh AM/AM amplifier, AWGN, ML detection.
//!
//! SNR is `E_s/N_0`, with `E_s` the mean energy of the post-amplifier
//! constellation under equiprobable symbols. Noise has variance `N_0/2` per
//! real dimension.

use std::fmt;

use rand_distr::{Distribution, StandardNormal};

use crate::geometry::Constellation;
use crate::rng::{chunk_count, chunk_rng, chunk_span};
use crate::{Error, Result};

/// Saleh amplitude-compression constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SalehParams {
    alpha: f64,
    beta: f64,
}

impl SalehParams {
    pub const DEFAULT_ALPHA: f64 = 2.1587;
    pub const DEFAULT_BETA: f64 = 1.1517;

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!(
                "Saleh parameters must be positive, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(SalehParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Input amplitude of maximum output, `1/√β`.
    pub fn saturation_input(&self) -> f64 {
        1.0 / self.beta.sqrt()
    }

    /// Maximum output amplitude, `α/(2√β)`.
    pub fn saturation_output(&self) -> f64 {
        self.alpha / (2.0 * self.beta.sqrt())
    }
}

impl Default for SalehParams {
    fn default() -> Self {
        SalehParams {
            alpha: Self::DEFAULT_ALPHA,
            beta: Self::DEFAULT_BETA,
        }
    }
}

/// Saleh AM/AM curve `αρ / (1 + βρ²)`.
pub fn saleh_am_am(rho: f64, params: SalehParams) -> Result<f64> {
    if rho < 0.0 || rho.is_nan() {
        return Err(Error::NegativeAmplitude(rho));
    }
    Ok(params.alpha * rho / (1.0 + params.beta * rho * rho))
}

/// High-power amplifier model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Hpa {
    Saleh(SalehParams),
    #[default]
    Ideal,
}

impl Hpa {
    pub fn name(&self) -> &'static str {
        match self {
            Hpa::Saleh(_) => "saleh",
            Hpa::Ideal => "ideal",
        }
    }

    /// `saleh` (default constants) or `ideal`.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "saleh" => Some(Hpa::Saleh(SalehParams::default())),
            "ideal" => Some(Hpa::Ideal),
            _ => None,
        }
    }

    fn amplitude(&self, rho: f64) -> f64 {
        match self {
            Hpa::Saleh(p) => saleh_am_am(rho, *p).expect("constellation amplitudes are positive"),
            Hpa::Ideal => rho,
        }
    }
}

impl fmt::Display for Hpa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Amplifier plus noise level. `snr_db = +∞` disables noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    hpa: Hpa,
    snr_db: f64,
}

impl ChannelModel {
    pub fn new(hpa: Hpa, snr_db: f64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("invalid SNR {snr_db} dB")));
        }
        Ok(ChannelModel { hpa, snr_db })
    }

    pub fn noiseless(hpa: Hpa) -> Self {
        ChannelModel {
            hpa,
            snr_db: f64::INFINITY,
        }
    }

    pub fn hpa(&self) -> Hpa {
        self.hpa
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    /// Per-dimension noise standard deviation `√(N_0/2)` for a constellation.
    pub fn noise_sigma(&self, constellation: &Constellation) -> f64 {
        if self.is_noiseless() {
            return 0.0;
        }
        let points = apply_hpa(constellation, self);
        let es = points.iter().map(|p| p.i * p.i + p.q * p.q).sum::<f64>() / points.len() as f64;
        let n0 = es * 10f64.powf(-self.snr_db / 10.0);
        (n0 / 2.0).sqrt()
    }
}

/// Complex baseband sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReceivedPoint {
    pub i: f64,
    pub q: f64,
}

impl ReceivedPoint {
    pub fn new(i: f64, q: f64) -> Self {
        ReceivedPoint { i, q }
    }
}

/// Noiseless post-amplifier points in global slot order.
pub fn apply_hpa(constellation: &Constellation, model: &ChannelModel) -> Vec<ReceivedPoint> {
    constellation
        .symbols()
        .map(|s| {
            let a = model.hpa.amplitude(s.amplitude);
            let (sin, cos) = s.angle.sin_cos();
            ReceivedPoint::new(a * cos, a * sin)
        })
        .collect()
}

/// Minimum-distance detector over the post-amplifier constellation.
///
/// Points are scanned in label order with a strict comparison, so exact ties
/// resolve to the smallest label. [`Demodulator::indexed`] adds a lookup grid
/// that returns the same decisions faster.
#[derive(Debug, Clone)]
pub struct Demodulator {
    xs: Vec<f64>,
    ys: Vec<f64>,
    labels: Vec<u8>,
    grid: Option<DecisionGrid>,
}

impl Demodulator {
    pub fn new(constellation: &Constellation, model: &ChannelModel) -> Self {
        let points = apply_hpa(constellation, model);
        let mapping = constellation.mapping();
        let mut by_label: Vec<(u8, ReceivedPoint)> =
            mapping.labels().iter().copied().zip(points).collect();
        by_label.sort_by_key(|&(label, _)| label);
        Demodulator {
            xs: by_label.iter().map(|(_, p)| p.i).collect(),
            ys: by_label.iter().map(|(_, p)| p.q).collect(),
            labels: by_label.iter().map(|&(l, _)| l).collect(),
            grid: None,
        }
    }

    /// Detector with a precomputed decision grid, for bulk use.
    pub fn indexed(constellation: &Constellation, model: &ChannelModel) -> Self {
        let mut d = Demodulator::new(constellation, model);
        d.grid = Some(DecisionGrid::build(&d.xs, &d.ys, GRID_CELLS));
        d
    }

    /// Noiseless point of `label`.
    pub fn point(&self, label: u8) -> Option<ReceivedPoint> {
        let k = self.labels.binary_search(&label).ok()?;
        Some(ReceivedPoint::new(self.xs[k], self.ys[k]))
    }

    #[inline]
    pub fn demodulate(&self, point: ReceivedPoint) -> u8 {
        let k = match &self.grid {
            Some(grid) => match grid.lookup(point) {
                Lookup::Decided(k) => k,
                Lookup::Candidates(ks) => self.scan(point, ks.iter().map(|&k| k as usize)),
                Lookup::Outside => self.scan(point, 0..self.xs.len()),
            },
            None => self.scan(point, 0..self.xs.len()),
        };
        self.labels[k]
    }

    #[inline]
    fn scan(&self, point: ReceivedPoint, candidates: impl Iterator<Item = usize>) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for k in candidates {
            let dx = point.i - self.xs[k];
            let dy = point.q - self.ys[k];
            let d = dx * dx + dy * dy;
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }
}

const GRID_CELLS: usize = 32;
const UNDECIDED: u8 = u8::MAX;

enum Lookup<'a> {
    Decided(usize),
    Candidates(&'a [u8]),
    Outside,
}

/// Square grid over the constellation. A cell stores its nearest point when
/// that point is strictly nearest everywhere in the cell; otherwise it lists
/// every point that can be nearest somewhere in the cell, in label order.
#[derive(Debug, Clone)]
struct DecisionGrid {
    origin: f64,
    inv_cell: f64,
    cells: usize,
    decided: Vec<u8>,
    offsets: Vec<u32>,
    candidates: Vec<u8>,
}

impl DecisionGrid {
    fn build(xs: &[f64], ys: &[f64], cells: usize) -> Self {
        let reach = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| x.abs().max(y.abs()))
            .fold(0.0, f64::max)
            * 1.25
            + 1e-3;
        let cell = 2.0 * reach / cells as f64;
        // half diagonal plus a margin that absorbs rounding in the tests below
        let slack = cell * std::f64::consts::SQRT_2 + 1e-9;
        let mut decided = Vec::with_capacity(cells * cells);
        let mut offsets = Vec::with_capacity(cells * cells + 1);
        let mut candidates = Vec::new();
        let mut dist = vec![0.0; xs.len()];
        for row in 0..cells {
            let cy = -reach + (row as f64 + 0.5) * cell;
            for col in 0..cells {
                let cx = -reach + (col as f64 + 0.5) * cell;
                for (k, d) in dist.iter_mut().enumerate() {
                    let (dx, dy) = (cx - xs[k], cy - ys[k]);
                    *d = dx * dx + dy * dy;
                }
                let nearest =
                    (1..dist.len()).fold(0, |best, k| if dist[k] < dist[best] { k } else { best });
                offsets.push(candidates.len() as u32);
                // compare squared distances against (d_nearest + slack)²
                let limit = (dist[nearest].sqrt() + slack).powi(2);
                let rivals = dist.iter().filter(|&&d| d <= limit).count();
                if rivals == 1 {
                    decided.push(nearest as u8);
                } else {
                    decided.push(UNDECIDED);
                    candidates.extend(
                        dist.iter()
                            .enumerate()
                            .filter(|(_, &d)| d <= limit)
                            .map(|(k, _)| k as u8),
                    );
                }
            }
        }
        offsets.push(candidates.len() as u32);
        DecisionGrid {
            origin: -reach,
            inv_cell: 1.0 / cell,
            cells,
            decided,
            offsets,
            candidates,
        }
    }

    #[inline]
    fn lookup(&self, p: ReceivedPoint) -> Lookup<'_> {
        let col = (p.i - self.origin) * self.inv_cell;
        let row = (p.q - self.origin) * self.inv_cell;
        let n = self.cells as f64;
        if !(col >= 0.0 && col < n && row >= 0.0 && row < n) {
            return Lookup::Outside;
        }
        let cell = row as usize * self.cells + col as usize;
        match self.decided[cell] {
            UNDECIDED => {
                let (a, b) = (self.offsets[cell] as usize, self.offsets[cell + 1] as usize);
                Lookup::Candidates(&self.candidates[a..b])
            }
            k => Lookup::Decided(k as usize),
        }
    }
}

/// One-off ML decision. Build a [`Demodulator`] for repeated use.
pub fn ml_demodulate(
    point: ReceivedPoint,
    constellation: &Constellation,
    model: &ChannelModel,
) -> u8 {
    Demodulator::new(constellation, model).demodulate(point)
}

/// Modulate, amplify and add noise. Symbol `k` draws its noise from the
/// seeded stream of the chunk containing `k`.
pub fn transmit(
    labels: &[u8],
    constellation: &Constellation,
    model: &ChannelModel,
    seed: u64,
) -> Result<Vec<ReceivedPoint>> {
    let demod = Demodulator::new(constellation, model);
    let clean = labels
        .iter()
        .map(|&l| demod.point(l).ok_or(Error::UnknownLabel(l)))
        .collect::<Result<Vec<_>>>()?;
    let sigma = model.noise_sigma(constellation);
    if sigma == 0.0 {
        return Ok(clean);
    }
    let mut out = clean;
    for c in 0..chunk_count(out.len()) {
        let (start, end) = chunk_span(c, out.len());
        let mut rng = chunk_rng(seed, c);
        for p in &mut out[start..end] {
            let nx: f64 = StandardNormal.sample(&mut rng);
            let ny: f64 = StandardNormal.sample(&mut rng);
            p.i += sigma * nx;
            p.q += sigma * ny;
        }
    }
    Ok(out)
}
