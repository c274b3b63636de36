//! Symmetry-folded gene vectors.
//!
//! A chromosome holds the `R - 1` inner ring radii (the outer radius is pinned
//! to 1) followed by one angle per *primary* slot, ring by ring. Primary slots
//! are the slots whose uniform angle lies in the symmetry sector; every other
//! slot is a mirror image of a primary slot:
//!
//! | symmetry | sector          | images of a sector angle θ   |
//! |----------|-----------------|------------------------------|
//! | quadrant | `[0, π/2)`      | θ, π−θ, π+θ, 2π−θ            |
//! | vertical | `[−π/2, π/2)`   | θ, π−θ                       |
//! | none     | `[0, 2π)`       | θ                            |
//!
//! Which slot receives which image is fixed by the uniform geometry, so a gene
//! never migrates between rings or changes the label it drives.
//!
//! Negative vertical genes are kept on the grid `{a − 2π}` of representable
//! angles `a`, so that decoding (which stores `θ + 2π`) and encoding
//! (which subtracts `2π` again) round-trip bit for bit. [`repair`] snaps genes
//! onto that grid; the displacement is below one ulp of 2π.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use super::{Constellation, Mapping, RingLayout, SymmetryClass, SYMMETRY_TOLERANCE};
use crate::{Error, Result};

/// Lower bound for radius genes and the clearance below the outer ring.
pub const RADIUS_MARGIN: f64 = 1e-3;
/// Minimum gap between consecutive radius genes.
pub const MIN_RADIUS_GAP: f64 = 1e-3;
/// Minimum angular separation between symbols on the same ring.
pub const MIN_ANGLE_SEPARATION: f64 = 1e-3;

const FEASIBILITY_TOLERANCE: f64 = 1e-12;

/// What a gene position controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneKind {
    /// Radius of an inner ring.
    Radius(usize),
    /// Angle of a primary slot (ring-local slot index).
    Angle { ring: usize, slot: usize },
}

/// Binds gene positions to radii and primary slots for one layout and
/// symmetry class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneLayout {
    layout: RingLayout,
    symmetry: SymmetryClass,
    primaries: Vec<Vec<usize>>,
    angle_start: Vec<usize>,
    len: usize,
}

impl GeneLayout {
    pub fn new(layout: RingLayout, symmetry: SymmetryClass) -> Result<Self> {
        symmetry.check_layout(&layout)?;
        let primaries: Vec<Vec<usize>> = layout
            .counts()
            .iter()
            .map(|&n| (0..n).filter(|&s| is_primary(symmetry, n, s)).collect())
            .collect();
        let mut angle_start = Vec::with_capacity(layout.rings());
        let mut next = layout.rings() - 1;
        for p in &primaries {
            angle_start.push(next);
            next += p.len();
        }
        Ok(GeneLayout {
            layout,
            symmetry,
            primaries,
            angle_start,
            len: next,
        })
    }

    pub fn layout(&self) -> &RingLayout {
        &self.layout
    }

    pub fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }

    /// Total gene count.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn radius_genes(&self) -> usize {
        self.layout.rings() - 1
    }

    /// Gene index range holding the angles of `ring`.
    pub fn angle_genes(&self, ring: usize) -> std::ops::Range<usize> {
        let start = self.angle_start[ring];
        start..start + self.primaries[ring].len()
    }

    /// Primary slots of `ring`, in gene order.
    pub fn primaries(&self, ring: usize) -> &[usize] {
        &self.primaries[ring]
    }

    pub fn kind(&self, gene: usize) -> GeneKind {
        if gene < self.radius_genes() {
            return GeneKind::Radius(gene);
        }
        let ring = self.angle_start.partition_point(|&s| s <= gene) - 1;
        GeneKind::Angle {
            ring,
            slot: self.primaries[ring][gene - self.angle_start[ring]],
        }
    }

    /// `[lo, hi)` range a gene of the given kind is drawn from.
    pub fn gene_range(&self, kind: GeneKind) -> (f64, f64) {
        match kind {
            GeneKind::Radius(_) => (0.0, 1.0),
            GeneKind::Angle { .. } => self.symmetry.sector(),
        }
    }

    /// Ring-local slots and absolute angles generated by sector angle `theta`
    /// placed at primary slot `p` of an `n`-symbol ring.
    fn images(&self, n: usize, p: usize, theta: f64) -> Vec<(usize, f64)> {
        match self.symmetry {
            SymmetryClass::Quadrant => vec![
                (p, theta),
                (pi_minus(n, p), PI - theta),
                (pi_plus(n, p), PI + theta),
                (two_pi_minus(n, p), wrap(TAU - theta)),
            ],
            SymmetryClass::Vertical => vec![
                (p, if theta < 0.0 { theta + TAU } else { theta }),
                (pi_minus(n, p), PI - theta),
            ],
            SymmetryClass::None => vec![(p, theta)],
        }
    }
}

// Uniform slot s of an n-ring sits at (2s + o)π/n with o = 1 when n % 4 == 0,
// else 0. The helpers below solve for the slot at the reflected angle.
fn phase_units(n: usize) -> usize {
    usize::from(n.is_multiple_of(4))
}

fn is_primary(symmetry: SymmetryClass, n: usize, s: usize) -> bool {
    let twice = 2 * (2 * s + phase_units(n));
    match symmetry {
        SymmetryClass::Quadrant => twice < n,
        SymmetryClass::Vertical => twice < n || twice >= 3 * n,
        SymmetryClass::None => true,
    }
}

fn pi_minus(n: usize, s: usize) -> usize {
    (n + n / 2 - s - phase_units(n)) % n
}

fn pi_plus(n: usize, s: usize) -> usize {
    (s + n / 2) % n
}

fn two_pi_minus(n: usize, s: usize) -> usize {
    (2 * n - s - phase_units(n)) % n
}

fn wrap(a: f64) -> f64 {
    if a >= TAU {
        a - TAU
    } else {
        a
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Flat gene vector plus the layout that gives it meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    genes: Vec<f64>,
    layout: Arc<GeneLayout>,
}

impl Chromosome {
    pub fn new(genes: Vec<f64>, layout: Arc<GeneLayout>) -> Result<Self> {
        if genes.len() != layout.len() {
            return Err(Error::Chromosome(format!(
                "{} genes, layout {} / {} needs {}",
                genes.len(),
                layout.layout(),
                layout.symmetry(),
                layout.len()
            )));
        }
        Ok(Chromosome { genes, layout })
    }

    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn gene_layout(&self) -> &Arc<GeneLayout> {
        &self.layout
    }

    /// Same layout, new genes.
    pub fn with_genes(&self, genes: Vec<f64>) -> Result<Self> {
        Chromosome::new(genes, Arc::clone(&self.layout))
    }

    /// Whether every gene group already satisfies the bounds [`repair`]
    /// enforces.
    pub fn is_feasible(&self) -> bool {
        let gl = &*self.layout;
        radius_group_feasible(&self.genes[..gl.radius_genes()])
            && (0..gl.layout().rings())
                .all(|ring| angle_group_feasible(gl.symmetry(), &self.genes[gl.angle_genes(ring)]))
    }
}

/// Fold a symmetric constellation into its gene vector.
///
/// Mirror images must match within [`SYMMETRY_TOLERANCE`].
pub fn encode(constellation: &Constellation) -> Result<Chromosome> {
    encode_with_tolerance(constellation, SYMMETRY_TOLERANCE)
}

pub(crate) fn encode_with_tolerance(
    constellation: &Constellation,
    tolerance: f64,
) -> Result<Chromosome> {
    let layout = constellation.layout();
    let symmetry = constellation.symmetry();
    let gl = GeneLayout::new(layout.clone(), symmetry)?;
    let angles = constellation.angles();
    let broken = |detail: String| Error::Symmetry {
        symmetry: symmetry.name(),
        detail,
    };
    let mut genes = constellation.radii()[..layout.rings() - 1].to_vec();
    for ring in 0..layout.rings() {
        let n = layout.counts()[ring];
        for &p in gl.primaries(ring) {
            let a = angles[layout.index(ring, p)];
            let theta = match symmetry {
                SymmetryClass::Quadrant if a < PI / 2.0 => a,
                SymmetryClass::Vertical if a < PI / 2.0 => a,
                SymmetryClass::Vertical if a >= 1.5 * PI => a - TAU,
                SymmetryClass::None => a,
                _ => {
                    return Err(broken(format!(
                        "primary slot ({ring}, {p}) at {a} rad is outside the sector"
                    )))
                }
            };
            for (slot, expected) in gl.images(n, p, theta) {
                let actual = angles[layout.index(ring, slot)];
                if circular_distance(actual, expected) > tolerance {
                    return Err(broken(format!(
                        "slot ({ring}, {slot}) at {actual} rad, mirror image of ({ring}, {p}) expects {expected}"
                    )));
                }
            }
            genes.push(theta);
        }
    }
    Chromosome::new(genes, Arc::new(gl))
}

/// Unfold a gene vector into a constellation carrying `mapping`'s labels.
pub fn decode(chromosome: &Chromosome, mapping: &Mapping) -> Result<Constellation> {
    let gl = chromosome.gene_layout();
    let layout = gl.layout();
    if mapping.layout() != layout {
        return Err(Error::Mapping(format!(
            "mapping is for layout {}, chromosome for {layout}",
            mapping.layout()
        )));
    }
    let genes = chromosome.genes();
    let mut radii = genes[..gl.radius_genes()].to_vec();
    radii.push(1.0);
    let (lo, hi) = gl.symmetry().sector();
    let mut angles = vec![f64::NAN; layout.size()];
    for ring in 0..layout.rings() {
        let n = layout.counts()[ring];
        for (&p, &theta) in gl.primaries(ring).iter().zip(&genes[gl.angle_genes(ring)]) {
            if !(lo..hi).contains(&theta) {
                return Err(Error::Chromosome(format!(
                    "angle gene {theta} for slot ({ring}, {p}) outside [{lo}, {hi})"
                )));
            }
            for (slot, a) in gl.images(n, p, theta) {
                angles[layout.index(ring, slot)] = a;
            }
        }
    }
    Constellation::new(radii, angles, mapping.clone(), gl.symmetry())
}

/// Project an arbitrary gene vector onto the feasible set.
///
/// Radius genes are clamped into `[ε, 1 − ε]`, sorted, and spread to a gap of
/// at least `1e-3`. Angle genes are wrapped into their sector, kept half a
/// separation away from the sector edges (so mirror images stay apart), and
/// spread to `1e-3` rad within each ring by the least-squares displacement.
/// Groups that already satisfy their bounds are returned untouched, which
/// makes the function idempotent.
pub fn repair(chromosome: &Chromosome) -> Chromosome {
    let gl = Arc::clone(chromosome.gene_layout());
    let mut genes = chromosome.genes().to_vec();

    let radii = &mut genes[..gl.radius_genes()];
    if !radius_group_feasible(radii) {
        for r in radii.iter_mut() {
            *r = if r.is_finite() { *r } else { 0.5 };
            *r = r.clamp(RADIUS_MARGIN, 1.0 - RADIUS_MARGIN);
        }
        radii.sort_by(f64::total_cmp);
        spread(radii, RADIUS_MARGIN, 1.0 - RADIUS_MARGIN, MIN_RADIUS_GAP);
    }

    let symmetry = gl.symmetry();
    let (lo, hi) = symmetry.sector();
    let (inner_lo, inner_hi) = angle_bounds(symmetry);
    for ring in 0..gl.layout().rings() {
        let group = &mut genes[gl.angle_genes(ring)];
        if angle_group_feasible(symmetry, group) {
            continue;
        }
        for a in group.iter_mut() {
            let v = if a.is_finite() { *a } else { 0.5 * (lo + hi) };
            *a = (lo + (v - lo).rem_euclid(hi - lo)).clamp(inner_lo, inner_hi);
        }
        spread(group, inner_lo, inner_hi, MIN_ANGLE_SEPARATION);
        if symmetry == SymmetryClass::Vertical {
            for a in group.iter_mut() {
                *a = canonical_vertical(*a);
            }
        }
    }
    Chromosome { genes, layout: gl }
}

fn angle_bounds(symmetry: SymmetryClass) -> (f64, f64) {
    let (lo, hi) = symmetry.sector();
    let margin = 0.5 * MIN_ANGLE_SEPARATION;
    (lo + margin, hi - margin)
}

fn canonical_vertical(a: f64) -> f64 {
    if a < 0.0 {
        (a + TAU) - TAU
    } else {
        a
    }
}

fn radius_group_feasible(radii: &[f64]) -> bool {
    let tol = FEASIBILITY_TOLERANCE;
    radii
        .iter()
        .all(|r| r.is_finite() && *r >= RADIUS_MARGIN - tol && *r <= 1.0 - RADIUS_MARGIN + tol)
        && radii
            .windows(2)
            .all(|w| w[1] - w[0] >= MIN_RADIUS_GAP - tol)
}

fn angle_group_feasible(symmetry: SymmetryClass, group: &[f64]) -> bool {
    let tol = FEASIBILITY_TOLERANCE;
    let (lo, hi) = angle_bounds(symmetry);
    if !group
        .iter()
        .all(|a| a.is_finite() && *a >= lo - tol && *a <= hi + tol)
    {
        return false;
    }
    if symmetry == SymmetryClass::Vertical && group.iter().any(|&a| canonical_vertical(a) != a) {
        return false;
    }
    let mut sorted = group.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .windows(2)
        .all(|w| w[1] - w[0] >= MIN_ANGLE_SEPARATION - tol)
}

/// Least-squares projection of `values` onto sets whose sorted members are at
/// least `gap` apart and lie within `[lo, hi]`. Positions keep their rank.
///
/// Substituting `z_i = x_(i) − i·gap` turns the gap constraint into
/// monotonicity, so the projection is an isotonic regression (pool adjacent
/// violators) followed by a clamp of the pooled levels.
fn spread(values: &mut [f64], lo: f64, hi: f64, gap: f64) {
    let n = values.len();
    if n == 0 {
        return;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    // (sum, count) per pooled block
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (rank, &idx) in order.iter().enumerate() {
        blocks.push((values[idx] - rank as f64 * gap, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 > s1 / c1 as f64 {
                blocks.pop();
                let last = blocks.len() - 1;
                blocks[last] = (s0 + s1, c0 + c1);
            } else {
                break;
            }
        }
    }
    let z_hi = hi - (n - 1) as f64 * gap;
    let mut rank = 0;
    for (sum, count) in blocks {
        let level = (sum / count as f64).clamp(lo, z_hi);
        for _ in 0..count {
            values[order[rank]] = level + rank as f64 * gap;
            rank += 1;
        }
    }
}
