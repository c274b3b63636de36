//! APSK constellation geometry.
//!
//! A constellation is a set of concentric rings. Ring `k` carries
//! `layout.counts()[k]` symbols; every symbol occupies a *slot* `(ring, slot)`
//! and carries the 6-bit label the [`Mapping`] assigns to that slot. Slots are
//! numbered globally ring by ring, innermost ring first, which is the order
//! used by every per-symbol vector in this crate.
//!
//! On a uniform constellation slot `s` of an `n`-symbol ring sits at angle
//! `off + 2πs/n`, where `off = π/n` when `n` is a multiple of four and `0`
//! otherwise. With that offset every 64-APSK ring is mirror symmetric about
//! both axes and no symbol sits on an axis.

mod chromosome;
mod export;
mod mapping;

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

pub use chromosome::{decode, encode, repair, Chromosome, GeneKind, GeneLayout};
pub use export::{parse_constellation, write_constellation};
pub use mapping::{load_mapping, BundledMapping, Mapping};

use crate::{Error, Result};

/// Largest alphabet a 6-bit label can address.
pub const MAX_SYMBOLS: usize = 64;

/// Tolerance used when checking that mirrored slots are exact images.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Symbols per ring, innermost first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingLayout {
    counts: Vec<usize>,
    offsets: Vec<usize>,
}

impl RingLayout {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Layout("no rings".into()));
        }
        if let Some(k) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Layout(format!("ring {k} is empty")));
        }
        let total: usize = counts.iter().sum();
        if total > MAX_SYMBOLS {
            return Err(Error::Layout(format!(
                "{total} symbols do not fit 6-bit labels"
            )));
        }
        let offsets = counts
            .iter()
            .scan(0, |acc, &c| {
                let start = *acc;
                *acc += c;
                Some(start)
            })
            .collect();
        Ok(RingLayout { counts, offsets })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn rings(&self) -> usize {
        self.counts.len()
    }

    /// Alphabet size M.
    pub fn size(&self) -> usize {
        self.offsets[self.rings() - 1] + self.counts[self.rings() - 1]
    }

    /// Global index of `(ring, slot)`.
    pub fn index(&self, ring: usize, slot: usize) -> usize {
        self.offsets[ring] + slot
    }

    /// Global slot range of a ring.
    pub fn ring_slots(&self, ring: usize) -> std::ops::Range<usize> {
        self.offsets[ring]..self.offsets[ring] + self.counts[ring]
    }

    /// Ring that owns a global slot index.
    pub fn ring_of(&self, index: usize) -> usize {
        self.offsets.partition_point(|&o| o <= index) - 1
    }

    /// Angle of slot `s` on the uniform version of ring `ring`.
    pub fn uniform_angle(&self, ring: usize, slot: usize) -> f64 {
        let n = self.counts[ring];
        let off = if n.is_multiple_of(4) {
            PI / n as f64
        } else {
            0.0
        };
        off + TAU * slot as f64 / n as f64
    }
}

impl fmt::Display for RingLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join("+"))
    }
}

/// Mirror symmetry a constellation is constrained to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymmetryClass {
    /// Symmetric about both axes; one quadrant describes the constellation.
    Quadrant,
    /// Symmetric about the vertical axis only.
    Vertical,
    None,
}

impl SymmetryClass {
    pub fn name(self) -> &'static str {
        match self {
            SymmetryClass::Quadrant => "quadrant",
            SymmetryClass::Vertical => "vertical",
            SymmetryClass::None => "none",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "quadrant" => Some(SymmetryClass::Quadrant),
            "vertical" => Some(SymmetryClass::Vertical),
            "none" => Some(SymmetryClass::None),
            _ => None,
        }
    }

    /// Number of symbols generated by one sector angle.
    pub fn fold(self) -> usize {
        match self {
            SymmetryClass::Quadrant => 4,
            SymmetryClass::Vertical => 2,
            SymmetryClass::None => 1,
        }
    }

    /// Half-open sector `[lo, hi)` the free angles live in.
    pub fn sector(self) -> (f64, f64) {
        match self {
            SymmetryClass::Quadrant => (0.0, FRAC_PI_2),
            SymmetryClass::Vertical => (-FRAC_PI_2, FRAC_PI_2),
            SymmetryClass::None => (0.0, TAU),
        }
    }

    pub fn check_layout(self, layout: &RingLayout) -> Result<()> {
        let fold = self.fold();
        match layout.counts().iter().position(|c| c % fold != 0) {
            Some(k) => Err(Error::Layout(format!(
                "{} symmetry needs ring counts divisible by {fold}, ring {k} has {}",
                self.name(),
                layout.counts()[k]
            ))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An APSK constellation: ring radii, one angle per slot, and a label mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    radii: Vec<f64>,
    angles: Vec<f64>,
    mapping: Mapping,
    symmetry: SymmetryClass,
}

impl Constellation {
    /// Validates radii ordering, the outer-ring normalization, angle range and
    /// per-ring angle uniqueness. Symmetry adherence is checked by [`encode`].
    pub fn new(
        radii: Vec<f64>,
        angles: Vec<f64>,
        mapping: Mapping,
        symmetry: SymmetryClass,
    ) -> Result<Self> {
        let layout = mapping.layout();
        check_radii(&radii, layout.rings())?;
        if angles.len() != layout.size() {
            return Err(Error::Angles(format!(
                "{} angles for {} slots",
                angles.len(),
                layout.size()
            )));
        }
        if let Some(a) = angles.iter().find(|a| !(0.0..TAU).contains(*a)) {
            return Err(Error::Angles(format!("angle {a} outside [0, 2π)")));
        }
        for ring in 0..layout.rings() {
            let mut on_ring: Vec<f64> = angles[layout.ring_slots(ring)].to_vec();
            on_ring.sort_by(f64::total_cmp);
            if on_ring.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Angles(format!(
                    "two symbols coincide on ring {ring}"
                )));
            }
        }
        symmetry.check_layout(layout)?;
        Ok(Constellation {
            radii,
            angles,
            mapping,
            symmetry,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Per-slot angles in global slot order.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    pub fn layout(&self) -> &RingLayout {
        self.mapping.layout()
    }

    pub fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }

    pub fn size(&self) -> usize {
        self.angles.len()
    }

    /// Iterate over symbols in global slot order.
    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        let layout = self.layout();
        (0..self.size()).map(move |index| {
            let ring = layout.ring_of(index);
            Symbol {
                ring,
                slot: index - layout.index(ring, 0),
                label: self.mapping.labels()[index],
                amplitude: self.radii[ring],
                angle: self.angles[index],
            }
        })
    }

    /// Largest symbol amplitude; always 1 for a valid constellation.
    pub fn peak_amplitude(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    /// Mean squared amplitude under equiprobable symbols.
    pub fn mean_energy(&self) -> f64 {
        let layout = self.layout();
        let total: f64 = layout
            .counts()
            .iter()
            .zip(&self.radii)
            .map(|(&n, r)| n as f64 * r * r)
            .sum();
        total / layout.size() as f64
    }
}

/// One constellation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Symbol {
    pub ring: usize,
    pub slot: usize,
    pub label: u8,
    pub amplitude: f64,
    pub angle: f64,
}

impl Symbol {
    pub fn cartesian(&self) -> (f64, f64) {
        let (s, c) = self.angle.sin_cos();
        (self.amplitude * c, self.amplitude * s)
    }
}

fn check_radii(radii: &[f64], rings: usize) -> Result<()> {
    if radii.len() != rings {
        return Err(Error::Radii(format!(
            "{} radii for {rings} rings",
            radii.len()
        )));
    }
    if radii[0].is_nan() || radii[0] <= 0.0 {
        return Err(Error::Radii(format!(
            "innermost radius {} is not positive",
            radii[0]
        )));
    }
    if radii
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::Radii(format!(
            "radii {radii:?} are not strictly increasing"
        )));
    }
    if radii[rings - 1] != 1.0 {
        return Err(Error::Radii(format!(
            "outer radius must be 1 (HPA saturation), got {}",
            radii[rings - 1]
        )));
    }
    Ok(())
}

/// Equally spaced symbols on every ring, using the mapping's layout.
///
/// Ring `k` gets a phase offset of half a slot (`π/n_k`) when its count is a
/// multiple of four, so that the result is symmetric about both axes.
pub fn build_uniform(
    layout: &RingLayout,
    radii: &[f64],
    mapping: &Mapping,
    symmetry: SymmetryClass,
) -> Result<Constellation> {
    if mapping.layout() != layout {
        return Err(Error::Mapping(format!(
            "mapping is for layout {}, not {layout}",
            mapping.layout()
        )));
    }
    check_radii(radii, layout.rings())?;
    let angles = (0..layout.rings())
        .flat_map(|ring| (0..layout.counts()[ring]).map(move |s| (ring, s)))
        .map(|(ring, s)| layout.uniform_angle(ring, s))
        .collect();
    Constellation::new(radii.to_vec(), angles, mapping.clone(), symmetry)
}

/// Equally spaced radii `1/R, 2/R, …, 1` for an `R`-ring layout.
pub fn equally_spaced_radii(rings: usize) -> Vec<f64> {
    (1..=rings).map(|k| k as f64 / rings as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn mapping(counts: &[usize]) -> Mapping {
        Mapping::identity(RingLayout::new(counts.to_vec()).unwrap())
    }

    #[test]
    fn layout_rejects_bad_counts() {
        assert!(RingLayout::new(vec![]).is_err());
        assert!(RingLayout::new(vec![4, 0]).is_err());
        assert!(RingLayout::new(vec![64, 1]).is_err());
        let l = RingLayout::new(vec![4, 12, 20, 28]).unwrap();
        assert_eq!(l.size(), 64);
        assert_eq!(l.ring_of(0), 0);
        assert_eq!(l.ring_of(3), 0);
        assert_eq!(l.ring_of(4), 1);
        assert_eq!(l.ring_of(63), 3);
        assert_eq!(l.index(2, 0), 16);
        assert_eq!(l.to_string(), "4+12+20+28");
    }

    #[test]
    fn symmetry_divisibility() {
        let l = RingLayout::new(vec![4, 12, 20, 28]).unwrap();
        assert!(SymmetryClass::Quadrant.check_layout(&l).is_ok());
        let l = RingLayout::new(vec![2, 6]).unwrap();
        assert!(SymmetryClass::Quadrant.check_layout(&l).is_err());
        assert!(SymmetryClass::Vertical.check_layout(&l).is_ok());
        let l = RingLayout::new(vec![3]).unwrap();
        assert!(SymmetryClass::Vertical.check_layout(&l).is_err());
        assert!(SymmetryClass::None.check_layout(&l).is_ok());
    }

    #[test]
    fn uniform_qpsk_placement() {
        let m = mapping(&[4]);
        let c = build_uniform(m.layout(), &[1.0], &m, SymmetryClass::Quadrant).unwrap();
        let expected = [FRAC_PI_4, 3.0 * FRAC_PI_4, 5.0 * FRAC_PI_4, 7.0 * FRAC_PI_4];
        for (a, e) in c.angles().iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_antipodal_pair() {
        let m = mapping(&[2]);
        let c = build_uniform(m.layout(), &[1.0], &m, SymmetryClass::Vertical).unwrap();
        assert_eq!(c.angles(), &[0.0, PI]);
    }

    #[test]
    fn uniform_64apsk_counts() {
        let m = mapping(&[4, 12, 20, 28]);
        let c = build_uniform(
            m.layout(),
            &[0.25, 0.5, 0.75, 1.0],
            &m,
            SymmetryClass::Quadrant,
        )
        .unwrap();
        assert_eq!(c.size(), 64);
        assert_eq!(c.symbols().filter(|s| s.amplitude == 1.0).count(), 28);
        assert_eq!(c.peak_amplitude(), 1.0);
        assert!((c.mean_energy() - 42.5 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_rejects_bad_radii() {
        let m = mapping(&[4, 12]);
        let l = m.layout();
        assert!(build_uniform(l, &[0.5, 0.5], &m, SymmetryClass::None).is_err());
        assert!(build_uniform(l, &[0.5, 0.9], &m, SymmetryClass::None).is_err());
        assert!(build_uniform(l, &[0.5], &m, SymmetryClass::None).is_err());
        assert!(build_uniform(l, &[0.0, 1.0], &m, SymmetryClass::None).is_err());
        let other = RingLayout::new(vec![8, 8]).unwrap();
        assert!(build_uniform(&other, &[0.5, 1.0], &m, SymmetryClass::None).is_err());
    }

    #[test]
    fn constellation_rejects_coincident_symbols() {
        let m = mapping(&[2]);
        let err = Constellation::new(vec![1.0], vec![0.3, 0.3], m, SymmetryClass::None);
        assert!(err.is_err());
    }
}
