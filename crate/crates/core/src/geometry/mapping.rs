//! Label mappings and their text format.
//!
//! A mapping file lists one `ring slot label` triple per line, all 0-indexed.
//! Blank lines and `#` comments are ignored. The ring layout is inferred from
//! the triples: every ring must list slots `0..n` exactly once.

use std::collections::BTreeMap;
use std::path::Path;

use super::{RingLayout, SymmetryClass, MAX_SYMBOLS};
use crate::{Error, Result};

/// Assignment of a label to every slot of a ring layout.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mapping {
    layout: RingLayout,
    /// Label per global slot index.
    labels: Vec<u8>,
    /// Global slot index per label.
    slots: Vec<usize>,
}

impl Mapping {
    /// `labels[i]` is the label of global slot `i`; must be a permutation of
    /// `0..M`.
    pub fn new(layout: RingLayout, labels: Vec<u8>) -> Result<Self> {
        let m = layout.size();
        if labels.len() != m {
            return Err(Error::Mapping(format!(
                "{} labels for layout {layout} with {m} slots",
                labels.len()
            )));
        }
        let mut slots = vec![usize::MAX; m];
        for (slot, &label) in labels.iter().enumerate() {
            let l = label as usize;
            if l >= MAX_SYMBOLS {
                return Err(Error::LabelOutOfRange(label as u32));
            }
            if l >= m {
                return Err(Error::Mapping(format!(
                    "label {label} exceeds alphabet of {m} symbols"
                )));
            }
            if slots[l] != usize::MAX {
                return Err(Error::Mapping(format!("duplicate label {label}")));
            }
            slots[l] = slot;
        }
        Ok(Mapping {
            layout,
            labels,
            slots,
        })
    }

    /// Labels in slot order, `0..M`.
    pub fn identity(layout: RingLayout) -> Self {
        let labels = (0..layout.size() as u8).collect();
        Mapping::new(layout, labels).expect("identity is a permutation")
    }

    pub fn layout(&self) -> &RingLayout {
        &self.layout
    }

    /// Label per global slot index.
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, ring: usize, slot: usize) -> u8 {
        self.labels[self.layout.index(ring, slot)]
    }

    /// Global slot carrying `label`.
    pub fn slot_of(&self, label: u8) -> Result<usize> {
        self.slots
            .get(label as usize)
            .copied()
            .ok_or(Error::UnknownLabel(label))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rings: BTreeMap<usize, BTreeMap<usize, u8>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Mapping(format!("line {}: expected `ring slot label`", lineno + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let ring: usize = fields[0].parse().map_err(|_| bad())?;
            let slot: usize = fields[1].parse().map_err(|_| bad())?;
            let label: u32 = fields[2].parse().map_err(|_| bad())?;
            if label as usize >= MAX_SYMBOLS {
                return Err(Error::LabelOutOfRange(label));
            }
            if rings
                .entry(ring)
                .or_default()
                .insert(slot, label as u8)
                .is_some()
            {
                return Err(Error::Mapping(format!(
                    "line {}: slot ({ring}, {slot}) listed twice",
                    lineno + 1
                )));
            }
        }
        if rings.is_empty() {
            return Err(Error::Mapping("no entries".into()));
        }
        let mut counts = Vec::with_capacity(rings.len());
        let mut labels = Vec::new();
        for (expected, (ring, slots)) in rings.into_iter().enumerate() {
            if ring != expected {
                return Err(Error::Mapping(format!("ring {expected} has no slots")));
            }
            if let Some((gap, _)) = slots.keys().enumerate().find(|(i, s)| i != *s) {
                return Err(Error::Mapping(format!("ring {ring} is missing slot {gap}")));
            }
            counts.push(slots.len());
            labels.extend(slots.into_values());
        }
        let layout = RingLayout::new(counts).map_err(|e| Error::Mapping(e.to_string()))?;
        Mapping::new(layout, labels)
    }

    /// Parse and require a specific layout.
    pub fn parse_for(text: &str, layout: &RingLayout) -> Result<Self> {
        let mapping = Mapping::parse(text)?;
        if mapping.layout() != layout {
            return Err(Error::Mapping(format!(
                "slot counts {} do not match layout {layout}",
                mapping.layout()
            )));
        }
        Ok(mapping)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# ring slot label\n");
        for ring in 0..self.layout.rings() {
            for slot in 0..self.layout.counts()[ring] {
                out.push_str(&format!("{ring} {slot} {}\n", self.label(ring, slot)));
            }
        }
        out
    }
}

/// Read a mapping file from disk.
pub fn load_mapping(path: impl AsRef<Path>) -> Result<Mapping> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Mapping::parse(&text)
}

/// The three mappings shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BundledMapping {
    /// CCSDS 4+12+20+28, symmetric about both axes.
    Ccsds4_12_20_28,
    /// 4+12+20+28 with vertical symmetry only.
    Proposed4_12_20_28,
    /// 4+12+16+32 with vertical symmetry only.
    Proposed4_12_16_32,
}

impl BundledMapping {
    pub const ALL: [BundledMapping; 3] = [
        BundledMapping::Ccsds4_12_20_28,
        BundledMapping::Proposed4_12_20_28,
        BundledMapping::Proposed4_12_16_32,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BundledMapping::Ccsds4_12_20_28 => "ccsds-4-12-20-28",
            BundledMapping::Proposed4_12_20_28 => "proposed-4-12-20-28",
            BundledMapping::Proposed4_12_16_32 => "proposed-4-12-16-32",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    /// Symmetry the mapping was designed for.
    pub fn symmetry(self) -> SymmetryClass {
        match self {
            BundledMapping::Ccsds4_12_20_28 => SymmetryClass::Quadrant,
            _ => SymmetryClass::Vertical,
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            BundledMapping::Ccsds4_12_20_28 => {
                include_str!("../../data/mappings/ccsds-4-12-20-28.map")
            }
            BundledMapping::Proposed4_12_20_28 => {
                include_str!("../../data/mappings/proposed-4-12-20-28.map")
            }
            BundledMapping::Proposed4_12_16_32 => {
                include_str!("../../data/mappings/proposed-4-12-16-32.map")
            }
        }
    }

    pub fn mapping(self) -> Mapping {
        Mapping::parse(self.text()).expect("bundled mapping files are valid")
    }
}
