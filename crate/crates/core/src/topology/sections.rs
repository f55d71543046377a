//! Sections between sign-alternating s_x zeros and the counters built on them.

use serde::{Deserialize, Serialize};

use super::zeros::{Axis, AxisZero};
use super::TopoError;
use crate::scalar::Real;

/// The s_z zeros of one section, in walking order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    /// Companion signs (sign of s_x) of the s_z zeros met in the section.
    pub signs: Vec<i8>,
    /// Section running from the last selected zero through ±∞ to the first.
    pub wrap: bool,
}

impl Section {
    pub fn m(&self) -> usize {
        self.signs.len()
    }

    pub fn last_sign(&self) -> Option<i8> {
        self.signs.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSections {
    /// Indices (into the merged zero sequence) of the selected s_x zeros.
    pub selected: Vec<usize>,
    /// Sign of s_z at each selected zero.
    pub signs: Vec<i8>,
    /// One section per selected zero, starting at it; with no selected
    /// zeros a single wrap section covers the whole axis.
    pub sections: Vec<Section>,
    pub wrap_section_index: usize,
}

/// A zero reduced to what the section bookkeeping needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mark {
    pub axis: Axis,
    pub sign: i8,
}

impl<T: Real> From<&AxisZero<T>> for Mark {
    fn from(z: &AxisZero<T>) -> Self {
        Mark {
            axis: z.axis,
            sign: z.companion_sign,
        }
    }
}

/// Builds sections from zeros already merged and sorted by x.
pub fn sections_from_marks(marks: &[Mark], boundary_sign: i8) -> NodeSections {
    let mut selected = Vec::new();
    let mut signs: Vec<i8> = Vec::new();
    for (k, m) in marks.iter().enumerate() {
        if m.axis == Axis::SigmaX && signs.last() != Some(&m.sign) {
            selected.push(k);
            signs.push(m.sign);
        }
    }
    let z_signs = |range: &[Mark]| -> Vec<i8> {
        range
            .iter()
            .filter(|m| m.axis == Axis::SigmaZ)
            .map(|m| m.sign)
            .collect()
    };
    if selected.is_empty() {
        let mut all = z_signs(marks);
        all.push(boundary_sign);
        return NodeSections {
            selected,
            signs,
            sections: vec![Section { signs: all, wrap: true }],
            wrap_section_index: 0,
        };
    }
    let mut sections: Vec<Section> = selected
        .windows(2)
        .map(|w| Section {
            signs: z_signs(&marks[w[0] + 1..w[1]]),
            wrap: false,
        })
        .collect();
    let first = selected[0];
    let last = *selected.last().unwrap_or(&first);
    let mut wrap = z_signs(&marks[last + 1..]);
    wrap.push(boundary_sign);
    wrap.extend(z_signs(&marks[..first]));
    sections.push(Section { signs: wrap, wrap: true });
    let wrap_section_index = sections.len() - 1;
    NodeSections {
        selected,
        signs,
        sections,
        wrap_section_index,
    }
}

/// Merges both zero lists, sorts them and builds the sections.
pub fn sort_nodes<T: Real>(x_zeros: &[AxisZero<T>], z_zeros: &[AxisZero<T>], boundary_sign: i8) -> NodeSections {
    let merged = merge_zeros(x_zeros, z_zeros);
    let marks: Vec<Mark> = merged.iter().map(Mark::from).collect();
    sections_from_marks(&marks, boundary_sign)
}

pub fn merge_zeros<T: Real>(x_zeros: &[AxisZero<T>], z_zeros: &[AxisZero<T>]) -> Vec<AxisZero<T>> {
    let mut merged: Vec<AxisZero<T>> = x_zeros.iter().chain(z_zeros).filter(|z| !z.boundary).copied().collect();
    merged.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap_or(std::cmp::Ordering::Equal));
    merged
}

/// Twice the algebraic winding: each odd section adds S_i times its last
/// s_z-zero sign, each even section adds nothing.
pub fn winding_algebraic_doubled(sections: &NodeSections) -> i64 {
    if sections.selected.is_empty() {
        return 0;
    }
    sections
        .sections
        .iter()
        .zip(&sections.signs)
        .filter(|(sec, _)| sec.m() % 2 == 1)
        .map(|(sec, &s)| i64::from(s) * i64::from(sec.last_sign().unwrap_or(0)))
        .sum()
}

/// Algebraic winding; half-integers signal an inconsistent zero sequence.
pub fn winding_algebraic(sections: &NodeSections) -> f64 {
    winding_algebraic_doubled(sections) as f64 / 2.0
}

/// Extra s_z zeros: Σ (m - 1) over sections.
pub fn extra_zeros(sections: &NodeSections) -> usize {
    sections.sections.iter().map(|s| s.m().saturating_sub(1)).sum()
}

/// Anti-winding pairs n_Z - |n_w| and extra zeros.
pub fn knot_counters(sections: &NodeSections, n_z: usize, n_w: i64) -> Result<(usize, usize), TopoError> {
    let n_aw = n_z as i64 - n_w.abs();
    if n_aw < 0 {
        return Err(TopoError::NegativeAntiWinding { n_z, n_w });
    }
    Ok((n_aw as usize, extra_zeros(sections)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn marks(code: &str) -> Vec<Mark> {
        code.bytes()
            .filter_map(|b| match b {
                b'1' => Some(Mark { axis: Axis::SigmaX, sign: 1 }),
                b'3' => Some(Mark { axis: Axis::SigmaX, sign: -1 }),
                b'2' => Some(Mark { axis: Axis::SigmaZ, sign: 1 }),
                b'4' => Some(Mark { axis: Axis::SigmaZ, sign: -1 }),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn alternating_sequence_winds_counterclockwise() {
        // Eight alternating s_x zeros, all sections with a single s_z zero.
        let s = sections_from_marks(&marks("12341234123412341"), -1);
        assert!(s.sections.iter().all(|sec| sec.m() == 1 || sec.wrap));
        let s = sections_from_marks(&marks("123412341234123"), -1);
        assert_eq!(s.selected.len(), 8);
        assert!(s.sections.iter().all(|sec| sec.m() == 1));
        assert_eq!(winding_algebraic(&s), 4.0);
        assert_eq!(extra_zeros(&s), 0);
    }

    #[test]
    fn empty_selection() {
        let s = sections_from_marks(&marks("4"), -1);
        assert_eq!(s.sections.len(), 1);
        assert_eq!(s.sections[0].m(), 2);
        assert_eq!(winding_algebraic(&s), 0.0);
        assert_eq!(extra_zeros(&s), 1);
    }

    #[test]
    fn small_knot_section() {
        let s = sections_from_marks(&marks("143214321444321432143"), 1);
        assert!(s.sections.iter().any(|sec| sec.m() == 3));
        assert_eq!(winding_algebraic(&s), -5.0);
        assert_eq!(extra_zeros(&s), 2);
    }

    #[test]
    fn negative_anti_winding_is_rejected() {
        let s = sections_from_marks(&marks(""), 1);
        assert!(knot_counters(&s, 1, 2).is_err());
        assert_eq!(knot_counters(&s, 3, -1).unwrap().0, 2);
    }
}
