//! Digit code strings.
//!
//! Walking x upwards: 1 (3) for an s_x zero with s_z > 0 (< 0), 2 (4) for an
//! s_z zero with s_x > 0 (< 0), 5 for a diagonal knot at the first pass
//! through it, then `~` and the digit of the joined ends.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::knots::DiagonalKnot;
use super::sections::{extra_zeros, sections_from_marks, winding_algebraic, Mark};
use super::zeros::{Axis, AxisZero};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("invalid character {0:?} in topological code")]
    BadChar(char),
    #[error("topological code must end with '~' followed by 2 or 4")]
    MissingBoundary,
    #[error("topological code has an odd number ({0}) of s_x zeros")]
    OddNodeCount(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopoCode {
    pub digits: Vec<u8>,
    pub boundary: u8,
}

impl fmt::Display for TopoCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{d}")?;
        }
        write!(f, "~{}", self.boundary)
    }
}

impl FromStr for TopoCode {
    type Err = CodeError;

    /// Whitespace is ignored.
    fn from_str(s: &str) -> Result<Self, CodeError> {
        let mut digits = Vec::new();
        let mut boundary = None;
        let mut after_tilde = false;
        for c in s.chars().filter(|c| !c.is_whitespace()) {
            match c {
                '~' if !after_tilde => after_tilde = true,
                '2' | '4' if after_tilde && boundary.is_none() => boundary = Some(c as u8 - b'0'),
                '1'..='5' if !after_tilde => digits.push(c as u8 - b'0'),
                '~' | '1'..='5' => return Err(CodeError::MissingBoundary),
                _ => return Err(CodeError::BadChar(c)),
            }
        }
        match boundary {
            Some(boundary) => Ok(Self { digits, boundary }),
            None => Err(CodeError::MissingBoundary),
        }
    }
}

/// Counters recoverable from a code string alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeCounters {
    pub n_z: usize,
    pub n_w: f64,
    pub n_ex: usize,
    pub n_dk: usize,
}

impl TopoCode {
    fn marks(&self) -> Vec<Mark> {
        self.digits
            .iter()
            .filter_map(|&d| match d {
                1 => Some(Mark { axis: Axis::SigmaX, sign: 1 }),
                3 => Some(Mark { axis: Axis::SigmaX, sign: -1 }),
                2 => Some(Mark { axis: Axis::SigmaZ, sign: 1 }),
                4 => Some(Mark { axis: Axis::SigmaZ, sign: -1 }),
                _ => None,
            })
            .collect()
    }

    pub fn boundary_sign(&self) -> i8 {
        if self.boundary == 2 {
            1
        } else {
            -1
        }
    }

    /// Re-derives the node count, winding, extra zeros and knots from the digits.
    pub fn counters(&self) -> Result<CodeCounters, CodeError> {
        let nodes = self.digits.iter().filter(|&&d| d == 1 || d == 3).count();
        if nodes % 2 != 0 {
            return Err(CodeError::OddNodeCount(nodes));
        }
        let sections = sections_from_marks(&self.marks(), self.boundary_sign());
        Ok(CodeCounters {
            n_z: nodes / 2,
            n_w: winding_algebraic(&sections),
            n_ex: extra_zeros(&sections),
            n_dk: self.digits.iter().filter(|&&d| d == 5).count(),
        })
    }
}

/// Winding and the other counters straight from a code string.
pub fn winding_from_code(code: &str) -> Result<CodeCounters, CodeError> {
    code.parse::<TopoCode>()?.counters()
}

/// Code for a merged zero list and its diagonal knots.
pub fn encode_topology<T: Real>(zeros: &[AxisZero<T>], knots: &[DiagonalKnot<T>], boundary_sign: i8) -> TopoCode {
    let mut items: Vec<(T, u8)> = zeros.iter().filter(|z| !z.boundary).map(|z| (z.x, z.digit())).collect();
    items.extend(knots.iter().map(|k| (k.x1, 5)));
    items.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    TopoCode {
        digits: items.into_iter().map(|(_, d)| d).collect(),
        boundary: if boundary_sign > 0 { 2 } else { 4 },
    }
}

/// Whitespace-free form used for comparisons.
pub fn normalize_code(code: &str) -> String {
    code.chars().filter(|c| !c.is_whitespace()).collect()
}
