//! Dense probability mass functions over finite product spaces.
//!
//! A [`JointPmf`] of arity `n` lives on `{0..d_1} × … × {0..d_n}` where
//! `d_k` is the number of declared values of the `k`-th variable. Cells
//! are stored row-major with the first coordinate varying slowest, which
//! is the same lexicographic order used for feasibility-matrix rows.
//! The sample space is the full product and the event algebra is its
//! power set, so a mass per cell is a complete description.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{usage, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    dims: Vec<usize>,
    mass: Vec<f64>,
}

impl JointPmf {
    /// Builds a pmf from masses listed in lexicographic tuple order.
    pub fn new(dims: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        let cells = cell_count(&dims)?;
        if mass.len() != cells {
            return Err(usage(format!(
                "pmf over dims {:?} needs {} masses, got {}",
                dims,
                cells,
                mass.len()
            )));
        }
        Ok(JointPmf { dims, mass })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let cells = cell_count(&dims)?;
        Ok(JointPmf {
            dims,
            mass: vec![0.0; cells],
        })
    }

    /// Accumulates `(tuple, mass)` entries; repeated tuples are summed.
    pub fn from_entries<I, T>(dims: Vec<usize>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, f64)>,
        T: AsRef<[usize]>,
    {
        let mut pmf = JointPmf::zeros(dims)?;
        for (tuple, p) in entries {
            let idx = pmf
                .index_of(tuple.as_ref())
                .ok_or_else(|| usage(format!("tuple {:?} outside {:?}", tuple.as_ref(), pmf.dims)))?;
            pmf.mass[idx] += p;
        }
        Ok(pmf)
    }

    /// Point mass at `tuple`.
    pub fn point(dims: Vec<usize>, tuple: &[usize]) -> Result<Self> {
        JointPmf::from_entries(dims, [(tuple, 1.0)])
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn masses_mut(&mut self) -> &mut [f64] {
        &mut self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn index_of(&self, tuple: &[usize]) -> Option<usize> {
        linear_index(&self.dims, tuple)
    }

    pub fn tuple_of(&self, mut index: usize) -> Vec<usize> {
        let mut tuple = vec![0; self.dims.len()];
        for (slot, &d) in tuple.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        tuple
    }

    /// Mass of a single tuple; tuples outside the space have mass zero.
    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.index_of(tuple).map_or(0.0, |i| self.mass[i])
    }

    /// All cells in lexicographic order, zero masses included.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        TupleIter::new(&self.dims).zip(self.mass.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Projects onto the listed coordinates, in the listed order.
    ///
    /// Listing every coordinate in a new order is a permutation of the pmf.
    pub fn marginalize(&self, indices: &[usize]) -> Result<JointPmf> {
        for (pos, &i) in indices.iter().enumerate() {
            if i >= self.arity() {
                return Err(usage(format!(
                    "marginal index {} out of range for arity {}",
                    i,
                    self.arity()
                )));
            }
            if indices[..pos].contains(&i) {
                return Err(usage(format!("marginal index {} listed twice", i)));
            }
        }
        let dims: Vec<usize> = indices.iter().map(|&i| self.dims[i]).collect();
        let mut out = JointPmf::zeros(dims)?;
        let mut projected = vec![0; indices.len()];
        for (tuple, p) in self.iter() {
            if p == 0.0 {
                continue;
            }
            for (slot, &i) in projected.iter_mut().zip(indices) {
                *slot = tuple[i];
            }
            let idx = linear_index(&out.dims, &projected).expect("projected tuple in range");
            out.mass[idx] += p;
        }
        Ok(out)
    }

    /// Largest absolute cellwise difference. Both pmfs must share dims.
    pub fn sup_distance(&self, other: &JointPmf) -> f64 {
        debug_assert_eq!(self.dims, other.dims);
        self.mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }

    /// Total-variation distance, half the L1 difference.
    pub fn total_variation(&self, other: &JointPmf) -> f64 {
        debug_assert_eq!(self.dims, other.dims);
        0.5 * self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| libm::fabs(a - b))
            .sum::<f64>()
    }

    /// `(1 - weight) * self + weight * other`.
    pub fn mix(&self, other: &JointPmf, weight: f64) -> Result<JointPmf> {
        if self.dims != other.dims {
            return Err(usage("cannot mix pmfs over different spaces"));
        }
        let mass = self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (1.0 - weight) * a + weight * b)
            .collect();
        Ok(JointPmf {
            dims: self.dims.clone(),
            mass,
        })
    }

    /// Problems with this pmf at tolerance `eps`; empty when it is a valid pmf.
    ///
    /// Masses in `[-eps, 0)` are tolerated (see [`JointPmf::clip_negative`]).
    pub fn violations(&self, eps: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (tuple, p) in self.iter() {
            if !p.is_finite() {
                out.push(format!("mass at {:?} is not finite", tuple));
            } else if p < -eps {
                out.push(format!("mass at {:?} is negative ({})", tuple, p));
            }
        }
        let total = self.total();
        if !(libm::fabs(total - 1.0) <= eps) {
            out.push(format!("mass sum {} ≠ 1", libm::round(total * 1e12) / 1e12));
        }
        out
    }

    /// Sets masses in `[-eps, 0)` to zero.
    pub fn clip_negative(&mut self, eps: f64) {
        for p in &mut self.mass {
            if *p < 0.0 && *p >= -eps {
                *p = 0.0;
            }
        }
    }
}

fn cell_count(dims: &[usize]) -> Result<usize> {
    dims.iter().try_fold(1usize, |acc, &d| {
        if d == 0 {
            return Err(usage("every variable needs at least one value"));
        }
        acc.checked_mul(d)
            .ok_or_else(|| usage(format!("product space {:?} is too large", dims)))
    })
}

pub(crate) fn linear_index(dims: &[usize], tuple: &[usize]) -> Option<usize> {
    if tuple.len() != dims.len() {
        return None;
    }
    let mut idx = 0usize;
    for (&v, &d) in tuple.iter().zip(dims) {
        if v >= d {
            return None;
        }
        idx = idx * d + v;
    }
    Some(idx)
}

/// Odometer over a product space, last coordinate fastest.
#[derive(Debug, Clone)]
pub struct TupleIter {
    dims: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl TupleIter {
    pub fn new(dims: &[usize]) -> Self {
        let next = if dims.contains(&0) {
            None
        } else {
            Some(vec![0; dims.len()])
        };
        TupleIter {
            dims: dims.to_vec(),
            next,
        }
    }
}

impl Iterator for TupleIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut pos = succ.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < self.dims[pos] {
                self.next = Some(succ);
                break;
            }
            succ[pos] = 0;
        }
        Some(current)
    }
}
