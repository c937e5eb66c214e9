//! Redundancy lattice over source subsets and the resulting decomposition.
//!
//! The past of each unit is a source of information about the next network
//! state. Collections of sources that are pairwise incomparable under
//! inclusion (antichains) form the nodes of a lattice; evaluating a
//! redundancy function on every node and Moebius-inverting it splits the
//! predictive information into per-node contributions. Coarse-graining the
//! nodes by how many singleton sources they expose yields redundant, unique
//! and synergistic shares, and two summary balances:
//!
//! * `delta_wms = pi - sum_i mi_single[i]`, the whole-minus-sum balance,
//!   which subtracts shared information once per source pair and therefore
//!   over-counts redundancy for more than two units;
//! * `delta_pid = synergy - redundancy`, which counts each share once.
//!
//! The redundancy function used by [`decompose`] is the minimum mutual
//! information over the parts of a node; [`RedundancyLattice::evaluate_with`]
//! accepts any other redundancy function.
//!
//! The number of antichains grows double-exponentially with the number of
//! units (1, 4, 18, 166, 7579 for one to five), so lattice construction is
//! capped at [`MAX_SOURCES`].

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PridError, Result};
use crate::info::{InfoContext, NEGATIVE_INFO_TOLERANCE};
use crate::sources::SourceSet;

/// Largest supported number of sources for lattice construction.
pub const MAX_SOURCES: usize = 5;

/// A lattice node: an antichain of non-empty source subsets.
///
/// Parts are kept in canonical order (by size, then by members), so equal
/// antichains compare and hash equal regardless of construction order. The
/// derived `Ord` is that canonical enumeration order, not the lattice
/// order; use [`Atom::leq`] for the latter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    parts: Vec<SourceSet>,
}

impl Atom {
    /// Builds an atom from its parts, validating the antichain property.
    pub fn new(parts: Vec<SourceSet>) -> Result<Atom> {
        if parts.is_empty() {
            return Err(PridError::InvalidInput(
                "an atom needs at least one part".to_string(),
            ));
        }
        if let Some(p) = parts.iter().find(|p| p.is_empty()) {
            return Err(PridError::InvalidInput(format!(
                "atom part {p} is empty"
            )));
        }
        for (i, a) in parts.iter().enumerate() {
            for b in parts.iter().skip(i + 1) {
                if !a.is_incomparable_with(*b) {
                    return Err(PridError::InvalidInput(format!(
                        "atom parts {a} and {b} are nested; parts must form an antichain"
                    )));
                }
            }
        }
        Ok(Atom::from_unsorted(parts))
    }

    fn from_unsorted(mut parts: Vec<SourceSet>) -> Atom {
        parts.sort_unstable();
        Atom { parts }
    }

    pub fn parts(&self) -> &[SourceSet] {
        &self.parts
    }

    /// Lattice order: `self` precedes `other` when every part of `other`
    /// contains some part of `self`.
    pub fn leq(&self, other: &Atom) -> bool {
        other
            .parts
            .iter()
            .all(|b| self.parts.iter().any(|a| a.is_subset_of(*b)))
    }

    fn singleton_parts(&self) -> impl Iterator<Item = SourceSet> + '_ {
        self.parts.iter().copied().filter(|p| p.len() == 1)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, part) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{part}")?;
        }
        write!(f, "}}")
    }
}

/// Which coarse-grained share an atom contributes to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomCategory {
    /// Two or more singleton parts: information held by several sources.
    Redundant,
    /// Exactly one singleton part `{i}`: information unit `i` holds alone.
    Unique(usize),
    /// No singleton part: information no individual source carries.
    Synergistic,
}

/// Classifies an atom by the number of singleton parts it exposes.
pub fn atom_category(atom: &Atom) -> AtomCategory {
    let mut singles = atom.singleton_parts();
    match (singles.next(), singles.next()) {
        (None, _) => AtomCategory::Synergistic,
        (Some(s), None) => AtomCategory::Unique(s.iter().next().expect("non-empty")),
        (Some(_), Some(_)) => AtomCategory::Redundant,
    }
}

/// Row-per-atom bit matrix storing the strict down-set of every atom.
#[derive(Clone, Debug)]
struct BitMatrix {
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> BitMatrix {
        let words_per_row = n.div_ceil(64);
        BitMatrix {
            words_per_row,
            words: vec![0; words_per_row * n],
        }
    }

    fn set(&mut self, row: usize, col: usize) {
        self.words[row * self.words_per_row + col / 64] |= 1u64 << (col % 64);
    }

    fn get(&self, row: usize, col: usize) -> bool {
        self.words[row * self.words_per_row + col / 64] >> (col % 64) & 1 == 1
    }

    fn row_count(&self, row: usize) -> usize {
        let base = row * self.words_per_row;
        self.words[base..base + self.words_per_row]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    fn row_ones(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        let base = row * self.words_per_row;
        self.words[base..base + self.words_per_row]
            .iter()
            .enumerate()
            .flat_map(|(wi, &w)| {
                let mut rest = w;
                std::iter::from_fn(move || {
                    if rest == 0 {
                        None
                    } else {
                        let bit = rest.trailing_zeros() as usize;
                        rest &= rest - 1;
                        Some(wi * 64 + bit)
                    }
                })
            })
    }
}

/// All antichain atoms over `n_sources` units with the order relation
/// precomputed, plus per-atom redundancy and information values once
/// evaluated.
#[derive(Clone, Debug)]
pub struct RedundancyLattice {
    n_sources: usize,
    atoms: Vec<Atom>,
    index: HashMap<Atom, usize>,
    down: BitMatrix,
    bottom: usize,
    top: usize,
    red: Option<Vec<f64>>,
    info: Option<Vec<f64>>,
}

impl RedundancyLattice {
    /// Enumerates every atom over `n_sources` units and precomputes the
    /// order relation. Values are unset until evaluated.
    pub fn build(n_sources: usize) -> Result<RedundancyLattice> {
        if n_sources == 0 {
            return Err(PridError::InvalidInput(
                "a lattice needs at least one source".to_string(),
            ));
        }
        if n_sources > MAX_SOURCES {
            return Err(PridError::LatticeTooLarge {
                n: n_sources,
                cap: MAX_SOURCES,
            });
        }

        let n_subsets = (1usize << n_sources) - 1;
        let subsets: Vec<SourceSet> = (1..=n_subsets as u32).map(SourceSet::from_bits).collect();
        let mut atoms = Vec::new();
        let mut current = Vec::new();
        extend_antichains(&subsets, 0, &mut current, &mut atoms);
        atoms.sort_unstable();

        let index: HashMap<Atom, usize> = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();

        // For the pairwise order scan, represent each atom as a bitmask
        // over subsets and precompute, per subset, the mask of its
        // non-empty sub-subsets; `a leq b` then needs one AND per part
        // of `b` instead of a nested loop.
        let sub_masks: Vec<u32> = (1..=n_subsets as u32)
            .map(|b| {
                (1..=n_subsets as u32)
                    .filter(|s| s & !b == 0)
                    .fold(0u32, |m, s| m | 1 << (s - 1))
            })
            .collect();
        let part_masks: Vec<u32> = atoms
            .iter()
            .map(|a| {
                a.parts
                    .iter()
                    .fold(0u32, |m, p| m | 1 << (p.bits() - 1))
            })
            .collect();

        let m = atoms.len();
        let mut down = BitMatrix::new(m);
        for (j, atom_j) in atoms.iter().enumerate() {
            let parts_j = atom_j.parts();
            for (i, mask_i) in part_masks.iter().enumerate() {
                if i != j
                    && parts_j
                        .iter()
                        .all(|b| mask_i & sub_masks[(b.bits() - 1) as usize] != 0)
                {
                    down.set(j, i);
                }
            }
        }

        let bottom_atom = Atom::from_unsorted(
            (0..n_sources).map(SourceSet::singleton).collect(),
        );
        let top_atom = Atom::from_unsorted(vec![SourceSet::full(n_sources)]);
        let bottom = index[&bottom_atom];
        let top = index[&top_atom];

        Ok(RedundancyLattice {
            n_sources,
            atoms,
            index,
            down,
            bottom,
            top,
            red: None,
            info: None,
        })
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_index(&self, atom: &Atom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    /// Index of the all-singletons atom, the minimum of the order.
    pub fn bottom(&self) -> usize {
        self.bottom
    }

    /// Index of the full-set atom, the maximum of the order.
    pub fn top(&self) -> usize {
        self.top
    }

    /// Strict order test on atom indices.
    pub fn is_below(&self, i: usize, j: usize) -> bool {
        self.down.get(j, i)
    }

    /// Per-atom redundancy values, if evaluated.
    pub fn red(&self) -> Option<&[f64]> {
        self.red.as_deref()
    }

    /// Per-atom information values, if Moebius inversion has run.
    pub fn info(&self) -> Option<&[f64]> {
        self.info.as_deref()
    }

    /// Evaluates an arbitrary redundancy function on every atom. Any
    /// previously inverted information values are discarded.
    pub fn evaluate_with(
        &mut self,
        mut redundancy: impl FnMut(&Atom) -> Result<f64>,
    ) -> Result<()> {
        let red = self
            .atoms
            .iter()
            .map(&mut redundancy)
            .collect::<Result<Vec<f64>>>()?;
        if let Some(bad) = red.iter().find(|v| !v.is_finite()) {
            return Err(PridError::Inconsistent {
                detail: format!("redundancy function produced non-finite value {bad}"),
            });
        }
        self.red = Some(red);
        self.info = None;
        Ok(())
    }

    /// Evaluates minimum-mutual-information redundancy on every atom.
    pub fn evaluate_mmi(&mut self, ctx: &InfoContext) -> Result<()> {
        if ctx.n_vars() != self.n_sources {
            return Err(PridError::InvalidInput(format!(
                "context has {} units but the lattice was built for {}",
                ctx.n_vars(),
                self.n_sources
            )));
        }
        self.evaluate_with(|atom| mmi_redundancy(ctx, atom))
    }

    /// Converts redundancy values into per-atom information: in a
    /// bottom-up linear extension of the order, each atom keeps whatever
    /// its redundancy adds over the atoms strictly below it. Atoms are
    /// visited by down-set size, ties broken by canonical order, so the
    /// result is deterministic.
    pub fn moebius_inversion(&mut self) -> Result<()> {
        let red = self.red.as_ref().ok_or_else(|| {
            PridError::InvalidInput(
                "redundancy values are unset; evaluate the lattice first".to_string(),
            )
        })?;
        let m = self.atoms.len();
        let counts: Vec<usize> = (0..m).map(|i| self.down.row_count(i)).collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_unstable_by_key(|&i| (counts[i], i));

        let mut info = vec![0.0; m];
        for &i in &order {
            let below: f64 = self.down.row_ones(i).map(|j| info[j]).sum();
            info[i] = red[i] - below;
        }
        self.info = Some(info);
        Ok(())
    }

    /// Sums atom informations into unique, redundant and synergistic
    /// shares according to [`atom_category`].
    pub fn coarse_grain(&self) -> Result<CoarseGraining> {
        let info = self.info.as_ref().ok_or_else(|| {
            PridError::InvalidInput(
                "information values are unset; run the Moebius inversion first".to_string(),
            )
        })?;
        let mut out = CoarseGraining {
            unique: vec![0.0; self.n_sources],
            redundancy: 0.0,
            synergy: 0.0,
        };
        for (atom, &v) in self.atoms.iter().zip(info) {
            match atom_category(atom) {
                AtomCategory::Redundant => out.redundancy += v,
                AtomCategory::Unique(i) => out.unique[i] += v,
                AtomCategory::Synergistic => out.synergy += v,
            }
        }
        Ok(out)
    }
}

fn extend_antichains(
    subsets: &[SourceSet],
    start: usize,
    current: &mut Vec<SourceSet>,
    out: &mut Vec<Atom>,
) {
    for i in start..subsets.len() {
        let s = subsets[i];
        if current.iter().all(|t| t.is_incomparable_with(s)) {
            current.push(s);
            out.push(Atom::from_unsorted(current.clone()));
            extend_antichains(subsets, i + 1, current, out);
            current.pop();
        }
    }
}

/// Minimum of the subset mutual informations over the atom's parts.
pub fn mmi_redundancy(ctx: &InfoContext, atom: &Atom) -> Result<f64> {
    let mut min = f64::INFINITY;
    for part in atom.parts() {
        min = min.min(ctx.subset_mutual_information(*part)?);
    }
    Ok(min)
}

/// Atom informations summed by category.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseGraining {
    pub unique: Vec<f64>,
    pub redundancy: f64,
    pub synergy: f64,
}

/// Information units for reported values. Internally everything is in
/// nats; conversion happens on the finished result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    Bits,
}

fn result_schema() -> String {
    "prid/result-v1".to_string()
}

/// The finished decomposition of predictive information.
///
/// The fields satisfy, up to accumulated roundoff:
///
/// * `pi == unique.iter().sum() + redundancy + synergy`
/// * `mi_single[i] == unique[i] + redundancy` for every `i`
/// * `delta_wms == pi - mi_single.iter().sum()`
/// * `delta_wms == synergy - (n - 1) * redundancy`
/// * `delta_pid == synergy - redundancy`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PridResult {
    #[serde(default = "result_schema")]
    pub schema: String,
    /// Predictive information of the whole network.
    pub pi: f64,
    /// Information each single unit's past carries about the next state.
    pub mi_single: Vec<f64>,
    /// Information only unit `i` carries.
    pub unique: Vec<f64>,
    /// Information every reported source shares.
    pub redundancy: f64,
    /// Information available only from sources jointly.
    pub synergy: f64,
    /// Whole-minus-sum balance.
    pub delta_wms: f64,
    /// Synergy-minus-redundancy balance.
    pub delta_pid: f64,
    pub units: Units,
    pub warnings: Vec<String>,
}

impl PridResult {
    pub fn n_sources(&self) -> usize {
        self.mi_single.len()
    }

    /// Returns a copy with all information values expressed in `units`.
    pub fn in_units(&self, units: Units) -> PridResult {
        if units == self.units {
            return self.clone();
        }
        let factor = match (self.units, units) {
            (Units::Nats, Units::Bits) => std::f64::consts::LN_2.recip(),
            (Units::Bits, Units::Nats) => std::f64::consts::LN_2,
            _ => unreachable!("equal units handled above"),
        };
        PridResult {
            schema: self.schema.clone(),
            pi: self.pi * factor,
            mi_single: self.mi_single.iter().map(|v| v * factor).collect(),
            unique: self.unique.iter().map(|v| v * factor).collect(),
            redundancy: self.redundancy * factor,
            synergy: self.synergy * factor,
            delta_wms: self.delta_wms * factor,
            delta_pid: self.delta_pid * factor,
            units,
            warnings: self.warnings.clone(),
        }
    }
}

/// Decomposes the predictive information of the context's model.
///
/// Runs the full pipeline: predictive information, single-source
/// informations, lattice construction, minimum-MI evaluation, Moebius
/// inversion, and assembly of the decomposition. Values are in nats.
pub fn decompose(ctx: &InfoContext) -> Result<PridResult> {
    decompose_detailed(ctx).map(|(result, _)| result)
}

/// Like [`decompose`], also returning the evaluated lattice for callers
/// that want per-atom values.
pub fn decompose_detailed(ctx: &InfoContext) -> Result<(PridResult, RedundancyLattice)> {
    let n = ctx.n_vars();
    let pi = ctx.predictive_information()?;
    let mi_single: Vec<f64> = (0..n)
        .map(|i| ctx.subset_mutual_information(SourceSet::singleton(i)))
        .collect::<Result<_>>()?;

    let mut lattice = RedundancyLattice::build(n)?;
    lattice.evaluate_mmi(ctx)?;
    lattice.moebius_inversion()?;
    let info = lattice.info().expect("inversion just ran");

    let atom_sum: f64 = info.iter().sum();
    let sum_tol = (1e-10 * lattice.n_atoms() as f64).max(1e-9);
    if (atom_sum - pi).abs() > sum_tol {
        return Err(PridError::Inconsistent {
            detail: format!(
                "atom informations sum to {atom_sum:.12e} but predictive information is {pi:.12e}"
            ),
        });
    }

    // With a single source there is nothing to share: all predictive
    // information is unique to that source. Otherwise the redundancy is
    // the bottom atom's value, the smallest single-source information, so
    // each unique share is non-negative and the per-source split
    // mi_single[i] = unique[i] + redundancy holds exactly.
    let redundancy = if n == 1 {
        0.0
    } else {
        lattice.red().expect("evaluated")[lattice.bottom()]
    };
    let unique: Vec<f64> = mi_single.iter().map(|mi| mi - redundancy).collect();
    let synergy = pi - unique.iter().sum::<f64>() - redundancy;
    let delta_wms = pi - mi_single.iter().sum::<f64>();
    let delta_pid = synergy - redundancy;

    let mut residuals = vec![
        pi - (unique.iter().sum::<f64>() + redundancy + synergy),
        delta_wms - (synergy - (n as f64 - 1.0) * redundancy),
    ];
    residuals.extend(
        mi_single
            .iter()
            .zip(&unique)
            .map(|(mi, u)| mi - (u + redundancy)),
    );
    if let Some(bad) = residuals.iter().find(|r| r.abs() > 1e-9) {
        return Err(PridError::Inconsistent {
            detail: format!("decomposition identity violated by {bad:.3e} nats"),
        });
    }

    let mut warnings = Vec::new();
    if ctx.q_raised() {
        warnings.push(format!(
            "embedding order was raised to the model order ({})",
            ctx.q()
        ));
    }
    for (what, raw) in ctx.clamped_measures() {
        warnings.push(format!("{what}: raw value {raw:.3e} nats clamped to zero"));
    }
    for subset in ctx.regularized_subsets() {
        warnings.push(format!(
            "restricted model for subset {subset} required ridge regularization"
        ));
    }
    let negatives: Vec<(usize, f64)> = info
        .iter()
        .enumerate()
        .filter(|(_, v)| **v < -NEGATIVE_INFO_TOLERANCE)
        .map(|(i, v)| (i, *v))
        .collect();
    if let Some(&(worst_idx, worst)) = negatives
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
    {
        warnings.push(format!(
            "{} lattice atoms carry negative information (most negative {worst:.3e} nats at {})",
            negatives.len(),
            lattice.atoms()[worst_idx]
        ));
    }

    let result = PridResult {
        schema: result_schema(),
        pi,
        mi_single,
        unique,
        redundancy,
        synergy,
        delta_wms,
        delta_pid,
        units: Units::Nats,
        warnings,
    };
    Ok((result, lattice))
}
