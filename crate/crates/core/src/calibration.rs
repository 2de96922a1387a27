//! Update rules, their equivalence classes, calibration and sharp calibration.
//!
//! Every comparison is between `Y`-projections. Sets are interned so that repeated
//! inclusion tests during the partition search hit a cache instead of the LP.

use std::collections::HashMap;
use std::fmt;

use crate::credal::{marginal_y, posterior_y, CredalSet, Partition, ProblemSpace};
use crate::error::{Error, Result};
use crate::polytope::{subset, VPolytope};

/// Largest `|X|` for which every partition is enumerated (Bell(8) = 4140).
pub const MAX_PARTITION_X: usize = 8;

/// A map from a credal set and an observation to a set of distributions on `Y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UpdateRule {
    /// `P | X = x`.
    Standard,
    /// `P_Y`, whatever is observed.
    Ignore,
    /// `P | C(x)` for the cell `C(x)` containing `x`.
    Partition(Partition),
    /// Fixed `Y`-projections per observation; `None` where the rule is undefined.
    Table(Vec<Option<VPolytope>>),
}

impl fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Standard => f.write_str("standard conditioning"),
            Self::Ignore => f.write_str("ignore the observation"),
            Self::Partition(c) => write!(f, "conditioning on the cells of {:?}", c.cells()),
            Self::Table(_) => f.write_str("tabulated rule"),
        }
    }
}

impl UpdateRule {
    /// Parses `standard`, `ignore` or `partition:<cells>` with cells as in [`Partition::parse`].
    pub fn parse(space: &ProblemSpace, text: &str) -> Result<Self> {
        match text.trim() {
            "standard" => Ok(Self::Standard),
            "ignore" => Ok(Self::Ignore),
            t => match t.strip_prefix("partition:") {
                Some(cells) => Ok(Self::Partition(Partition::parse(space, cells)?)),
                None => Err(Error::Invalid(format!(
                    "unknown update rule {t:?} (expected standard, ignore or partition:a,b|c)"
                ))),
            },
        }
    }
}

/// Interned `Y`-sets with a memo of pairwise inclusions.
struct Sets<'a> {
    p: &'a CredalSet,
    sets: Vec<VPolytope>,
    by_mask: HashMap<u32, Option<usize>>,
    inclusion: HashMap<(usize, usize), bool>,
}

impl<'a> Sets<'a> {
    fn new(p: &'a CredalSet) -> Self {
        Self {
            p,
            sets: Vec::new(),
            by_mask: HashMap::new(),
            inclusion: HashMap::new(),
        }
    }

    fn intern(&mut self, s: VPolytope) -> usize {
        if let Some(i) = self.sets.iter().position(|t| *t == s) {
            return i;
        }
        self.sets.push(s);
        self.sets.len() - 1
    }

    /// `(P | E)_Y` for the event encoded by `mask`, or `None` when no generator charges it.
    fn posterior(&mut self, mask: u32) -> Result<Option<usize>> {
        if let Some(&id) = self.by_mask.get(&mask) {
            return Ok(id);
        }
        let event = members(mask);
        let id = match posterior_y(self.p, &event) {
            Ok(s) => Some(self.intern(s)),
            Err(Error::UndefinedConditional(_)) => None,
            Err(e) => return Err(e),
        };
        self.by_mask.insert(mask, id);
        Ok(id)
    }

    fn includes(&mut self, inner: usize, outer: usize) -> Result<bool> {
        if inner == outer {
            return Ok(true);
        }
        if let Some(&b) = self.inclusion.get(&(inner, outer)) {
            return Ok(b);
        }
        let b = subset(&self.sets[inner], &self.sets[outer])?;
        self.inclusion.insert((inner, outer), b);
        Ok(b)
    }

    fn equal(&mut self, a: usize, b: usize) -> Result<bool> {
        Ok(self.includes(a, b)? && self.includes(b, a)?)
    }

    /// `Π(P, x)_Y` for every `x`, as interned ids.
    fn images(&mut self, rule: &UpdateRule) -> Result<Vec<Option<usize>>> {
        let nx = self.p.space().nx();
        match rule {
            UpdateRule::Standard => (0..nx).map(|x| self.posterior(1 << x)).collect(),
            UpdateRule::Ignore => {
                let id = self.intern(marginal_y(self.p)?);
                Ok(vec![Some(id); nx])
            }
            UpdateRule::Partition(c) => {
                if c.cells().iter().map(Vec::len).sum::<usize>() != nx {
                    return Err(Error::DimensionMismatch(
                        "partition does not cover X".into(),
                    ));
                }
                (0..nx)
                    .map(|x| self.posterior(mask_of(c.cell_of(x))))
                    .collect()
            }
            UpdateRule::Table(t) => {
                if t.len() != nx {
                    return Err(Error::DimensionMismatch(format!(
                        "table has {} entries for {nx} observations",
                        t.len()
                    )));
                }
                t.iter()
                    .map(|s| match s {
                        Some(s) if s.dim() != self.p.space().ny() => Err(Error::DimensionMismatch(
                            "tabulated set has the wrong dimension".into(),
                        )),
                        Some(s) => Ok(Some(self.intern(s.clone()))),
                        None => Ok(None),
                    })
                    .collect()
            }
        }
    }
}

fn members(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

fn mask_of(cell: &[usize]) -> u32 {
    cell.iter().fold(0, |m, &x| m | 1 << x)
}

fn check_x_count(p: &CredalSet) -> Result<()> {
    if p.space().nx() > 31 {
        return Err(Error::SizeLimit(
            "at most 31 observations are supported".into(),
        ));
    }
    Ok(())
}

/// The classes `[x]` of observations with equal updated `Y`-sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classes {
    pub partition: Partition,
    /// Index into `partition.cells()` of the observations where the rule is undefined.
    pub undefined_cell: Option<usize>,
}

fn classes_from(
    sets: &mut Sets,
    images: &[Option<usize>],
) -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
    let mut cells: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut undefined = Vec::new();
    for (x, img) in images.iter().enumerate() {
        let Some(id) = *img else {
            undefined.push(x);
            continue;
        };
        let mut placed = false;
        for (rep, cell) in cells.iter_mut() {
            if sets.equal(*rep, id)? {
                cell.push(x);
                placed = true;
                break;
            }
        }
        if !placed {
            cells.push((id, vec![x]));
        }
    }
    Ok((cells.into_iter().map(|(_, c)| c).collect(), undefined))
}

fn build_classes(nx: usize, defined: Vec<Vec<usize>>, undefined: Vec<usize>) -> Result<Classes> {
    let mut all = defined;
    if !undefined.is_empty() {
        all.push(undefined.clone());
    }
    let partition = Partition::new(nx, all)?;
    let undefined_cell = undefined.first().map(|&x| {
        partition
            .cells()
            .iter()
            .position(|c| c.contains(&x))
            .expect("every x has a cell")
    });
    Ok(Classes {
        partition,
        undefined_cell,
    })
}

pub fn equivalence_classes(rule: &UpdateRule, p: &CredalSet) -> Result<Classes> {
    check_x_count(p)?;
    let mut sets = Sets::new(p);
    let images = sets.images(rule)?;
    let (defined, undefined) = classes_from(&mut sets, &images)?;
    build_classes(p.space().nx(), defined, undefined)
}

/// Both inclusions between `(P | [x])_Y` and `Π(P, x)_Y` on one class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassCheck {
    pub cell: Vec<usize>,
    /// `(P | [x])_Y`, or `None` when every generator gives the class probability 0.
    pub posterior: Option<VPolytope>,
    pub image: VPolytope,
    /// `(P | [x])_Y ⊆ Π(P, x)_Y`; `None` for classes excluded from the test.
    pub forward: Option<bool>,
    /// `Π(P, x)_Y ⊆ (P | [x])_Y`.
    pub backward: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CalibrationReport {
    pub classes: Classes,
    pub per_class: Vec<ClassCheck>,
    pub calibrated: bool,
    pub semi_calibrated: bool,
}

/// Defined classes, undefined observations and the inclusion checks per defined class.
type Calibrated = (Vec<Vec<usize>>, Vec<usize>, Vec<Checked>);

fn calibration_from(sets: &mut Sets, images: &[Option<usize>]) -> Result<Calibrated> {
    let (defined, undefined) = classes_from(sets, images)?;
    let mut checks = Vec::with_capacity(defined.len());
    for cell in &defined {
        let image = images[cell[0]].expect("defined class");
        let checked = match sets.posterior(mask_of(cell))? {
            None => Checked {
                posterior: None,
                image,
                forward: None,
                backward: None,
            },
            Some(post) => Checked {
                posterior: Some(post),
                image,
                forward: Some(sets.includes(post, image)?),
                backward: Some(sets.includes(image, post)?),
            },
        };
        checks.push(checked);
    }
    Ok((defined, undefined, checks))
}

struct Checked {
    posterior: Option<usize>,
    image: usize,
    forward: Option<bool>,
    backward: Option<bool>,
}

fn verdicts(checks: &[Checked]) -> (bool, bool) {
    let forward = checks.iter().all(|c| c.forward != Some(false));
    let backward = checks.iter().all(|c| c.backward != Some(false));
    (forward && backward, forward)
}

pub fn check_calibration(rule: &UpdateRule, p: &CredalSet) -> Result<CalibrationReport> {
    check_x_count(p)?;
    let mut sets = Sets::new(p);
    let images = sets.images(rule)?;
    let (defined, undefined, checks) = calibration_from(&mut sets, &images)?;
    let (calibrated, semi_calibrated) = verdicts(&checks);
    let per_class = defined
        .iter()
        .zip(&checks)
        .map(|(cell, c)| ClassCheck {
            cell: cell.clone(),
            posterior: c.posterior.map(|i| sets.sets[i].clone()),
            image: sets.sets[c.image].clone(),
            forward: c.forward,
            backward: c.backward,
        })
        .collect();
    Ok(CalibrationReport {
        classes: build_classes(p.space().nx(), defined, undefined)?,
        per_class,
        calibrated,
        semi_calibrated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Narrowness {
    Narrower,
    StrictlyNarrower,
    NotNarrower,
}

impl fmt::Display for Narrowness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Narrower => "narrower",
            Self::StrictlyNarrower => "strictly narrower",
            Self::NotNarrower => "not narrower",
        })
    }
}

fn compare(
    sets: &mut Sets,
    support: &[usize],
    a: &[Option<usize>],
    b: &[Option<usize>],
) -> Result<Narrowness> {
    let mut strict = false;
    for &x in support {
        let (Some(i), Some(j)) = (a[x], b[x]) else {
            return Err(Error::Invalid(format!(
                "update rule undefined at observation {}",
                sets.p.space().x_labels()[x]
            )));
        };
        if !sets.includes(i, j)? {
            return Ok(Narrowness::NotNarrower);
        }
        strict |= !sets.includes(j, i)?;
    }
    Ok(if strict {
        Narrowness::StrictlyNarrower
    } else {
        Narrowness::Narrower
    })
}

/// Whether `r1` returns a subset of what `r2` returns at every observation with positive
/// probability.
pub fn narrower(r1: &UpdateRule, r2: &UpdateRule, p: &CredalSet) -> Result<Narrowness> {
    check_x_count(p)?;
    let mut sets = Sets::new(p);
    let a = sets.images(r1)?;
    let b = sets.images(r2)?;
    compare(&mut sets, &crate::credal::support_x(p), &a, &b)
}

fn require_convex(p: &CredalSet) -> Result<()> {
    if !p.is_convex() {
        return Err(Error::Unsupported(
            "partition-based calibration results assume a convex credal set".into(),
        ));
    }
    Ok(())
}

/// One refinement step: the classes of conditioning on the cells of `c`.
pub fn refine_partition(c: &Partition, p: &CredalSet) -> Result<Partition> {
    require_convex(p)?;
    Ok(equivalence_classes(&UpdateRule::Partition(c.clone()), p)?.partition)
}

/// Refines from `start` until the partition no longer changes.
pub fn refinement_fixpoint(start: &Partition, p: &CredalSet) -> Result<Partition> {
    let mut c = start.clone();
    loop {
        let next = refine_partition(&c, p)?;
        if next == c {
            return Ok(c);
        }
        c = next;
    }
}

/// Every partition of `0..n`, as restricted-growth strings in lexicographic order.
pub fn all_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        out.push(Partition::from_blocks(&rgs));
        // Advance the rightmost position that may still grow.
        let mut i = n;
        loop {
            if i <= 1 {
                return out;
            }
            i -= 1;
            let bound = rgs[..i].iter().max().copied().unwrap_or(0) + 1;
            if rgs[i] < bound {
                rgs[i] += 1;
                for r in &mut rgs[i + 1..] {
                    *r = 0;
                }
                break;
            }
        }
    }
}

struct PartitionSearch<'a> {
    sets: Sets<'a>,
    support: Vec<usize>,
    partitions: Vec<Partition>,
    images: Vec<Vec<Option<usize>>>,
    calibrated: Vec<bool>,
}

impl<'a> PartitionSearch<'a> {
    fn new(p: &'a CredalSet) -> Result<Self> {
        require_convex(p)?;
        let nx = p.space().nx();
        if nx > MAX_PARTITION_X {
            return Err(Error::SizeLimit(format!(
                "partition search needs |X| ≤ {MAX_PARTITION_X}, got {nx}"
            )));
        }
        let mut sets = Sets::new(p);
        let partitions = all_partitions(nx);
        let mut images = Vec::with_capacity(partitions.len());
        let mut calibrated = Vec::with_capacity(partitions.len());
        for c in &partitions {
            let img = sets.images(&UpdateRule::Partition(c.clone()))?;
            let (_, _, checks) = calibration_from(&mut sets, &img)?;
            calibrated.push(verdicts(&checks).0);
            images.push(img);
        }
        Ok(Self {
            sets,
            support: crate::credal::support_x(p),
            partitions,
            images,
            calibrated,
        })
    }

    fn index_of(&self, c: &Partition) -> usize {
        self.partitions
            .iter()
            .position(|q| q == c)
            .expect("all partitions enumerated")
    }

    /// First calibrated partition whose conditioning is strictly narrower than `images`.
    fn strictly_narrower_than(&mut self, images: &[Option<usize>]) -> Result<Option<usize>> {
        for i in 0..self.partitions.len() {
            if !self.calibrated[i] {
                continue;
            }
            let candidate = self.images[i].clone();
            if compare(&mut self.sets, &self.support.clone(), &candidate, images)?
                == Narrowness::StrictlyNarrower
            {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

/// Why the chosen partition is sharp.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharpCertificate {
    pub partitions_examined: usize,
    pub calibrated_partitions: usize,
    /// Calibrated partitions with no calibrated partition strictly narrower, in enumeration order.
    pub minimal: Vec<Partition>,
    /// The refinement fixpoint from the singleton partition.
    pub fixpoint: Partition,
    pub fixpoint_is_minimal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharpPartition {
    pub partition: Partition,
    pub certificate: SharpCertificate,
}

/// A partition whose conditioning is sharply calibrated relative to a convex `p`.
///
/// This is the refinement fixpoint from singletons when that is minimal. Otherwise it is
/// the first minimal partition below the fixpoint.
pub fn sharp_partition(p: &CredalSet) -> Result<SharpPartition> {
    let mut search = PartitionSearch::new(p)?;
    let nx = p.space().nx();
    let mut minimal = Vec::new();
    for i in 0..search.partitions.len() {
        if search.calibrated[i] {
            let img = search.images[i].clone();
            if search.strictly_narrower_than(&img)?.is_none() {
                minimal.push(i);
            }
        }
    }
    let fixpoint = refinement_fixpoint(&Partition::singletons(nx), p)?;
    let fi = search.index_of(&fixpoint);
    let fixpoint_is_minimal = minimal.contains(&fi);
    let chosen = if fixpoint_is_minimal {
        fi
    } else {
        let below = search.images[fi].clone();
        let mut found = None;
        for &m in &minimal {
            let img = search.images[m].clone();
            let support = search.support.clone();
            if compare(&mut search.sets, &support, &img, &below)? != Narrowness::NotNarrower {
                found = Some(m);
                break;
            }
        }
        found
            .or_else(|| minimal.first().copied())
            .ok_or_else(|| Error::Invalid("no partition gives a calibrated conditioning".into()))?
    };
    let partition = search.partitions[chosen].clone();
    debug_assert!(check_calibration(&UpdateRule::Partition(partition.clone()), p)?.calibrated);
    Ok(SharpPartition {
        partition,
        certificate: SharpCertificate {
            partitions_examined: search.partitions.len(),
            calibrated_partitions: search.calibrated.iter().filter(|&&c| c).count(),
            minimal: minimal
                .iter()
                .map(|&i| search.partitions[i].clone())
                .collect(),
            fixpoint,
            fixpoint_is_minimal,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharpnessReport {
    pub calibrated: bool,
    pub sharp: bool,
    /// A calibrated partition whose conditioning is strictly narrower than the rule.
    pub witness: Option<Partition>,
}

/// Sharp calibration relative to a convex `p`: calibrated, and no calibrated rule is
/// strictly narrower. Calibrated rules are equivalent to partition conditionings, so
/// searching partitions is enough.
pub fn is_sharply_calibrated(rule: &UpdateRule, p: &CredalSet) -> Result<SharpnessReport> {
    let mut search = PartitionSearch::new(p)?;
    let images = search.sets.images(rule)?;
    let (_, _, checks) = calibration_from(&mut search.sets, &images)?;
    let calibrated = verdicts(&checks).0;
    if !calibrated {
        return Ok(SharpnessReport {
            calibrated,
            sharp: false,
            witness: None,
        });
    }
    let witness = search
        .strictly_narrower_than(&images)?
        .map(|i| search.partitions[i].clone());
    Ok(SharpnessReport {
        calibrated,
        sharp: witness.is_none(),
        witness,
    })
}
