//! Depth-truncated invariant laminations: construction from generating
//! families by forward orbits and pullbacks, and validation of the
//! invariance axioms on the finite data.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::chords::{
    edge_crosses, edge_pairs, hull_edges, image_class, is_covering_on_class, noncrossing, unlinked,
    AngleClass, Leaf,
};
use crate::circle::{preimages, sigma, Angle};
use crate::error::{Error, Result};

/// How a lamination's classes relate to each other. Equivalence-relation
/// laminations partition their angles; geometric prelaminations allow
/// classes to share endpoints as long as no hulls cross.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Equivalence,
    Geometric,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Equivalence => write!(f, "equivalence"),
            Mode::Geometric => write!(f, "geometric"),
        }
    }
}

/// Where a class came from during generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Generator,
    ForwardImage,
    Pullback { level: u32 },
    /// Explicitly supplied level-1 preimage.
    Explicit,
    /// Loaded from a file; treated as level 0.
    External,
}

impl Provenance {
    pub fn level(&self) -> u32 {
        match self {
            Provenance::Generator | Provenance::ForwardImage | Provenance::External => 0,
            Provenance::Explicit => 1,
            Provenance::Pullback { level } => *level,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Generator => write!(f, "generator"),
            Provenance::ForwardImage => write!(f, "forward-image"),
            Provenance::Pullback { level } => write!(f, "pullback({level})"),
            Provenance::Explicit => write!(f, "explicit(1)"),
            Provenance::External => write!(f, "external"),
        }
    }
}

/// A finite family of classes with a degree and a truncation depth.
/// Classes are kept sorted by their angle lists, so equal inputs give
/// byte-identical structures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lamination {
    degree: u32,
    mode: Mode,
    depth: u32,
    classes: Vec<AngleClass>,
    provenance: Vec<Provenance>,
}

impl Lamination {
    /// Builds a lamination after light structural checks; use
    /// [`Lamination::validate`] for the axiom report.
    pub fn new(
        degree: u32,
        mode: Mode,
        depth: u32,
        classes: Vec<(AngleClass, Provenance)>,
    ) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidDegree(degree));
        }
        for (c, _) in &classes {
            if c.len() < 2 {
                return Err(Error::InvalidLamination(format!(
                    "class {{{c}}} has fewer than 2 angles"
                )));
            }
        }
        let mut classes = classes;
        classes.sort_by(|a, b| a.0.cmp(&b.0));
        classes.dedup_by(|a, b| a.0 == b.0);
        let (classes, provenance) = classes.into_iter().unzip();
        Ok(Lamination {
            degree,
            mode,
            depth,
            classes,
            provenance,
        })
    }

    pub fn empty(degree: u32, mode: Mode) -> Result<Self> {
        Self::new(degree, mode, 0, Vec::new())
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn classes(&self) -> &[AngleClass] {
        &self.classes
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn find_class(&self, c: &AngleClass) -> Option<usize> {
        self.classes.binary_search(c).ok()
    }

    /// All hull edges of all classes, deduplicated.
    pub fn chords(&self) -> BTreeSet<Leaf> {
        let mut out = BTreeSet::new();
        for c in &self.classes {
            if let Ok(edges) = hull_edges(c) {
                out.extend(edges);
            }
        }
        out
    }

    /// Classes whose image is a single angle.
    pub fn all_critical_classes(&self) -> Vec<&AngleClass> {
        self.classes
            .iter()
            .filter(|c| image_class(self.degree, c).map(|i| i.len() == 1).unwrap_or(false))
            .collect()
    }

    /// True when no class drops cardinality under the map; laminations
    /// generated from non-critical families have this property.
    pub fn has_no_critical_class(&self) -> bool {
        self.classes
            .iter()
            .all(|c| image_class(self.degree, c).map(|i| i.len() == c.len()).unwrap_or(false))
    }

    pub fn validate(&self) -> InvarianceReport {
        validate(self)
    }
}

/// Which preimage pairing the pullback prefers when several are valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairingPreference {
    /// Take the rotational siblings `{(a+i)/d : a in c}` whenever they
    /// are compatible with the existing classes.
    #[default]
    RotationalFirst,
    /// Prefer a pairing whose classes are strictly unlinked from all
    /// existing classes, falling back to the rotational choice.
    DisjointFirst,
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub depth: u32,
    pub pairing: PairingPreference,
    pub explicit_preimages: Option<Vec<AngleClass>>,
    pub mode: Mode,
}

impl GenerateOptions {
    pub fn depth(depth: u32) -> Self {
        GenerateOptions {
            depth,
            pairing: PairingPreference::default(),
            explicit_preimages: None,
            mode: Mode::Geometric,
        }
    }

    pub fn with_pairing(mut self, pairing: PairingPreference) -> Self {
        self.pairing = pairing;
        self
    }

    pub fn with_explicit_preimages(mut self, pre: Vec<AngleClass>) -> Self {
        self.explicit_preimages = Some(pre);
        self
    }
}

/// A pullback class that was dropped because no compatible placement
/// existed.
#[derive(Debug, Clone)]
pub struct Discarded {
    pub class: AngleClass,
    pub level: u32,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub lamination: Lamination,
    pub discarded: Vec<Discarded>,
}

/// Builds the depth-truncated lamination generated by a family: the full
/// forward orbit of every generator, then `depth` levels of preimage
/// classes. Level `k` pullbacks map onto level `k-1` classes; the d
/// siblings of one step are pairwise unlinked.
pub fn generate(d: u32, generators: &[AngleClass], opts: GenerateOptions) -> Result<Generated> {
    if d < 2 {
        return Err(Error::InvalidDegree(d));
    }
    if generators.is_empty() {
        return Err(Error::NotAGeneratingFamily("no generators".into()));
    }
    for g in generators {
        if g.len() < 2 {
            return Err(Error::NotAGeneratingFamily(format!(
                "generator {{{g}}} has fewer than 2 angles"
            )));
        }
    }
    for (i, a) in generators.iter().enumerate() {
        for b in &generators[i + 1..] {
            if !unlinked(a, b) {
                return Err(Error::NotAGeneratingFamily(format!(
                    "generators {{{a}}} and {{{b}}} are not unlinked"
                )));
            }
        }
    }

    // forward closure
    let mut classes: Vec<(AngleClass, Provenance)> = generators
        .iter()
        .map(|g| (g.clone(), Provenance::Generator))
        .collect();
    let mut queue: VecDeque<AngleClass> = generators.iter().cloned().collect();
    while let Some(c) = queue.pop_front() {
        let img = image_class(d, &c)?;
        if img.len() < c.len() {
            return Err(Error::PrecriticalGenerator(format!(
                "forward image {{{c}}} -> {{{img}}} loses angles"
            )));
        }
        if classes.iter().any(|(e, _)| e == &img) {
            continue;
        }
        for (e, _) in &classes {
            if !noncrossing(e, &img) {
                return Err(Error::NotAGeneratingFamily(format!(
                    "forward image {{{img}}} crosses {{{e}}}"
                )));
            }
        }
        classes.push((img.clone(), Provenance::ForwardImage));
        queue.push_back(img);
    }

    let mut discarded = Vec::new();
    // previous level's classes, to be pulled back next
    let mut frontier: Vec<AngleClass> = classes.iter().map(|(c, _)| c.clone()).collect();
    frontier.sort();

    for level in 1..=opts.depth {
        let mut next_frontier: Vec<AngleClass> = Vec::new();
        if level == 1 && opts.explicit_preimages.is_some() {
            let explicit = opts.explicit_preimages.as_ref().unwrap();
            for p in explicit {
                if p.len() < 2 {
                    return Err(Error::InvalidLamination(format!(
                        "explicit preimage {{{p}}} has fewer than 2 angles"
                    )));
                }
                let img = image_class(d, p)?;
                if !classes.iter().any(|(e, _)| e == &img) {
                    return Err(Error::InvalidLamination(format!(
                        "explicit preimage {{{p}}} does not map onto a class"
                    )));
                }
                if let Some(bad) = classes.iter().find(|(e, _)| !noncrossing(e, p)) {
                    return Err(Error::InvalidLamination(format!(
                        "explicit preimage {{{p}}} crosses {{{}}}",
                        bad.0
                    )));
                }
                if classes.iter().all(|(e, _)| e != p) {
                    classes.push((p.clone(), Provenance::Explicit));
                }
                next_frontier.push(p.clone());
            }
        } else {
            for c in &frontier {
                let existing: Vec<&AngleClass> = classes.iter().map(|(e, _)| e).collect();
                match choose_pullback(d, c, &existing, opts.pairing)? {
                    PullbackChoice::Pairing(siblings) => {
                        for s in siblings {
                            if classes.iter().all(|(e, _)| e != &s) {
                                classes.push((s.clone(), Provenance::Pullback { level }));
                            }
                            next_frontier.push(s);
                        }
                    }
                    PullbackChoice::Partial { kept, dropped } => {
                        for s in kept {
                            if classes.iter().all(|(e, _)| e != &s) {
                                classes.push((s.clone(), Provenance::Pullback { level }));
                            }
                            next_frontier.push(s);
                        }
                        for s in dropped {
                            discarded.push(Discarded {
                                class: s,
                                level,
                                reason: format!("crosses existing classes (preimage of {{{c}}})"),
                            });
                        }
                    }
                }
            }
        }
        next_frontier.sort();
        next_frontier.dedup();
        frontier = next_frontier;
    }

    let lamination = Lamination::new(d, opts.mode, opts.depth, classes)?;
    Ok(Generated {
        lamination,
        discarded,
    })
}

enum PullbackChoice {
    Pairing(Vec<AngleClass>),
    Partial {
        kept: Vec<AngleClass>,
        dropped: Vec<AngleClass>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum SiblingStatus {
    Duplicate,
    Disjoint,
    NonCrossing,
    Crossing,
}

/// Enumerates the pairings of the preimage fibers into d transversal
/// classes, keeps those whose siblings are pairwise unlinked, and picks
/// one according to the preference. Falls back to keeping the compatible
/// rotational siblings individually when no full pairing fits.
fn choose_pullback(
    d: u32,
    c: &AngleClass,
    existing: &[&AngleClass],
    pref: PairingPreference,
) -> Result<PullbackChoice> {
    let m = c.len();
    let fibers: Vec<Vec<Angle>> = c
        .iter()
        .map(|a| preimages(d, a))
        .collect::<Result<Vec<_>>>()?;

    let rotational: Vec<AngleClass> = (0..d as usize)
        .map(|i| AngleClass::new(fibers.iter().map(|f| f[i].clone()).collect()))
        .collect::<Result<Vec<_>>>()?;

    let mut status_memo: BTreeMap<AngleClass, SiblingStatus> = BTreeMap::new();
    let mut status = |s: &AngleClass| -> SiblingStatus {
        if let Some(&st) = status_memo.get(s) {
            return st;
        }
        let mut st = SiblingStatus::Disjoint;
        for e in existing {
            if *e == s {
                st = SiblingStatus::Duplicate;
                break;
            }
            if !noncrossing(e, s) {
                st = SiblingStatus::Crossing;
                break;
            }
            if !unlinked(e, s) {
                st = SiblingStatus::NonCrossing;
            }
        }
        status_memo.insert(s.clone(), st);
        st
    };

    let tier = |pairing: &[AngleClass], status: &mut dyn FnMut(&AngleClass) -> SiblingStatus| {
        let mut worst = SiblingStatus::Duplicate;
        for s in pairing {
            worst = worst.max(status(s));
        }
        worst
    };

    let rot_tier = tier(&rotational, &mut status);
    if pref == PairingPreference::RotationalFirst && rot_tier <= SiblingStatus::NonCrossing {
        return Ok(PullbackChoice::Pairing(rotational));
    }

    // enumerate all pairings with the first fiber fixed to the identity
    let mut valid: Vec<Vec<AngleClass>> = Vec::new();
    let dd = d as usize;
    let mut assignment: Vec<Vec<usize>> = vec![Vec::with_capacity(m); dd];
    let mut nodes = 0usize;
    const NODE_CAP: usize = 200_000;

    fn partial_ok(fibers: &[Vec<Angle>], assignment: &[Vec<usize>]) -> bool {
        let partials: Vec<AngleClass> = assignment
            .iter()
            .filter(|rows| !rows.is_empty())
            .map(|rows| {
                AngleClass::new(
                    rows.iter()
                        .enumerate()
                        .map(|(t, &slot)| fibers[t][slot].clone())
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        for i in 0..partials.len() {
            for j in i + 1..partials.len() {
                if !unlinked(&partials[i], &partials[j]) {
                    return false;
                }
            }
        }
        true
    }

    fn recurse(
        fibers: &[Vec<Angle>],
        t: usize,
        assignment: &mut Vec<Vec<usize>>,
        valid: &mut Vec<Vec<AngleClass>>,
        nodes: &mut usize,
        cap: usize,
    ) {
        let m = fibers.len();
        let dd = assignment.len();
        if *nodes > cap {
            return;
        }
        *nodes += 1;
        if t == m {
            let pairing: Vec<AngleClass> = assignment
                .iter()
                .map(|rows| {
                    AngleClass::new(
                        rows.iter()
                            .enumerate()
                            .map(|(tt, &slot)| fibers[tt][slot].clone())
                            .collect(),
                    )
                    .unwrap()
                })
                .collect();
            valid.push(pairing);
            return;
        }
        // permutations of slots for fiber t; fiber 0 fixed to identity
        let perms: Vec<Vec<usize>> = if t == 0 {
            vec![(0..dd).collect()]
        } else {
            permutations(dd)
        };
        for perm in perms {
            for (k, &slot) in perm.iter().enumerate() {
                assignment[k].push(slot);
            }
            if partial_ok(fibers, assignment) {
                recurse(fibers, t + 1, assignment, valid, nodes, cap);
            }
            for row in assignment.iter_mut() {
                row.pop();
            }
        }
    }

    recurse(&fibers, 0, &mut assignment, &mut valid, &mut nodes, NODE_CAP);

    let mut best: Option<(SiblingStatus, bool, Vec<AngleClass>)> = None;
    for mut pairing in valid {
        let t = tier(&pairing, &mut status);
        if t == SiblingStatus::Crossing {
            continue;
        }
        pairing.sort();
        let is_rot = {
            let mut r = rotational.clone();
            r.sort();
            r == pairing
        };
        let rank = (t, !is_rot, pairing.clone());
        let better = match &best {
            None => true,
            Some((bt, bnr, bp)) => rank < (*bt, *bnr, bp.clone()),
        };
        if better {
            best = Some(rank);
        }
    }

    if let Some((_, _, pairing)) = best {
        return Ok(PullbackChoice::Pairing(pairing));
    }

    // nothing pairs up: keep the rotational siblings that fit, drop the rest
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for s in rotational {
        if status(&s) <= SiblingStatus::NonCrossing {
            kept.push(s);
        } else {
            dropped.push(s);
        }
    }
    Ok(PullbackChoice::Partial { kept, dropped })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    let mut used = vec![false; n];
    fn go(n: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(n, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    go(n, &mut cur, &mut used, &mut out);
    out
}

/// Per-axiom findings of [`validate`]. A verdict passes exactly when its
/// violation list is empty; closedness is not decidable on finite data
/// and is reported as not applicable.
#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub mode: Mode,
    pub degree: u32,
    /// Pairs of class indices whose hulls cross (geometric mode) or fail
    /// strict unlinkedness (equivalence mode).
    pub unlinked_violations: Vec<(usize, usize)>,
    pub forward_violations: Vec<ForwardViolation>,
    /// Classes at a level inside the truncation lacking d disjoint
    /// preimage leaves for some hull edge.
    pub backward_violations: Vec<usize>,
    /// Classes at the truncation boundary, not checkable.
    pub backward_unchecked: usize,
    pub covering_violations: Vec<usize>,
    pub covering_checked: usize,
    /// Classes on which the map is not injective.
    pub critical_classes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ForwardViolation {
    pub class: usize,
    pub image: AngleClass,
    /// Existing class sharing the most angles with the image, if any.
    pub nearest: Option<usize>,
}

impl InvarianceReport {
    pub fn e2_pass(&self) -> bool {
        self.unlinked_violations.is_empty()
    }

    pub fn d1_pass(&self) -> bool {
        self.forward_violations.is_empty()
    }

    pub fn d2_pass(&self) -> bool {
        self.backward_violations.is_empty()
    }

    pub fn d3_pass(&self) -> bool {
        self.covering_violations.is_empty()
    }

    pub fn all_pass(&self) -> bool {
        self.e2_pass() && self.d1_pass() && self.d2_pass() && self.d3_pass()
    }
}

impl fmt::Display for InvarianceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |ok: bool| if ok { "pass" } else { "fail" };
        writeln!(f, "mode: {}", self.mode)?;
        writeln!(f, "degree: {}", self.degree)?;
        writeln!(
            f,
            "E1 closed: not-applicable (finite truncation)"
        )?;
        writeln!(
            f,
            "E2 unlinked: {} ({} violations)",
            verdict(self.e2_pass()),
            self.unlinked_violations.len()
        )?;
        writeln!(
            f,
            "D1 forward: {} ({} violations)",
            verdict(self.d1_pass()),
            self.forward_violations.len()
        )?;
        writeln!(
            f,
            "D2 backward: {} ({} violations, {} unchecked at depth)",
            verdict(self.d2_pass()),
            self.backward_violations.len(),
            self.backward_unchecked
        )?;
        writeln!(
            f,
            "D3 covering: {} ({} violations, {} gaps checked)",
            verdict(self.d3_pass()),
            self.covering_violations.len(),
            self.covering_checked
        )?;
        writeln!(f, "critical classes: {}", self.critical_classes.len())?;
        Ok(())
    }
}

/// Checks each invariance axiom at the truncation depth and reports all
/// violations; never fails.
pub fn validate(lam: &Lamination) -> InvarianceReport {
    let d = lam.degree();
    let classes = lam.classes();
    let edges: Vec<Vec<(&Angle, &Angle)>> = classes.iter().map(edge_pairs).collect();

    // (E2)
    let mut unlinked_violations = Vec::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            let bad = match lam.mode() {
                Mode::Equivalence => !unlinked(&classes[i], &classes[j]),
                Mode::Geometric => edges[i]
                    .iter()
                    .any(|&e1| edges[j].iter().any(|&e2| edge_crosses(e1, e2))),
            };
            if bad {
                unlinked_violations.push((i, j));
            }
        }
    }

    // edge index: image pair -> edges mapping onto it
    let mut all_edges: BTreeSet<Leaf> = BTreeSet::new();
    for c in classes {
        if let Ok(es) = hull_edges(c) {
            all_edges.extend(es);
        }
    }
    let mut preimage_edges: BTreeMap<(Angle, Angle), Vec<Leaf>> = BTreeMap::new();
    for e in &all_edges {
        let ia = sigma(d, e.fst()).expect("degree checked");
        let ib = sigma(d, e.snd()).expect("degree checked");
        if ia == ib {
            continue;
        }
        let key = if ia < ib { (ia, ib) } else { (ib, ia) };
        preimage_edges.entry(key).or_default().push(e.clone());
    }

    // (D1) and criticality
    let mut forward_violations = Vec::new();
    let mut critical_classes = Vec::new();
    for (i, c) in classes.iter().enumerate() {
        let img = image_class(d, c).expect("degree checked");
        if img.len() < c.len() {
            critical_classes.push(i);
        }
        if img.len() < 2 {
            continue;
        }
        let mut ok = lam.find_class(&img).is_some();
        if !ok && lam.mode() == Mode::Geometric && img.len() == 2 {
            let l = Leaf::new(img.angles()[0].clone(), img.angles()[1].clone()).unwrap();
            ok = all_edges.contains(&l);
        }
        if !ok {
            let nearest = classes
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .max_by_key(|(_, cand)| img.iter().filter(|a| cand.contains(a)).count())
                .map(|(j, _)| j);
            forward_violations.push(ForwardViolation {
                class: i,
                image: img,
                nearest,
            });
        }
    }

    // (D2): every hull edge of a class strictly inside the truncation
    // must have d pairwise disjoint preimage leaves present
    let mut backward_violations = Vec::new();
    let mut backward_unchecked = 0usize;
    for (i, c) in classes.iter().enumerate() {
        if lam.provenance()[i].level() >= lam.depth() {
            backward_unchecked += 1;
            continue;
        }
        let mut class_ok = true;
        for e in hull_edges(c).into_iter().flatten() {
            let key = (e.fst().clone(), e.snd().clone());
            let candidates = preimage_edges.get(&key).cloned().unwrap_or_default();
            if !has_disjoint_subset(&candidates, d as usize) {
                class_ok = false;
                break;
            }
        }
        if !class_ok {
            backward_violations.push(i);
        }
    }

    // (D3) on gaps with non-degenerate image
    let mut covering_violations = Vec::new();
    let mut covering_checked = 0usize;
    for (i, c) in classes.iter().enumerate() {
        if c.len() < 3 {
            continue;
        }
        let img = image_class(d, c).expect("degree checked");
        if img.len() < 2 {
            continue;
        }
        covering_checked += 1;
        if !is_covering_on_class(d, c).unwrap_or(false) {
            covering_violations.push(i);
        }
    }

    InvarianceReport {
        mode: lam.mode(),
        degree: d,
        unlinked_violations,
        forward_violations,
        backward_violations,
        backward_unchecked,
        covering_violations,
        covering_checked,
        critical_classes,
    }
}

/// True if `candidates` contains `k` leaves that pairwise share no
/// endpoint. The candidate sets are tiny (at most d^2), so a direct
/// backtracking search suffices.
fn has_disjoint_subset(candidates: &[Leaf], k: usize) -> bool {
    fn go(cands: &[Leaf], chosen: &mut Vec<Leaf>, k: usize, from: usize) -> bool {
        if chosen.len() == k {
            return true;
        }
        for i in from..cands.len() {
            let c = &cands[i];
            if chosen
                .iter()
                .all(|e| !e.has_endpoint(c.fst()) && !e.has_endpoint(c.snd()))
            {
                chosen.push(c.clone());
                if go(cands, chosen, k, i + 1) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    go(candidates, &mut Vec::new(), k, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ang(p: i64, q: i64) -> Angle {
        Angle::new(p, q).unwrap()
    }

    fn class(v: &[(i64, i64)]) -> AngleClass {
        AngleClass::new(v.iter().map(|&(p, q)| ang(p, q)).collect()).unwrap()
    }

    fn rabbit() -> AngleClass {
        class(&[(1, 7), (2, 7), (4, 7)])
    }

    #[test]
    fn fixed_leaf_depth_one_rotational() {
        let g = generate(2, &[class(&[(1, 3), (2, 3)])], GenerateOptions::depth(1)).unwrap();
        assert!(g.discarded.is_empty());
        let got: Vec<&AngleClass> = g.lamination.classes().iter().collect();
        let want = [
            class(&[(1, 6), (1, 3)]),
            class(&[(1, 3), (2, 3)]),
            class(&[(2, 3), (5, 6)]),
        ];
        assert_eq!(got.len(), 3);
        for w in &want {
            assert!(g.lamination.find_class(w).is_some(), "missing {{{w}}}");
        }
    }

    /// Independent pairing-search oracle: enumerate every partition of
    /// the preimage set into d transversals, keep the pairwise-unlinked
    /// ones, and confirm that the rotational pairing is among them and
    /// is what generate uses.
    #[test]
    fn pullback_pairing_oracle_fixed_leaf() {
        let c = class(&[(1, 3), (2, 3)]);
        let fib_a = preimages(2, &ang(1, 3)).unwrap();
        let fib_b = preimages(2, &ang(2, 3)).unwrap();
        let mut valid = Vec::new();
        for choice in 0..2usize {
            let c1 = AngleClass::new(vec![fib_a[0].clone(), fib_b[choice].clone()]).unwrap();
            let c2 = AngleClass::new(vec![fib_a[1].clone(), fib_b[1 - choice].clone()]).unwrap();
            let onto = |x: &AngleClass| image_class(2, x).unwrap() == c;
            if onto(&c1) && onto(&c2) && unlinked(&c1, &c2) {
                let mut pair = vec![c1, c2];
                pair.sort();
                valid.push(pair);
            }
        }
        let mut rot = vec![class(&[(1, 6), (1, 3)]), class(&[(2, 3), (5, 6)])];
        rot.sort();
        assert!(valid.contains(&rot));

        let g = generate(2, &[c], GenerateOptions::depth(1)).unwrap();
        for r in &rot {
            assert!(g.lamination.find_class(r).is_some());
        }
    }

    /// The rotational sibling {1/14, 1/7, 2/7} crosses the generator
    /// triangle (its closing edge cuts the edge 1/7-4/7), so the pairing
    /// search falls back to the unique unlinked pairing: the triangle
    /// itself plus {1/14, 9/14, 11/14}. Expected values frozen from the
    /// exhaustive pairing oracle below.
    #[test]
    fn rabbit_depth_zero_and_one() {
        let g0 = generate(2, &[rabbit()], GenerateOptions::depth(0)).unwrap();
        assert_eq!(g0.lamination.len(), 1);

        let g1 = generate(2, &[rabbit()], GenerateOptions::depth(1)).unwrap();
        assert_eq!(g1.lamination.len(), 2);
        assert!(g1
            .lamination
            .find_class(&class(&[(1, 14), (9, 14), (11, 14)]))
            .is_some());
    }

    /// Exhaustive oracle over all transversal pairings of the rabbit
    /// preimage set: exactly one pairing avoids crossing the triangle,
    /// and it is the one generate picks.
    #[test]
    fn pullback_pairing_oracle_rabbit() {
        let t = rabbit();
        let fibers: Vec<Vec<Angle>> = t.iter().map(|a| preimages(2, a).unwrap()).collect();
        let mut surviving = Vec::new();
        for b0 in 0..2usize {
            for b1 in 0..2usize {
                for b2 in 0..2usize {
                    let c1 = AngleClass::new(vec![
                        fibers[0][b0].clone(),
                        fibers[1][b1].clone(),
                        fibers[2][b2].clone(),
                    ])
                    .unwrap();
                    let c2 = AngleClass::new(vec![
                        fibers[0][1 - b0].clone(),
                        fibers[1][1 - b1].clone(),
                        fibers[2][1 - b2].clone(),
                    ])
                    .unwrap();
                    let pair_ok = unlinked(&c1, &c2)
                        && [&c1, &c2]
                            .iter()
                            .all(|x| **x == t || (noncrossing(x, &t) && unlinked(x, &t)));
                    if pair_ok {
                        let mut p = vec![c1, c2];
                        p.sort();
                        if !surviving.contains(&p) {
                            surviving.push(p);
                        }
                    }
                }
            }
        }
        assert_eq!(surviving.len(), 1);
        let want = vec![t.clone(), class(&[(1, 14), (9, 14), (11, 14)])];
        let mut want_sorted = want.clone();
        want_sorted.sort();
        assert_eq!(surviving[0], want_sorted);
    }

    #[test]
    fn rotational_siblings_map_onto_parent_and_are_unlinked() {
        for depth in 1..=3u32 {
            let g = generate(2, &[rabbit()], GenerateOptions::depth(depth)).unwrap();
            let lam = &g.lamination;
            for (i, c) in lam.classes().iter().enumerate() {
                if let Provenance::Pullback { .. } = lam.provenance()[i] {
                    let img = image_class(2, c).unwrap();
                    assert!(lam.find_class(&img).is_some(), "parent of {{{c}}} missing");
                }
            }
        }
    }

    #[test]
    fn forward_closure_is_exact() {
        for gens in [vec![rabbit()], vec![class(&[(1, 3), (2, 3)])]] {
            let g = generate(2, &gens, GenerateOptions::depth(3)).unwrap();
            for c in g.lamination.classes() {
                let img = image_class(2, c).unwrap();
                assert!(
                    img.len() == 1 || g.lamination.find_class(&img).is_some(),
                    "image of {{{c}}} is not a class"
                );
            }
        }
    }

    #[test]
    fn precritical_generator_rejected() {
        let err = generate(2, &[class(&[(1, 4), (3, 4)])], GenerateOptions::depth(1));
        assert!(matches!(err, Err(Error::PrecriticalGenerator(_))));
    }

    #[test]
    fn crossing_forward_orbit_rejected() {
        // sigma^3 of {1/5, 2/5} crosses an earlier image
        let err = generate(2, &[class(&[(1, 5), (2, 5)])], GenerateOptions::depth(0));
        assert!(matches!(err, Err(Error::NotAGeneratingFamily(_))));
    }

    #[test]
    fn generate_is_deterministic() {
        let a = generate(2, &[rabbit()], GenerateOptions::depth(4)).unwrap();
        let b = generate(2, &[rabbit()], GenerateOptions::depth(4)).unwrap();
        assert_eq!(a.lamination, b.lamination);
    }

    #[test]
    fn disjoint_first_reproduces_invariant_pair_structure() {
        // the fixed leaf pulls back to itself plus the disjoint leaf {1/6, 5/6}
        let g = generate(
            2,
            &[class(&[(1, 3), (2, 3)])],
            GenerateOptions::depth(3).with_pairing(PairingPreference::DisjointFirst),
        )
        .unwrap();
        let lam = &g.lamination;
        assert!(lam.find_class(&class(&[(1, 6), (5, 6)])).is_some());
        assert!(lam.find_class(&class(&[(1, 12), (11, 12)])).is_some());
        assert!(lam.find_class(&class(&[(5, 12), (7, 12)])).is_some());
        assert!(lam.find_class(&class(&[(5, 24), (7, 24)])).is_some());
        assert!(lam.find_class(&class(&[(17, 24), (19, 24)])).is_some());
        // everything pairwise unlinked
        for (i, a) in lam.classes().iter().enumerate() {
            for b in &lam.classes()[i + 1..] {
                assert!(unlinked(a, b), "{{{a}}} vs {{{b}}}");
            }
        }
    }

    #[test]
    fn disjoint_first_rabbit_takes_unlinked_triangle() {
        let g = generate(
            2,
            &[rabbit()],
            GenerateOptions::depth(1).with_pairing(PairingPreference::DisjointFirst),
        )
        .unwrap();
        assert_eq!(g.lamination.len(), 2);
        assert!(g
            .lamination
            .find_class(&class(&[(1, 14), (9, 14), (11, 14)]))
            .is_some());
    }

    #[test]
    fn explicit_preimages_steer_level_one() {
        let g = generate(
            2,
            &[class(&[(1, 3), (2, 3)])],
            GenerateOptions::depth(2).with_explicit_preimages(vec![class(&[(1, 6), (5, 6)])]),
        )
        .unwrap();
        let lam = &g.lamination;
        assert!(lam.find_class(&class(&[(1, 6), (5, 6)])).is_some());
        // deeper pullbacks continue from the explicit choice
        assert!(lam.find_class(&class(&[(1, 12), (11, 12)])).is_some());
        assert!(lam.find_class(&class(&[(5, 12), (7, 12)])).is_some());
        // the rotational fan was never created
        assert!(lam.find_class(&class(&[(1, 6), (1, 3)])).is_none());
    }

    #[test]
    fn validate_passes_on_generated() {
        for depth in [0u32, 2, 4] {
            let g = generate(2, &[rabbit()], GenerateOptions::depth(depth)).unwrap();
            let rep = g.lamination.validate();
            assert!(rep.all_pass(), "depth {depth}: {rep}");
        }
    }

    #[test]
    fn validate_reports_crossing_pair() {
        let lam = Lamination::new(
            2,
            Mode::Geometric,
            0,
            vec![
                (class(&[(1, 7), (4, 7)]), Provenance::External),
                (class(&[(2, 7), (5, 7)]), Provenance::External),
            ],
        )
        .unwrap();
        let rep = lam.validate();
        assert_eq!(rep.unlinked_violations, vec![(0, 1)]);
        assert!(!rep.all_pass());
    }

    #[test]
    fn validate_fixed_leaf_depth_zero() {
        let lam = Lamination::new(
            2,
            Mode::Geometric,
            0,
            vec![(class(&[(1, 3), (2, 3)]), Provenance::Generator)],
        )
        .unwrap();
        let rep = lam.validate();
        assert!(rep.d1_pass());
        assert!(rep.d2_pass());
        assert_eq!(rep.backward_unchecked, 1);
    }

    #[test]
    fn all_critical_classes_examples() {
        let lam = Lamination::new(
            2,
            Mode::Geometric,
            0,
            vec![(class(&[(1, 4), (3, 4)]), Provenance::External)],
        )
        .unwrap();
        assert_eq!(lam.all_critical_classes().len(), 1);

        let g = generate(2, &[rabbit()], GenerateOptions::depth(2)).unwrap();
        assert!(g.lamination.all_critical_classes().is_empty());

        let lam3 = Lamination::new(
            3,
            Mode::Geometric,
            0,
            vec![(class(&[(0, 1), (1, 3), (2, 3)]), Provenance::External)],
        )
        .unwrap();
        assert_eq!(lam3.all_critical_classes().len(), 1);
    }
}
