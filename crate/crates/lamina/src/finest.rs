//! The finest lamination respecting a prelamination, built through
//! super gaps: finite faces merge along shared leaves, pockets cut off
//! by closing chords over the chains of infinite-gap boundaries join
//! their neighbours, and the resulting component bases become the
//! quotient classes.

use std::collections::BTreeMap;
use std::fmt;

use crate::chords::{hull_edges, image_class, unlinked, AngleClass, Leaf};
use crate::circle::Angle;
use crate::error::{Error, Result};
use crate::gaps::{faces, Classifier, ClassifyOptions, GapKind};
use crate::lamination::{Lamination, Mode, Provenance};

/// Union-find over face and chain nodes.
struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            self.parent[x] = self.find(self.parent[x]);
        }
        self.parent[x]
    }

    fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        if self.rank[rx] < self.rank[ry] {
            self.parent[rx] = ry;
        } else if self.rank[rx] > self.rank[ry] {
            self.parent[ry] = rx;
        } else {
            self.parent[ry] = rx;
            self.rank[rx] += 1;
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperGapKind {
    Wandering,
    /// Eventually periodic with the given cycle length.
    Periodic(usize),
    /// A separate leaf.
    Degenerate,
}

impl fmt::Display for SuperGapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuperGapKind::Wandering => write!(f, "wandering"),
            SuperGapKind::Periodic(n) => write!(f, "periodic({n})"),
            SuperGapKind::Degenerate => write!(f, "degenerate"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuperGap {
    pub member_faces: Vec<usize>,
    pub basis: AngleClass,
    pub kind: SuperGapKind,
}

#[derive(Debug, Clone)]
pub struct FinestQuotient {
    pub degree: u32,
    /// Nondegenerate classes of the quotient at this truncation.
    pub classes: Vec<AngleClass>,
    /// One merge step per line: which adjacency justified each union.
    pub certificate: Vec<String>,
    pub super_gaps: Vec<SuperGap>,
}

impl FinestQuotient {
    /// The quotient repackaged as an equivalence-mode lamination.
    pub fn as_lamination(&self) -> Result<Lamination> {
        Lamination::new(
            self.degree,
            Mode::Equivalence,
            0,
            self.classes
                .iter()
                .map(|c| (c.clone(), Provenance::External))
                .collect(),
        )
    }
}

/// Builds the super gaps of a validated lamination.
///
/// Merging happens at the level of circle points: the endpoints of every
/// leaf are related (so chains of concatenated leaves collapse into one
/// class, which is also what the closing chord over a boundary chain of
/// an infinite gap would achieve), and every face whose classification
/// certifies a finite gap relates its entire vertex basis. Faces
/// classified as Fatou gaps never contribute their basis, and neither do
/// undetermined truncation artifacts: at a finite depth the quotient may
/// merge too little, never too much.
pub fn super_gaps(lam: &Lamination) -> Result<Vec<SuperGap>> {
    Ok(super_gaps_impl(lam, ClassifyOptions::default())?.0)
}

pub fn super_gaps_with(lam: &Lamination, opts: ClassifyOptions) -> Result<Vec<SuperGap>> {
    Ok(super_gaps_impl(lam, opts)?.0)
}

fn super_gaps_impl(
    lam: &Lamination,
    opts: ClassifyOptions,
) -> Result<(Vec<SuperGap>, Vec<String>)> {
    let report = lam.validate();
    if !report.all_pass() {
        return Err(Error::InvalidLamination(
            "refusing to build super gaps: validation failed".into(),
        ));
    }
    let fs = faces(lam)?;
    if fs.is_whole_disk() {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut cl = Classifier::new(lam, &fs, opts);
    let kinds: Vec<GapKind> = cl.classify_all()?.into_iter().map(|c| c.kind).collect();
    let finite_type = |f: usize| {
        matches!(
            kinds[f],
            GapKind::FinitePolygon | GapKind::WanderingPolygon | GapKind::AllCritical
        )
    };

    let chords: Vec<Leaf> = lam.chords().into_iter().collect();
    let vertices: Vec<Angle> = fs.vertices().to_vec();
    let vid = |a: &Angle| vertices.binary_search(a).expect("chord endpoint");
    let mut uf = UnionFind::new(vertices.len());
    let mut certificate: Vec<String> = Vec::new();

    for chord in &chords {
        if uf.union(vid(chord.fst()), vid(chord.snd())) {
            certificate.push(format!("relate endpoints of leaf {chord}"));
        }
    }
    for f in 0..fs.len() {
        if !finite_type(f) {
            continue;
        }
        let basis = &fs.face(f).basis;
        for pair in basis.windows(2) {
            if uf.union(vid(&pair[0]), vid(&pair[1])) {
                certificate.push(format!(
                    "relate {} and {}: basis of {} face {f}",
                    pair[0], pair[1], kinds[f]
                ));
            }
        }
    }

    // components with at least two vertices become super gaps
    let mut comp_basis: BTreeMap<usize, Vec<Angle>> = BTreeMap::new();
    for (i, v) in vertices.iter().enumerate() {
        comp_basis.entry(uf.find(i)).or_default().push(v.clone());
    }
    let mut gaps: Vec<SuperGap> = Vec::new();
    for (_, basis) in comp_basis {
        if basis.len() < 2 {
            continue;
        }
        let class = AngleClass::new(basis)?;
        let member_faces: Vec<usize> = (0..fs.len())
            .filter(|&f| {
                finite_type(f)
                    && !fs.face(f).basis.is_empty()
                    && fs.face(f).basis.iter().all(|a| class.contains(a))
            })
            .collect();
        let kind = if member_faces.is_empty() && class.len() == 2 {
            SuperGapKind::Degenerate
        } else {
            SuperGapKind::Wandering // provisional; orbits fixed below
        };
        gaps.push(SuperGap {
            member_faces,
            basis: class,
            kind,
        });
    }
    gaps.sort_by(|x, y| x.basis.cmp(&y.basis));

    // orbit kinds: follow sigma on bases through the super-gap family
    let d = lam.degree();
    let find_gap = |img: &AngleClass, gaps: &[SuperGap]| -> Result<Option<usize>> {
        let mut hits: Vec<usize> = Vec::new();
        for (i, g) in gaps.iter().enumerate() {
            if !g.basis.is_disjoint(img) {
                hits.push(i);
            }
        }
        match hits.len() {
            0 => Ok(None),
            1 => Ok(Some(hits[0])),
            _ => Err(Error::InternalInconsistency(format!(
                "image {{{img}}} meets {} super gaps",
                hits.len()
            ))),
        }
    };
    let horizon = 64usize;
    let mut kinds_out: Vec<SuperGapKind> = Vec::with_capacity(gaps.len());
    for (i, g) in gaps.iter().enumerate() {
        if g.kind == SuperGapKind::Degenerate {
            kinds_out.push(SuperGapKind::Degenerate);
            continue;
        }
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        let mut cur = i;
        let mut kind = SuperGapKind::Wandering;
        for step in 0..horizon {
            if let Some(&prev) = seen.get(&cur) {
                kind = SuperGapKind::Periodic(step - prev);
                break;
            }
            seen.insert(cur, step);
            let img = image_class(d, &gaps[cur].basis)?;
            match find_gap(&img, &gaps)? {
                Some(next) => cur = next,
                None => break, // orbit leaves the family
            }
        }
        kinds_out.push(kind);
    }
    let two_to_d = 2usize.pow(d);
    for (g, kind) in gaps.iter_mut().zip(kinds_out) {
        g.kind = kind;
        if g.kind == SuperGapKind::Wandering && g.basis.len() > two_to_d {
            return Err(Error::InternalInconsistency(format!(
                "wandering super gap with basis {} exceeds 2^{d}",
                g.basis.len()
            )));
        }
    }
    Ok((gaps, certificate))
}

/// Computes the finest quotient: super-gap bases with at least two
/// angles become the classes. The result is checked to be a valid
/// equivalence lamination that respects the input and is forward closed
/// at the truncation.
pub fn finest_quotient(lam: &Lamination) -> Result<FinestQuotient> {
    finest_quotient_with(lam, ClassifyOptions::default())
}

pub fn finest_quotient_with(lam: &Lamination, opts: ClassifyOptions) -> Result<FinestQuotient> {
    let (gaps, certificate) = super_gaps_impl(lam, opts)?;
    let classes: Vec<AngleClass> = gaps
        .iter()
        .filter(|g| g.basis.len() >= 2)
        .map(|g| g.basis.clone())
        .collect();
    let d = lam.degree();

    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            if !unlinked(&classes[i], &classes[j]) {
                return Err(Error::InternalInconsistency(format!(
                    "quotient classes {{{}}} and {{{}}} are not unlinked; merges:\n{}",
                    classes[i],
                    classes[j],
                    certificate.join("\n")
                )));
            }
        }
    }
    // respects the input: both endpoints of every chord in one class
    for chord in lam.chords() {
        let in_one = classes
            .iter()
            .any(|c| c.contains(chord.fst()) && c.contains(chord.snd()));
        if !in_one {
            return Err(Error::InternalInconsistency(format!(
                "quotient does not respect leaf {chord}"
            )));
        }
    }
    // forward closed at truncation
    for c in &classes {
        let img = image_class(d, c)?;
        if img.len() == 1 {
            continue;
        }
        let contained = classes.iter().any(|t| img.iter().all(|a| t.contains(a)));
        if !contained {
            return Err(Error::InternalInconsistency(format!(
                "image of quotient class {{{c}}} is not contained in a class"
            )));
        }
    }
    let q = FinestQuotient {
        degree: d,
        classes,
        certificate,
        super_gaps: gaps,
    };
    // a quotient of a lamination with no critical class admits no Siegel
    // face; surface any counterexample rather than returning it
    if lam.has_no_critical_class() && !q.classes.is_empty() {
        let qlam = q.as_lamination()?;
        let qfs = faces(&qlam)?;
        let mut qcl = Classifier::new(&qlam, &qfs, ClassifyOptions::default());
        for f in 0..qfs.len() {
            if qcl.classify(f)?.kind == GapKind::FatouSiegel {
                return Err(Error::InternalInconsistency(format!(
                    "quotient of a non-critical lamination produced a Siegel face {f}"
                )));
            }
        }
    }
    Ok(q)
}

/// Per-endpoint leaf counts: endpoints carrying three or more leaves are
/// reported with their middle leaves and the classes those come from;
/// five or more at one endpoint is a hard violation.
#[derive(Debug, Clone)]
pub struct ValenceEntry {
    pub vertex: Angle,
    pub count: usize,
    /// Middle leaves (all but the two extreme ones around the vertex)
    /// with the indices of the classes carrying them.
    pub middles: Vec<(Leaf, Vec<usize>)>,
    pub hard_violation: bool,
}

#[derive(Debug, Clone)]
pub struct ValenceReport {
    pub entries: Vec<ValenceEntry>,
    pub hard_violations: usize,
}

impl ValenceReport {
    pub fn pass(&self) -> bool {
        self.hard_violations == 0
    }
}

impl fmt::Display for ValenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "endpoints with >= 3 leaves: {}", self.entries.len())?;
        for e in &self.entries {
            writeln!(
                f,
                "  {} carries {} leaves{}",
                e.vertex,
                e.count,
                if e.hard_violation {
                    " (violation: >= 5)"
                } else {
                    ""
                }
            )?;
            for (l, classes) in &e.middles {
                writeln!(f, "    middle leaf {} from classes {:?}", l, classes)?;
            }
        }
        writeln!(f, "hard violations: {}", self.hard_violations)?;
        Ok(())
    }
}

pub fn endpoint_valence_check(lam: &Lamination) -> ValenceReport {
    let chords: Vec<Leaf> = lam.chords().into_iter().collect();
    let mut incident: BTreeMap<Angle, Vec<Leaf>> = BTreeMap::new();
    for l in &chords {
        incident.entry(l.fst().clone()).or_default().push(l.clone());
        incident.entry(l.snd().clone()).or_default().push(l.clone());
    }
    let mut entries = Vec::new();
    let mut hard = 0usize;
    for (v, mut leaves) in incident {
        if leaves.len() < 3 {
            continue;
        }
        leaves.sort_by(|a, b| {
            let oa = a.other(&v).unwrap();
            let ob = b.other(&v).unwrap();
            oa.ccw_dist(&v).cmp(&ob.ccw_dist(&v))
        });
        let middles = leaves[1..leaves.len() - 1]
            .iter()
            .map(|l| {
                let classes: Vec<usize> = lam
                    .classes()
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| hull_edges(c).map(|es| es.contains(l)).unwrap_or(false))
                    .map(|(i, _)| i)
                    .collect();
                (l.clone(), classes)
            })
            .collect();
        let violation = leaves.len() >= 5;
        if violation {
            hard += 1;
        }
        entries.push(ValenceEntry {
            vertex: v,
            count: leaves.len(),
            middles,
            hard_violation: violation,
        });
    }
    ValenceReport {
        entries,
        hard_violations: hard,
    }
}
