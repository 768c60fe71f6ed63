//! Faces of the chord arrangement, the induced dynamics on faces, and
//! the gap taxonomy.
//!
//! Faces are computed combinatorially: the non-crossing chords and the
//! circle arcs between consecutive endpoints form a plane graph, and the
//! faces are the orbits of the usual next-edge permutation built from
//! the rotation order at each endpoint. No floating point is involved.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::rational::BigRational;
use num::{BigInt, One, Zero};

use crate::chords::{edge_crosses, AngleClass, Leaf};
use crate::circle::{preimages, sigma, Angle};
use crate::error::{Error, Result};
use crate::lamination::Lamination;

/// One item of a face boundary walked counterclockwise: a chord of the
/// lamination or an open circle arc. The whole-disk face of an empty
/// lamination is a single `Arc(a, a)` item standing for the full circle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryItem {
    Leaf(Leaf),
    Arc(Angle, Angle),
}

/// A face of the disk cut along all hull edges of all classes.
#[derive(Debug, Clone)]
pub struct GapFace {
    pub id: usize,
    /// Boundary items in counterclockwise order, canonical starting point.
    pub items: Vec<BoundaryItem>,
    /// Chord endpoints on the boundary, sorted; empty for the whole disk.
    pub basis: Vec<Angle>,
}

impl GapFace {
    pub fn arcs(&self) -> impl Iterator<Item = (&Angle, &Angle)> {
        self.items.iter().filter_map(|it| match it {
            BoundaryItem::Arc(s, t) => Some((s, t)),
            _ => None,
        })
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Leaf> {
        self.items.iter().filter_map(|it| match it {
            BoundaryItem::Leaf(l) => Some(l),
            _ => None,
        })
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    pub fn basis_class(&self) -> Option<AngleClass> {
        AngleClass::new(self.basis.clone()).ok()
    }

    /// True if the angle lies on the closure of this face's circle part.
    pub fn supports(&self, a: &Angle) -> bool {
        if self.basis.binary_search(a).is_ok() {
            return true;
        }
        self.items.iter().any(|it| match it {
            BoundaryItem::Arc(s, t) => s == t || a.in_open_arc(s, t),
            _ => false,
        })
    }
}

/// Result of mapping a face forward: another face, or a degenerate
/// image that coincides with an existing leaf or a point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaceImage {
    Face(usize),
    Leaf(Leaf),
    Point(Angle),
}

/// Where an angle sits relative to the arrangement's circle points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Vertex(usize),
    /// Strictly inside the arc from vertex `k` to vertex `k+1`.
    InArc(usize),
}

/// The complete face arrangement of a lamination.
pub struct FaceSet {
    degree: u32,
    vertices: Vec<Angle>,
    chords: Vec<(usize, usize)>,
    chord_lookup: BTreeMap<(usize, usize), usize>,
    faces: Vec<GapFace>,
    /// Inner face on the disk side of each ccw arc `k`.
    arc_face: Vec<usize>,
    vertex_faces: Vec<Vec<usize>>,
    /// For each chord, the faces on its two sides.
    chord_faces: Vec<(usize, usize)>,
}

/// Builds the face arrangement. Crossing chords are rejected.
pub fn faces(lam: &Lamination) -> Result<FaceSet> {
    let chord_leaves: Vec<Leaf> = lam.chords().into_iter().collect();
    for (i, a) in chord_leaves.iter().enumerate() {
        for b in &chord_leaves[i + 1..] {
            if edge_crosses((a.fst(), a.snd()), (b.fst(), b.snd())) {
                return Err(Error::InvalidLamination(format!(
                    "chords {a} and {b} cross"
                )));
            }
        }
    }
    Ok(FaceSet::build(lam.degree(), &chord_leaves))
}

impl FaceSet {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn faces(&self) -> &[GapFace] {
        &self.faces
    }

    pub fn face(&self, id: usize) -> &GapFace {
        &self.faces[id]
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn vertices(&self) -> &[Angle] {
        &self.vertices
    }

    pub fn is_whole_disk(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains_chord(&self, l: &Leaf) -> bool {
        self.chord_index(l).is_some()
    }

    fn chord_index(&self, l: &Leaf) -> Option<usize> {
        let i = self.vertices.binary_search(l.fst()).ok()?;
        let j = self.vertices.binary_search(l.snd()).ok()?;
        self.chord_lookup.get(&(i, j)).copied()
    }

    /// The two faces adjacent to a chord.
    pub fn chord_sides(&self, l: &Leaf) -> Option<(usize, usize)> {
        self.chord_index(l).map(|c| self.chord_faces[c])
    }

    pub fn locate(&self, a: &Angle) -> Location {
        match self.vertices.binary_search(a) {
            Ok(i) => Location::Vertex(i),
            Err(pos) => Location::InArc(if pos == 0 {
                self.vertices.len() - 1
            } else {
                pos - 1
            }),
        }
    }

    /// Faces whose closure contains the angle.
    pub fn faces_at(&self, a: &Angle) -> Vec<usize> {
        if self.is_whole_disk() {
            return vec![0];
        }
        match self.locate(a) {
            Location::Vertex(i) => self.vertex_faces[i].clone(),
            Location::InArc(k) => vec![self.arc_face[k]],
        }
    }

    /// Maps a face forward: the face whose closure contains the hull of
    /// the image of the vertex basis, or the degenerate leaf/point image.
    pub fn face_image(&self, id: usize) -> Result<FaceImage> {
        let face = &self.faces[id];
        if face.basis.is_empty() {
            // whole disk covers itself
            return Ok(FaceImage::Face(id));
        }
        let mut image: Vec<Angle> = face
            .basis
            .iter()
            .map(|a| sigma(self.degree, a))
            .collect::<Result<_>>()?;
        image.sort();
        image.dedup();
        if image.len() == 1 {
            return Ok(FaceImage::Point(image.pop().unwrap()));
        }
        if image.len() == 2 {
            let l = Leaf::new(image[0].clone(), image[1].clone()).unwrap();
            if self.contains_chord(&l) {
                return Ok(FaceImage::Leaf(l));
            }
        }
        let mut candidates: Option<Vec<usize>> = None;
        for a in &image {
            let here = self.faces_at(a);
            let next = match candidates {
                None => here,
                Some(prev) => prev.into_iter().filter(|f| here.contains(f)).collect(),
            };
            if next.is_empty() {
                return Err(Error::UnresolvableAtDepth(format!(
                    "image of face {id} spans several faces"
                )));
            }
            candidates = Some(next);
        }
        let cand = candidates.unwrap();
        match cand.len() {
            1 => Ok(FaceImage::Face(cand[0])),
            _ => Err(Error::InternalInconsistency(format!(
                "image of face {id} lies in {} faces",
                cand.len()
            ))),
        }
    }

    fn build(degree: u32, chords_in: &[Leaf]) -> FaceSet {
        let mut vset: BTreeSet<Angle> = BTreeSet::new();
        for l in chords_in {
            vset.insert(l.fst().clone());
            vset.insert(l.snd().clone());
        }
        let vertices: Vec<Angle> = vset.into_iter().collect();
        let n = vertices.len();

        let mut chords: Vec<(usize, usize)> = chords_in
            .iter()
            .map(|l| {
                let i = vertices.binary_search(l.fst()).expect("endpoint is a vertex");
                let j = vertices.binary_search(l.snd()).expect("endpoint is a vertex");
                (i, j)
            })
            .collect();
        chords.sort_unstable();
        chords.dedup();
        let chord_lookup: BTreeMap<(usize, usize), usize> =
            chords.iter().enumerate().map(|(c, &e)| (e, c)).collect();

        if n == 0 {
            let face = GapFace {
                id: 0,
                items: vec![BoundaryItem::Arc(Angle::zero(), Angle::zero())],
                basis: Vec::new(),
            };
            return FaceSet {
                degree,
                vertices,
                chords,
                chord_lookup,
                faces: vec![face],
                arc_face: Vec::new(),
                vertex_faces: Vec::new(),
                chord_faces: Vec::new(),
            };
        }

        // directed edges: 0..2n arcs (2k: ccw v_k -> v_{k+1}; 2k+1: cw),
        // then chords (2n+2c: lo -> hi; 2n+2c+1: hi -> lo)
        let m = chords.len();
        let total = 2 * n + 2 * m;
        let head = |e: usize| -> usize {
            if e < 2 * n {
                let k = e / 2;
                if e % 2 == 0 {
                    (k + 1) % n
                } else {
                    k
                }
            } else {
                let c = (e - 2 * n) / 2;
                if (e - 2 * n) % 2 == 0 {
                    chords[c].1
                } else {
                    chords[c].0
                }
            }
        };
        let reverse = |e: usize| -> usize {
            if e % 2 == 0 {
                e + 1
            } else {
                e - 1
            }
        };

        // rotation at each vertex: outgoing edges in counterclockwise
        // order starting from the tangent toward the next circle point
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (c, &(lo, hi)) in chords.iter().enumerate() {
            incident[lo].push(2 * n + 2 * c);
            incident[hi].push(2 * n + 2 * c + 1);
        }
        let mut rotation: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..n {
            let mut out = incident[v].clone();
            out.sort_by(|&e1, &e2| {
                let w1 = &vertices[head(e1)];
                let w2 = &vertices[head(e2)];
                w1.ccw_dist(&vertices[v]).cmp(&w2.ccw_dist(&vertices[v]))
            });
            let mut rot = Vec::with_capacity(out.len() + 2);
            rot.push(2 * v); // ccw arc toward next vertex
            rot.extend(out);
            rot.push(2 * ((v + n - 1) % n) + 1); // cw arc toward previous vertex
            rotation[v] = rot;
        }
        let mut rot_pos: Vec<(usize, usize)> = vec![(0, 0); total];
        for (v, rot) in rotation.iter().enumerate() {
            for (p, &e) in rot.iter().enumerate() {
                rot_pos[e] = (v, p);
            }
        }
        let next_edge = |e: usize| -> usize {
            let (v, p) = rot_pos[reverse(e)];
            let len = rotation[v].len();
            rotation[v][(p + len - 1) % len]
        };

        // trace orbits; the orbit of any cw arc is the outer face
        const OUTER: usize = usize::MAX;
        let mut face_of: Vec<Option<usize>> = vec![None; total];
        let mut e = 1usize; // cw arc 0
        loop {
            face_of[e] = Some(OUTER);
            e = next_edge(e);
            if e == 1 {
                break;
            }
        }
        let mut faces: Vec<GapFace> = Vec::new();
        for start in 0..total {
            if face_of[start].is_some() {
                continue;
            }
            let id = faces.len();
            let mut items = Vec::new();
            let mut basis: Vec<Angle> = Vec::new();
            let mut e = start;
            loop {
                face_of[e] = Some(id);
                if e < 2 * n {
                    let k = e / 2;
                    debug_assert_eq!(e % 2, 0, "inner faces never traverse cw arcs");
                    items.push(BoundaryItem::Arc(
                        vertices[k].clone(),
                        vertices[(k + 1) % n].clone(),
                    ));
                } else {
                    let c = (e - 2 * n) / 2;
                    let (lo, hi) = chords[c];
                    items.push(BoundaryItem::Leaf(
                        Leaf::new(vertices[lo].clone(), vertices[hi].clone()).unwrap(),
                    ));
                    basis.push(vertices[lo].clone());
                    basis.push(vertices[hi].clone());
                }
                e = next_edge(e);
                if e == start {
                    break;
                }
            }
            basis.sort();
            basis.dedup();
            faces.push(GapFace { id, items, basis });
        }

        let arc_face: Vec<usize> = (0..n).map(|k| face_of[2 * k].expect("arc traced")).collect();
        let chord_faces: Vec<(usize, usize)> = (0..m)
            .map(|c| {
                (
                    face_of[2 * n + 2 * c].expect("chord traced"),
                    face_of[2 * n + 2 * c + 1].expect("chord traced"),
                )
            })
            .collect();
        let mut vertex_faces: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (v, rot) in rotation.iter().enumerate() {
            let mut fs: Vec<usize> = Vec::new();
            for &e in rot {
                // faces on both sides of each incident edge touch v
                for cand in [face_of[e], face_of[reverse(e)]] {
                    if let Some(f) = cand {
                        if f != OUTER {
                            fs.push(f);
                        }
                    }
                }
            }
            fs.sort_unstable();
            fs.dedup();
            vertex_faces[v] = fs;
        }

        FaceSet {
            degree,
            vertices,
            chords,
            chord_lookup,
            faces,
            arc_face,
            vertex_faces,
            chord_faces,
        }
    }

    /// Total length of all boundary arcs over all faces; exactly 1 for a
    /// consistent arrangement.
    pub fn total_arc_measure(&self) -> BigRational {
        if self.is_whole_disk() {
            return BigRational::one();
        }
        let mut sum = BigRational::zero();
        for f in &self.faces {
            for (s, t) in f.arcs() {
                sum += t.ccw_dist(s);
            }
        }
        sum
    }

    /// Degree of the return map on the collapsed boundary circle:
    /// maximal chains of concatenated leaves collapse to points, the
    /// winding of the induced map is counted, and the result is
    /// cross-checked against model preimage counts. The two methods
    /// disagreeing is an error, never silently resolved.
    pub fn boundary_degree(&self, face: usize, m: usize) -> Result<u32> {
        if m == 0 {
            return Err(Error::NotPeriodic);
        }
        if self.is_whole_disk() {
            return Ok(self.degree.pow(m as u32));
        }
        let mut g = face;
        for _ in 0..m {
            match self.face_image(g)? {
                FaceImage::Face(h) => g = h,
                _ => return Err(Error::NotPeriodic),
            }
        }
        if g != face {
            return Err(Error::NotPeriodic);
        }

        let (model, image_pos) = self.boundary_model(face, m)?;
        let mm = model.len();
        if mm == 1 {
            return Ok(1);
        }
        let mut winding_sum = 0usize;
        for i in 0..mm {
            let a = image_pos[i];
            let b = image_pos[(i + 1) % mm];
            winding_sum += (b + mm - a) % mm;
        }
        if winding_sum % mm != 0 {
            return Err(Error::InternalInconsistency(format!(
                "winding sum {winding_sum} on face {face} is not a multiple of {mm}"
            )));
        }
        let k = (winding_sum / mm) as u32;
        // cross-check: count model preimages of each model point
        let mut counts = vec![0u32; mm];
        for &p in &image_pos {
            counts[p] += 1;
        }
        let max = counts.iter().copied().max().unwrap_or(0);
        if max != k || counts.iter().any(|&c| c > k) {
            return Err(Error::InternalInconsistency(format!(
                "winding degree {k} disagrees with preimage counts (max {max}) on face {face}"
            )));
        }
        Ok(k)
    }

    /// Collapsed boundary model of an m-periodic face: chain components
    /// in circular order and the induced position map.
    fn boundary_model(&self, face: usize, m: usize) -> Result<(Vec<Vec<Angle>>, Vec<usize>)> {
        let f = self.face(face);
        let has_arcs = f.items.iter().any(|it| matches!(it, BoundaryItem::Arc(_, _)));
        let mut model: Vec<Vec<Angle>> = if has_arcs {
            boundary_chains(f)
                .into_iter()
                .map(|mut ch| {
                    ch.sort();
                    ch.dedup();
                    ch
                })
                .collect()
        } else {
            // closed polygon boundary: model on the raw vertices
            f.basis.iter().map(|a| vec![a.clone()]).collect()
        };
        if model.is_empty() {
            return Err(Error::NotPeriodic);
        }
        // chains occupy disjoint arcs of a convex face, so ordering by
        // least member matches the cyclic walk order up to rotation;
        // a chain wrapping through 0 still sorts consistently because
        // only the relative cyclic order matters below
        model.sort_by(|x, y| x[0].cmp(&y[0]));
        let pos_of_vertex = |a: &Angle| -> Option<usize> {
            model.iter().position(|ch| ch.binary_search(a).is_ok())
        };
        let sig_m = |a: &Angle| -> Result<Angle> {
            let mut x = a.clone();
            for _ in 0..m {
                x = sigma(self.degree, &x)?;
            }
            Ok(x)
        };
        let mut image_pos = Vec::with_capacity(model.len());
        for ch in &model {
            let mut target: Option<usize> = None;
            for a in ch {
                let img = sig_m(a)?;
                let p = pos_of_vertex(&img).ok_or_else(|| {
                    Error::InternalInconsistency(format!(
                        "boundary vertex image {img} is not on face {face}"
                    ))
                })?;
                match target {
                    None => target = Some(p),
                    Some(t) if t == p => {}
                    Some(t) => {
                        return Err(Error::InternalInconsistency(format!(
                            "chain on face {face} maps into model points {t} and {p}"
                        )))
                    }
                }
            }
            image_pos.push(target.unwrap());
        }
        Ok((model, image_pos))
    }

    /// Rotation-number interval of the degree-1 collapsed boundary map,
    /// bracketed by extreme lift displacements over `iterations` steps.
    /// Exact (a point interval) for finite rotational polygons.
    pub fn rotation_number(
        &self,
        face: usize,
        m: usize,
        iterations: usize,
    ) -> Result<(BigRational, BigRational)> {
        let k = self.boundary_degree(face, m)?;
        if k != 1 {
            return Err(Error::NotARotation(k));
        }
        let iterations = iterations.max(1);
        let (model, step) = self.boundary_model(face, m)?;
        let mm = model.len();
        if mm == 1 {
            return Ok((BigRational::zero(), BigRational::zero()));
        }
        let mut min_disp: Option<usize> = None;
        let mut max_disp: Option<usize> = None;
        for start in 0..mm {
            let mut p = start;
            let mut total = 0usize;
            for _ in 0..iterations {
                let q = step[p];
                total += (q + mm - p) % mm;
                p = q;
            }
            min_disp = Some(min_disp.map_or(total, |v: usize| v.min(total)));
            max_disp = Some(max_disp.map_or(total, |v: usize| v.max(total)));
        }
        let denom = BigInt::from(mm as u64) * BigInt::from(iterations as u64);
        let lo = BigRational::new(BigInt::from(min_disp.unwrap() as u64), denom.clone());
        let hi = BigRational::new(BigInt::from(max_disp.unwrap() as u64), denom);
        Ok((lo, hi))
    }
}

impl fmt::Debug for FaceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FaceSet({} vertices, {} chords, {} faces)",
            self.vertices.len(),
            self.chords.len(),
            self.faces.len()
        )
    }
}

/// Longest chain of concatenated leaves on the face boundary: closed
/// chains (no arcs at all) report their edge count, open chains their
/// leaf count.
pub fn chain_bound(face: &GapFace) -> usize {
    let leaf_total = face.leaf_count();
    if leaf_total == 0 {
        return 0;
    }
    let items = &face.items;
    if leaf_total == items.len() {
        return leaf_total;
    }
    let n = items.len();
    let mut best = 0usize;
    for start in 0..n {
        if matches!(items[start], BoundaryItem::Leaf(_))
            && matches!(items[(start + n - 1) % n], BoundaryItem::Arc(_, _))
        {
            let mut len = 0usize;
            let mut i = start;
            while matches!(items[i], BoundaryItem::Leaf(_)) {
                len += 1;
                i = (i + 1) % n;
            }
            best = best.max(len);
        }
    }
    best
}

/// Maximal chains of concatenated boundary leaves, each as its vertex
/// list in walk order. A closed polygon boundary is one chain.
pub fn boundary_chains(face: &GapFace) -> Vec<Vec<Angle>> {
    let items = &face.items;
    let n = items.len();
    let leaf_total = face.leaf_count();
    if leaf_total == 0 {
        return Vec::new();
    }
    if leaf_total == n {
        return vec![face.basis.clone()];
    }
    let mut chains = Vec::new();
    for start in 0..n {
        if matches!(items[start], BoundaryItem::Leaf(_))
            && matches!(items[(start + n - 1) % n], BoundaryItem::Arc(_, _))
        {
            let mut verts: Vec<Angle> = Vec::new();
            let mut i = start;
            while let BoundaryItem::Leaf(l) = &items[i] {
                if verts.is_empty() {
                    let prev = match &items[(start + n - 1) % n] {
                        BoundaryItem::Arc(_, t) => t.clone(),
                        _ => unreachable!(),
                    };
                    verts.push(prev.clone());
                    verts.push(l.other(&prev).expect("chain is connected").clone());
                } else {
                    let last = verts.last().unwrap().clone();
                    verts.push(l.other(&last).expect("chain is connected").clone());
                }
                i = (i + 1) % n;
            }
            chains.push(verts);
        }
    }
    chains
}

/// Kinds of gap classification at a finite truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    FinitePolygon,
    WanderingPolygon,
    AllCritical,
    FatouParattracting,
    FatouSiegel,
    Undetermined,
}

impl fmt::Display for GapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GapKind::FinitePolygon => "finite-polygon",
            GapKind::WanderingPolygon => "wandering-polygon",
            GapKind::AllCritical => "all-critical",
            GapKind::FatouParattracting => "fatou-parattracting",
            GapKind::FatouSiegel => "fatou-siegel",
            GapKind::Undetermined => "undetermined",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone)]
pub struct GapClassification {
    pub kind: GapKind,
    pub period: Option<usize>,
    pub preperiod: Option<usize>,
    pub degree: Option<u32>,
    pub rotation: Option<(BigRational, BigRational)>,
    pub chain_bound: usize,
    /// Note on the evidence behind the verdict.
    pub evidence: String,
}

impl GapClassification {
    fn undetermined(chain: usize, evidence: String) -> Self {
        GapClassification {
            kind: GapKind::Undetermined,
            period: None,
            preperiod: None,
            degree: None,
            rotation: None,
            chain_bound: chain,
            evidence,
        }
    }
}

impl fmt::Display for GapClassification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(p) = self.preperiod {
            if p > 0 {
                write!(f, " preperiod={p}")?;
            }
        }
        if let Some(m) = self.period {
            write!(f, " period={m}")?;
        }
        if let Some(k) = self.degree {
            write!(f, " degree={k}")?;
        }
        if let Some((lo, hi)) = &self.rotation {
            if lo == hi {
                write!(f, " rotation={lo}")?;
            } else {
                write!(f, " rotation=({lo},{hi})")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    /// Bound on the face-orbit search.
    pub horizon: usize,
    /// Whether to gather basis-growth evidence by saturating preimage
    /// chords; required for the Fatou kinds.
    pub growth_checks: bool,
    /// Iteration count for rotation-number intervals.
    pub rotation_iterations: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            horizon: 64,
            growth_checks: true,
            rotation_iterations: 64,
        }
    }
}

/// Classifies faces by iterating the face map, measuring the boundary
/// return degree on periodic cores, and (for the Fatou kinds) requiring
/// the basis to gain vertices when compatible preimage chords are
/// saturated in over successive rounds.
pub struct Classifier<'a> {
    lam: &'a Lamination,
    fs: &'a FaceSet,
    opts: ClassifyOptions,
    memo: BTreeMap<usize, GapClassification>,
    /// Cumulative saturation chords and the new vertices per round.
    growth_rounds: Vec<BTreeSet<Angle>>,
    growth_chords: BTreeSet<Leaf>,
}

impl<'a> Classifier<'a> {
    pub fn new(lam: &'a Lamination, fs: &'a FaceSet, opts: ClassifyOptions) -> Self {
        Classifier {
            lam,
            fs,
            opts,
            memo: BTreeMap::new(),
            growth_rounds: Vec::new(),
            growth_chords: BTreeSet::new(),
        }
    }

    pub fn face_set(&self) -> &FaceSet {
        self.fs
    }

    pub fn classify_all(&mut self) -> Result<Vec<GapClassification>> {
        (0..self.fs.len()).map(|f| self.classify(f)).collect()
    }

    pub fn classify(&mut self, face: usize) -> Result<GapClassification> {
        if let Some(c) = self.memo.get(&face) {
            return Ok(c.clone());
        }
        let c = self.classify_uncached(face)?;
        self.memo.insert(face, c.clone());
        Ok(c)
    }

    fn classify_uncached(&mut self, face: usize) -> Result<GapClassification> {
        let chain = chain_bound(self.fs.face(face));
        if self.fs.face(face).basis.is_empty() {
            return Ok(GapClassification::undetermined(
                chain,
                "whole disk: no boundary data".into(),
            ));
        }
        let mut orbit: Vec<usize> = vec![face];
        let mut positions: BTreeMap<usize, usize> = BTreeMap::new();
        positions.insert(face, 0);
        for step in 0..self.opts.horizon {
            match self.fs.face_image(*orbit.last().unwrap()) {
                Ok(FaceImage::Point(_)) => {
                    return Ok(GapClassification {
                        kind: GapKind::AllCritical,
                        period: None,
                        preperiod: Some(step),
                        degree: None,
                        rotation: None,
                        chain_bound: chain,
                        evidence: format!("image collapses to a point after {step} steps"),
                    });
                }
                Ok(FaceImage::Leaf(_)) => {
                    return Ok(GapClassification::undetermined(
                        chain,
                        format!("image degenerates to a leaf after {step} steps"),
                    ));
                }
                Err(Error::UnresolvableAtDepth(_)) => {
                    return Ok(GapClassification::undetermined(
                        chain,
                        format!("image unresolvable at this depth after {step} steps"),
                    ));
                }
                Err(e) => return Err(e),
                Ok(FaceImage::Face(g)) => {
                    if let Some(&i) = positions.get(&g) {
                        let mut cls = self.classify_cycle(g, orbit.len() - i)?;
                        cls.preperiod = Some(i);
                        cls.chain_bound = chain;
                        return Ok(cls);
                    }
                    positions.insert(g, orbit.len());
                    orbit.push(g);
                }
            }
        }
        // no repeat within the horizon: wandering candidate
        let bases: Vec<Option<AngleClass>> = orbit
            .iter()
            .map(|&f| self.fs.face(f).basis_class())
            .collect();
        let mut pairwise_unlinked = true;
        'outer: for i in 0..bases.len() {
            for j in i + 1..bases.len() {
                match (&bases[i], &bases[j]) {
                    (Some(a), Some(b)) => {
                        if !crate::chords::unlinked(a, b) {
                            pairwise_unlinked = false;
                            break 'outer;
                        }
                    }
                    _ => {
                        pairwise_unlinked = false;
                        break 'outer;
                    }
                }
            }
        }
        if pairwise_unlinked {
            let size = self.fs.face(face).basis.len();
            let bound = 2usize.pow(self.lam.degree());
            if size > bound {
                return Err(Error::InternalInconsistency(format!(
                    "face {face} classified wandering with basis {size} > 2^{} = {bound}",
                    self.lam.degree()
                )));
            }
            return Ok(GapClassification {
                kind: GapKind::WanderingPolygon,
                period: None,
                preperiod: None,
                degree: None,
                rotation: None,
                chain_bound: chain,
                evidence: format!(
                    "orbit pairwise unlinked with no repeat within horizon {}",
                    self.opts.horizon
                ),
            });
        }
        Ok(GapClassification::undetermined(
            chain,
            format!(
                "no repeat within horizon {} and images overlap",
                self.opts.horizon
            ),
        ))
    }

    fn classify_cycle(&mut self, f0: usize, m: usize) -> Result<GapClassification> {
        let chain = chain_bound(self.fs.face(f0));
        let basis = self.fs.face(f0).basis.clone();
        let mut image: Vec<Angle> = Vec::with_capacity(basis.len());
        for a in &basis {
            let mut x = a.clone();
            for _ in 0..m {
                x = sigma(self.lam.degree(), &x)?;
            }
            if basis.binary_search(&x).is_err() {
                return Ok(GapClassification::undetermined(
                    chain,
                    "periodic face whose basis is not forward invariant".into(),
                ));
            }
            image.push(x);
        }
        image.sort();
        image.dedup();
        // artifact faces can cycle as faces while their boundary model
        // degenerates; that is an Undetermined verdict, not an abort
        let k = match self.fs.boundary_degree(f0, m) {
            Ok(k) => k,
            Err(Error::InternalInconsistency(msg)) => {
                return Ok(GapClassification::undetermined(
                    chain,
                    format!("boundary return map is not covering-like: {msg}"),
                ));
            }
            Err(e) => return Err(e),
        };
        let bijective = image.len() == basis.len();
        if k == 1 && bijective {
            let rot = self
                .fs
                .rotation_number(f0, m, self.opts.rotation_iterations)?;
            return Ok(GapClassification {
                kind: GapKind::FinitePolygon,
                period: Some(m),
                preperiod: Some(0),
                degree: Some(1),
                rotation: Some(rot),
                chain_bound: chain,
                evidence: "periodic face with invariant finite basis".into(),
            });
        }
        let rounds = m.max(2).min(4);
        let growing = if self.opts.growth_checks {
            self.growth_evidence(f0, rounds)
        } else {
            Vec::new()
        };
        let grew = growing.iter().sum::<usize>() > 0;
        let growth_note = format!("basis gained {growing:?} vertices over {rounds} saturation rounds");
        if k >= 2 {
            if grew {
                return Ok(GapClassification {
                    kind: GapKind::FatouParattracting,
                    period: Some(m),
                    preperiod: Some(0),
                    degree: Some(k),
                    rotation: None,
                    chain_bound: chain,
                    evidence: format!("return degree {k}; {growth_note}"),
                });
            }
            return Ok(GapClassification {
                kind: GapKind::Undetermined,
                period: Some(m),
                preperiod: Some(0),
                degree: Some(k),
                rotation: None,
                chain_bound: chain,
                evidence: "return degree >= 2 but no growth evidence".into(),
            });
        }
        // degree 1 with a strictly shrinking basis under the return map
        if grew {
            let rot = self
                .fs
                .rotation_number(f0, m, self.opts.rotation_iterations)?;
            return Ok(GapClassification {
                kind: GapKind::FatouSiegel,
                period: Some(m),
                preperiod: Some(0),
                degree: Some(1),
                rotation: Some(rot),
                chain_bound: chain,
                evidence: format!("return degree 1, shrinking basis; {growth_note}"),
            });
        }
        Ok(GapClassification {
            kind: GapKind::Undetermined,
            period: Some(m),
            preperiod: Some(0),
            degree: Some(1),
            rotation: None,
            chain_bound: chain,
            evidence: "degree-1 periodic face without growth evidence".into(),
        })
    }

    /// New endpoints appearing strictly inside the face's arcs over
    /// `rounds` rounds of compatible preimage-chord saturation. A period-m
    /// gap can sit ahead of the refinement parity by up to m-1 levels, so
    /// callers ask for at least max(2, m) rounds. New chords are only
    /// required to avoid the base chords; mutual crossings among
    /// candidates are irrelevant for vertex evidence.
    fn growth_evidence(&mut self, face: usize, rounds: usize) -> Vec<usize> {
        let base: BTreeSet<Leaf> = self.lam.chords();
        if self.growth_chords.is_empty() {
            self.growth_chords = base.clone();
        }
        while self.growth_rounds.len() < rounds {
            let seen: BTreeSet<Angle> = self
                .growth_chords
                .iter()
                .flat_map(|l| [l.fst().clone(), l.snd().clone()])
                .collect();
            let added = saturate_candidates(self.lam.degree(), &self.growth_chords, &base);
            let mut fresh: BTreeSet<Angle> = BTreeSet::new();
            for l in &added {
                for a in [l.fst(), l.snd()] {
                    if !seen.contains(a) {
                        fresh.insert(a.clone());
                    }
                }
            }
            self.growth_chords.extend(added);
            self.growth_rounds.push(fresh);
        }
        let f = self.fs.face(face);
        let count = |vs: &BTreeSet<Angle>| {
            vs.iter()
                .filter(|a| {
                    f.items.iter().any(|it| match it {
                        BoundaryItem::Arc(s, t) => s == t || a.in_open_arc(s, t),
                        _ => false,
                    })
                })
                .count()
        };
        self.growth_rounds[..rounds].iter().map(count).collect()
    }
}

/// All preimage chords of `sources` that cross nothing in `obstacles`.
fn saturate_candidates(
    d: u32,
    sources: &BTreeSet<Leaf>,
    obstacles: &BTreeSet<Leaf>,
) -> BTreeSet<Leaf> {
    let mut out = BTreeSet::new();
    for l in sources {
        let fx = preimages(d, l.fst()).expect("degree checked");
        let fy = preimages(d, l.snd()).expect("degree checked");
        for x in &fx {
            for y in &fy {
                if x == y {
                    continue;
                }
                let cand = Leaf::new(x.clone(), y.clone()).unwrap();
                if obstacles.contains(&cand) || sources.contains(&cand) {
                    continue;
                }
                let ok = obstacles
                    .iter()
                    .all(|o| !edge_crosses((o.fst(), o.snd()), (cand.fst(), cand.snd())));
                if ok {
                    out.insert(cand);
                }
            }
        }
    }
    out
}

/// Trichotomy tags for leaves with degenerate image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalLeafTag {
    Isolated,
    Separate,
    AllCriticalUnionBoundary,
}

impl fmt::Display for CriticalLeafTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CriticalLeafTag::Isolated => "isolated",
            CriticalLeafTag::Separate => "separate",
            CriticalLeafTag::AllCriticalUnionBoundary => "all-critical-union-boundary",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone)]
pub struct CriticalLeafReport {
    pub leaf: Leaf,
    pub tag: CriticalLeafTag,
    pub evidence: String,
}

/// Tags every leaf with degenerate image. Limit leaves are approximated
/// at finite truncation by the presence of other leaves on the adjacent
/// faces; the evidence records what was seen and at which depth.
pub fn classify_critical_leaves(lam: &Lamination, fs: &FaceSet) -> Result<Vec<CriticalLeafReport>> {
    let d = lam.degree();
    let mut out = Vec::new();
    for chord in lam.chords() {
        let ia = sigma(d, chord.fst())?;
        let ib = sigma(d, chord.snd())?;
        if ia != ib {
            continue;
        }
        let (fa, fb) = fs
            .chord_sides(&chord)
            .ok_or_else(|| Error::InternalInconsistency("chord missing from face set".into()))?;
        let all_critical_side = |fid: usize| -> bool {
            let f = fs.face(fid);
            f.leaf_count() >= 2 && matches!(fs.face_image(fid), Ok(FaceImage::Point(_)))
        };
        let leaves_a = fs.face(fa).leaf_count();
        let leaves_b = fs.face(fb).leaf_count();
        let (tag, evidence) = if all_critical_side(fa) != all_critical_side(fb) {
            (
                CriticalLeafTag::AllCriticalUnionBoundary,
                format!("bounds an all-critical face at depth {}", lam.depth()),
            )
        } else if leaves_a > 1 && leaves_b > 1 {
            (
                CriticalLeafTag::Isolated,
                format!(
                    "adjacent faces carry {} and {} other leaves at depth {}",
                    leaves_a - 1,
                    leaves_b - 1,
                    lam.depth()
                ),
            )
        } else if leaves_a == 1 && leaves_b == 1 {
            (
                CriticalLeafTag::Separate,
                format!("no other leaf meets either side at depth {}", lam.depth()),
            )
        } else {
            (
                CriticalLeafTag::Isolated,
                format!(
                    "approached from one side only ({} and {} other leaves) at depth {}",
                    leaves_a.saturating_sub(1),
                    leaves_b.saturating_sub(1),
                    lam.depth()
                ),
            )
        };
        out.push(CriticalLeafReport {
            leaf: chord,
            tag,
            evidence,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lamination::{generate, GenerateOptions, Mode, Provenance};

    fn ang(p: i64, q: i64) -> Angle {
        Angle::new(p, q).unwrap()
    }

    fn class(v: &[(i64, i64)]) -> AngleClass {
        AngleClass::new(v.iter().map(|&(p, q)| ang(p, q)).collect()).unwrap()
    }

    fn lam_of(degree: u32, cls: &[AngleClass]) -> Lamination {
        Lamination::new(
            degree,
            Mode::Geometric,
            0,
            cls.iter()
                .map(|c| (c.clone(), Provenance::External))
                .collect(),
        )
        .unwrap()
    }

    fn rabbit_lam(depth: u32) -> Lamination {
        generate(
            2,
            &[class(&[(1, 7), (2, 7), (4, 7)])],
            GenerateOptions::depth(depth),
        )
        .unwrap()
        .lamination
    }

    #[test]
    fn single_chord_two_faces() {
        let lam = lam_of(2, &[class(&[(1, 3), (2, 3)])]);
        let fs = faces(&lam).unwrap();
        assert_eq!(fs.len(), 2);
        for f in fs.faces() {
            assert_eq!(f.basis, vec![ang(1, 3), ang(2, 3)]);
            assert_eq!(f.leaf_count(), 1);
            assert_eq!(f.arcs().count(), 1);
        }
        assert_eq!(fs.total_arc_measure(), BigRational::one());
    }

    #[test]
    fn rabbit_triangle_four_faces() {
        let lam = rabbit_lam(0);
        let fs = faces(&lam).unwrap();
        assert_eq!(fs.len(), 4);
        let interior = fs
            .faces()
            .iter()
            .filter(|f| f.leaf_count() == 3 && f.arcs().count() == 0)
            .count();
        assert_eq!(interior, 1);
        assert_eq!(fs.total_arc_measure(), BigRational::one());
    }

    #[test]
    fn empty_lamination_whole_disk() {
        let lam = Lamination::empty(2, Mode::Geometric).unwrap();
        let fs = faces(&lam).unwrap();
        assert_eq!(fs.len(), 1);
        assert!(fs.is_whole_disk());
        assert_eq!(fs.total_arc_measure(), BigRational::one());
        assert_eq!(fs.boundary_degree(0, 1).unwrap(), 2);
    }

    #[test]
    fn crossing_chords_rejected() {
        let lam = lam_of(2, &[class(&[(1, 7), (4, 7)]), class(&[(2, 7), (5, 7)])]);
        assert!(matches!(faces(&lam), Err(Error::InvalidLamination(_))));
    }

    #[test]
    fn face_partition_measure_various_depths() {
        for depth in [1u32, 3, 5] {
            let lam = rabbit_lam(depth);
            let fs = faces(&lam).unwrap();
            assert_eq!(fs.total_arc_measure(), BigRational::one(), "depth {depth}");
            // Euler count for a connected arrangement: faces = chords + 1
            let chords = lam.chords().len();
            assert_eq!(fs.len(), chords + 1, "depth {depth}");
        }
    }

    #[test]
    fn rabbit_interior_face_is_fixed() {
        let lam = rabbit_lam(2);
        let fs = faces(&lam).unwrap();
        let t = fs
            .faces()
            .iter()
            .position(|f| f.basis == vec![ang(1, 7), ang(2, 7), ang(4, 7)] && f.arcs().count() == 0)
            .unwrap();
        assert_eq!(fs.face_image(t).unwrap(), FaceImage::Face(t));
        assert_eq!(fs.boundary_degree(t, 1).unwrap(), 1);
        let rot = fs.rotation_number(t, 1, 16).unwrap();
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert_eq!(rot, (third.clone(), third));
    }

    #[test]
    fn critical_collapse_face_image_is_point() {
        let lam = lam_of(2, &[class(&[(1, 4), (3, 4)])]);
        let fs = faces(&lam).unwrap();
        for f in 0..fs.len() {
            assert_eq!(fs.face_image(f).unwrap(), FaceImage::Point(ang(1, 2)));
        }
    }

    #[test]
    fn rabbit_classification() {
        let lam = rabbit_lam(3);
        let fs = faces(&lam).unwrap();
        let mut cl = Classifier::new(&lam, &fs, ClassifyOptions::default());
        let t = fs
            .faces()
            .iter()
            .position(|f| f.basis == vec![ang(1, 7), ang(2, 7), ang(4, 7)] && f.arcs().count() == 0)
            .unwrap();
        let c = cl.classify(t).unwrap();
        assert_eq!(c.kind, GapKind::FinitePolygon);
        assert_eq!(c.period, Some(1));
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert_eq!(c.rotation, Some((third.clone(), third)));
        assert_eq!(c.chain_bound, 3);
    }

    #[test]
    fn all_critical_triangle_classification() {
        let lam = lam_of(3, &[class(&[(0, 1), (1, 3), (2, 3)])]);
        let fs = faces(&lam).unwrap();
        let interior = fs
            .faces()
            .iter()
            .position(|f| f.arcs().count() == 0)
            .unwrap();
        let mut cl = Classifier::new(&lam, &fs, ClassifyOptions::default());
        let c = cl.classify(interior).unwrap();
        assert_eq!(c.kind, GapKind::AllCritical);
        assert_eq!(c.preperiod, Some(0));
    }

    #[test]
    fn rotational_polygon_quarter_rotation() {
        // {1/15, 2/15, 4/15, 8/15} is invariant under doubling and cycles
        // by one position
        let lam = lam_of(2, &[class(&[(1, 15), (2, 15), (4, 15), (8, 15)])]);
        let fs = faces(&lam).unwrap();
        let interior = fs
            .faces()
            .iter()
            .position(|f| f.arcs().count() == 0)
            .unwrap();
        let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
        let rot = fs.rotation_number(interior, 1, 12).unwrap();
        assert_eq!(rot, (quarter.clone(), quarter));
    }

    #[test]
    fn chain_bound_examples() {
        let lam = rabbit_lam(0);
        let fs = faces(&lam).unwrap();
        let bounds: Vec<usize> = fs.faces().iter().map(chain_bound).collect();
        // one closed triangle chain and three single-leaf boundaries
        assert_eq!(bounds.iter().filter(|&&b| b == 3).count(), 1);
        assert_eq!(bounds.iter().filter(|&&b| b == 1).count(), 3);
    }

    #[test]
    fn separate_critical_leaf() {
        let lam = lam_of(2, &[class(&[(1, 4), (3, 4)])]);
        let fs = faces(&lam).unwrap();
        let reports = classify_critical_leaves(&lam, &fs).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].tag, CriticalLeafTag::Separate);
    }

    #[test]
    fn all_critical_union_boundary_tags() {
        let lam = lam_of(3, &[class(&[(0, 1), (1, 3), (2, 3)])]);
        let fs = faces(&lam).unwrap();
        let reports = classify_critical_leaves(&lam, &fs).unwrap();
        assert_eq!(reports.len(), 3);
        assert!(reports
            .iter()
            .all(|r| r.tag == CriticalLeafTag::AllCriticalUnionBoundary));
    }

    #[test]
    fn isolated_critical_leaf_between_pullbacks() {
        // critical leaf with classes attached on both sides
        let lam = lam_of(
            2,
            &[
                class(&[(1, 4), (3, 4)]),
                class(&[(1, 8), (1, 4)]),
                class(&[(3, 4), (7, 8)]),
            ],
        );
        let fs = faces(&lam).unwrap();
        let reports = classify_critical_leaves(&lam, &fs).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].tag, CriticalLeafTag::Isolated);
    }

    #[test]
    fn pullback_triangles_look_wandering_at_short_horizon() {
        let lam = rabbit_lam(6);
        let fs = faces(&lam).unwrap();
        let mut cl = Classifier::new(
            &lam,
            &fs,
            ClassifyOptions {
                horizon: 3,
                growth_checks: false,
                rotation_iterations: 8,
            },
        );
        // a deep pullback triangle's orbit cannot repeat within 3 steps
        let deep = fs
            .faces()
            .iter()
            .position(|f| {
                f.arcs().count() == 0
                    && f.basis.len() == 3
                    && f.basis.iter().any(|a| a.denom() > &BigInt::from(200))
            })
            .expect("deep triangle face exists");
        let c = cl.classify(deep).unwrap();
        assert_eq!(c.kind, GapKind::WanderingPolygon);
        assert!(fs.face(deep).basis.len() <= 4);
    }

    #[test]
    fn deterministic_face_sets() {
        let lam = rabbit_lam(4);
        let a = faces(&lam).unwrap();
        let b = faces(&lam).unwrap();
        let items = |fs: &FaceSet| -> Vec<Vec<BoundaryItem>> {
            fs.faces().iter().map(|f| f.items.clone()).collect()
        };
        assert_eq!(items(&a), items(&b));
    }
}
