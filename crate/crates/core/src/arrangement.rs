//! Subspace arrangements closed under intersection.
//!
//! Every member `X_a` of the lattice is stored with a canonical orthonormal
//! basis and its orthogonal projector. The face `C_a` is the unit sphere of
//! `X_a`; faces are compared by geometric inclusion. The origin `{0}` and the
//! ambient space are always present and are never listed in input files.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub const ORIGIN: &str = "origin";
pub const AMBIENT: &str = "ambient";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MemberId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeTolerance {
    /// Frobenius distance between projectors below which two subspaces are equal.
    pub subspace: f64,
    /// A point is on a face when its distance to the subspace is at most this.
    pub inside: f64,
    /// A point is off a face when its distance is at least this. Distances in
    /// between are reported as ambiguous.
    pub outside: f64,
}

impl Default for LatticeTolerance {
    fn default() -> Self {
        Self { subspace: 1e-10, inside: 1e-9, outside: 1e-7 }
    }
}

#[derive(Debug, Clone)]
pub struct Subspace {
    name: String,
    basis: DMatrix<f64>,
    projector: DMatrix<f64>,
}

impl Subspace {
    /// Orthonormalizes the columns of `basis`. Rank-deficient input is rejected.
    pub fn new(name: impl Into<String>, basis: &DMatrix<f64>) -> Result<Self> {
        let name = name.into();
        let cols = linalg::columns(basis);
        if cols.iter().any(|c| c.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidSubspace { name, reason: "non-finite entry".into() });
        }
        let (ortho, dropped) = linalg::gram_schmidt(&cols, 1e-10);
        if dropped > 0 {
            return Err(Error::InvalidSubspace {
                name,
                reason: format!("basis is rank-deficient ({dropped} dependent vector(s))"),
            });
        }
        let b = linalg::from_columns(basis.nrows(), &ortho);
        Ok(Self::from_orthonormal(name, b))
    }

    fn from_orthonormal(name: String, basis: DMatrix<f64>) -> Self {
        let projector = linalg::projector(&basis);
        let basis = linalg::canonical_basis(&projector, basis.ncols());
        let projector = linalg::projector(&basis);
        Self { name, basis, projector }
    }

    fn zero(n: usize) -> Self {
        Self::from_orthonormal(ORIGIN.into(), DMatrix::zeros(n, 0))
    }

    fn full(n: usize) -> Self {
        Self::from_orthonormal(AMBIENT.into(), DMatrix::identity(n, n))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Orthonormal basis, one vector per column.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement_basis(&self) -> DMatrix<f64> {
        linalg::complement_basis(&self.basis)
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.projector * v
    }

    /// Component of `v` orthogonal to the subspace.
    pub fn reject(&self, v: &DVector<f64>) -> DVector<f64> {
        v - &self.projector * v
    }

    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        self.reject(v).norm()
    }

    pub fn projector_distance(&self, other: &Subspace) -> f64 {
        (&self.projector - &other.projector).norm()
    }

    /// `self` is contained in `other`.
    fn within(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() <= other.dim() && (&other.projector * &self.basis - &self.basis).norm() <= tol
    }

    fn intersect(&self, other: &Subspace, name: String) -> Subspace {
        let n = self.ambient_dim();
        let id = DMatrix::<f64>::identity(n, n);
        let m = (&id - &self.projector) + (&id - &other.projector);
        let eig = SymmetricEigen::new(m);
        let cols: Vec<DVector<f64>> = (0..n)
            .filter(|&i| eig.eigenvalues[i].abs() <= 1e-9)
            .map(|i| eig.eigenvectors.column(i).into_owned())
            .collect();
        let (ortho, _) = linalg::gram_schmidt(&cols, 1e-8);
        Subspace::from_orthonormal(name, linalg::from_columns(n, &ortho))
    }
}

/// Input format for arrangements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrangementSpec {
    pub dimension: usize,
    pub subspaces: Vec<SubspaceSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceSpec {
    pub name: String,
    /// Spanning vectors, each of length `dimension`.
    pub basis: Vec<Vec<f64>>,
}

/// Where a point of the sphere sits in the stratification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    /// Smallest face containing the point.
    pub face: MemberId,
    /// Distance from the point to `X_face`.
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct SubspaceLattice {
    dim: usize,
    members: Vec<Subspace>,
    auto_added: Vec<bool>,
    /// `leq[a][b]` iff `X_a` is contained in `X_b`.
    leq: Vec<Vec<bool>>,
    ranks: Vec<usize>,
    tol: LatticeTolerance,
}

impl SubspaceLattice {
    /// Closes the given subspaces under pairwise intersection, adds `{0}` and
    /// the ambient space, and merges duplicates (first name wins).
    pub fn close(dim: usize, inputs: &[(String, DMatrix<f64>)], tol: LatticeTolerance) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("ambient dimension must be positive".into()));
        }
        let mut members = vec![Subspace::zero(dim)];
        let mut auto_added = vec![false];
        let push = |s: Subspace, auto: bool, members: &mut Vec<Subspace>, auto_added: &mut Vec<bool>| {
            if !members.iter().any(|m| m.projector_distance(&s) <= tol.subspace) {
                members.push(s);
                auto_added.push(auto);
            }
        };
        push(Subspace::full(dim), false, &mut members, &mut auto_added);
        for (name, basis) in inputs {
            if basis.nrows() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: basis.nrows() });
            }
            if name == ORIGIN || name == AMBIENT {
                return Err(Error::InvalidSubspace { name: name.clone(), reason: "reserved name".into() });
            }
            if members.iter().any(|m| m.name == *name) {
                return Err(Error::InvalidSubspace { name: name.clone(), reason: "duplicate name".into() });
            }
            push(Subspace::new(name.clone(), basis)?, false, &mut members, &mut auto_added);
        }
        loop {
            let mut added = false;
            let len = members.len();
            for i in 0..len {
                for j in (i + 1)..len {
                    let name = format!("{}&{}", members[i].name, members[j].name);
                    let s = members[i].intersect(&members[j], name);
                    let before = members.len();
                    push(s, true, &mut members, &mut auto_added);
                    added |= members.len() > before;
                }
            }
            if !added {
                break;
            }
        }

        // Sort by dimension, keeping insertion order within a dimension.
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.sort_by_key(|&i| (members[i].dim(), i));
        let members: Vec<Subspace> = order.iter().map(|&i| members[i].clone()).collect();
        let auto_added: Vec<bool> = order.iter().map(|&i| auto_added[i]).collect();

        let m = members.len();
        let leq: Vec<Vec<bool>> = (0..m)
            .map(|a| (0..m).map(|b| members[a].within(&members[b], 1e2 * tol.subspace)).collect())
            .collect();

        // chain[a]: number of faces in the longest chain of nonzero faces ending at a.
        let mut chain = vec![0usize; m];
        for a in 0..m {
            if members[a].dim() == 0 {
                continue;
            }
            chain[a] = 1 + (0..a)
                .filter(|&b| b != a && leq[b][a] && members[b].dim() > 0 && members[b].dim() < members[a].dim())
                .map(|b| chain[b])
                .max()
                .unwrap_or(0);
        }
        let ranks = chain.iter().map(|c| c + 1).collect();
        Ok(Self { dim, members, auto_added, leq, ranks, tol })
    }

    pub fn from_spec(spec: &ArrangementSpec) -> Result<Self> {
        let mut inputs = Vec::with_capacity(spec.subspaces.len());
        for s in &spec.subspaces {
            if s.basis.is_empty() {
                return Err(Error::InvalidSubspace {
                    name: s.name.clone(),
                    reason: "{0} is implicit and must not be listed".into(),
                });
            }
            let mut cols = Vec::with_capacity(s.basis.len());
            for v in &s.basis {
                if v.len() != spec.dimension {
                    return Err(Error::DimensionMismatch { expected: spec.dimension, found: v.len() });
                }
                cols.push(DVector::from_column_slice(v));
            }
            if cols.len() >= spec.dimension {
                let sub = Subspace::new(s.name.clone(), &linalg::from_columns(spec.dimension, &cols))?;
                if sub.dim() == spec.dimension {
                    return Err(Error::InvalidSubspace {
                        name: s.name.clone(),
                        reason: "the ambient space is implicit and must not be listed".into(),
                    });
                }
            }
            inputs.push((s.name.clone(), linalg::from_columns(spec.dimension, &cols)));
        }
        Self::close(spec.dimension, &inputs, LatticeTolerance::default())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: ArrangementSpec = serde_json::from_str(s)?;
        Self::from_spec(&spec)
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn tolerance(&self) -> LatticeTolerance {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = MemberId> {
        (0..self.members.len()).map(MemberId)
    }

    /// Members of positive dimension, i.e. those with a nonempty face.
    pub fn faces(&self) -> impl Iterator<Item = MemberId> + '_ {
        self.ids().filter(|&a| self.members[a.0].dim() > 0)
    }

    pub fn member(&self, a: MemberId) -> &Subspace {
        &self.members[a.0]
    }

    pub fn name(&self, a: MemberId) -> &str {
        &self.members[a.0].name
    }

    pub fn id(&self, name: &str) -> Result<MemberId> {
        self.members
            .iter()
            .position(|m| m.name == name)
            .map(MemberId)
            .ok_or_else(|| Error::UnknownFace(name.to_string()))
    }

    pub fn origin(&self) -> MemberId {
        MemberId(0)
    }

    pub fn ambient(&self) -> MemberId {
        MemberId(self.members.len() - 1)
    }

    /// Whether the member was created by intersection rather than supplied.
    pub fn is_auto_added(&self, a: MemberId) -> bool {
        self.auto_added[a.0]
    }

    /// `X_a` is contained in `X_b`.
    pub fn leq(&self, a: MemberId, b: MemberId) -> bool {
        self.leq[a.0][b.0]
    }

    pub fn lt(&self, a: MemberId, b: MemberId) -> bool {
        a != b && self.leq(a, b)
    }

    /// The member equal to `X_a` intersected with `X_b`.
    pub fn meet(&self, a: MemberId, b: MemberId) -> MemberId {
        self.ids()
            .filter(|&c| self.leq(c, a) && self.leq(c, b))
            .max_by_key(|&c| self.members[c.0].dim())
            .unwrap_or(self.origin())
    }

    /// One plus the number of faces in the longest chain of nonzero faces
    /// ending at `a`. The origin has rank 1.
    pub fn rank(&self, a: MemberId) -> usize {
        self.ranks[a.0]
    }

    pub fn n_body_rank(&self) -> usize {
        self.rank(self.ambient())
    }

    /// Covering relations `(a, b)` with `a < b` and nothing strictly between.
    pub fn hasse_edges(&self) -> Vec<(MemberId, MemberId)> {
        let mut edges = Vec::new();
        for a in self.ids() {
            for b in self.ids() {
                if self.lt(a, b) && !self.ids().any(|c| self.lt(a, c) && self.lt(c, b)) {
                    edges.push((a, b));
                }
            }
        }
        edges
    }

    pub fn distance(&self, a: MemberId, p: &DVector<f64>) -> f64 {
        self.members[a.0].distance(p)
    }

    /// Smallest face containing the unit vector `p`.
    pub fn locate(&self, p: &DVector<f64>) -> Result<Location> {
        self.locate_with(p, self.tol.inside, self.tol.outside)
    }

    /// As [`locate`](Self::locate) with explicit bands.
    pub fn locate_with(&self, p: &DVector<f64>, inside: f64, outside: f64) -> Result<Location> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: p.len() });
        }
        let mut best: Option<Location> = None;
        for a in self.faces() {
            let d = self.distance(a, p);
            if d > inside && d < outside {
                return Err(Error::AmbiguousLocation { face: self.name(a).to_string(), distance: d });
            }
            if d <= inside {
                let better = match best {
                    None => true,
                    Some(l) => self.member(a).dim() < self.member(l.face).dim(),
                };
                if better {
                    best = Some(Location { face: a, distance: d });
                }
            }
        }
        best.ok_or_else(|| Error::Invalid("point is not on the unit sphere of any face".into()))
    }

    /// `p` lies on `C_a` but on no strictly smaller face.
    pub fn is_regular(&self, a: MemberId, p: &DVector<f64>) -> bool {
        self.distance(a, p) <= self.tol.inside
            && !self.faces().any(|b| self.lt(b, a) && self.distance(b, p) <= self.tol.inside)
    }
}
