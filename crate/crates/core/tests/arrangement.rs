mod common;

use brokenflow::arrangement::{LatticeTolerance, SubspaceLattice, AMBIENT, ORIGIN};
use brokenflow::Error;
use common::{e, lattice, span};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn rank_of(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 {
        return 0;
    }
    m.clone().svd(false, false).singular_values.iter().filter(|&&s| s > 1e-9).count()
}

/// Dimension of `span(a) & span(b)` from `dim a + dim b - dim(a + b)`.
fn meet_dim(a: &DMatrix<f64>, b: &DMatrix<f64>) -> usize {
    let joint = if a.ncols() == 0 {
        b.clone()
    } else if b.ncols() == 0 {
        a.clone()
    } else {
        let cols: Vec<DVector<f64>> = a.column_iter().chain(b.column_iter()).map(|c| c.into_owned()).collect();
        DMatrix::from_columns(&cols)
    };
    rank_of(a) + rank_of(b) - rank_of(&joint)
}

#[test]
fn two_lines_in_three_space() {
    let l = lattice(3, &[("x", &[0]), ("y", &[1])]);
    assert_eq!(l.len(), 4);
    let (x, y) = (l.id("x").unwrap(), l.id("y").unwrap());
    assert_eq!(l.meet(x, y), l.origin());
    assert_eq!(l.rank(l.origin()), 1);
    assert_eq!(l.rank(x), 2);
    assert_eq!(l.n_body_rank(), 3);
    assert!(!l.is_auto_added(x));
}

#[test]
fn two_planes_add_their_intersection() {
    let l = common::two_circles();
    let z = l.id("xz&yz").unwrap();
    assert!(l.is_auto_added(z));
    assert_eq!(l.member(z).dim(), 1);
    assert!(l.lt(z, l.id("xz").unwrap()) && l.lt(z, l.id("yz").unwrap()));
    assert_eq!(l.rank(z), 2);
    assert_eq!(l.rank(l.id("xz").unwrap()), 3);
    assert_eq!(l.n_body_rank(), 4);
    let edges = l.hasse_edges();
    assert_eq!(edges.len(), 5);
    assert!(edges.contains(&(l.origin(), z)));
    assert!(!edges.contains(&(l.origin(), l.id("xz").unwrap())));
}

#[test]
fn duplicate_subspaces_merge_and_reserved_names_fail() {
    let b = DMatrix::from_column_slice(3, 2, &[1.0, 1.0, 0.0, 1.0, -1.0, 0.0]);
    let l = SubspaceLattice::close(3, &[("p".into(), span(3, &[0, 1])), ("q".into(), b)], LatticeTolerance::default()).unwrap();
    assert_eq!(l.len(), 3);
    assert!(l.id("p").is_ok());
    assert!(matches!(l.id("q"), Err(Error::UnknownFace(_))));
    for name in [ORIGIN, AMBIENT] {
        let r = SubspaceLattice::close(3, &[(name.into(), span(3, &[0]))], LatticeTolerance::default());
        assert!(matches!(r, Err(Error::InvalidSubspace { .. })));
    }
}

#[test]
fn json_input() {
    let l = SubspaceLattice::from_json_str(r#"{"dimension": 3, "subspaces": [{"name": "xz", "basis": [[1,0,0],[0,0,1]]}, {"name": "yz", "basis": [[0,1,0],[0,0,1]]}]}"#)
        .unwrap();
    assert_eq!(l.len(), 5);
    assert!(SubspaceLattice::from_json_str(r#"{"dimension": 3, "subspaces": [{"name": "bad", "basis": [[1,0]]}]}"#).is_err());
}

#[test]
fn locate_bands() {
    let l = common::two_circles();
    let xz = l.id("xz").unwrap();
    let on = |d: f64| DVector::from_vec(vec![1.0, d, 0.0]).normalize();
    assert_eq!(l.locate(&on(1e-10)).unwrap().face, xz);
    assert!(matches!(l.locate(&on(1e-8)), Err(Error::AmbiguousLocation { .. })));
    assert_eq!(l.locate(&on(1e-6)).unwrap().face, l.ambient());
    assert_eq!(l.locate(&e(3, 2)).unwrap().face, l.id("xz&yz").unwrap());
    assert!(l.is_regular(xz, &e(3, 0)));
    assert!(!l.is_regular(xz, &e(3, 2)));
}

fn axis_sets() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::btree_set(0usize..5, 1..5).prop_map(|s| s.into_iter().collect()), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_intersection_closed(sets in axis_sets(), angle in 0.0f64..3.0) {
        // Rotate the coordinate subspaces so the lattice is not axis-aligned.
        let mut rot = DMatrix::<f64>::identity(5, 5);
        let (c, s) = (angle.cos(), angle.sin());
        rot[(0, 0)] = c; rot[(0, 3)] = -s; rot[(3, 0)] = s; rot[(3, 3)] = c;
        let inputs: Vec<(String, DMatrix<f64>)> =
            sets.iter().enumerate().map(|(i, axes)| (format!("s{i}"), &rot * span(5, axes))).collect();
        let l = SubspaceLattice::close(5, &inputs, LatticeTolerance::default()).unwrap();
        for a in l.ids() {
            prop_assert!(l.leq(l.origin(), a) && l.leq(a, l.ambient()));
            for b in l.ids() {
                let m = l.meet(a, b);
                let want = meet_dim(l.member(a).basis(), l.member(b).basis());
                prop_assert_eq!(l.member(m).dim(), want);
                prop_assert!(l.leq(m, a) && l.leq(m, b));
                if l.lt(a, b) {
                    prop_assert!(l.rank(a) < l.rank(b));
                    prop_assert!(l.member(a).dim() < l.member(b).dim());
                }
                let contained = (l.member(b).projector() * l.member(a).basis() - l.member(a).basis()).norm() < 1e-8;
                prop_assert_eq!(l.leq(a, b), contained);
            }
        }
        prop_assert_eq!(l.rank(l.origin()), 1);
    }
}
