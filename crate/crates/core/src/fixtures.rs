//! Small reference instances shared by tests, benches and the CLI.

use crate::zdd::{Family, Node, NodeId, SuperArm, Zdd};

/// ZDD for the s-t paths of the five-edge example network:
/// `{1,4}, {2,5}, {1,3,5}, {2,3,4}`.
pub fn figure_one_zdd() -> Zdd {
    let n = |label, lo, hi| Node {
        label,
        lo: NodeId(lo),
        hi: NodeId(hi),
    };
    let nodes = vec![
        n(5, 0, 1), // 2: {5}
        n(4, 0, 1), // 3: {4}
        n(3, 2, 3), // 4: {5}, {3,4}
        n(3, 3, 2), // 5: {4}, {3,5}
        n(2, 0, 4), // 6: {2,5}, {2,3,4}
        n(1, 6, 5), // 7: root
    ];
    Zdd::from_parts(5, nodes, NodeId(7)).expect("fixture is well formed")
}

pub fn figure_one_family() -> Family {
    [&[1, 4][..], &[2, 5], &[1, 3, 5], &[2, 3, 4]]
        .into_iter()
        .map(SuperArm::from)
        .collect()
}
