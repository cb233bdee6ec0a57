//! Weighted dynamic programs over a ZDD, all in the log domain.
//!
//! For per-arm weights `w` the constrained distribution over the encoded
//! family is `p(X) = w(X) / Z` with `w(X) = prod_{i in X} w_i`. The forward
//! weight `F(v)` sums `w` over root→v routes, the backward weight `B(v)`
//! over v→1 routes, and the backward weighted co-occurrence `C(v, j)` over
//! v→1 routes that take arm `j`. Everything here stores natural logs, with
//! `-inf` standing for weight zero.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::zdd::{NodeId, SuperArm, Zdd};

/// `ln(e^a + e^b)`, treating `-inf` as the identity.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Per-arm log-weights; `log_w[i - 1]` belongs to arm `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    log_w: Vec<f64>,
}

impl WeightVector {
    /// All weights equal to one (the uniform distribution over the family).
    pub fn uniform(arms: usize) -> Self {
        WeightVector {
            log_w: vec![0.0; arms],
        }
    }

    pub fn from_log(log_w: Vec<f64>) -> Result<Self> {
        if let Some(x) = log_w.iter().find(|x| x.is_nan() || **x == f64::INFINITY) {
            return Err(Error::Domain(format!("log-weight {x} is not finite or -inf")));
        }
        Ok(WeightVector { log_w })
    }

    pub fn from_linear(w: &[f64]) -> Result<Self> {
        if let Some(x) = w.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::Domain(format!("weight {x} is not finite and nonnegative")));
        }
        Ok(WeightVector {
            log_w: w.iter().map(|x| x.ln()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.log_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_w.is_empty()
    }

    /// Log-weight of arm `i` (1-based).
    #[inline]
    pub fn log(&self, arm: usize) -> f64 {
        self.log_w[arm - 1]
    }

    pub fn as_log_slice(&self) -> &[f64] {
        &self.log_w
    }

    pub fn as_log_mut(&mut self) -> &mut [f64] {
        &mut self.log_w
    }

    /// `ln w(X)`.
    pub fn log_weight_of(&self, x: &SuperArm) -> f64 {
        x.dot(&self.log_w)
    }

    fn check(&self, zdd: &Zdd) -> Result<()> {
        if self.log_w.len() != zdd.arms() {
            return Err(Error::Dimension {
                expected: zdd.arms(),
                got: self.log_w.len(),
            });
        }
        Ok(())
    }
}

/// `ln F(v)` for every vertex id.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardWeights(pub Vec<f64>);

/// `ln B(v)` for every vertex id.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardWeights(pub Vec<f64>);

impl ForwardWeights {
    #[inline]
    pub fn at(&self, v: NodeId) -> f64 {
        self.0[v.index()]
    }
}

impl BackwardWeights {
    #[inline]
    pub fn at(&self, v: NodeId) -> f64 {
        self.0[v.index()]
    }

    /// `ln Z`, the value at the root.
    pub fn log_partition(&self, zdd: &Zdd) -> f64 {
        self.at(zdd.root())
    }
}

/// Dense `|V| × d` table of `ln C(v, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BwcTable {
    arms: usize,
    data: Vec<f64>,
}

impl BwcTable {
    /// `ln C(v, arm)`, arm 1-based.
    #[inline]
    pub fn at(&self, v: NodeId, arm: usize) -> f64 {
        self.data[v.index() * self.arms + arm - 1]
    }

    #[inline]
    fn row(&self, v: NodeId) -> &[f64] {
        let k = v.index() * self.arms;
        &self.data[k..k + self.arms]
    }
}

/// Co-occurrence probability matrix: entry `(i-1, j-1)` is `p(i in X, j in X)`.
pub type CpmMatrix = SymMatrix;

/// Top-down pass: `F(r) = 1`, each vertex pushes its weight to its children.
pub fn forward_weights(zdd: &Zdd, w: &WeightVector) -> Result<ForwardWeights> {
    w.check(zdd)?;
    let mut f = vec![f64::NEG_INFINITY; zdd.id_count()];
    f[zdd.root().index()] = 0.0;
    for (id, n) in zdd.iter().rev() {
        let fv = f[id.index()];
        if fv == f64::NEG_INFINITY {
            continue;
        }
        f[n.lo.index()] = log_add(f[n.lo.index()], fv);
        f[n.hi.index()] = log_add(f[n.hi.index()], w.log(n.arm()) + fv);
    }
    Ok(ForwardWeights(f))
}

/// Bottom-up pass: `B(1) = 1`, `B(0) = 0`,
/// `B(v) = B(lo) + w_{lbl(v)} B(hi)`.
pub fn backward_weights(zdd: &Zdd, w: &WeightVector) -> Result<BackwardWeights> {
    w.check(zdd)?;
    let mut b = Vec::with_capacity(zdd.id_count());
    b.push(f64::NEG_INFINITY);
    b.push(0.0);
    for (_, n) in zdd.iter() {
        let v = log_add(b[n.lo.index()], w.log(n.arm()) + b[n.hi.index()]);
        b.push(v);
    }
    Ok(BackwardWeights(b))
}

/// `ln Z(w, S)`; `-inf` for the empty family.
pub fn partition(zdd: &Zdd, w: &WeightVector) -> Result<f64> {
    Ok(backward_weights(zdd, w)?.log_partition(zdd))
}

/// Exact draw from `p(X; w, S)` by a single root-to-terminal descent.
pub fn draw<R: Rng + ?Sized>(
    zdd: &Zdd,
    w: &WeightVector,
    b: &BackwardWeights,
    rng: &mut R,
) -> Result<SuperArm> {
    if zdd.is_empty_family() {
        return Err(Error::EmptyFamily);
    }
    if b.log_partition(zdd) == f64::NEG_INFINITY {
        return Err(Error::ZeroWeight);
    }
    let mut arms = Vec::new();
    let mut v = zdd.root();
    while !v.is_terminal() {
        let n = zdd.node(v);
        let theta = (w.log(n.arm()) + b.at(n.hi) - b.at(v)).exp();
        if rng.random::<f64>() < theta {
            arms.push(n.arm());
            v = n.hi;
        } else {
            v = n.lo;
        }
    }
    debug_assert_eq!(v, NodeId::ONE);
    Ok(SuperArm::new(arms))
}

/// Backward weighted co-occurrence table.
pub fn bwc(zdd: &Zdd, w: &WeightVector, b: &BackwardWeights) -> Result<BwcTable> {
    w.check(zdd)?;
    let d = zdd.arms();
    let mut data = vec![f64::NEG_INFINITY; zdd.id_count() * d];
    for (id, n) in zdd.iter() {
        let i = n.arm();
        let lw = w.log(i);
        let (base, lo, hi) = (id.index() * d, n.lo.index() * d, n.hi.index() * d);
        data[base + i - 1] = lw + b.at(n.hi);
        // labels below the root of either child are > i, so columns j < i stay -inf
        for j in i..d {
            data[base + j] = log_add(data[lo + j], lw + data[hi + j]);
        }
    }
    Ok(BwcTable { arms: d, data })
}

/// Co-occurrence probability matrix of `p(X; w, S)`.
pub fn cpm(
    zdd: &Zdd,
    w: &WeightVector,
    f: &ForwardWeights,
    b: &BackwardWeights,
    c: &BwcTable,
) -> Result<CpmMatrix> {
    w.check(zdd)?;
    let d = zdd.arms();
    let log_z = b.log_partition(zdd);
    if log_z == f64::NEG_INFINITY {
        return Err(if zdd.is_empty_family() {
            Error::EmptyFamily
        } else {
            Error::ZeroWeight
        });
    }
    let mut p = SymMatrix::zeros(d);
    for (id, n) in zdd.iter() {
        let i = n.arm();
        let head = f.at(id) + w.log(i) - log_z;
        if head == f64::NEG_INFINITY {
            continue;
        }
        *p.get_mut(i - 1, i - 1) += (head + b.at(n.hi)).exp();
        let row = c.row(n.hi);
        for j in i..d {
            let lc = row[j];
            if lc != f64::NEG_INFINITY {
                *p.get_mut(i - 1, j) += (head + lc).exp();
            }
        }
    }
    p.mirror_upper();
    Ok(p)
}

/// Runs forward, backward, co-occurrence and matrix passes in one go.
pub fn cpm_for(zdd: &Zdd, w: &WeightVector) -> Result<CpmMatrix> {
    let f = forward_weights(zdd, w)?;
    let b = backward_weights(zdd, w)?;
    let c = bwc(zdd, w, &b)?;
    cpm(zdd, w, &f, &b, &c)
}

/// Log-partition and co-occurrence matrix by summing over an explicit list
/// of super arms. Reference implementation for small families.
pub fn enumerated_cpm<'a>(
    family: impl IntoIterator<Item = &'a SuperArm>,
    w: &WeightVector,
) -> Result<(f64, CpmMatrix)> {
    let d = w.len();
    let members: Vec<&SuperArm> = family.into_iter().collect();
    for x in &members {
        if let Some(&bad) = x.arms().iter().find(|&&i| i == 0 || i > d) {
            return Err(Error::ArmOutOfRange { arm: bad, arms: d });
        }
    }
    let logs: Vec<f64> = members.iter().map(|x| w.log_weight_of(x)).collect();
    let log_z = logs.iter().copied().fold(f64::NEG_INFINITY, log_add);
    if log_z == f64::NEG_INFINITY {
        return Err(if members.is_empty() { Error::EmptyFamily } else { Error::ZeroWeight });
    }
    let mut p = CpmMatrix::zeros(d);
    for (x, lw) in members.iter().zip(&logs) {
        let q = (lw - log_z).exp();
        for &i in x.arms() {
            for &j in x.arms() {
                *p.get_mut(i - 1, j - 1) += q;
            }
        }
    }
    Ok((log_z, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure_one_family, figure_one_zdd};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    const LN: fn(f64) -> f64 = f64::ln;

    fn w2() -> WeightVector {
        WeightVector::from_linear(&[2.0, 1.0, 1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn log_add_identities() {
        assert_eq!(log_add(f64::NEG_INFINITY, 1.5), 1.5);
        assert_eq!(log_add(0.25, f64::NEG_INFINITY), 0.25);
        assert!((log_add(LN(2.0), LN(3.0)) - LN(5.0)).abs() < 1e-15);
        assert!((log_add(1000.0, 1000.0) - (1000.0 + LN(2.0))).abs() < 1e-12);
    }

    #[test]
    fn forward_backward_examples() {
        let z = figure_one_zdd();
        let u = WeightVector::uniform(5);
        let f = forward_weights(&z, &u).unwrap();
        let b = backward_weights(&z, &u).unwrap();
        assert_eq!(f.at(z.root()), 0.0);
        assert_eq!(b.at(NodeId::ONE), 0.0);
        assert_eq!(b.at(NodeId::ZERO), f64::NEG_INFINITY);
        assert!((f.at(NodeId::ONE) - LN(4.0)).abs() < 1e-14);
        assert!((b.at(z.root()) - LN(4.0)).abs() < 1e-14);

        let w = w2();
        let f = forward_weights(&z, &w).unwrap();
        let b = backward_weights(&z, &w).unwrap();
        assert!((f.at(NodeId::ONE) - LN(6.0)).abs() < 1e-14);
        assert!((b.at(z.root()) - LN(6.0)).abs() < 1e-14);
        assert!((partition(&z, &w).unwrap() - LN(6.0)).abs() < 1e-14);
    }

    #[test]
    fn partition_edge_cases() {
        assert_eq!(
            partition(&Zdd::empty(3), &WeightVector::uniform(3)).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(partition(&Zdd::unit(3), &WeightVector::uniform(3)).unwrap(), 0.0);
        assert!(matches!(
            partition(&figure_one_zdd(), &WeightVector::uniform(4)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn bwc_examples() {
        let z = figure_one_zdd();
        let u = WeightVector::uniform(5);
        let b = backward_weights(&z, &u).unwrap();
        let c = bwc(&z, &u, &b).unwrap();
        for (id, n) in z.iter() {
            assert_eq!(c.at(id, n.arm()), u.log(n.arm()) + b.at(n.hi));
        }
        for j in 1..=5 {
            assert_eq!(c.at(NodeId::ONE, j), f64::NEG_INFINITY);
        }
        let p5 = (c.at(z.root(), 5) - b.at(z.root())).exp();
        assert!((p5 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn cpm_examples() {
        let z = figure_one_zdd();
        let p = cpm_for(&z, &WeightVector::uniform(5)).unwrap();
        for i in 0..5 {
            assert!((p.get(i, i) - 0.5).abs() < 1e-14);
        }
        assert!((p.get(0, 3) - 0.25).abs() < 1e-14);
        assert!((p.get(3, 0) - 0.25).abs() < 1e-14);
        assert_eq!(p.get(0, 1), 0.0);

        let p = cpm_for(&z, &w2()).unwrap();
        assert!((p.get(0, 0) - 2.0 / 3.0).abs() < 1e-14);
        assert!((p.get(1, 1) - 1.0 / 3.0).abs() < 1e-14);
        assert!((p.get(0, 2) - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn cpm_of_singleton() {
        let fam = [SuperArm::from([1, 2])].into_iter().collect();
        let z = crate::build::reduce_from_family(&fam, 4).unwrap();
        let p = cpm_for(&z, &WeightVector::uniform(4)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i < 2 && j < 2 { 1.0 } else { 0.0 };
                assert!((p.get(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cpm_zero_weight() {
        let z = figure_one_zdd();
        let w = WeightVector::from_linear(&[0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(cpm_for(&z, &w), Err(Error::ZeroWeight)));
        let b = backward_weights(&z, &w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(draw(&z, &w, &b, &mut rng), Err(Error::ZeroWeight)));
    }

    #[test]
    fn draw_singleton_is_deterministic() {
        let fam = [SuperArm::from([1])].into_iter().collect();
        let z = crate::build::reduce_from_family(&fam, 1).unwrap();
        let w = WeightVector::uniform(1);
        let b = backward_weights(&z, &w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(draw(&z, &w, &b, &mut rng).unwrap(), SuperArm::from([1]));
        }
    }

    #[test]
    fn draw_frequencies_match_weights() {
        let z = figure_one_zdd();
        let w = w2();
        let b = backward_weights(&z, &w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut hits: HashMap<SuperArm, usize> = HashMap::new();
        for _ in 0..n {
            *hits.entry(draw(&z, &w, &b, &mut rng).unwrap()).or_default() += 1;
        }
        let expected = [
            (SuperArm::from([1, 4]), 1.0 / 3.0),
            (SuperArm::from([2, 5]), 1.0 / 6.0),
            (SuperArm::from([1, 3, 5]), 1.0 / 3.0),
            (SuperArm::from([2, 3, 4]), 1.0 / 6.0),
        ];
        for (x, p) in expected {
            let freq = hits.get(&x).copied().unwrap_or(0) as f64 / n as f64;
            // 5 standard errors
            let tol = 5.0 * (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < tol, "{x}: {freq} vs {p}");
        }
        assert_eq!(hits.len(), figure_one_family().len());
    }

    #[test]
    fn same_seed_same_samples() {
        let z = figure_one_zdd();
        let w = w2();
        let b = backward_weights(&z, &w).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| draw(&z, &w, &b, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn weights_validation() {
        assert!(WeightVector::from_linear(&[-1.0]).is_err());
        assert!(WeightVector::from_log(vec![f64::NAN]).is_err());
        assert!(WeightVector::from_log(vec![f64::NEG_INFINITY, 0.0]).is_ok());
    }
}
