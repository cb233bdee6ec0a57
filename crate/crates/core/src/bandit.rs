//! Exponential-weights policy with weight modification for adversarial
//! combinatorial bandits, run entirely on a ZDD.
//!
//! Each round the policy samples from the mixture
//! `p_t = (1 - gamma_t) p(.; w_t, S) + gamma_t p(.; 1, S)`, observes only the
//! scalar cost of its choice, builds the unbiased estimate
//! `l_t = c_t P_t^+ 1_{X_t}` from the mixture's co-occurrence matrix `P_t`,
//! and rescales its log-weights so that
//! `ln w_{t+1,i} = -eta_{t+1} * sum_{s<=t} l_{s,i}` holds at every round.
//! With `gamma_t = t^{-1/alpha} / 2` and `eta_t = lambda t^{-1/alpha} / (2 L^2)`
//! the regret guarantee holds at every round, without knowing the horizon.

use std::sync::Arc;

use log::warn;
use rand::Rng;

use crate::dp::{self, BackwardWeights, CpmMatrix, WeightVector};
use crate::error::{Error, Result};
use crate::linalg::{self, SymEigen, SymMatrix, DEFAULT_REL_TOL};
use crate::zdd::{SuperArm, Zdd};

/// Exploration rate and learning rate for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub gamma: f64,
    pub eta: f64,
}

/// `gamma_t = t^{-1/alpha} / 2`, `eta_t = lambda t^{-1/alpha} / (2 L^2)`.
pub fn schedule(t: u64, alpha: f64, lambda: f64, l: f64) -> Rates {
    let decay = (t as f64).powf(-1.0 / alpha);
    Rates {
        gamma: decay / 2.0,
        eta: lambda * decay / (2.0 * l * l),
    }
}

/// How weights are carried from one round to the next.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum UpdateRule {
    /// Decaying schedules with exponent rescaling
    /// `w_{t+1,i} = w_{t,i}^{eta_{t+1}/eta_t} exp(-eta_{t+1} l_{t,i})`.
    #[default]
    WeightModification,
    /// Constant rates and the plain update `w_{t+1,i} = w_{t,i} exp(-eta l_{t,i})`.
    FixedRate { gamma: f64, eta: f64 },
}

/// Unbiased loss estimate `c_t P_t^+ 1_{X_t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEstimate(pub Vec<f64>);

impl LossEstimate {
    /// `l^T 1_X`.
    pub fn on(&self, x: &SuperArm) -> f64 {
        x.dot(&self.0)
    }
}

/// `cost * pinv * 1_X`.
pub fn estimate_loss(pinv: &SymMatrix, cost: f64, x: &SuperArm) -> Result<LossEstimate> {
    let d = pinv.dim();
    if let Some(&bad) = x.arms().iter().find(|&&i| i == 0 || i > d) {
        return Err(Error::Dimension {
            expected: d,
            got: bad,
        });
    }
    let mut out = vec![0.0; d];
    for (r, o) in out.iter_mut().enumerate() {
        let row = pinv.row(r);
        *o = cost * x.arms().iter().map(|&i| row[i - 1]).sum::<f64>();
    }
    Ok(LossEstimate(out))
}

/// A bandit player: it picks a super arm, then learns only that arm's cost.
pub trait Policy {
    fn select(&mut self, rng: &mut dyn rand::RngCore) -> Result<SuperArm>;
    fn feedback(&mut self, cost: f64) -> Result<()>;
}

#[derive(Debug, Clone)]
struct Pending {
    arm: SuperArm,
}

/// Round state of the policy.
#[derive(Debug, Clone)]
pub struct BanditState {
    zdd: Arc<Zdd>,
    alpha: f64,
    t: u64,
    weights: WeightVector,
    max_cardinality: usize,
    lambda: f64,
    uniform_cpm: SymMatrix,
    uniform_bw: BackwardWeights,
    /// Backward weights for the current `weights`, refreshed lazily.
    weighted_bw: Option<BackwardWeights>,
    rel_tol: f64,
    rule: UpdateRule,
    pending: Option<Pending>,
    cost_violations: u64,
}

impl BanditState {
    /// Unit weights, `L^2` from the largest super arm and `lambda` from the
    /// spectrum of the uniform co-occurrence matrix.
    pub fn new(zdd: Arc<Zdd>, alpha: f64) -> Result<Self> {
        Self::with_tolerance(zdd, alpha, DEFAULT_REL_TOL)
    }

    pub fn with_tolerance(zdd: Arc<Zdd>, alpha: f64, rel_tol: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        if zdd.is_empty_family() {
            return Err(Error::EmptyFamily);
        }
        let max_cardinality = zdd.max_cardinality()?;
        if max_cardinality == 0 {
            return Err(Error::Degenerate(
                "the only super arm is the empty set, so no arm is ever observed".into(),
            ));
        }
        let uniform = WeightVector::uniform(zdd.arms());
        let uniform_cpm = dp::cpm_for(&zdd, &uniform)?;
        let lambda = linalg::smallest_nonzero_eigenvalue(&uniform_cpm, rel_tol)
            .map_err(|_| Error::Degenerate("uniform co-occurrence matrix is zero".into()))?;
        let uniform_bw = dp::backward_weights(&zdd, &uniform)?;
        Ok(BanditState {
            alpha,
            t: 1,
            weights: uniform.clone(),
            max_cardinality,
            lambda,
            weighted_bw: Some(uniform_bw.clone()),
            uniform_cpm,
            uniform_bw,
            rel_tol,
            rule: UpdateRule::WeightModification,
            pending: None,
            cost_violations: 0,
            zdd,
        })
    }

    pub fn with_rule(mut self, rule: UpdateRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn zdd(&self) -> &Zdd {
        &self.zdd
    }

    /// Current (1-based) round.
    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `L = sqrt(max |X|)`.
    pub fn l(&self) -> f64 {
        (self.max_cardinality as f64).sqrt()
    }

    /// `L^2 = max |X|`.
    pub fn l_squared(&self) -> f64 {
        self.max_cardinality as f64
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn uniform_cpm(&self) -> &SymMatrix {
        &self.uniform_cpm
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Rounds so far whose observed cost exceeded 1 in magnitude.
    pub fn cost_violations(&self) -> u64 {
        self.cost_violations
    }

    /// Overwrites the policy weights (used by tests and replay tools).
    pub fn set_weights(&mut self, weights: WeightVector) -> Result<()> {
        if weights.len() != self.zdd.arms() {
            return Err(Error::Dimension {
                expected: self.zdd.arms(),
                got: weights.len(),
            });
        }
        self.weights = weights;
        self.weighted_bw = None;
        Ok(())
    }

    /// Rates in force at round `t`.
    pub fn rates_at(&self, t: u64) -> Rates {
        match self.rule {
            UpdateRule::WeightModification => schedule(t, self.alpha, self.lambda, self.l()),
            UpdateRule::FixedRate { gamma, eta } => Rates { gamma, eta },
        }
    }

    pub fn rates(&self) -> Rates {
        self.rates_at(self.t)
    }

    fn weighted_bw(&mut self) -> Result<&BackwardWeights> {
        if self.weighted_bw.is_none() {
            self.weighted_bw = Some(dp::backward_weights(&self.zdd, &self.weights)?);
        }
        Ok(self.weighted_bw.as_ref().expect("just filled"))
    }

    /// Draws `X_t ~ p_t` with the current mixture rate.
    pub fn sample_action<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<SuperArm> {
        let gamma = self.rates().gamma;
        self.sample_with_gamma(gamma, rng)
    }

    /// Draws from `(1 - gamma) p(.; w_t, S) + gamma p(.; 1, S)` by first
    /// picking the component.
    pub fn sample_with_gamma<R: Rng + ?Sized>(&mut self, gamma: f64, rng: &mut R) -> Result<SuperArm> {
        let explore = rng.random::<f64>() < gamma;
        if explore {
            let uniform = WeightVector::uniform(self.zdd.arms());
            dp::draw(&self.zdd, &uniform, &self.uniform_bw, rng)
        } else {
            self.weighted_bw()?;
            let b = self.weighted_bw.as_ref().expect("filled above");
            dp::draw(&self.zdd, &self.weights, b, rng)
        }
    }

    /// `P_t = (1 - gamma_t) Q_t + gamma_t U` at the current round.
    pub fn mixture_cpm(&mut self) -> Result<CpmMatrix> {
        let gamma = self.rates().gamma;
        self.mixture_cpm_with_gamma(gamma)
    }

    pub fn mixture_cpm_with_gamma(&mut self, gamma: f64) -> Result<CpmMatrix> {
        let f = dp::forward_weights(&self.zdd, &self.weights)?;
        self.weighted_bw()?;
        let b = self.weighted_bw.as_ref().expect("filled above");
        let c = dp::bwc(&self.zdd, &self.weights, b)?;
        let q = dp::cpm(&self.zdd, &self.weights, &f, b, &c)?;
        Ok(q.combine(1.0 - gamma, &self.uniform_cpm, gamma))
    }

    /// Builds the loss estimate for `(arm, cost)` at the current round
    /// without touching the weights.
    pub fn estimate(&mut self, arm: &SuperArm, cost: f64) -> Result<LossEstimate> {
        let p = self.mixture_cpm()?;
        let eig = linalg::eigen_symmetric(&p)?;
        Ok(LossEstimate(pinv_apply(&eig, self.rel_tol, cost, arm)))
    }

    /// Step-8 update; advances the round counter.
    pub fn update_weights(&mut self, estimate: &LossEstimate) -> Result<()> {
        let d = self.zdd.arms();
        if estimate.0.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: estimate.0.len(),
            });
        }
        let now = self.rates_at(self.t);
        let next = self.rates_at(self.t + 1);
        let lw = self.weights.as_log_mut();
        match self.rule {
            UpdateRule::WeightModification => {
                let ratio = next.eta / now.eta;
                for (w, l) in lw.iter_mut().zip(&estimate.0) {
                    *w = ratio * *w - next.eta * l;
                }
            }
            UpdateRule::FixedRate { eta, .. } => {
                for (w, l) in lw.iter_mut().zip(&estimate.0) {
                    *w -= eta * l;
                }
            }
        }
        self.weighted_bw = None;
        self.t += 1;
        Ok(())
    }

    /// Full bandit-feedback step for a chosen arm and its observed cost.
    pub fn observe(&mut self, arm: &SuperArm, cost: f64) -> Result<LossEstimate> {
        if cost.abs() > 1.0 {
            if self.cost_violations == 0 {
                warn!(
                    "observed cost {cost} at round {} exceeds 1 in magnitude; continuing",
                    self.t
                );
            }
            self.cost_violations += 1;
        }
        let est = self.estimate(arm, cost)?;
        self.update_weights(&est)?;
        Ok(est)
    }
}

/// `cost * P^+ 1_X` straight from an eigendecomposition of `P`.
fn pinv_apply(eig: &SymEigen, rel_tol: f64, cost: f64, x: &SuperArm) -> Vec<f64> {
    let n = eig.values.len();
    let thr = rel_tol * eig.max_value().max(0.0);
    let q = &eig.vectors;
    let mut out = vec![0.0; n];
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam <= thr {
            continue;
        }
        let proj: f64 = x.arms().iter().map(|&i| q.get(i - 1, k)).sum();
        let s = cost * proj / lam;
        for (i, o) in out.iter_mut().enumerate() {
            *o += s * q.get(i, k);
        }
    }
    out
}

impl Policy for BanditState {
    fn select(&mut self, rng: &mut dyn rand::RngCore) -> Result<SuperArm> {
        let arm = self.sample_action(rng)?;
        self.pending = Some(Pending { arm: arm.clone() });
        Ok(arm)
    }

    fn feedback(&mut self, cost: f64) -> Result<()> {
        let Pending { arm } = self
            .pending
            .take()
            .ok_or_else(|| Error::Domain("feedback without a pending selection".into()))?;
        self.observe(&arm, cost)?;
        Ok(())
    }
}

/// Source of per-round true loss vectors (hidden from the policy).
pub trait LossSource {
    fn arms(&self) -> usize;
    fn next_losses(&mut self) -> Vec<f64>;
}

/// Losses that are identically zero.
#[derive(Debug, Clone, Copy)]
pub struct ZeroLosses(pub usize);

impl LossSource for ZeroLosses {
    fn arms(&self) -> usize {
        self.0
    }
    fn next_losses(&mut self) -> Vec<f64> {
        vec![0.0; self.0]
    }
}

/// One played round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: u64,
    pub arm: SuperArm,
    pub cost: f64,
    pub cum_cost: f64,
}

/// Regret at a logged round: cumulative cost minus the best fixed super arm
/// in hindsight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub t: u64,
    /// Cost incurred at round `t`.
    pub cost: f64,
    pub cum_cost: f64,
    pub best_fixed: f64,
    pub regret: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretTrace {
    pub rounds: Vec<RoundRecord>,
    pub checkpoints: Vec<Checkpoint>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> Option<f64> {
        self.checkpoints.last().map(|c| c.regret)
    }

    pub fn regret_at(&self, t: u64) -> Option<f64> {
        self.checkpoints
            .binary_search_by_key(&t, |c| c.t)
            .ok()
            .map(|k| self.checkpoints[k].regret)
    }
}

/// Tracks cumulative true losses and cost for one player and emits
/// checkpoints.
#[derive(Debug, Clone)]
pub struct RegretAccount {
    cum_losses: Vec<f64>,
    cum_cost: f64,
    last_cost: f64,
    trace: RegretTrace,
    keep_rounds: bool,
}

impl RegretAccount {
    pub fn new(arms: usize, keep_rounds: bool) -> Self {
        RegretAccount {
            cum_losses: vec![0.0; arms],
            cum_cost: 0.0,
            last_cost: 0.0,
            trace: RegretTrace::default(),
            keep_rounds,
        }
    }

    /// Books one round; returns the incurred cost `l^T 1_X`.
    pub fn record(&mut self, t: u64, arm: &SuperArm, losses: &[f64]) -> f64 {
        let cost = arm.dot(losses);
        self.cum_cost += cost;
        self.last_cost = cost;
        for (c, l) in self.cum_losses.iter_mut().zip(losses) {
            *c += l;
        }
        if self.keep_rounds {
            self.trace.rounds.push(RoundRecord {
                t,
                arm: arm.clone(),
                cost,
                cum_cost: self.cum_cost,
            });
        }
        cost
    }

    pub fn checkpoint(&mut self, t: u64, zdd: &Zdd) -> Result<Checkpoint> {
        let best_fixed = zdd.min_additive_value(&self.cum_losses)?;
        let c = Checkpoint {
            t,
            cost: self.last_cost,
            cum_cost: self.cum_cost,
            best_fixed,
            regret: self.cum_cost - best_fixed,
        };
        self.trace.checkpoints.push(c);
        Ok(c)
    }

    pub fn cum_cost(&self) -> f64 {
        self.cum_cost
    }

    pub fn cum_losses(&self) -> &[f64] {
        &self.cum_losses
    }

    pub fn into_trace(self) -> RegretTrace {
        self.trace
    }
}

/// Rounds at which regret is logged: every round up to `10^4`; beyond that,
/// every round up to 100, then 20 geometrically spaced rounds per decade,
/// plus the horizon.
pub fn checkpoint_rounds(horizon: u64) -> Vec<u64> {
    if horizon <= 10_000 {
        return (1..=horizon).collect();
    }
    let mut out: Vec<u64> = (1..=100).collect();
    let mut k = 41;
    loop {
        let t = 10f64.powf(k as f64 / 20.0).round() as u64;
        if t >= horizon {
            break;
        }
        if t > *out.last().expect("nonempty") {
            out.push(t);
        }
        k += 1;
    }
    out.push(horizon);
    out
}

/// Runs the policy for `horizon` rounds against `env`.
pub fn run<R: Rng>(
    zdd: Arc<Zdd>,
    alpha: f64,
    env: &mut dyn LossSource,
    horizon: u64,
    rng: &mut R,
) -> Result<RegretTrace> {
    let mut policy = BanditState::new(zdd, alpha)?;
    run_policy(&mut policy, env, horizon, rng, &checkpoint_rounds(horizon))
}

/// Plays `policy` against `env`; the policy only ever sees the scalar cost.
pub fn run_policy<R: Rng>(
    policy: &mut BanditState,
    env: &mut dyn LossSource,
    horizon: u64,
    rng: &mut R,
    checkpoints: &[u64],
) -> Result<RegretTrace> {
    let zdd = Arc::clone(&policy.zdd);
    if env.arms() != zdd.arms() {
        return Err(Error::Dimension {
            expected: zdd.arms(),
            got: env.arms(),
        });
    }
    let mut account = RegretAccount::new(zdd.arms(), true);
    let mut next_cp = checkpoints.iter().peekable();
    for t in 1..=horizon {
        let losses = env.next_losses();
        let arm = Policy::select(policy, rng)?;
        let cost = account.record(t, &arm, &losses);
        policy.feedback(cost)?;
        if next_cp.peek() == Some(&&t) {
            next_cp.next();
            account.checkpoint(t, &zdd)?;
        }
    }
    Ok(account.into_trace())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {x}")))
    }
}

/// Leading coefficient of the high-probability bound given `ln((K+2)/delta)`.
pub fn highprob_coefficient(d: f64, lambda: f64, l: f64, log_term: f64) -> f64 {
    let l2 = l * l;
    3.0 * d * (std::f64::consts::E - 2.0) * lambda / (4.0 * l2)
        + 1.5
        + l * (7.0 / lambda * log_term).sqrt()
}

/// Leading term of the high-probability regret bound for `alpha = 3`:
/// `(3d(e-2)lambda/(4L^2) + 3/2 + L sqrt((7/lambda) ln((K+2)/delta))) T^{2/3}`.
/// Lower-order `o(T^{2/3})` terms are not included.
pub fn bound_highprob(d: usize, lambda: f64, l: f64, k: f64, delta: f64, t: f64) -> Result<f64> {
    positive("d", d as f64)?;
    positive("lambda", lambda)?;
    positive("L", l)?;
    positive("T", t)?;
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::Domain(format!("K must be at least 1, got {k}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let log_term = ((k + 2.0) / delta).ln();
    Ok(highprob_coefficient(d as f64, lambda, l, log_term) * t.powf(2.0 / 3.0))
}

/// Leading term of the expected regret bound for `alpha = 2`:
/// `(2 L^2 ln K / lambda + (e-2) d lambda / L^2 + 2) sqrt(T)`.
pub fn bound_expected(d: usize, lambda: f64, l: f64, k: f64, t: f64) -> Result<f64> {
    positive("d", d as f64)?;
    positive("lambda", lambda)?;
    positive("L", l)?;
    positive("T", t)?;
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::Domain(format!("K must be at least 1, got {k}")));
    }
    let l2 = l * l;
    let coef = 2.0 * l2 * k.ln() / lambda + (std::f64::consts::E - 2.0) * d as f64 * lambda / l2 + 2.0;
    Ok(coef * t.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build::reduce_from_family;
    use crate::fixtures::figure_one_zdd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn singleton() -> Arc<Zdd> {
        let fam = [SuperArm::from([1])].into_iter().collect();
        Arc::new(reduce_from_family(&fam, 3).unwrap())
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(schedule(1, 3.0, 1.0, 1.0).gamma, 0.5);
        assert_eq!(schedule(4, 2.0, 1.0, 1.0).gamma, 0.25);
        let r = schedule(4, 2.0, 0.5, 3f64.sqrt());
        assert!((r.eta - 0.5 * 0.5 / (2.0 * 3.0)).abs() < 1e-15);
        for t in [1, 7, 1000] {
            let r = schedule(t, 3.0, 0.3, 2.0);
            assert!((r.eta / r.gamma - 0.3 / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn init_examples() {
        let s = BanditState::new(Arc::new(figure_one_zdd()), 3.0).unwrap();
        assert!((s.l() - 3f64.sqrt()).abs() < 1e-15);
        assert!(s.weights().as_log_slice().iter().all(|&w| w == 0.0));
        assert_eq!(s.round(), 1);

        let s = BanditState::new(singleton(), 2.0).unwrap();
        assert_eq!(s.l(), 1.0);
        assert!((s.lambda() - 1.0).abs() < 1e-12);
        assert_eq!(s.uniform_cpm().get(0, 0), 1.0);
        assert_eq!(s.uniform_cpm().get(1, 1), 0.0);

        assert!(matches!(
            BanditState::new(Arc::new(Zdd::unit(2)), 2.0),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            BanditState::new(Arc::new(Zdd::empty(2)), 2.0),
            Err(Error::EmptyFamily)
        ));
    }

    fn empirical<F: FnMut() -> SuperArm>(n: usize, mut f: F) -> HashMap<SuperArm, f64> {
        let mut h: HashMap<SuperArm, f64> = HashMap::new();
        for _ in 0..n {
            *h.entry(f()).or_default() += 1.0 / n as f64;
        }
        h
    }

    #[test]
    fn mixture_sampling() {
        let mut s = BanditState::new(Arc::new(figure_one_zdd()), 2.0).unwrap();
        s.set_weights(WeightVector::from_linear(&[2.0, 1.0, 1.0, 1.0, 1.0]).unwrap())
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let h = empirical(n, || s.sample_with_gamma(0.5, &mut rng).unwrap());
        let p = 7.0 / 24.0;
        let got = h[&SuperArm::from([1, 4])];
        assert!((got - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt(), "{got}");

        // gamma = 1 is exactly uniform regardless of weights
        let h = empirical(n, || s.sample_with_gamma(1.0, &mut rng).unwrap());
        for (_, f) in h {
            assert!((f - 0.25).abs() < 5.0 * (0.1875 / n as f64).sqrt());
        }
    }

    #[test]
    fn mixture_cpm_examples() {
        let mut s = BanditState::new(Arc::new(figure_one_zdd()), 2.0).unwrap();
        let u = s.uniform_cpm().clone();
        let p = s.mixture_cpm_with_gamma(0.3).unwrap();
        assert!(p.sub(&u).max_abs() < 1e-15);

        s.set_weights(WeightVector::from_linear(&[2.0, 1.0, 1.0, 1.0, 1.0]).unwrap())
            .unwrap();
        let p = s.mixture_cpm_with_gamma(0.5).unwrap();
        assert!((p.get(0, 0) - 7.0 / 12.0).abs() < 1e-14);

        let mut s = BanditState::new(singleton(), 2.0).unwrap();
        let p = s.mixture_cpm_with_gamma(0.7).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        assert_eq!(p.get(0, 1), 0.0);
    }

    #[test]
    fn estimate_loss_examples() {
        let pinv = SymMatrix::identity(3);
        let z = estimate_loss(&pinv, 0.0, &SuperArm::from([1, 2])).unwrap();
        assert!(z.0.iter().all(|&x| x == 0.0));

        let mut s = BanditState::new(singleton(), 2.0).unwrap();
        let est = s.estimate(&SuperArm::from([1]), 1.0).unwrap();
        assert!((est.0[0] - 1.0).abs() < 1e-12);
        assert!(est.0[1].abs() < 1e-12 && est.0[2].abs() < 1e-12);

        assert!(estimate_loss(&pinv, 1.0, &SuperArm::from([4])).is_err());
    }

    #[test]
    fn update_weights_examples() {
        let mut s = BanditState::new(Arc::new(figure_one_zdd()), 2.0)
            .unwrap()
            .with_rule(UpdateRule::FixedRate { gamma: 0.5, eta: 0.1 });
        s.update_weights(&LossEstimate(vec![1.0; 5])).unwrap();
        for &lw in s.weights().as_log_slice() {
            assert!((lw.exp() - (-0.1f64).exp()).abs() < 1e-15);
        }
        assert!((s.weights().as_log_slice()[0].exp() - 0.904837).abs() < 1e-6);

        let mut s = BanditState::new(Arc::new(figure_one_zdd()), 2.0).unwrap();
        s.set_weights(WeightVector::from_log(vec![-1.0, -2.0, 0.0, 0.5, 3.0]).unwrap())
            .unwrap();
        let ratio = s.rates_at(2).eta / s.rates_at(1).eta;
        s.update_weights(&LossEstimate(vec![0.0; 5])).unwrap();
        for (got, before) in s.weights().as_log_slice().iter().zip([-1.0, -2.0, 0.0, 0.5, 3.0]) {
            assert!((got - ratio * before).abs() < 1e-15);
        }
        assert_eq!(s.round(), 2);
    }

    #[test]
    fn feedback_needs_selection() {
        let mut s = BanditState::new(singleton(), 2.0).unwrap();
        assert!(Policy::feedback(&mut s, 0.5).is_err());
    }

    #[test]
    fn zero_losses_give_zero_regret() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z = Arc::new(figure_one_zdd());
        let trace = run(z, 2.0, &mut ZeroLosses(5), 200, &mut rng).unwrap();
        assert_eq!(trace.checkpoints.len(), 200);
        assert!(trace.checkpoints.iter().all(|c| c.regret == 0.0));
    }

    struct Fixed(Vec<f64>);
    impl LossSource for Fixed {
        fn arms(&self) -> usize {
            self.0.len()
        }
        fn next_losses(&mut self) -> Vec<f64> {
            self.0.clone()
        }
    }

    #[test]
    fn singleton_family_has_no_regret() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trace = run(singleton(), 3.0, &mut Fixed(vec![0.5, -0.2, 0.1]), 100, &mut rng).unwrap();
        assert!(trace.checkpoints.iter().all(|c| c.regret.abs() < 1e-12));
    }

    #[test]
    fn checkpoint_schedule() {
        assert_eq!(checkpoint_rounds(5), vec![1, 2, 3, 4, 5]);
        let cps = checkpoint_rounds(100_000);
        assert!(cps.windows(2).all(|w| w[0] < w[1]));
        for t in [1, 100, 1000, 10_000, 100_000] {
            assert!(cps.contains(&t), "{t}");
        }
        assert!(cps.len() < 200);
        assert_eq!(*checkpoint_rounds(12_345).last().unwrap(), 12_345);
    }

    #[test]
    fn bound_formulas() {
        let e = std::f64::consts::E;
        let c = highprob_coefficient(1.0, 1.0, 1.0, 1.0);
        assert!((c - (3.0 * (e - 2.0) / 4.0 + 1.5 + 7f64.sqrt())).abs() < 1e-14);
        let b1 = bound_highprob(3, 0.4, 1.5, 10.0, 0.05, 1.0).unwrap();
        let c = highprob_coefficient(3.0, 0.4, 1.5, (12.0f64 / 0.05).ln());
        assert!((b1 - c).abs() < 1e-12);

        let b = bound_expected(1, 1.0, 1.0, e, 100.0).unwrap();
        assert!((b - (2.0 + (e - 2.0) + 2.0) * 10.0).abs() < 1e-12);
        assert!((b / 10.0 - 4.7183).abs() < 1e-4);
        let b = bound_expected(4, 0.5, 2.0, 1.0, 9.0).unwrap();
        assert!((b - ((e - 2.0) * 4.0 * 0.5 / 4.0 + 2.0) * 3.0).abs() < 1e-12);

        assert!(bound_highprob(3, 0.4, 1.5, 10.0, 1.5, 1.0).is_err());
        assert!(bound_expected(3, 0.0, 1.5, 10.0, 1.0).is_err());
        assert!(bound_expected(3, 1.0, 1.5, 0.5, 1.0).is_err());
    }
}
