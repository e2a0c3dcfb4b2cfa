//! Equilibrium payoff sets and their welfare images.
//!
//! The feasible polytope collects every payoff profile reachable by on-path
//! offers: nonnegative broker payoffs, an agent payoff at least the autarky
//! value, and a total at most the full-information reservation value. Which
//! part of it is attainable in equilibrium depends on the market structure:
//!
//! - at costs below `k_star` the whole polytope is attainable (any number
//!   of brokers);
//! - a monopolist above `k_star` is pinned to the full-extraction point;
//! - two or more brokers above `k_star` certifiably attain the full-surplus
//!   vertex, and for costs up to `k_double_star` also an `epsilon`-collar of
//!   low-broker-take profiles, with the rest of the polytope undecided.

use serde::{Deserialize, Serialize};

use crate::contracts::{Thresholds, FEAS_TOL};
use crate::error::{Error, Result};
use crate::prior::Prior;
use crate::profile::PayoffProfile;
use crate::search::surplus_bounds;

/// A halfspace `normal . y <= offset` in broker-then-agent coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// A bounded polytope with explicit vertex list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Polytope {
    /// Ambient dimension, `n + 1`.
    pub dim: usize,
    pub halfspaces: Vec<Halfspace>,
    pub vertices: Vec<PayoffProfile>,
}

impl Polytope {
    /// Halfspace membership within `tol`.
    pub fn contains(&self, y: &PayoffProfile, tol: f64) -> bool {
        let v = y.to_vec();
        if v.len() != self.dim {
            return false;
        }
        self.halfspaces.iter().all(|h| {
            let dot: f64 = h.normal.iter().zip(&v).map(|(a, b)| a * b).sum();
            dot <= h.offset + tol
        })
    }

    /// Maximum of a linear functional over the polytope (via vertices).
    pub fn support_max(&self, w: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| w.iter().zip(v.to_vec()).map(|(a, b)| a * b).sum())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimum of a linear functional over the polytope (via vertices).
    pub fn support_min(&self, w: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| w.iter().zip(v.to_vec()).map(|(a, b)| a * b).sum())
            .fold(f64::INFINITY, f64::min)
    }
}

/// The autarky profile: zero broker payoffs, agent at the autarky value.
pub fn autarky_profile(prior: &Prior, n: usize, k: f64) -> Result<PayoffProfile> {
    let (lower, _) = surplus_bounds(prior, k)?;
    Ok(PayoffProfile::new(vec![0.0; n], lower))
}

/// The full-surplus-to-agent profile: zero broker payoffs, agent at the
/// full-information reservation value.
pub fn full_surplus_profile(prior: &Prior, n: usize, k: f64) -> Result<PayoffProfile> {
    let (_, upper) = surplus_bounds(prior, k)?;
    Ok(PayoffProfile::new(vec![0.0; n], upper))
}

fn validate_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one broker".into()));
    }
    Ok(())
}

/// Feasible payoff polytope at `(n, k)`. Vertices are ordered: autarky,
/// full surplus to the agent, then the per-broker full-extraction optima.
pub fn feasible_set(prior: &Prior, n: usize, k: f64) -> Result<Polytope> {
    validate_n(n)?;
    let (lower, upper) = surplus_bounds(prior, k)?;
    let dim = n + 1;
    let mut halfspaces = Vec::with_capacity(n + 2);
    for i in 0..n {
        let mut normal = vec![0.0; dim];
        normal[i] = -1.0;
        halfspaces.push(Halfspace { normal, offset: 0.0 });
    }
    let mut agent_normal = vec![0.0; dim];
    agent_normal[n] = -1.0;
    halfspaces.push(Halfspace { normal: agent_normal, offset: -lower });
    halfspaces.push(Halfspace { normal: vec![1.0; dim], offset: upper });

    let mut vertices = vec![
        PayoffProfile::new(vec![0.0; n], lower),
        PayoffProfile::new(vec![0.0; n], upper),
    ];
    for i in 0..n {
        let mut brokers = vec![0.0; n];
        brokers[i] = upper - lower;
        vertices.push(PayoffProfile::new(brokers, lower));
    }
    Ok(Polytope { dim, halfspaces, vertices })
}

/// The `eps`-collar: the feasible set intersected with
/// `sum_i y_i <= eps`. Requires `0 < eps < upper - lower`.
pub fn eps_collar(prior: &Prior, n: usize, k: f64, eps: f64) -> Result<Polytope> {
    validate_n(n)?;
    let (lower, upper) = surplus_bounds(prior, k)?;
    if !(eps > 0.0 && eps < upper - lower) {
        return Err(Error::InvalidArgument(format!(
            "collar width {eps} outside (0, {})",
            upper - lower
        )));
    }
    let mut poly = feasible_set(prior, n, k)?;
    let mut broker_normal = vec![1.0; n];
    broker_normal.push(0.0);
    poly.halfspaces.push(Halfspace { normal: broker_normal, offset: eps });
    poly.vertices = vec![
        PayoffProfile::new(vec![0.0; n], lower),
        PayoffProfile::new(vec![0.0; n], upper),
    ];
    for i in 0..n {
        let mut brokers = vec![0.0; n];
        brokers[i] = eps;
        poly.vertices.push(PayoffProfile::new(brokers.clone(), lower));
        poly.vertices.push(PayoffProfile::new(brokers, upper - eps));
    }
    Ok(poly)
}

/// Which characterization applies at `(n, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `k <= k_star`: every feasible profile is attainable.
    FolkTheorem,
    /// `n = 1`, `k > k_star`: only full extraction survives.
    MonopolyPoint,
    /// `n >= 2`, `k > k_star`: certified subset plus undecided interior.
    PartialCharacterization,
}

/// Certified-attainable portion of the feasible set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnerCertificate {
    /// The entire feasible polytope.
    FullFeasible,
    /// A single profile.
    Point { point: PayoffProfile },
    /// The collar plus the full-surplus vertex.
    CollarWithVertex { collar: Polytope, vertex: PayoffProfile },
    /// Only the full-surplus vertex.
    VertexOnly { vertex: PayoffProfile },
}

/// Everything known about the equilibrium payoff set at `(n, k)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumDescriptor {
    pub n: usize,
    pub k: f64,
    pub regime: Regime,
    /// Autarky and full-information reservation values.
    pub lower: f64,
    pub upper: f64,
    /// Broker minimax value: `0` below `k_star`, the full gap above.
    pub nu: f64,
    pub feasible: Polytope,
    pub inner: InnerCertificate,
}

/// Builds the descriptor from precomputed thresholds.
pub fn equilibrium_descriptor(
    prior: &Prior,
    n: usize,
    k: f64,
    thresholds: &Thresholds,
) -> Result<EquilibriumDescriptor> {
    validate_n(n)?;
    let (lower, upper) = surplus_bounds(prior, k)?;
    let feasible = feasible_set(prior, n, k)?;
    let gap = upper - lower;
    let (regime, nu, inner) = if k <= thresholds.k_star {
        (Regime::FolkTheorem, 0.0, InnerCertificate::FullFeasible)
    } else if n == 1 {
        let point = PayoffProfile::new(vec![gap], lower);
        (Regime::MonopolyPoint, gap, InnerCertificate::Point { point })
    } else {
        let vertex = full_surplus_profile(prior, n, k)?;
        let inner = if k <= thresholds.k_double_star && thresholds.epsilon < gap {
            InnerCertificate::CollarWithVertex {
                collar: eps_collar(prior, n, k, thresholds.epsilon)?,
                vertex,
            }
        } else {
            InnerCertificate::VertexOnly { vertex }
        };
        (Regime::PartialCharacterization, gap, inner)
    };
    Ok(EquilibriumDescriptor { n, k, regime, lower, upper, nu, feasible, inner })
}

/// Three-valued membership verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    In,
    Out,
    Unknown,
}

/// Tests whether `y` is attainable at the descriptor's market structure.
/// `Unknown` is returned only in the partial regime, for feasible profiles
/// outside the certified inner set; such verdicts can be upgraded by an
/// explicit support check.
pub fn membership(desc: &EquilibriumDescriptor, y: &PayoffProfile, tol: f64) -> Membership {
    if !desc.feasible.contains(y, tol) {
        return Membership::Out;
    }
    match &desc.inner {
        InnerCertificate::FullFeasible => Membership::In,
        InnerCertificate::Point { point } => {
            if y.linf_distance(point) <= tol {
                Membership::In
            } else {
                Membership::Out
            }
        }
        InnerCertificate::CollarWithVertex { collar, vertex } => {
            if collar.contains(y, tol) || y.linf_distance(vertex) <= tol {
                Membership::In
            } else {
                Membership::Unknown
            }
        }
        InnerCertificate::VertexOnly { vertex } => {
            if y.linf_distance(vertex) <= tol {
                Membership::In
            } else {
                Membership::Unknown
            }
        }
    }
}

/// A closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }
}

/// Images of the equilibrium set under total surplus and agent payoff.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WelfareSets {
    /// Certified-attainable surplus values.
    pub surplus_attained: Interval,
    /// Certified-attainable agent payoffs.
    pub agent_attained: Interval,
    /// Bounds from the feasible polytope.
    pub surplus_bound: Interval,
    pub agent_bound: Interval,
    /// True when the attained image equals the true image.
    pub exact: bool,
}

/// Computes the welfare images of a descriptor.
pub fn welfare_sets(desc: &EquilibriumDescriptor) -> WelfareSets {
    let full = Interval { lo: desc.lower, hi: desc.upper };
    match &desc.inner {
        InnerCertificate::FullFeasible => WelfareSets {
            surplus_attained: full,
            agent_attained: full,
            surplus_bound: full,
            agent_bound: full,
            exact: true,
        },
        InnerCertificate::Point { point } => WelfareSets {
            surplus_attained: Interval::point(point.total()),
            agent_attained: Interval::point(point.agent),
            surplus_bound: Interval::point(point.total()),
            agent_bound: Interval::point(point.agent),
            exact: true,
        },
        // The collar's surplus and agent images already span the full
        // interval: the full-surplus vertex lies inside the collar.
        InnerCertificate::CollarWithVertex { .. } => WelfareSets {
            surplus_attained: full,
            agent_attained: full,
            surplus_bound: full,
            agent_bound: full,
            exact: true,
        },
        InnerCertificate::VertexOnly { vertex } => WelfareSets {
            surplus_attained: Interval::point(vertex.total()),
            agent_attained: Interval::point(vertex.agent),
            surplus_bound: full,
            agent_bound: full,
            exact: false,
        },
    }
}

/// Selection rule a regulator uses to rank market structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegulatorRule {
    MaxSurplus,
    MinSurplus,
    MaxAgent,
    MinAgent,
}

/// Regulator's verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    Monopoly,
    Competition,
    Tie,
}

/// Comparison artifact: the selected value under each structure.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Comparison {
    pub rule: RegulatorRule,
    pub monopoly_value: f64,
    pub competition_value: f64,
    pub preferred: Preference,
}

fn rule_value(ws: &WelfareSets, rule: RegulatorRule) -> f64 {
    // Optimistic rules read the attained image (those values are certified
    // reachable); pessimistic rules read the guaranteed bound unless the
    // image is exact.
    match rule {
        RegulatorRule::MaxSurplus => ws.surplus_attained.hi,
        RegulatorRule::MaxAgent => ws.agent_attained.hi,
        RegulatorRule::MinSurplus => {
            if ws.exact {
                ws.surplus_attained.lo
            } else {
                ws.surplus_bound.lo
            }
        }
        RegulatorRule::MinAgent => {
            if ws.exact {
                ws.agent_attained.lo
            } else {
                ws.agent_bound.lo
            }
        }
    }
}

const TIE_TOL: f64 = 1e-12;

/// Ranks monopoly against competition under a selection rule. Both
/// descriptors must share the cost; the first must be a monopoly.
pub fn regulator_compare(
    mono: &EquilibriumDescriptor,
    comp: &EquilibriumDescriptor,
    rule: RegulatorRule,
) -> Result<Comparison> {
    if mono.n != 1 {
        return Err(Error::InvalidArgument(format!(
            "monopoly descriptor has n = {}",
            mono.n
        )));
    }
    if comp.n < 2 {
        return Err(Error::InvalidArgument(format!(
            "competition descriptor has n = {}",
            comp.n
        )));
    }
    if (mono.k - comp.k).abs() > TIE_TOL {
        return Err(Error::InvalidArgument(format!(
            "cost mismatch: {} vs {}",
            mono.k, comp.k
        )));
    }
    let mv = rule_value(&welfare_sets(mono), rule);
    let cv = rule_value(&welfare_sets(comp), rule);
    let preferred = if (mv - cv).abs() <= TIE_TOL {
        Preference::Tie
    } else if mv > cv {
        Preference::Monopoly
    } else {
        Preference::Competition
    };
    Ok(Comparison { rule, monopoly_value: mv, competition_value: cv, preferred })
}

/// Certificate that a whole ball of profiles sits strictly inside the
/// certified set, with surplus bounded away from the frontier and agent
/// payoff bounded away from autarky.
#[derive(Debug, Clone, Serialize)]
pub struct BallCertificate {
    pub center: PayoffProfile,
    /// L-infinity radius of the ball.
    pub radius: f64,
    /// Strictness margin: every ball point keeps total at least `delta`
    /// below the frontier and agent at least `delta` above autarky.
    pub delta: f64,
}

/// Exhibits an interior ball of certified equilibria for `n >= 2` and
/// `k_star < k <= k_double_star`. Returns `None` outside that regime.
pub fn strict_gap_ball(
    prior: &Prior,
    n: usize,
    k: f64,
    thresholds: &Thresholds,
) -> Result<Option<BallCertificate>> {
    validate_n(n)?;
    let (lower, upper) = surplus_bounds(prior, k)?;
    if n < 2 || k <= thresholds.k_star || k > thresholds.k_double_star {
        return Ok(None);
    }
    let eps = thresholds.epsilon;
    let gap = upper - lower;
    let delta = (eps / 4.0).min((gap - eps) / 4.0);
    if delta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "collar width {eps} leaves no strictness margin at gap {gap}"
        )));
    }
    let center = PayoffProfile::new(vec![eps / (2.0 * n as f64); n], lower + 2.0 * delta);
    let radius = delta / (n as f64 + 1.0);
    let collar = eps_collar(prior, n, k, eps)?;
    // Ball containment: shift each halfspace by radius * |normal|_1.
    let cv = center.to_vec();
    for h in &collar.halfspaces {
        let dot: f64 = h.normal.iter().zip(&cv).map(|(a, b)| a * b).sum();
        let l1: f64 = h.normal.iter().map(|a| a.abs()).sum();
        if dot + radius * l1 > h.offset + FEAS_TOL {
            return Err(Error::InvalidArgument(
                "interior ball escapes the collar; collar too thin".into(),
            ));
        }
    }
    let total_max = center.total() + radius * (n as f64 + 1.0);
    if !(total_max + delta <= upper + FEAS_TOL) {
        return Err(Error::InvalidArgument("ball not bounded away from frontier".into()));
    }
    if !(center.agent - radius >= lower + delta - FEAS_TOL) {
        return Err(Error::InvalidArgument("ball not bounded away from autarky".into()));
    }
    Ok(Some(BallCertificate { center, radius, delta }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::compute_thresholds;
    use approx::assert_abs_diff_eq;

    fn uniform() -> Prior {
        Prior::uniform()
    }

    fn thresholds() -> Thresholds {
        compute_thresholds(&uniform()).unwrap().0
    }

    #[test]
    fn feasible_vertices_n2() {
        let p = feasible_set(&uniform(), 2, 0.02).unwrap();
        assert_eq!(p.dim, 3);
        assert_eq!(p.vertices.len(), 4);
        assert!(p.vertices[0].linf_distance(&PayoffProfile::new(vec![0.0, 0.0], 0.48)) < 1e-9);
        assert!(p.vertices[1].linf_distance(&PayoffProfile::new(vec![0.0, 0.0], 0.8)) < 1e-9);
        assert_abs_diff_eq!(p.vertices[2].brokers[0], 0.32, epsilon = 1e-9);
        // Vertices satisfy their own constraints.
        for v in &p.vertices {
            assert!(p.contains(v, 1e-9));
        }
        assert!(p.contains(&PayoffProfile::new(vec![0.1, 0.1], 0.5), 1e-9));
        assert!(!p.contains(&PayoffProfile::new(vec![0.3, 0.1], 0.5), 1e-9));
        assert!(!p.contains(&PayoffProfile::new(vec![0.0, 0.0], 0.4), 1e-9));
    }

    #[test]
    fn collar_vertices() {
        let t = thresholds();
        let c = eps_collar(&uniform(), 2, 0.095, t.epsilon).unwrap();
        assert_eq!(c.vertices.len(), 6);
        for v in &c.vertices {
            assert!(c.contains(v, 1e-9), "{v:?}");
        }
        // Full-surplus vertex is inside the collar.
        let y_b = full_surplus_profile(&uniform(), 2, 0.095).unwrap();
        assert!(c.contains(&y_b, 1e-9));
        // A profile with large broker take is not.
        assert!(!c.contains(&PayoffProfile::new(vec![0.1, 0.0], 0.405), 1e-9));
    }

    #[test]
    fn regimes() {
        let t = thresholds();
        let f = uniform();
        assert_eq!(equilibrium_descriptor(&f, 1, 0.02, &t).unwrap().regime, Regime::FolkTheorem);
        assert_eq!(equilibrium_descriptor(&f, 3, 0.05, &t).unwrap().regime, Regime::FolkTheorem);
        assert_eq!(equilibrium_descriptor(&f, 1, 0.1, &t).unwrap().regime, Regime::MonopolyPoint);
        let d = equilibrium_descriptor(&f, 2, 0.095, &t).unwrap();
        assert_eq!(d.regime, Regime::PartialCharacterization);
        assert!(matches!(d.inner, InnerCertificate::CollarWithVertex { .. }));
        let d = equilibrium_descriptor(&f, 2, 0.15, &t).unwrap();
        assert!(matches!(d.inner, InnerCertificate::VertexOnly { .. }));
    }

    #[test]
    fn membership_verdicts() {
        let t = thresholds();
        let f = uniform();
        let folk = equilibrium_descriptor(&f, 2, 0.02, &t).unwrap();
        assert_eq!(membership(&folk, &PayoffProfile::new(vec![0.1, 0.1], 0.5), 1e-9), Membership::In);
        assert_eq!(membership(&folk, &PayoffProfile::new(vec![0.4, 0.1], 0.5), 1e-9), Membership::Out);

        let mono = equilibrium_descriptor(&f, 1, 0.1, &t).unwrap();
        let gap = mono.upper - mono.lower;
        assert_eq!(
            membership(&mono, &PayoffProfile::new(vec![gap], mono.lower), 1e-9),
            Membership::In
        );
        assert_eq!(
            membership(&mono, &PayoffProfile::new(vec![0.05], 0.45), 1e-9),
            Membership::Out
        );

        let partial = equilibrium_descriptor(&f, 2, 0.095, &t).unwrap();
        assert_eq!(
            membership(&partial, &PayoffProfile::new(vec![0.01, 0.01], 0.41), 1e-9),
            Membership::In
        );
        let y_b = full_surplus_profile(&f, 2, 0.095).unwrap();
        assert_eq!(membership(&partial, &y_b, 1e-9), Membership::In);
        assert_eq!(
            membership(&partial, &PayoffProfile::new(vec![0.12, 0.0], 0.41), 1e-9),
            Membership::Unknown
        );
    }

    #[test]
    fn welfare_images() {
        let t = thresholds();
        let f = uniform();
        let ws = welfare_sets(&equilibrium_descriptor(&f, 2, 0.095, &t).unwrap());
        assert!(ws.exact);
        assert_abs_diff_eq!(ws.surplus_attained.hi, 1.0 - 0.19_f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(ws.surplus_attained.lo, 0.405, epsilon = 1e-9);

        let ws = welfare_sets(&equilibrium_descriptor(&f, 1, 0.15, &t).unwrap());
        assert!(ws.exact);
        assert_abs_diff_eq!(ws.surplus_attained.lo, ws.surplus_attained.hi);
        let ws = welfare_sets(&equilibrium_descriptor(&f, 2, 0.15, &t).unwrap());
        assert!(!ws.exact);
        assert_abs_diff_eq!(ws.surplus_attained.hi, 1.0 - 0.3_f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn regulator_examples() {
        let t = thresholds();
        let f = uniform();
        let mono = equilibrium_descriptor(&f, 1, 0.15, &t).unwrap();
        let comp = equilibrium_descriptor(&f, 2, 0.15, &t).unwrap();
        let c = regulator_compare(&mono, &comp, RegulatorRule::MaxAgent).unwrap();
        assert_eq!(c.preferred, Preference::Competition);
        let c = regulator_compare(&mono, &comp, RegulatorRule::MinSurplus).unwrap();
        assert_eq!(c.preferred, Preference::Monopoly);

        let mono = equilibrium_descriptor(&f, 1, 0.02, &t).unwrap();
        let comp = equilibrium_descriptor(&f, 2, 0.02, &t).unwrap();
        for rule in [
            RegulatorRule::MaxSurplus,
            RegulatorRule::MinSurplus,
            RegulatorRule::MaxAgent,
            RegulatorRule::MinAgent,
        ] {
            let c = regulator_compare(&mono, &comp, rule).unwrap();
            assert_eq!(c.preferred, Preference::Tie, "{rule:?}");
        }
    }

    #[test]
    fn interior_ball_in_partial_regime() {
        let t = thresholds();
        let f = uniform();
        let ball = strict_gap_ball(&f, 2, 0.095, &t).unwrap().unwrap();
        assert!(ball.delta > 0.0 && ball.radius > 0.0);
        let collar = eps_collar(&f, 2, 0.095, t.epsilon).unwrap();
        assert!(collar.contains(&ball.center, 1e-12));
        // No certificate outside the partial-collar regime.
        assert!(strict_gap_ball(&f, 2, 0.02, &t).unwrap().is_none());
        assert!(strict_gap_ball(&f, 1, 0.095, &t).unwrap().is_none());
        assert!(strict_gap_ball(&f, 2, 0.2, &t).unwrap().is_none());
    }

    #[test]
    fn support_functions() {
        let p = feasible_set(&uniform(), 2, 0.02).unwrap();
        assert_abs_diff_eq!(p.support_max(&[1.0, 1.0, 1.0]), 0.8, epsilon = 1e-9);
        assert_abs_diff_eq!(p.support_min(&[0.0, 0.0, 1.0]), 0.48, epsilon = 1e-9);
        assert_abs_diff_eq!(p.support_max(&[1.0, 0.0, 0.0]), 0.32, epsilon = 1e-9);
    }
}
