use std::fmt;

use super::{franck_condon, BathParams, EtParams, GhzParams, SpinNetwork};
use crate::scalar::Real;

/// Qualitative inequality, judged on the ratio `lhs / rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `≪`: ratio at most 0.25.
    MuchLess,
    /// `≲`: ratio at most 2.
    LessOrSimilar,
    /// `∼`: ratio within [0.1, 10].
    Similar,
}

impl Relation {
    pub fn holds(self, ratio: f64) -> bool {
        match self {
            Relation::MuchLess => ratio <= 0.25,
            Relation::LessOrSimilar => ratio <= 2.0,
            Relation::Similar => (0.1..=10.0).contains(&ratio),
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::MuchLess => "≪",
            Relation::LessOrSimilar => "≲",
            Relation::Similar => "∼",
        }
    }
}

/// One evaluated inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub lhs_name: String,
    pub rhs_name: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub satisfied: bool,
}

impl Condition {
    fn new(lhs_name: &str, lhs: f64, relation: Relation, rhs_name: &str, rhs: f64) -> Self {
        let ratio = if rhs == 0.0 {
            if lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            lhs.abs() / rhs.abs()
        };
        Self {
            lhs_name: lhs_name.to_string(),
            rhs_name: rhs_name.to_string(),
            relation,
            lhs,
            rhs,
            ratio,
            satisfied: relation.holds(ratio),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {:.4} {} {} = {:.4} (ratio {:.3}, {})",
            self.lhs_name,
            self.lhs,
            self.relation.symbol(),
            self.rhs_name,
            self.rhs,
            self.ratio,
            if self.satisfied { "ok" } else { "violated" }
        )
    }
}

/// Which set of conditions to evaluate.
#[derive(Clone, Debug, PartialEq)]
pub enum Scheme<T: Real> {
    /// Extended ET model with the distinct gaps `δE` of the external Hamiltonian.
    Extended { gaps: Vec<T> },
    /// Dicke pumping. The transverse-field barrier is checked when the network
    /// carries counter-rotating terms; `n_cutoff` defaults to the smallest
    /// level whose vibronic overlap drops below 1e−2.
    Dicke { net: SpinNetwork<T>, n_cutoff: Option<usize> },
    Ghz(GhzParams<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbativeReport {
    pub conditions: Vec<Condition>,
    /// Vibronic cutoff used for the transverse-field barrier, if checked.
    pub n_cutoff: Option<usize>,
    /// Overlap `g̃^{n′}e^{−g̃²/2}/√n′!` at `n′ = n_cutoff + ΔE/ω₀`.
    pub tail_overlap: Option<f64>,
}

impl PerturbativeReport {
    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.satisfied)
    }
}

const OVERLAP_CUTOFF: f64 = 1e-2;
const MAX_CUTOFF: usize = 64;

fn rounded_gap<T: Real>(delta_e: T) -> usize {
    delta_e.as_f64().abs().round() as usize
}

/// Smallest `n_c` with `g̃^{n′}e^{−g̃²/2}/√n′! < 1e−2` at `n′ = n_c + ΔE/ω₀`.
pub fn default_vibronic_cutoff<T: Real>(p: &EtParams<T>) -> usize {
    let shift = rounded_gap(p.delta_e());
    (0..MAX_CUTOFF)
        .find(|&n| franck_condon(p.g_tilde(), n + shift).as_f64() < OVERLAP_CUTOFF)
        .unwrap_or(MAX_CUTOFF)
}

/// Evaluates the perturbative-regime inequalities. Never fails; violations
/// are logged as warnings and reported.
pub fn check_perturbative<T: Real>(p: &EtParams<T>, bath: &BathParams<T>, scheme: &Scheme<T>) -> PerturbativeReport {
    use Relation::*;
    let v = p.v().as_f64().abs();
    let gamma = bath.gamma().as_f64();
    let lambda = p.reorganization_energy().as_f64();
    let mut conditions = Vec::new();
    let mut n_cutoff = None;
    let mut tail_overlap = None;
    match scheme {
        Scheme::Extended { gaps } => {
            let gaps: Vec<f64> = gaps.iter().map(|g| g.as_f64().abs()).collect();
            let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
            let max_gap = gaps.iter().copied().fold(0.0, f64::max);
            conditions.push(Condition::new("V", v, LessOrSimilar, "γ", gamma));
            conditions.push(Condition::new("V", v, MuchLess, "ω₀", 1.0));
            conditions.push(Condition::new("V", v, MuchLess, "λ", lambda));
            if !gaps.is_empty() {
                conditions.push(Condition::new("γ", gamma, MuchLess, "min δE", min_gap));
                conditions.push(Condition::new("max δE", max_gap, MuchLess, "ω₀", 1.0));
                conditions.push(Condition::new("max δE", max_gap, MuchLess, "λ", lambda));
            }
        }
        Scheme::Dicke { net, n_cutoff: requested } => {
            let j = net.j.iter().fold(0.0f64, |a, x| a.max(x.as_f64().abs()));
            conditions.push(Condition::new("J", j, Similar, "γ", gamma));
            conditions.push(Condition::new("J", j, MuchLess, "ω₀", 1.0));
            conditions.push(Condition::new("γ", gamma, MuchLess, "ω₀", 1.0));
            if net.include_counter_rotating {
                let nc = requested.unwrap_or_else(|| default_vibronic_cutoff(p));
                let four_b = 4.0 * net.b_field.as_f64();
                let barrier = (0..=nc).map(|n| (four_b - n as f64).abs()).fold(f64::INFINITY, f64::min);
                conditions.push(Condition::new("J", j, MuchLess, "min|4B − n|", barrier));
                conditions.push(Condition::new("γ", gamma, MuchLess, "min|4B − n|", barrier));
                n_cutoff = Some(nc);
                tail_overlap = Some(franck_condon(p.g_tilde(), nc + rounded_gap(p.delta_e())).as_f64());
            }
        }
        Scheme::Ghz(gp) => {
            let e0 = gp.e0.as_f64();
            let k = gp.k.as_f64();
            conditions.push(Condition::new("V", v, LessOrSimilar, "γ", gamma));
            conditions.push(Condition::new("V", v, MuchLess, "k", k));
            conditions.push(Condition::new("k", k, MuchLess, "E₀", e0));
            conditions.push(Condition::new("N·E₀", gp.n_half as f64 * e0, MuchLess, "ω₀", 1.0));
        }
    }
    for c in conditions.iter().filter(|c| !c.satisfied) {
        log::warn!("perturbative condition violated: {c}");
    }
    PerturbativeReport { conditions, n_cutoff, tail_overlap }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn et(de: f64, g: f64, v: f64) -> EtParams<f64> {
        EtParams::new(de, g, v, 1.0).unwrap()
    }

    #[test]
    fn extended_model_in_regime() {
        let r = check_perturbative(
            &et(1.0, 1.0, 0.01),
            &BathParams::new(0.02, 0.0).unwrap(),
            &Scheme::Extended { gaps: vec![0.2] },
        );
        assert!(r.all_satisfied(), "{:?}", r.violations().collect::<Vec<_>>());
        assert_eq!(r.conditions.len(), 6);
    }

    #[test]
    fn transverse_field_resonance_flagged() {
        let mut net = SpinNetwork::uniform(4, 0.04);
        net.include_counter_rotating = true;
        net.b_field = 0.25;
        let r = check_perturbative(&et(2.0, 1.0, 0.0), &BathParams::new(0.07, 0.05).unwrap(), &Scheme::Dicke {
            net: net.clone(),
            n_cutoff: None,
        });
        assert!(!r.all_satisfied());
        assert!(r.violations().any(|c| c.rhs == 0.0));

        net.b_field = 0.6;
        let r = check_perturbative(&et(2.0, 1.0, 0.0), &BathParams::new(0.07, 0.05).unwrap(), &Scheme::Dicke {
            net,
            n_cutoff: None,
        });
        assert!(r.all_satisfied(), "{:?}", r.violations().collect::<Vec<_>>());
        assert_eq!(r.n_cutoff, Some(5));
        assert!(r.tail_overlap.unwrap() < 1e-2);
        let barrier = r.conditions.iter().find(|c| c.rhs_name.starts_with("min|4B")).unwrap();
        assert!((barrier.rhs - 0.4).abs() < 1e-12);
    }

    #[test]
    fn ghz_parameters_in_regime() {
        let p = et(0.6, 0.5, 0.008);
        let ve = 0.008 * 0.5 * (-0.125f64).exp() / 2f64.sqrt();
        let r = check_perturbative(&p, &BathParams::new(2.0 * ve, 0.0).unwrap(), &Scheme::Ghz(GhzParams::new(0.2, 0.04, 1).unwrap()));
        assert!(r.all_satisfied(), "{:?}", r.violations().collect::<Vec<_>>());
    }

    #[test]
    fn relation_thresholds() {
        assert!(Relation::MuchLess.holds(0.25) && !Relation::MuchLess.holds(0.26));
        assert!(Relation::Similar.holds(0.1) && !Relation::Similar.holds(11.0));
        assert!(Relation::LessOrSimilar.holds(2.0) && !Relation::LessOrSimilar.holds(2.1));
    }
}
