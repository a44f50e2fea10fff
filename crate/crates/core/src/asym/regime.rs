//! Decision table mapping tail indices and asserted conditions to the
//! regime that gives the first-order asymptotics of `P(S_N = t)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::lattice::{PowerLawSpec, Side};

/// Conditions that cannot be checked from finite data and must be asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    /// `E N < ∞`.
    EnFinite,
    /// `E N ln^{2+τ} N < ∞` (α = 2), `E N ln^{1+τ} N < ∞` (α = 3, μ = 0).
    EnLogMoment,
    /// `P(X < -t) = O(P(X > t))`.
    LeftTailO,
    /// `P(X < -t) / P(X > t)` has a finite limit.
    LeftTailLimit,
    /// `E X² 1{X < -t} = o(1 / ln t)`.
    LeftTailSecondMoment,
    /// `P(N = t) = o(P(X = t))`.
    NSmallVsX,
    /// `P(N > t² ln^{-τ} t) = o(t P(X = t))`.
    NTailSmall,
    /// `L(t L^{1/(α-1)}(t)) ~ L(t)` for the summand's slowly varying part.
    SlowlyVaryingComposition,
    /// `P(X = t) ~ a t^-α`.
    XAsymptoticallyConstant,
    /// `E N^{1+τ} < ∞` for some `τ > 0`.
    NMoment1PlusTau,
    /// `E N^{1+α} < ∞`.
    NMoment1PlusAlpha,
    /// `E N^β < ∞` for some `β > 1 + α`.
    NMomentBeyond1PlusAlpha,
    /// Ratio regularity and local flatness of `P(N = ·)`.
    NRegularity,
    /// `P(X = t) = o(P(N = t))`.
    XSmallVsN,
    /// Two-sided `α = 3` tails with remainder `O((ln ln |s|)^{-1-ε})`.
    Alpha3Remainder,
    /// `P(N = t) = o(t^-3 (ln ln t)^-1)`.
    NDecayAlpha3,
    /// `P(N = t) = O(t^{-α-β})` for some `β > 0`.
    NPolyDecayBeyondAlpha,
}

impl Flag {
    pub const ALL: [Flag; 17] = [
        Flag::EnFinite,
        Flag::EnLogMoment,
        Flag::LeftTailO,
        Flag::LeftTailLimit,
        Flag::LeftTailSecondMoment,
        Flag::NSmallVsX,
        Flag::NTailSmall,
        Flag::SlowlyVaryingComposition,
        Flag::XAsymptoticallyConstant,
        Flag::NMoment1PlusTau,
        Flag::NMoment1PlusAlpha,
        Flag::NMomentBeyond1PlusAlpha,
        Flag::NRegularity,
        Flag::XSmallVsN,
        Flag::Alpha3Remainder,
        Flag::NDecayAlpha3,
        Flag::NPolyDecayBeyondAlpha,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuSign {
    Negative,
    Zero,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predictor {
    /// `E N · P(X = t)`
    SingleBigJump,
    /// `μ⁻¹ P(N = ⌊t/μ⌋)`
    StoppingDominates,
    /// Sum of the two above.
    Combined,
    /// Stable-law formula for `α, γ < 2`.
    SubcriticalStable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeInput {
    pub alpha: f64,
    /// Tail index of `N` when `P(N = t) = t^-γ L₂(t)`.
    pub gamma: Option<f64>,
    /// Sign of `E X`; `None` when the mean does not exist.
    pub mu_sign: Option<MuSign>,
    pub x_nonnegative: bool,
    pub flags: BTreeSet<Flag>,
}

impl RegimeInput {
    /// Only the structural data; every condition must be asserted.
    pub fn bare(alpha: f64, gamma: Option<f64>, mu_sign: Option<MuSign>, x_nonnegative: bool) -> Self {
        Self {
            alpha,
            gamma,
            mu_sign,
            x_nonnegative,
            flags: BTreeSet::new(),
        }
    }

    pub fn with_flag(mut self, f: Flag) -> Self {
        self.flags.insert(f);
        self
    }

    /// Pure power laws `P(X = t) ∝ t^-α` (one-sided) and `P(N = t) ∝ t^-γ`.
    pub fn power_laws(alpha: f64, gamma: f64) -> Self {
        Self::from_specs(&PowerLawSpec::one_sided(alpha), Some(&PowerLawSpec::one_sided(gamma)))
    }

    /// Structural data plus every condition the parametric families
    /// provably satisfy.
    pub fn from_specs(x: &PowerLawSpec, n: Option<&PowerLawSpec>) -> Self {
        let alpha = x.alpha;
        let mu_sign = x.mean().ok().map(|m| {
            if m > 1e-12 {
                MuSign::Positive
            } else if m < -1e-12 {
                MuSign::Negative
            } else {
                MuSign::Zero
            }
        });
        let mut flags = BTreeSet::new();
        let rho_x = x.sv.rho;
        flags.insert(Flag::SlowlyVaryingComposition);
        if rho_x == 0.0 {
            flags.insert(Flag::XAsymptoticallyConstant);
        }
        let left = match x.side {
            Side::OneSided => 0.0,
            Side::TwoSided => x.b,
        };
        if left == 0.0 || x.a > 0.0 {
            flags.insert(Flag::LeftTailO);
            flags.insert(Flag::LeftTailLimit);
        }
        if left == 0.0 || alpha > 3.0 {
            flags.insert(Flag::LeftTailSecondMoment);
        }
        if alpha == 3.0 && rho_x == 0.0 {
            flags.insert(Flag::Alpha3Remainder);
        }
        let gamma = n.map(|n| n.alpha);
        if let Some(n) = n {
            let g = n.alpha;
            let rho_n = n.sv.rho;
            // E N^k < ∞ iff Σ t^{k-γ} ln^ρ t converges.
            let moment = |k: f64| g - k > 1.0 || (g - k == 1.0 && rho_n < -1.0);
            flags.insert(Flag::NRegularity);
            if moment(1.0) {
                flags.insert(Flag::EnFinite);
            }
            if g > 2.0 {
                flags.insert(Flag::EnLogMoment);
                flags.insert(Flag::NMoment1PlusTau);
            }
            if moment(1.0 + alpha) {
                flags.insert(Flag::NMoment1PlusAlpha);
            }
            if g > 2.0 + alpha {
                flags.insert(Flag::NMomentBeyond1PlusAlpha);
            }
            if g > alpha || (g == alpha && rho_n < rho_x) {
                flags.insert(Flag::NSmallVsX);
            }
            if alpha > g || (g == alpha && rho_x < rho_n) {
                flags.insert(Flag::XSmallVsN);
            }
            if g > (alpha + 1.0) / 2.0 {
                flags.insert(Flag::NTailSmall);
            }
            if g > 3.0 || (g == 3.0 && rho_n < 0.0) {
                flags.insert(Flag::NDecayAlpha3);
            }
            if g > alpha {
                flags.insert(Flag::NPolyDecayBeyondAlpha);
            }
        }
        Self {
            alpha,
            gamma,
            mu_sign,
            x_nonnegative: x.is_nonnegative(),
            flags,
        }
    }

    fn has(&self, f: Flag) -> bool {
        self.flags.contains(&f)
    }
}

/// One row of the table evaluated against an input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub regime: String,
    pub predictor: Predictor,
    /// Structural condition of the row, in symbols.
    pub anchor: String,
    pub required: Vec<Flag>,
    pub unmet: Vec<Flag>,
}

impl RegimeRow {
    pub fn applies(&self) -> bool {
        self.unmet.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Option<String>,
    pub predictor: Option<Predictor>,
    pub anchor: Option<String>,
    /// Missing flags of the primary row, or of the closest row when none
    /// applies.
    pub unmet: Vec<Flag>,
    /// Every row whose structural conditions hold, in table order.
    pub rows: Vec<RegimeRow>,
}

struct Candidate {
    regime: &'static str,
    predictor: Predictor,
    anchor: &'static str,
    required: Vec<Flag>,
    /// Alternatives: the row also applies when any of these flags holds
    /// in place of `EnFinite` (used for "E N < ∞ or N power-law").
    en_or_power_law: bool,
    power_law_family: bool,
}

fn candidates(input: &RegimeInput) -> Vec<Candidate> {
    use Flag::*;
    use Predictor::*;
    let a = input.alpha;
    let mu = input.mu_sign;
    let mu_pos = mu == Some(MuSign::Positive);
    let mut rows = Vec::new();
    let mut push = |regime, predictor, anchor, required: Vec<Flag>, alt: bool, first: bool| {
        rows.push(Candidate {
            regime,
            predictor,
            anchor,
            required,
            en_or_power_law: alt,
            power_law_family: first,
        })
    };

    if input.x_nonnegative {
        if let Some(g) = input.gamma {
            if g > a && g > 2.0 {
                push("power-law-count/big-jump", SingleBigJump, "γ > α and γ > 2", vec![], false, true);
            }
            if a > g && a > 2.0 {
                push("power-law-count/count-dominates", StoppingDominates, "α > γ and α > 2", vec![], false, true);
            }
            if a > 2.0 && g >= 2.0 {
                push(
                    "power-law-count/combined",
                    Combined,
                    "α > 2, γ ≥ 2 and E N < ∞",
                    vec![EnFinite],
                    false,
                    true,
                );
            }
            if a < 2.0 && g < 2.0 {
                push(
                    "power-law-count/subcritical",
                    SubcriticalStable,
                    "α, γ < 2 with P(X = t) ~ a t^-α",
                    vec![XAsymptoticallyConstant],
                    false,
                    true,
                );
            }
        }
    }

    // Single-big-jump under relaxed conditions on N.
    if a > 1.0 && a < 2.0 {
        push("finite-mean-count/alpha-below-2", SingleBigJump, "1 < α < 2, E N < ∞", vec![EnFinite, XAsymptoticallyConstant], false, false);
    }
    if a == 2.0 {
        push(
            "finite-mean-count/alpha-2",
            SingleBigJump,
            "α = 2, E N ln^{2+τ} N < ∞",
            vec![EnFinite, EnLogMoment, XAsymptoticallyConstant],
            false,
            false,
        );
    }
    if a > 2.0 && a < 3.0 && mu.is_some() {
        let mut req = vec![EnFinite, XAsymptoticallyConstant, LeftTailO];
        if mu_pos {
            req.push(NSmallVsX);
        }
        push("finite-mean-count/alpha-2-to-3", SingleBigJump, "2 < α < 3, E N < ∞", req, false, false);
    }
    if a == 3.0 && mu.is_some() {
        let mut req = vec![EnFinite, XAsymptoticallyConstant, LeftTailO];
        match mu {
            Some(MuSign::Positive) => req.push(NDecayAlpha3),
            Some(MuSign::Zero) => req.push(EnLogMoment),
            _ => {}
        }
        push("finite-mean-count/alpha-3", SingleBigJump, "α = 3, E N < ∞", req, false, false);
    }
    if a > 3.0 && mu.is_some() {
        let mut req = vec![EnFinite, LeftTailSecondMoment];
        match mu {
            Some(MuSign::Zero) => req.push(NTailSmall),
            Some(MuSign::Positive) => req.push(NSmallVsX),
            _ => {}
        }
        push("finite-mean-count/alpha-above-3", SingleBigJump, "α > 3, E N < ∞", req, false, false);
    }
    if a > 1.0 && a <= 3.0 {
        let mut req = vec![NMoment1PlusTau];
        if a > 2.0 {
            req.push(LeftTailO);
            if mu_pos {
                req.push(NPolyDecayBeyondAlpha);
            }
        }
        if a <= 2.0 || mu.is_some() {
            push("count-moment-1-plus-tau", SingleBigJump, "1 < α ≤ 3, E N^{1+τ} < ∞", req, false, false);
        }
    }
    if a > 2.0 && a < 3.0 && mu_pos {
        push(
            "positive-drift/slowly-varying-composition",
            SingleBigJump,
            "2 < α < 3, μ > 0",
            vec![SlowlyVaryingComposition, LeftTailO, NSmallVsX],
            false,
            false,
        );
    }
    if a > 1.0 {
        push(
            "count-moment-1-plus-alpha",
            SingleBigJump,
            "α > 1, E N^{1+α} < ∞",
            vec![NMoment1PlusAlpha, XAsymptoticallyConstant],
            false,
            false,
        );
        push(
            "count-moment-beyond-1-plus-alpha",
            SingleBigJump,
            "α > 1, E N^β < ∞ for some β > 1 + α",
            vec![NMomentBeyond1PlusAlpha],
            false,
            false,
        );
    }

    // Stopping-dominated and combined asymptotics, μ > 0.
    if mu_pos && a > 2.0 && a < 3.0 {
        push(
            "positive-drift/alpha-2-to-3/combined",
            Combined,
            "2 < α < 3, μ > 0, E N < ∞",
            vec![NRegularity, XAsymptoticallyConstant, LeftTailLimit, EnFinite],
            false,
            false,
        );
        push(
            "positive-drift/alpha-2-to-3/count-dominates",
            StoppingDominates,
            "2 < α < 3, μ > 0, P(X = t) = o(P(N = t))",
            vec![NRegularity, XAsymptoticallyConstant, XSmallVsN, LeftTailLimit],
            true,
            false,
        );
        push(
            "positive-drift/alpha-2-to-3-regular/combined",
            Combined,
            "2 < α < 3, μ > 0, E N < ∞, L₁ regular",
            vec![NRegularity, SlowlyVaryingComposition, LeftTailLimit, EnFinite],
            false,
            false,
        );
        push(
            "positive-drift/alpha-2-to-3-regular/count-dominates",
            StoppingDominates,
            "2 < α < 3, μ > 0, P(X = t) = o(P(N = t)), L₁ regular",
            vec![NRegularity, SlowlyVaryingComposition, XSmallVsN, LeftTailLimit],
            true,
            false,
        );
    }
    if mu_pos && a > 3.0 {
        push(
            "positive-drift/alpha-above-3/combined",
            Combined,
            "α > 3, μ > 0, E N < ∞",
            vec![NRegularity, LeftTailSecondMoment, EnFinite],
            false,
            false,
        );
        push(
            "positive-drift/alpha-above-3/count-dominates",
            StoppingDominates,
            "α > 3, μ > 0, P(X = t) = o(P(N = t))",
            vec![NRegularity, LeftTailSecondMoment, XSmallVsN],
            true,
            false,
        );
    }
    if mu_pos && a == 3.0 {
        push(
            "positive-drift/alpha-3/combined",
            Combined,
            "α = 3, μ > 0, E N < ∞",
            vec![Alpha3Remainder, NRegularity, EnFinite],
            false,
            false,
        );
        push(
            "positive-drift/alpha-3/count-dominates",
            StoppingDominates,
            "α = 3, μ > 0, P(X = t) = o(P(N = t))",
            vec![Alpha3Remainder, NRegularity, XSmallVsN],
            true,
            false,
        );
        push(
            "positive-drift/alpha-3/big-jump",
            SingleBigJump,
            "α = 3, μ > 0, E N < ∞, P(N = t) = o(P(X = t))",
            vec![Alpha3Remainder, EnFinite, NSmallVsX],
            false,
            false,
        );
    }
    rows
}

/// Deterministic lookup of every applicable row; the primary row is the
/// first applicable row of the power-law-count family, otherwise the applicable row with the
/// fewest required conditions.
pub fn select_regime(input: &RegimeInput) -> RegimeReport {
    let mut rows = Vec::new();
    let mut order = Vec::new();
    for c in candidates(input) {
        let mut unmet: Vec<Flag> = c.required.iter().copied().filter(|f| !input.has(*f)).collect();
        if c.en_or_power_law && input.gamma.is_none() && !input.has(Flag::EnFinite) {
            unmet.push(Flag::EnFinite);
        }
        unmet.sort();
        unmet.dedup();
        order.push((c.power_law_family, c.required.len()));
        rows.push(RegimeRow {
            regime: c.regime.to_string(),
            predictor: c.predictor,
            anchor: c.anchor.to_string(),
            required: c.required,
            unmet,
        });
    }
    let applicable: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].applies()).collect();
    let primary = applicable
        .iter()
        .copied()
        .find(|&i| order[i].0)
        .or_else(|| applicable.iter().copied().min_by_key(|&i| (order[i].1, i)));
    match primary {
        Some(i) => RegimeReport {
            regime: Some(rows[i].regime.clone()),
            predictor: Some(rows[i].predictor),
            anchor: Some(rows[i].anchor.clone()),
            unmet: Vec::new(),
            rows,
        },
        None => {
            let closest = rows.iter().min_by_key(|r| r.unmet.len());
            let unmet = closest.map(|r| r.unmet.clone()).unwrap_or_default();
            RegimeReport {
                regime: None,
                predictor: None,
                anchor: None,
                unmet,
                rows,
            }
        }
    }
}
