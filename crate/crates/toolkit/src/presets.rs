//! Distribution-family scenarios. Each one swaps the family of some
//! variables while keeping the default parameterization of the others.

use std::fmt;
use std::str::FromStr;

use cs_aging::{Distribution, ModelParams};

/// Default laws per variable and family.
pub mod table {
    use cs_aging::Distribution::{self, *};

    pub const AGING_EXP: Distribution = Exponential { rate: 0.0006857 };
    pub const AGING_ERL: Distribution = Erlang { rate: 0.0013717, shape: 2 };
    pub const AGING_HYPO: Distribution = Hypoexponential { rate1: 0.0010816, rate2: 0.0018762 };
    pub const FAILURE_EXP: Distribution = Exponential { rate: 0.0010432 };
    pub const FAILURE_ERL: Distribution = Erlang { rate: 0.0020855, shape: 2 };
    pub const FAILURE_HYPO: Distribution = Hypoexponential { rate1: 0.0013674, rate2: 0.0043860 };
    pub const FIXING_EXP: Distribution = Exponential { rate: 1.0 };
    pub const FIXING_ERL: Distribution = Erlang { rate: 2.0, shape: 2 };
    pub const REBOOT_EXP: Distribution = Exponential { rate: 12.0 };
    pub const REBOOT_ERL: Distribution = Erlang { rate: 24.0, shape: 2 };
    pub const MIGRATION_EXP: Distribution = Exponential { rate: 120.5 };
    pub const MIGRATION_ERL: Distribution = Erlang { rate: 720.0, shape: 6 };

    /// Nominal mean of each variable, from its exponential rate.
    pub fn nominal_mean(variable: &str) -> Option<f64> {
        let d = match variable {
            "aging" => AGING_EXP,
            "failure" => FAILURE_EXP,
            "fixing" => FIXING_EXP,
            "reboot" => REBOOT_EXP,
            "migration" => MIGRATION_EXP,
            _ => return None,
        };
        Some(d.mean())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Exponential,
    AErl,
    AHypo,
    RErl,
    FixingErl,
    MErl,
    AHypoFHypoErl,
    FErl,
    FHypo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Exp,
    Erl,
    Hypo,
}

impl Preset {
    pub const ALL: [Preset; 9] = [
        Preset::Exponential,
        Preset::AErl,
        Preset::AHypo,
        Preset::RErl,
        Preset::FixingErl,
        Preset::MErl,
        Preset::AHypoFHypoErl,
        Preset::FErl,
        Preset::FHypo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Exponential => "Exponential",
            Preset::AErl => "A_ERL",
            Preset::AHypo => "A_HYPO",
            Preset::RErl => "R_ERL",
            Preset::FixingErl => "Fixing_ERL",
            Preset::MErl => "M_ERL",
            Preset::AHypoFHypoErl => "A_HYPO-F_HYPO-ERL",
            Preset::FErl => "F_ERL",
            Preset::FHypo => "F_HYPO",
        }
    }

    /// Families of (aging, failure, fixing, reboot, migration).
    fn families(self) -> [Family; 5] {
        use Family::*;
        match self {
            Preset::Exponential => [Exp, Exp, Exp, Exp, Exp],
            Preset::AErl => [Erl, Exp, Exp, Exp, Exp],
            Preset::AHypo => [Hypo, Exp, Exp, Exp, Exp],
            Preset::RErl => [Exp, Exp, Exp, Erl, Exp],
            Preset::FixingErl => [Exp, Exp, Erl, Exp, Exp],
            Preset::MErl => [Exp, Exp, Exp, Exp, Erl],
            Preset::AHypoFHypoErl => [Hypo, Hypo, Erl, Erl, Erl],
            Preset::FErl => [Exp, Erl, Exp, Exp, Exp],
            Preset::FHypo => [Exp, Hypo, Exp, Exp, Exp],
        }
    }

    /// The law each variable gets under this preset.
    pub fn laws(self) -> [(&'static str, Distribution); 5] {
        use table::*;
        let [a, f, r, rb, m] = self.families();
        let pick = |fam: Family, exp: Distribution, erl: Distribution, hypo: Option<Distribution>| match fam {
            Family::Exp => exp,
            Family::Erl => erl,
            Family::Hypo => hypo.expect("family defined for this variable"),
        };
        [
            ("aging", pick(a, AGING_EXP, AGING_ERL, Some(AGING_HYPO))),
            ("failure", pick(f, FAILURE_EXP, FAILURE_ERL, Some(FAILURE_HYPO))),
            ("fixing", pick(r, FIXING_EXP, FIXING_ERL, None)),
            ("reboot", pick(rb, REBOOT_EXP, REBOOT_ERL, None)),
            ("migration", pick(m, MIGRATION_EXP, MIGRATION_ERL, None)),
        ]
    }

    /// Applies the preset's families to both hosts.
    pub fn apply(self, p: &mut ModelParams) {
        for (variable, law) in self.laws() {
            match variable {
                "migration" => p.migration = law,
                _ => {
                    for host in [&mut p.primary, &mut p.backup] {
                        match variable {
                            "aging" => host.aging = law,
                            "failure" => host.set_failure(law),
                            "fixing" => host.fixing = law,
                            "reboot" => host.reboot = law,
                            _ => unreachable!(),
                        }
                    }
                }
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                format!("unknown preset `{s}` (expected one of {})", names.join(", "))
            })
    }
}
