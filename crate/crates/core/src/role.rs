//! PropBank role labels and their canonical string forms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::BioError;

/// Function tag of an `ARGM-*` modifier.
///
/// Unknown functions are kept verbatim in [`Modifier::Other`] so that rare
/// OntoNotes tags survive ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modifier {
    Tmp,
    Loc,
    Mnr,
    Adv,
    Prd,
    Dis,
    Neg,
    Mod,
    Dir,
    Ext,
    Prp,
    Pnc,
    Cau,
    Adj,
    Com,
    Dsp,
    Gol,
    Lvb,
    Rec,
    Prr,
    Other(String),
}

const KNOWN_MODIFIERS: [(Modifier, &str); 20] = [
    (Modifier::Tmp, "TMP"),
    (Modifier::Loc, "LOC"),
    (Modifier::Mnr, "MNR"),
    (Modifier::Adv, "ADV"),
    (Modifier::Prd, "PRD"),
    (Modifier::Dis, "DIS"),
    (Modifier::Neg, "NEG"),
    (Modifier::Mod, "MOD"),
    (Modifier::Dir, "DIR"),
    (Modifier::Ext, "EXT"),
    (Modifier::Prp, "PRP"),
    (Modifier::Pnc, "PNC"),
    (Modifier::Cau, "CAU"),
    (Modifier::Adj, "ADJ"),
    (Modifier::Com, "COM"),
    (Modifier::Dsp, "DSP"),
    (Modifier::Gol, "GOL"),
    (Modifier::Lvb, "LVB"),
    (Modifier::Rec, "REC"),
    (Modifier::Prr, "PRR"),
];

impl Modifier {
    pub fn as_str(&self) -> &str {
        match self {
            Modifier::Other(s) => s,
            known => KNOWN_MODIFIERS
                .iter()
                .find(|(m, _)| m == known)
                .map(|(_, s)| *s)
                .expect("every known modifier has a string form"),
        }
    }

    fn parse(func: &str) -> Option<Modifier> {
        if func.is_empty() || func.contains(char::is_whitespace) {
            return None;
        }
        Some(
            KNOWN_MODIFIERS
                .iter()
                .find(|(_, s)| *s == func)
                .map(|(m, _)| m.clone())
                .unwrap_or_else(|| Modifier::Other(func.to_string())),
        )
    }
}

/// The role a span plays with respect to its predicate, ignoring R-/C- links.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseRole {
    /// The predicate itself (`V`).
    Predicate,
    /// Numbered core argument `ARG0` to `ARG5`.
    Numbered(u8),
    /// Secondary agent (`ARGA`).
    Secondary,
    Modifier(Modifier),
}

/// Reference (`R-`) and continuation (`C-`) links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RoleLink {
    Reference,
    Continuation,
}

/// A role label such as `ARG0`, `ARGM-TMP`, `R-ARG1` or `V`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoleLabel {
    link: Option<RoleLink>,
    base: BaseRole,
}

impl RoleLabel {
    pub fn new(base: BaseRole) -> Self {
        RoleLabel { link: None, base }
    }

    pub fn linked(link: RoleLink, base: BaseRole) -> Self {
        RoleLabel { link: Some(link), base }
    }

    pub fn predicate() -> Self {
        RoleLabel::new(BaseRole::Predicate)
    }

    pub fn arg(n: u8) -> Self {
        assert!(n <= 5, "numbered arguments run from ARG0 to ARG5");
        RoleLabel::new(BaseRole::Numbered(n))
    }

    pub fn modifier(m: Modifier) -> Self {
        RoleLabel::new(BaseRole::Modifier(m))
    }

    pub fn link(&self) -> Option<RoleLink> {
        self.link
    }

    pub fn base(&self) -> &BaseRole {
        &self.base
    }

    pub fn is_predicate(&self) -> bool {
        self.link.is_none() && self.base == BaseRole::Predicate
    }

    pub fn is_modifier(&self) -> bool {
        matches!(self.base, BaseRole::Modifier(_))
    }

    /// The same role with any R-/C- link dropped.
    pub fn without_link(&self) -> RoleLabel {
        RoleLabel::new(self.base.clone())
    }
}

impl fmt::Display for RoleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.link {
            Some(RoleLink::Reference) => f.write_str("R-")?,
            Some(RoleLink::Continuation) => f.write_str("C-")?,
            None => {}
        }
        match &self.base {
            BaseRole::Predicate => f.write_str("V"),
            BaseRole::Numbered(n) => write!(f, "ARG{}", n),
            BaseRole::Secondary => f.write_str("ARGA"),
            BaseRole::Modifier(m) => write!(f, "ARGM-{}", m.as_str()),
        }
    }
}

impl FromStr for RoleLabel {
    type Err = BioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || BioError::UnknownRole(s.to_string());
        let (link, rest) = if let Some(rest) = s.strip_prefix("R-") {
            (Some(RoleLink::Reference), rest)
        } else if let Some(rest) = s.strip_prefix("C-") {
            (Some(RoleLink::Continuation), rest)
        } else {
            (None, s)
        };
        let base = match rest {
            "V" => BaseRole::Predicate,
            "ARGA" => BaseRole::Secondary,
            _ => {
                if let Some(func) = rest.strip_prefix("ARGM-") {
                    BaseRole::Modifier(Modifier::parse(func).ok_or_else(unknown)?)
                } else if let Some(n) = rest.strip_prefix("ARG") {
                    match n.as_bytes() {
                        [d @ b'0'..=b'5'] => BaseRole::Numbered(d - b'0'),
                        _ => return Err(unknown()),
                    }
                } else {
                    return Err(unknown());
                }
            }
        };
        Ok(RoleLabel { link, base })
    }
}

impl Serialize for RoleLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RoleLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms_round_trip() {
        for s in [
            "V",
            "ARG0",
            "ARG5",
            "ARGA",
            "ARGM-TMP",
            "ARGM-PRR",
            "R-ARG1",
            "C-ARG0",
            "R-ARGM-LOC",
            "C-V",
            "ARGM-XYZ",
        ] {
            let role: RoleLabel = s.parse().unwrap();
            assert_eq!(role.to_string(), s);
        }
    }

    #[test]
    fn unknown_modifier_is_kept() {
        let role: RoleLabel = "ARGM-PRX".parse().unwrap();
        assert_eq!(role.base(), &BaseRole::Modifier(Modifier::Other("PRX".into())));
        assert!(role.is_modifier());
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "ARG6", "ARG", "ARGM-", "ARGM", "X-ARG0", "arg0", "ARG10", "R-"] {
            assert!(s.parse::<RoleLabel>().is_err(), "{s:?} should not parse");
        }
    }

    #[test]
    fn links_fold_to_base() {
        let r: RoleLabel = "R-ARG0".parse().unwrap();
        assert_eq!(r.link(), Some(RoleLink::Reference));
        assert_eq!(r.without_link(), RoleLabel::arg(0));
        assert!(!"C-V".parse::<RoleLabel>().unwrap().is_predicate());
    }
}
