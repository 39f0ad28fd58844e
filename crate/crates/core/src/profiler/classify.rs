use std::fmt;
use std::str::FromStr;

/// Minimum target-offset count for a page to be usable at all.
pub const DELTA_MIN: u32 = 10;
/// Maximum other-offset count of an unstable page.
pub const SIGMA_MAX_UNSTABLE: u32 = 80;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PageClass {
    Reliable,
    Unstable,
    Unusable,
}

impl PageClass {
    pub const ALL: [PageClass; 3] = [PageClass::Reliable, PageClass::Unstable, PageClass::Unusable];
}

impl fmt::Display for PageClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PageClass::Reliable => "reliable",
            PageClass::Unstable => "unstable",
            PageClass::Unusable => "unusable",
        })
    }
}

impl FromStr for PageClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reliable" => Ok(PageClass::Reliable),
            "unstable" => Ok(PageClass::Unstable),
            "unusable" => Ok(PageClass::Unusable),
            _ => Err(format!("unknown page class {s:?}")),
        }
    }
}

/// Class of a page from its target count `delta`, other-offset count
/// `sigma`, and whether another offset ties the target count.
///
/// A tied page has no single target offset and is demoted to unstable
/// whatever its `sigma`.
pub fn classify(delta: u32, sigma: u32, tied: bool) -> PageClass {
    if delta < DELTA_MIN {
        PageClass::Unusable
    } else if tied {
        PageClass::Unstable
    } else if delta >= sigma {
        PageClass::Reliable
    } else if sigma <= SIGMA_MAX_UNSTABLE {
        PageClass::Unstable
    } else {
        PageClass::Unusable
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rule_examples() {
        assert_eq!(classify(116, 0, false), PageClass::Reliable);
        assert_eq!(classify(80, 605, false), PageClass::Unusable);
        assert_eq!(classify(41, 37, false), PageClass::Reliable);
        assert_eq!(classify(9, 0, false), PageClass::Unusable);
        assert_eq!(classify(20, 50, false), PageClass::Unstable);
        assert_eq!(classify(20, 20, true), PageClass::Unstable);
        assert_eq!(classify(90, 900, true), PageClass::Unstable);
        assert_eq!(classify(9, 9, true), PageClass::Unusable);
        assert_eq!(classify(0, 0, false), PageClass::Unusable);
    }

    proptest! {
        #[test]
        fn matches_written_rule(delta in 0u32..400, sigma in 0u32..3000) {
            let c = classify(delta, sigma, false);
            let reliable = delta >= 10 && delta >= sigma;
            let unstable = delta >= 10 && sigma <= 80 && delta < sigma;
            let expect = if reliable { PageClass::Reliable } else if unstable { PageClass::Unstable } else { PageClass::Unusable };
            prop_assert_eq!(c, expect);
        }

        #[test]
        fn ties_are_demoted(delta in 0u32..400, sigma in 0u32..3000) {
            let expect = if delta >= 10 { PageClass::Unstable } else { PageClass::Unusable };
            prop_assert_eq!(classify(delta, sigma, true), expect);
        }
    }
}
