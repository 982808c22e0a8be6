//! Shipped protomatrices and splits.
//!
//! The text files live in `crates/core/fixtures/` and use the
//! [`CodeDesign`] interchange format.

use crate::protograph::CodeDesign;

/// `(name, file contents)` for every shipped design.
pub const ALL: &[(&str, &str)] = &[
    ("worked_w1", include_str!("../fixtures/worked_w1.txt")),
    ("worked_w2", include_str!("../fixtures/worked_w2.txt")),
    ("r4_tdc1", include_str!("../fixtures/r4_tdc1.txt")),
    ("r4_tdc2", include_str!("../fixtures/r4_tdc2.txt")),
    ("r4_optimized", include_str!("../fixtures/r4_optimized.txt")),
    ("r5_optimized", include_str!("../fixtures/r5_optimized.txt")),
    ("r8_optimized", include_str!("../fixtures/r8_optimized.txt")),
    ("r10_optimized", include_str!("../fixtures/r10_optimized.txt")),
];

/// Looks up a shipped design by name.
pub fn by_name(name: &str) -> Option<CodeDesign> {
    ALL.iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| text.parse().expect("shipped fixture parses"))
}

fn load(name: &str) -> CodeDesign {
    by_name(name).expect("fixture exists")
}

/// The 3x4 example base with its two-part split.
pub fn worked_w1() -> CodeDesign {
    load("worked_w1")
}

/// The 3x4 example base with its three-part split.
pub fn worked_w2() -> CodeDesign {
    load("worked_w2")
}

pub fn r4_tdc1() -> CodeDesign {
    load("r4_tdc1")
}

pub fn r4_tdc2() -> CodeDesign {
    load("r4_tdc2")
}

pub fn r4_optimized() -> CodeDesign {
    load("r4_optimized")
}

pub fn r5_optimized() -> CodeDesign {
    load("r5_optimized")
}

pub fn r8_optimized() -> CodeDesign {
    load("r8_optimized")
}

pub fn r10_optimized() -> CodeDesign {
    load("r10_optimized")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_is_a_valid_split_with_hadamard_rows() {
        for (name, _) in ALL {
            let d = by_name(name).unwrap();
            d.split.validate().unwrap();
            d.split.base().check_hadamard_rows(d.order).unwrap();
        }
    }

    #[test]
    fn r4_splits_share_one_base() {
        let a = r4_tdc1();
        assert_eq!(a.split.base(), r4_tdc2().split.base());
        assert_eq!(a.split.base(), r4_optimized().split.base());
        assert_eq!((a.split.base().rows(), a.split.base().cols()), (7, 11));
    }
}
