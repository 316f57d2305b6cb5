//! A fixed set of invertible polynomials used by the self-test and the acceptance suite.

use crate::poly::BlockKind;
use crate::{Model, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub label: &'static str,
    pub text: &'static str,
}

const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry { label: "fermat 2", text: "x1^2" },
    CatalogEntry { label: "fermat 3", text: "x1^3" },
    CatalogEntry { label: "fermat 4", text: "x1^4" },
    CatalogEntry { label: "fermat 5", text: "x1^5" },
    CatalogEntry { label: "chain (2,2)", text: "x1^2*x2 + x2^2" },
    CatalogEntry { label: "chain (3,2)", text: "x1^3*x2 + x2^2" },
    CatalogEntry { label: "chain (4,2)", text: "x1^4*x2 + x2^2" },
    CatalogEntry { label: "chain (2,3)", text: "x1^2*x2 + x2^3" },
    CatalogEntry { label: "chain (3,3)", text: "x1^3*x2 + x2^3" },
    CatalogEntry { label: "chain (2,2,2)", text: "x1^2*x2 + x2^2*x3 + x3^2" },
    CatalogEntry { label: "chain (2,3,2)", text: "x1^2*x2 + x2^3*x3 + x3^2" },
    CatalogEntry { label: "loop (2,2)", text: "x1^2*x2 + x2^2*x1" },
    CatalogEntry { label: "loop (3,2)", text: "x1^3*x2 + x2^2*x1" },
    CatalogEntry { label: "loop (4,2)", text: "x1^4*x2 + x2^2*x1" },
    CatalogEntry { label: "loop (5,2)", text: "x1^5*x2 + x2^2*x1" },
    CatalogEntry { label: "loop (3,3)", text: "x1^3*x2 + x2^3*x1" },
    CatalogEntry { label: "loop (2,2,2)", text: "x1^2*x2 + x2^2*x3 + x3^2*x1" },
    CatalogEntry { label: "loop (3,2,2)", text: "x1^3*x2 + x2^2*x3 + x3^2*x1" },
    CatalogEntry { label: "loop (2,2,2,2)", text: "x1^2*x2 + x2^2*x3 + x3^2*x4 + x4^2*x1" },
    CatalogEntry { label: "sum fermat 3 + fermat 3", text: "x1^3 + x2^3" },
];

/// The built-in catalog.
pub fn standard() -> &'static [CatalogEntry] {
    ENTRIES
}

/// Polynomials of a catalog file: one per line, blank lines and `#` comments skipped.
pub fn parse_catalog(text: &str) -> Vec<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(str::to_owned)
        .collect()
}

/// A short description such as `chain (2,3)` or `fermat 3 + loop (2,2)`.
pub fn describe(model: &Model) -> String {
    model
        .w()
        .blocks()
        .iter()
        .map(|b| {
            let a: Vec<String> = b.exponents.iter().map(u32::to_string).collect();
            match b.kind {
                BlockKind::Fermat => format!("fermat {}", a[0]),
                _ => format!("{} ({})", b.kind, a.join(",")),
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Models of every built-in entry.
pub fn models() -> Result<Vec<(CatalogEntry, Model)>> {
    ENTRIES.iter().map(|e| Model::from_text(e.text).map(|m| (*e, m))).collect()
}
