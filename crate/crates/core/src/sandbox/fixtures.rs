//! Bundled synthetic fixtures: a 200-product catalog over eight categories
//! and a 50-user purchase log.

use super::catalog::{parse_catalog, parse_purchases, Catalog, PurchaseRecord};

pub const CATALOG_JSONL: &str = include_str!("../../fixtures/catalog.jsonl");
pub const PURCHASES_JSONL: &str = include_str!("../../fixtures/purchases.jsonl");

pub fn catalog() -> Catalog {
    parse_catalog(CATALOG_JSONL.as_bytes()).expect("bundled catalog is valid")
}

pub fn purchases() -> Vec<PurchaseRecord> {
    parse_purchases(PURCHASES_JSONL.as_bytes()).expect("bundled purchase log is valid")
}
