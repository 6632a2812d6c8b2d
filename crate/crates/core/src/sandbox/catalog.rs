use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::prompts::ImageRef;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub product_id: String,
    pub title: String,
    pub category: String,
    pub price: f64,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

impl Product {
    pub fn image(&self) -> Option<ImageRef> {
        self.image_ref.as_ref().map(|r| ImageRef {
            reference: r.clone(),
            caption: self.caption.clone().unwrap_or_else(|| format!("photo of {}", self.title)),
        })
    }
}

/// Products indexed by id and category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Product>", into = "Vec<Product>")]
pub struct Catalog {
    products: Vec<Product>,
    by_id: HashMap<String, usize>,
    by_category: BTreeMap<String, Vec<usize>>,
}

impl From<Vec<Product>> for Catalog {
    fn from(products: Vec<Product>) -> Self {
        let by_id = products.iter().enumerate().map(|(i, p)| (p.product_id.clone(), i)).collect();
        let mut by_category: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, p) in products.iter().enumerate() {
            by_category.entry(p.category.clone()).or_default().push(i);
        }
        Catalog {
            products,
            by_id,
            by_category,
        }
    }
}

impl From<Catalog> for Vec<Product> {
    fn from(c: Catalog) -> Self {
        c.products
    }
}

impl Catalog {
    /// Builds a catalog, rejecting duplicate ids.
    pub fn new(products: Vec<Product>) -> Result<Self> {
        let mut seen = HashMap::new();
        for p in &products {
            if seen.insert(p.product_id.as_str(), ()).is_some() {
                return Err(Error::Validation(format!("duplicate product_id {}", p.product_id)));
            }
        }
        Ok(Catalog::from(products))
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn get(&self, id: &str) -> Option<&Product> {
        self.by_id.get(id).map(|&i| &self.products[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    /// Category names in sorted order.
    pub fn categories(&self) -> Vec<String> {
        self.by_category.keys().cloned().collect()
    }

    pub fn in_category(&self, category: &str) -> &[usize] {
        self.by_category.get(category).map_or(&[], Vec::as_slice)
    }

    /// The first `n` products (in file order) as a smaller catalog.
    pub fn truncated(&self, n: usize) -> Catalog {
        Catalog::from(self.products.iter().take(n).cloned().collect::<Vec<_>>())
    }

    /// Spreads `n` products evenly over categories, taking the earliest of
    /// each in turn.
    pub fn balanced_subset(&self, n: usize) -> Catalog {
        let lists: Vec<&Vec<usize>> = self.by_category.values().collect();
        let mut picked = Vec::with_capacity(n);
        let mut depth = 0;
        while picked.len() < n.min(self.len()) {
            for l in &lists {
                if let Some(&i) = l.get(depth) {
                    if picked.len() < n {
                        picked.push(i);
                    }
                }
            }
            depth += 1;
        }
        picked.sort_unstable();
        Catalog::from(picked.into_iter().map(|i| self.products[i].clone()).collect::<Vec<_>>())
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::NotFound(path.to_path_buf())),
        Err(e) => Err(e.into()),
    }
}

fn ingest_err(line: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        line,
        message: message.into(),
    }
}

fn str_field(obj: &serde_json::Map<String, Value>, name: &str, line: usize) -> Result<String> {
    match obj.get(name) {
        None | Some(Value::Null) => Err(ingest_err(line, format!("missing required field `{name}`"))),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(ingest_err(line, format!("field `{name}` must be a string"))),
    }
}

fn opt_str(obj: &serde_json::Map<String, Value>, name: &str, line: usize) -> Result<Option<String>> {
    match obj.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(ingest_err(line, format!("field `{name}` must be a string"))),
    }
}

/// Reads line-delimited product records. Blank lines are skipped; every
/// malformed line is reported with its 1-based number.
pub fn parse_catalog<R: BufRead>(input: R) -> Result<Catalog> {
    let mut products = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in input.lines().enumerate() {
        let n = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).map_err(|e| ingest_err(n, format!("invalid JSON: {e}")))?;
        let obj = v.as_object().ok_or_else(|| ingest_err(n, "record is not an object"))?;
        let product_id = str_field(obj, "product_id", n)?;
        let title = str_field(obj, "title", n)?;
        let category = str_field(obj, "category", n)?;
        let price = match obj.get("price") {
            None | Some(Value::Null) => return Err(ingest_err(n, "missing required field `price`")),
            Some(p) => p
                .as_f64()
                .filter(|p| *p >= 0.0 && p.is_finite())
                .ok_or_else(|| ingest_err(n, "field `price` must be a nonnegative number"))?,
        };
        let description = str_field(obj, "description", n)?;
        let image_ref = opt_str(obj, "image_ref", n)?;
        let caption = opt_str(obj, "caption", n)?;
        if let Some(first) = seen.insert(product_id.clone(), n) {
            return Err(ingest_err(
                n,
                format!("duplicate product_id {product_id} (first seen on line {first})"),
            ));
        }
        products.push(Product {
            product_id,
            title,
            category,
            price,
            description,
            image_ref,
            caption,
        });
    }
    Ok(Catalog::from(products))
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog> {
    parse_catalog(open(path.as_ref())?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurchaseRecord {
    pub user_id: String,
    pub product_id: String,
    pub timestamp: u64,
}

pub fn parse_purchases<R: BufRead>(input: R) -> Result<Vec<PurchaseRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: PurchaseRecord =
            serde_json::from_str(&line).map_err(|e| ingest_err(i + 1, format!("invalid purchase record: {e}")))?;
        out.push(r);
    }
    Ok(out)
}

pub fn load_purchases(path: impl AsRef<Path>) -> Result<Vec<PurchaseRecord>> {
    parse_purchases(open(path.as_ref())?)
}

/// Purchases per user in timestamp order (ties by input order).
pub fn histories(records: &[PurchaseRecord]) -> BTreeMap<String, Vec<String>> {
    let mut by_user: BTreeMap<String, Vec<(u64, usize, String)>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_user
            .entry(r.user_id.clone())
            .or_default()
            .push((r.timestamp, i, r.product_id.clone()));
    }
    by_user
        .into_iter()
        .map(|(u, mut v)| {
            v.sort();
            (u, v.into_iter().map(|(_, _, p)| p).collect())
        })
        .collect()
}
