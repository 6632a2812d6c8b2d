use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, Category};
use crate::error::{Error, Result};
use crate::prompts::{self, field};
use crate::rng::{purpose, rng_for};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub name: String,
    pub gender: String,
    pub age: u32,
    pub occupation: String,
    pub traits: Vec<String>,
    /// Category → weight; weights are nonnegative and sum to 1.
    pub preferences: BTreeMap<String, f64>,
    pub tendencies: Vec<String>,
}

/// Truncated-normal age distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgeDistribution {
    pub mean: f64,
    pub sd: f64,
    pub min: u32,
    pub max: u32,
}

impl Default for AgeDistribution {
    fn default() -> Self {
        AgeDistribution {
            mean: 35.0,
            sd: 12.0,
            min: 18,
            max: 75,
        }
    }
}

impl AgeDistribution {
    pub fn validate(&self) -> Result<()> {
        if !(self.sd > 0.0 && self.sd.is_finite() && self.mean.is_finite()) {
            return Err(Error::param("age.sd", "must be a positive real"));
        }
        if self.min > self.max {
            return Err(Error::param("age.min", "exceeds age.max"));
        }
        Ok(())
    }

    /// Rejection-samples the normal until a draw lands in `[min, max + 1)`,
    /// then takes completed years.
    pub fn sample(&self, rng: &mut impl Rng) -> u32 {
        let normal = Normal::new(self.mean, self.sd).expect("validated sd");
        let (lo, hi) = (f64::from(self.min), f64::from(self.max) + 1.0);
        for _ in 0..10_000 {
            let x: f64 = normal.sample(rng);
            if x >= lo && x < hi {
                return (x.floor() as u32).clamp(self.min, self.max);
            }
        }
        // bounds far in a tail: fall back to uniform over the window
        rng.random_range(self.min..=self.max)
    }
}

impl Persona {
    /// Top `n` preferred categories by weight, ties by name.
    pub fn top_preferences(&self, n: usize) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self.preferences.iter().map(|(k, w)| (k.as_str(), *w)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        v.truncate(n);
        v
    }

    pub fn preference(&self, category: &str) -> f64 {
        self.preferences.get(category).copied().unwrap_or(0.0)
    }

    /// Persona description used in prompts.
    pub fn block(&self) -> String {
        let prefs: Vec<String> = self
            .top_preferences(3)
            .iter()
            .map(|(c, w)| format!("{c} ({w:.2})"))
            .collect();
        format!(
            "Profile: {}, {}-year-old {} {}.\n{}{}\n{}{}\nTendencies: {}",
            self.name,
            self.age,
            self.gender,
            self.occupation,
            field::TRAITS,
            self.traits.join(", "),
            field::PREFERRED,
            prefs.join(", "),
            self.tendencies.join("; ")
        )
    }

    pub fn validate(&self, ages: &AgeDistribution) -> Result<()> {
        if self.age < ages.min || self.age > ages.max {
            return Err(Error::Validation(format!(
                "persona {} has age {} outside [{}, {}]",
                self.name, self.age, ages.min, ages.max
            )));
        }
        let sum: f64 = self.preferences.values().sum();
        if self.preferences.values().any(|w| *w < 0.0 || !w.is_finite()) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "persona {} preference weights must be nonnegative and sum to 1",
                self.name
            )));
        }
        Ok(())
    }

    /// Replaces preferences with normalised `weights`, uniform if all zero.
    pub fn set_preferences(&mut self, weights: BTreeMap<String, f64>) {
        self.preferences = normalize_weights(weights);
    }
}

fn normalize_weights(mut weights: BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    for w in weights.values_mut() {
        if !w.is_finite() || *w < 0.0 {
            *w = 0.0;
        }
    }
    let sum: f64 = weights.values().sum();
    let n = weights.len() as f64;
    for w in weights.values_mut() {
        *w = if sum > 0.0 { *w / sum } else { 1.0 / n };
    }
    weights
}

fn line_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| {
        let (k, v) = l.split_once(':')?;
        k.trim().eq_ignore_ascii_case(key).then(|| v.trim())
    })
}

/// Generates a persona: age from the truncated normal, identity and
/// preferences from two backend calls.
pub fn generate_persona(seed: u64, categories: &[String], ages: &AgeDistribution, backend: &Backend) -> Result<Persona> {
    let mut rng = rng_for(seed, &[purpose::PERSONA]);
    let age = ages.sample(&mut rng);

    let identity = backend.chat(&prompts::persona_identity(seed), Category::Planning)?.text;
    let name = line_value(&identity, "NAME")
        .filter(|s| !s.is_empty())
        .map_or_else(|| format!("Agent {seed}"), str::to_string);
    let gender = line_value(&identity, "GENDER").unwrap_or("unspecified").to_lowercase();
    let occupation = line_value(&identity, "OCCUPATION").unwrap_or("shopper").to_string();
    let traits: Vec<String> = line_value(&identity, "TRAITS")
        .map(|t| t.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
        .unwrap_or_default();

    let reply = backend
        .chat(
            &prompts::persona_preferences(&name, age, &gender, &occupation, &traits, categories),
            Category::Planning,
        )?
        .text;
    let mut weights: BTreeMap<String, f64> = categories.iter().map(|c| (c.clone(), 0.0)).collect();
    for line in reply.lines() {
        let Some((k, v)) = line.rsplit_once(':') else { continue };
        if let (Some(w), Ok(value)) = (weights.get_mut(k.trim()), v.trim().parse::<f64>()) {
            *w = value;
        }
    }
    let tendencies: Vec<String> = line_value(&reply, field::TENDENCIES.trim_end_matches(':'))
        .map(|t| t.split(';').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
        .unwrap_or_default();

    Ok(Persona {
        name,
        gender,
        age,
        occupation,
        traits,
        preferences: normalize_weights(weights),
        tendencies,
    })
}

/// Personas as JSON lines, one per agent.
pub fn write_personas<W: Write>(personas: &[Persona], mut out: W) -> Result<()> {
    for p in personas {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_personas<R: BufRead>(input: R) -> Result<Vec<Persona>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut p: Persona = serde_json::from_str(&line).map_err(|e| Error::Ingest {
            line: i + 1,
            message: e.to_string(),
        })?;
        p.preferences = normalize_weights(p.preferences);
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cats() -> Vec<String> {
        ["Video Games", "Grocery", "Office Products", "Patio Tools"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn same_seed_same_persona() {
        let b = Backend::stub();
        let a = generate_persona(5, &cats(), &AgeDistribution::default(), &b).unwrap();
        let c = generate_persona(5, &cats(), &AgeDistribution::default(), &b).unwrap();
        assert_eq!(a, c);
        a.validate(&AgeDistribution::default()).unwrap();
        assert_eq!(a.traits.len(), 3);
        assert!(!a.tendencies.is_empty());
        assert!(a.block().contains("Preferred categories: "));
    }

    #[test]
    fn weights_normalise_or_fall_back_to_uniform() {
        let w: BTreeMap<String, f64> = [("a".to_string(), 0.0), ("b".to_string(), -1.0)].into();
        let n = normalize_weights(w);
        assert_eq!(n["a"], 0.5);
        assert_eq!(n["b"], 0.5);
    }

    #[test]
    fn persona_lines_round_trip() {
        let b = Backend::stub();
        let ps: Vec<Persona> = (0..3)
            .map(|s| generate_persona(s, &cats(), &AgeDistribution::default(), &b).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_personas(&ps, &mut buf).unwrap();
        assert_eq!(read_personas(&buf[..]).unwrap(), ps);
    }
}
