//! Chemical reaction networks under stochastic mass-action semantics.
//!
//! A reaction `r -> p` with rate constant `k` fires in state `x` with
//! propensity `k * prod_i ff(x_i, r_i)`, where `ff(x, n) = x (x-1) ... (x-n+1)`
//! is the falling factorial. For unit stoichiometry this is the familiar
//! `k * x_i` product form used by all built-in models.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Population vector, one nonnegative count per species.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub Vec<u64>);

impl State {
    pub fn zeros(n: usize) -> Self {
        State(vec![0; n])
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self + delta`, or `None` if any entry would become negative.
    pub fn checked_add_delta(&self, delta: &[i64]) -> Option<State> {
        if delta.len() != self.0.len() {
            return None;
        }
        self.0
            .iter()
            .zip(delta)
            .map(|(&x, &d)| x.checked_add_signed(d))
            .collect::<Option<Vec<_>>>()
            .map(State)
    }

    /// Entrywise `self - other` as a signed vector.
    pub fn delta_from(&self, other: &State) -> Vec<i64> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a as i64 - b as i64)
            .collect()
    }
}

impl From<Vec<u64>> for State {
    fn from(v: Vec<u64>) -> Self {
        State(v)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// A reaction `reactants -> products` with a positive mass-action rate constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub name: String,
    pub reactants: Vec<u32>,
    pub products: Vec<u32>,
    pub rate: f64,
}

impl Reaction {
    pub fn new(name: impl Into<String>, reactants: Vec<u32>, products: Vec<u32>, rate: f64) -> Result<Self> {
        let name = name.into();
        if reactants.len() != products.len() {
            return Err(Error::Model(format!(
                "reaction `{name}`: reactant and product vectors differ in length"
            )));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::Model(format!(
                "reaction `{name}`: rate constant must be positive, got {rate}"
            )));
        }
        Ok(Reaction {
            name,
            reactants,
            products,
            rate,
        })
    }

    /// State change `products - reactants`.
    pub fn change(&self) -> Vec<i64> {
        self.products
            .iter()
            .zip(&self.reactants)
            .map(|(&p, &r)| p as i64 - r as i64)
            .collect()
    }

    /// True if the reaction changes nothing (a pure timing reaction).
    pub fn is_degenerate(&self) -> bool {
        self.reactants == self.products
    }

    fn check_len(&self, state: &State) -> Result<()> {
        if state.len() != self.reactants.len() {
            return Err(Error::Model(format!(
                "reaction `{}` has {} species but state has {}",
                self.name,
                self.reactants.len(),
                state.len()
            )));
        }
        Ok(())
    }
}

/// True iff every reactant is present in sufficient number.
pub fn enabled(reaction: &Reaction, state: &State) -> Result<bool> {
    reaction.check_len(state)?;
    Ok(state.0.iter().zip(&reaction.reactants).all(|(&x, &r)| x >= r as u64))
}

/// Mass-action propensity; zero when the reaction is disabled.
pub fn propensity(reaction: &Reaction, state: &State) -> f64 {
    let mut a = reaction.rate;
    for (&x, &r) in state.0.iter().zip(&reaction.reactants) {
        a *= falling_factorial(x, r);
        if a == 0.0 {
            return 0.0;
        }
    }
    a
}

#[inline]
pub(crate) fn falling_factorial(x: u64, n: u32) -> f64 {
    match n {
        0 => 1.0,
        1 => x as f64,
        _ => {
            if x < n as u64 {
                return 0.0;
            }
            (0..n as u64).map(|j| (x - j) as f64).product()
        }
    }
}

/// Fires `reaction` in `state`.
pub fn apply_reaction(state: &State, reaction: &Reaction) -> Result<State> {
    if !enabled(reaction, state)? {
        return Err(Error::NotEnabled(reaction.name.clone()));
    }
    state
        .checked_add_delta(&reaction.change())
        .ok_or_else(|| Error::Model(format!("count overflow applying `{}`", reaction.name)))
}

/// A validated reaction network together with its initial state and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrnModel {
    pub name: String,
    pub species: Vec<String>,
    pub reactions: Vec<Reaction>,
    pub initial_state: State,
    pub t_end: f64,
    /// Population bound: a run stops once any count exceeds it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u64>,
}

impl CrnModel {
    pub fn new(
        name: impl Into<String>,
        species: Vec<String>,
        reactions: Vec<Reaction>,
        initial_state: State,
        t_end: f64,
    ) -> Result<Self> {
        let model = CrnModel {
            name: name.into(),
            species,
            reactions,
            initial_state,
            t_end,
            bound: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.species {
            if s.is_empty() {
                return Err(Error::Model("empty species name".into()));
            }
            if !seen.insert(s.as_str()) {
                return Err(Error::Model(format!("duplicate species `{s}`")));
            }
        }
        let n = self.species.len();
        for r in &self.reactions {
            if r.reactants.len() != n || r.products.len() != n {
                return Err(Error::Model(format!(
                    "reaction `{}` does not have {n} species entries",
                    r.name
                )));
            }
            if !(r.rate.is_finite() && r.rate > 0.0) {
                return Err(Error::Model(format!(
                    "reaction `{}` has nonpositive rate {}",
                    r.name, r.rate
                )));
            }
        }
        if self.initial_state.len() != n {
            return Err(Error::Model(format!(
                "initial state has {} entries, expected {n}",
                self.initial_state.len()
            )));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Model(format!(
                "time horizon must be positive, got {}",
                self.t_end
            )));
        }
        if let Some(b) = self.bound {
            if b == 0 || self.initial_state.counts().iter().any(|&x| x > b) {
                return Err(Error::Model(format!(
                    "population bound {b} must be positive and admit the initial state"
                )));
            }
        }
        Ok(())
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    pub fn reaction(&self, name: &str) -> Option<&Reaction> {
        self.reactions.iter().find(|r| r.name == name)
    }

    /// Same network with a different horizon.
    pub fn with_t_end(&self, t_end: f64) -> Result<Self> {
        let mut m = self.clone();
        m.t_end = t_end;
        m.validate()?;
        Ok(m)
    }

    /// Same network with a different population bound.
    pub fn with_bound(&self, bound: Option<u64>) -> Result<Self> {
        let mut m = self.clone();
        m.bound = bound;
        m.validate()?;
        Ok(m)
    }

    /// Whether some count exceeds the population bound.
    pub fn exceeds_bound(&self, state: &State) -> bool {
        self.bound.is_some_and(|b| state.counts().iter().any(|&x| x > b))
    }
}

/// Sparse, allocation-free view of the network used by the simulation loops.
#[derive(Debug, Clone)]
pub(crate) struct CompiledNetwork {
    reactions: Vec<CompiledReaction>,
    bound: u64,
}

#[derive(Debug, Clone)]
struct CompiledReaction {
    rate: f64,
    reactants: Vec<(usize, u32)>,
    changes: Vec<(usize, i64)>,
}

impl CompiledNetwork {
    pub(crate) fn new(model: &CrnModel) -> Self {
        let reactions = model
            .reactions
            .iter()
            .map(|r| CompiledReaction {
                rate: r.rate,
                reactants: r
                    .reactants
                    .iter()
                    .enumerate()
                    .filter(|(_, &n)| n > 0)
                    .map(|(i, &n)| (i, n))
                    .collect(),
                changes: r.change().into_iter().enumerate().filter(|&(_, d)| d != 0).collect(),
            })
            .collect();
        CompiledNetwork {
            reactions,
            bound: model.bound.unwrap_or(u64::MAX),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.reactions.len()
    }

    /// Fills `out` with all propensities and returns their sum.
    #[inline]
    pub(crate) fn propensities(&self, counts: &[u64], out: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (slot, r) in out.iter_mut().zip(&self.reactions) {
            let mut a = r.rate;
            for &(i, n) in &r.reactants {
                a *= falling_factorial(counts[i], n);
            }
            *slot = a;
            total += a;
        }
        total
    }

    #[inline]
    pub(crate) fn exceeds_bound(&self, counts: &[u64]) -> bool {
        self.bound != u64::MAX && counts.iter().any(|&x| x > self.bound)
    }

    /// Applies reaction `j` in place and reports whether a count now exceeds
    /// the population bound. The caller guarantees enabledness.
    #[inline]
    pub(crate) fn fire(&self, j: usize, counts: &mut [u64]) -> bool {
        let mut exceeded = false;
        for &(i, d) in &self.reactions[j].changes {
            counts[i] = counts[i]
                .checked_add_signed(d)
                .expect("population count left the u64 range");
            exceeded |= counts[i] > self.bound;
        }
        exceeded
    }
}
