//! Cascade click-model semantics.
//!
//! A user scans a ranked list from the top, clicks the first attractive item
//! and leaves. Positions up to and including the click are *examined*; when
//! nothing is clicked every position is examined and the click position is
//! reported as `K`.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, RngCore};

use crate::error::{invalid, Error, Result};

/// An ordered list of `K` distinct item indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankedAction {
    items: Vec<usize>,
}

impl RankedAction {
    /// Validates distinctness and range against `num_items`.
    pub fn new(items: Vec<usize>, num_items: usize) -> Result<Self> {
        if items.len() > num_items {
            return Err(Error::ListTooLong {
                list_len: items.len(),
                num_items,
            });
        }
        let mut seen = vec![false; num_items];
        for &item in &items {
            if item >= num_items {
                return Err(Error::ItemOutOfRange { item, num_items });
            }
            if core::mem::replace(&mut seen[item], true) {
                return Err(Error::DuplicateItem(item));
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item_at(&self, position: usize) -> usize {
        self.items[position]
    }

    /// Same items regardless of order.
    pub fn same_set(&self, other: &RankedAction) -> bool {
        let mut a = self.items.clone();
        let mut b = other.items.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

/// Per-position feedback for one round.
///
/// `click_position` is 1-indexed; positions `1..=click_position` are examined.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Feedback {
    values: Vec<f64>,
    click_position: usize,
    examined: Vec<bool>,
}

impl Feedback {
    /// Builds feedback from raw per-position values and a 1-indexed click position.
    ///
    /// Values past the click position are kept as given; policies never read them.
    pub fn new(values: Vec<f64>, click_position: usize) -> Result<Self> {
        let k = values.len();
        if k == 0 || click_position == 0 || click_position > k {
            return Err(invalid(alloc::format!(
                "click position {click_position} outside [1, {k}]"
            )));
        }
        let examined = (0..k).map(|j| j < click_position).collect();
        Ok(Self {
            values,
            click_position,
            examined,
        })
    }

    /// Cascade feedback from the attraction indicators of the displayed items.
    pub fn from_attractions(attracted: &[bool]) -> Self {
        let k = attracted.len();
        assert!(k > 0, "empty ranked list");
        let click = attracted.iter().position(|&a| a);
        let click_position = click.map_or(k, |j| j + 1);
        let mut values = vec![0.0; k];
        if let Some(j) = click {
            values[j] = 1.0;
        }
        Self {
            values,
            click_position,
            examined: (0..k).map(|j| j < click_position).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn click_position(&self) -> usize {
        self.click_position
    }

    pub fn examined(&self) -> &[bool] {
        &self.examined
    }

    pub fn list_len(&self) -> usize {
        self.values.len()
    }

    /// Examined `(position, value)` pairs, 0-indexed positions.
    pub fn observations(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values[..self.click_position]
            .iter()
            .copied()
            .enumerate()
    }

    /// Copy with every unexamined value zeroed.
    pub fn masked(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.values[self.click_position..] {
            *v = 0.0;
        }
        out
    }

    /// `1 − Π(1 − value)` over the list; in {0, 1} for click feedback.
    pub fn realized_reward(&self) -> f64 {
        1.0 - self.values.iter().map(|v| 1.0 - v).product::<f64>()
    }

    /// Whether the last examined position carries a click.
    pub fn clicked(&self) -> bool {
        self.values[self.click_position - 1] >= 0.5
    }
}

/// Regret bookkeeping for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegretRecord {
    pub round: u64,
    pub step_regret: f64,
    pub cumulative_regret: f64,
}

/// Turns per-round regrets into cumulative records (rounds are 1-indexed).
pub fn accumulate_regret(step_regrets: &[f64]) -> Vec<RegretRecord> {
    let mut total = 0.0;
    step_regrets
        .iter()
        .enumerate()
        .map(|(t, &r)| {
            total += r;
            RegretRecord {
                round: t as u64 + 1,
                step_regret: r,
                cumulative_regret: total,
            }
        })
        .collect()
}

fn check_prob(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// Expected cascade reward `1 − Π(1 − pₖ)`.
pub fn expected_cascade_reward(probs: &[f64]) -> Result<f64> {
    let mut miss = 1.0;
    for &p in probs {
        miss *= 1.0 - check_prob(p)?;
    }
    Ok(1.0 - miss)
}

fn cascade_reward_unchecked(means: &[f64], items: &[usize]) -> f64 {
    1.0 - items.iter().map(|&i| 1.0 - means[i]).product::<f64>()
}

/// Orders by score descending, ties by smaller index; NaN sorts last.
pub(crate) fn rank_order(scores: &[f64], a: usize, b: usize) -> Ordering {
    let key = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    key(scores[b])
        .total_cmp(&key(scores[a]))
        .then_with(|| a.cmp(&b))
}

/// Indices of the `k` largest scores, sorted by score descending then index ascending.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let k = k.min(scores.len());
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| rank_order(scores, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable_by(|&a, &b| rank_order(scores, a, b));
    idx
}

/// The `K` items with the largest attraction means (canonical order: mean
/// descending, ties by smaller index).
pub fn best_action(attraction_means: &[f64], list_len: usize) -> Result<RankedAction> {
    if list_len > attraction_means.len() {
        return Err(Error::ListTooLong {
            list_len,
            num_items: attraction_means.len(),
        });
    }
    Ok(RankedAction {
        items: top_k(attraction_means, list_len),
    })
}

/// Cascade regret of `action` against the best list of the same length.
pub fn step_regret(attraction_means: &[f64], action: &RankedAction) -> Result<f64> {
    for &m in attraction_means {
        check_prob(m)?;
    }
    let best = best_action(attraction_means, action.len())?;
    let gap = cascade_reward_unchecked(attraction_means, best.items())
        - cascade_reward_unchecked(attraction_means, action.items());
    Ok(gap.max(0.0))
}

/// Regret under the additive reward `Σ μ` (linear model with scalar feedback).
pub fn linear_step_regret(item_means: &[f64], action: &RankedAction) -> Result<f64> {
    let best = best_action(item_means, action.len())?;
    let sum = |items: &[usize]| items.iter().map(|&i| item_means[i]).sum::<f64>();
    Ok((sum(best.items()) - sum(action.items())).max(0.0))
}

/// Draws one attraction indicator per item (all `L` of them, so the random
/// stream does not depend on which items are displayed).
pub fn draw_attractions(attraction_means: &[f64], rng: &mut dyn RngCore) -> Vec<bool> {
    attraction_means
        .iter()
        .map(|&m| rng.random::<f64>() < m)
        .collect()
}

/// One cascade interaction with the displayed list.
pub fn simulate_cascade_round(
    action: &RankedAction,
    attraction_means: &[f64],
    rng: &mut dyn RngCore,
) -> Result<Feedback> {
    for &m in attraction_means {
        check_prob(m)?;
    }
    if let Some(&bad) = action.items().iter().find(|&&i| i >= attraction_means.len()) {
        return Err(Error::ItemOutOfRange {
            item: bad,
            num_items: attraction_means.len(),
        });
    }
    let attracted = draw_attractions(attraction_means, rng);
    let shown: Vec<bool> = action.items().iter().map(|&i| attracted[i]).collect();
    Ok(Feedback::from_attractions(&shown))
}
