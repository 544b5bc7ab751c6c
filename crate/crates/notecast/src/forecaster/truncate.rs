//! Context truncation that preserves the most recent documentation.

use super::{BudgetUnit, ContextBudget};

const NOTE_SEPARATOR: &str = "\n\n";

fn units_of(text: &str, unit: BudgetUnit) -> usize {
    match unit {
        BudgetUnit::Characters => text.chars().count(),
        BudgetUnit::WhitespaceTokens => text.split_whitespace().count(),
    }
}

/// Keep the longest suffix of `notes` whose joined size fits the budget,
/// dropping oldest-first. If even the most recent note alone exceeds the
/// budget, keep its trailing `max_units` units. The output never exceeds the
/// budget.
pub fn truncate_context<S: AsRef<str>>(notes: &[S], budget: &ContextBudget) -> String {
    let separator_units = units_of(NOTE_SEPARATOR, budget.unit);

    let mut kept_rev: Vec<&str> = Vec::new();
    let mut used = 0usize;
    for note in notes.iter().rev() {
        let text = note.as_ref();
        let cost = units_of(text, budget.unit)
            + if kept_rev.is_empty() {
                0
            } else {
                separator_units
            };
        if used + cost > budget.max_units {
            break;
        }
        used += cost;
        kept_rev.push(text);
    }

    if kept_rev.is_empty() {
        let Some(newest) = notes.last() else {
            return String::new();
        };
        return trailing_units(newest.as_ref(), budget);
    }

    kept_rev.reverse();
    kept_rev.join(NOTE_SEPARATOR)
}

fn trailing_units(text: &str, budget: &ContextBudget) -> String {
    match budget.unit {
        BudgetUnit::Characters => {
            let chars: Vec<char> = text.chars().collect();
            let start = chars.len().saturating_sub(budget.max_units);
            chars[start..].iter().collect()
        }
        BudgetUnit::WhitespaceTokens => {
            let tokens: Vec<&str> = text.split_whitespace().collect();
            let start = tokens.len().saturating_sub(budget.max_units);
            tokens[start..].join(" ")
        }
    }
}
