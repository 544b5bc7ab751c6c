use super::mock::*;
use super::*;

fn pair(id: &str, trace_a: &str, trace_b: &str) -> TracePair {
    TracePair {
        example_id: id.to_string(),
        context: "context".into(),
        question: "question?".into(),
        trace_a: trace_a.to_string(),
        trace_b: trace_b.to_string(),
    }
}

fn pairs(n: usize) -> Vec<TracePair> {
    (0..n)
        .map(|i| pair(&format!("e{i:04}"), "trace from a", "trace from b"))
        .collect()
}

#[test]
fn fifty_pairs_four_dimensions_two_hundred_verdicts() {
    let outcome =
        run_pairwise(&AlwaysTieJudge, &pairs(50), 1, &PairwiseOptions::default()).unwrap();
    assert_eq!(outcome.verdicts.len(), 200);
    assert_eq!(outcome.skipped_pairs, 0);
}

#[test]
fn identical_traces_with_tie_capable_mock_all_tie() {
    let outcome = run_pairwise(
        &LongerTraceJudge,
        &pairs(10),
        1,
        &PairwiseOptions::default(),
    )
    .unwrap();
    assert!(outcome.verdicts.iter().all(|v| v.winner == Winner::Tie));
    let table = aggregate(&outcome.verdicts).unwrap();
    assert_eq!(table.overall, 0.5);
    for rate in table.per_dimension.values() {
        assert_eq!(*rate, 0.5);
    }
}

#[test]
fn position_biased_judge_lands_near_half_after_randomization() {
    let outcome = run_pairwise(
        &PreferFirstJudge,
        &pairs(1000),
        7,
        &PairwiseOptions::default(),
    )
    .unwrap();
    let table = aggregate(&outcome.verdicts).unwrap();
    assert!(
        (table.overall - 0.5).abs() <= 0.05,
        "bias-probe win rate {}",
        table.overall
    );
}

#[test]
fn unblinding_flips_with_presentation_order() {
    // A position-deterministic judge attributed through both orders.
    let verdict_ab = JudgeVerdict {
        example_id: "e".into(),
        dimension: JudgeDimension::Grounding,
        winner: Winner::A,
        presented_order: PresentedOrder::Ab,
    };
    let verdict_ba = JudgeVerdict {
        presented_order: PresentedOrder::Ba,
        ..verdict_ab.clone()
    };
    assert_eq!(verdict_ab.unblinded_winner(), Winner::A);
    assert_eq!(verdict_ba.unblinded_winner(), Winner::B);
    // Ties are order-independent.
    let tie = JudgeVerdict {
        winner: Winner::Tie,
        ..verdict_ba
    };
    assert_eq!(tie.unblinded_winner(), Winner::Tie);
}

#[test]
fn aggregation_reproduces_published_fixtures() {
    // 39 of 50 on one dimension (78.0%), 46 of 50 on another (92.0%).
    let mut verdicts = Vec::new();
    for i in 0..50 {
        verdicts.push(JudgeVerdict {
            example_id: format!("e{i}"),
            dimension: JudgeDimension::ClinicalReasoning,
            winner: if i < 39 { Winner::A } else { Winner::B },
            presented_order: PresentedOrder::Ab,
        });
        verdicts.push(JudgeVerdict {
            example_id: format!("e{i}"),
            dimension: JudgeDimension::MedicalKnowledge,
            winner: if i < 46 { Winner::A } else { Winner::B },
            presented_order: PresentedOrder::Ab,
        });
    }
    let table = aggregate(&verdicts).unwrap();
    assert_eq!(
        table.per_dimension[&JudgeDimension::ClinicalReasoning],
        0.78
    );
    assert_eq!(table.per_dimension[&JudgeDimension::MedicalKnowledge], 0.92);
    assert_eq!(table.n_pairs, 50);
    assert_eq!(table.n_verdicts, 100);
}

#[test]
fn aggregation_invariant_to_permutation() {
    let outcome = run_pairwise(
        &PreferFirstJudge,
        &pairs(40),
        3,
        &PairwiseOptions::default(),
    )
    .unwrap();
    let forward = aggregate(&outcome.verdicts).unwrap();
    let mut reversed = outcome.verdicts.clone();
    reversed.reverse();
    assert_eq!(forward, aggregate(&reversed).unwrap());
}

#[test]
fn empty_trace_is_an_error() {
    let bad = vec![pair("e0", "", "trace")];
    assert!(matches!(
        run_pairwise(&AlwaysTieJudge, &bad, 1, &PairwiseOptions::default()),
        Err(JudgeError::EmptyTrace { .. })
    ));
}

#[test]
fn broken_judge_skips_and_counts_pairs() {
    let outcome = run_pairwise(&BrokenJudge, &pairs(5), 1, &PairwiseOptions::default()).unwrap();
    assert!(outcome.verdicts.is_empty());
    assert_eq!(outcome.skipped_pairs, 5);
    assert!(matches!(
        aggregate(&outcome.verdicts),
        Err(JudgeError::NoVerdicts)
    ));
}

#[test]
fn forced_choice_skips_tie_replies() {
    let options = PairwiseOptions {
        forced_choice: true,
    };
    let outcome = run_pairwise(&AlwaysTieJudge, &pairs(4), 1, &options).unwrap();
    assert_eq!(outcome.skipped_pairs, 4);
    assert!(outcome.verdicts.is_empty());
}

#[test]
fn presentation_order_varies_across_pairs() {
    let outcome =
        run_pairwise(&AlwaysTieJudge, &pairs(64), 5, &PairwiseOptions::default()).unwrap();
    let ab = outcome
        .verdicts
        .iter()
        .filter(|v| v.presented_order == PresentedOrder::Ab)
        .count();
    assert!(ab > 0 && ab < outcome.verdicts.len(), "both orders occur");
}
