//! Property tests against small independent oracles.

use std::collections::{BTreeSet, HashMap, VecDeque};

use proptest::prelude::*;

use neggame::attractor::{decide_termination, validate_strategies, Soundness};
use neggame::atm::{encode_deterministic, encode_nondeterministic, Atm, AtmError};
use neggame::coalition::{partition_from_coalition, retarget_control, Coalition, RetargetOptions};
use neggame::fixtures;
use neggame::general::{
    build_game_graph, solve_game, verify_player1, verify_player2, GraphOptions, Mode, SolveOptions,
};
use neggame::outcome::{solve_concluding_outcome, TransformError};
use neggame::random::{random_arena, random_goals, RandomParams};
use neggame::semantics::{check_soundness, classify, enabled_atoms, occur, occur_set, Step};
use neggame::textio;
use neggame::{AgentId, Arena, AtomId, Marking, Negotiation, Outcome, Player};

/// Ready sets per agent, as plain sets.
type Naive = Vec<BTreeSet<usize>>;

fn naive_enabled(neg: &Negotiation, x: &Naive) -> Vec<usize> {
    (0..neg.atom_count())
        .filter(|&n| {
            neg.atoms()[n]
                .parties
                .iter()
                .all(|a| x[a.index()].contains(&n))
        })
        .collect()
}

fn naive_successors(neg: &Negotiation, x: &Naive) -> Vec<Naive> {
    let mut out = Vec::new();
    for n in naive_enabled(neg, x) {
        let atom = &neg.atoms()[n];
        for r in 0..atom.outcomes.len() {
            let mut y = x.clone();
            for &a in &atom.parties {
                let t = neg
                    .targets(AtomId(n as u32), a, Outcome(r as u32))
                    .unwrap_or(&[]);
                y[a.index()] = t.iter().map(|m| m.index()).collect();
            }
            out.push(y);
        }
    }
    out
}

/// Plain BFS plus a backward fixpoint. `None` when the space is too big.
fn naive_soundness(neg: &Negotiation, cap: usize) -> Option<(bool, Vec<usize>)> {
    let x0: Naive = vec![BTreeSet::from([neg.initial().index()]); neg.agent_count()];
    let mut ids: HashMap<Naive, usize> = HashMap::new();
    let mut states = vec![x0.clone()];
    let mut succ: Vec<Vec<usize>> = Vec::new();
    ids.insert(x0, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let mut mine = Vec::new();
        for y in naive_successors(neg, &states[i].clone()) {
            let j = match ids.get(&y) {
                Some(&j) => j,
                None => {
                    if states.len() >= cap {
                        return None;
                    }
                    ids.insert(y.clone(), states.len());
                    states.push(y);
                    queue.push_back(states.len() - 1);
                    states.len() - 1
                }
            };
            mine.push(j);
        }
        if succ.len() <= i {
            succ.resize(i + 1, Vec::new());
        }
        succ[i] = mine;
    }
    succ.resize(states.len(), Vec::new());
    let mut good: Vec<bool> = states.iter().map(|s| s.iter().all(BTreeSet::is_empty)).collect();
    loop {
        let mut changed = false;
        for i in 0..states.len() {
            if !good[i] && succ[i].iter().any(|&j| good[j]) {
                good[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut seen = vec![false; neg.atom_count()];
    for s in &states {
        for n in naive_enabled(neg, s) {
            seen[n] = true;
        }
    }
    let never: Vec<usize> = (0..neg.atom_count()).filter(|&n| !seen[n]).collect();
    Some((never.is_empty() && good.iter().all(|&g| g), never))
}

fn params() -> RandomParams {
    RandomParams::default()
}

fn sound_type2(arena: &Arena) -> bool {
    classify(arena.negotiation()).type2 && check_soundness(arena.negotiation()).unwrap().sound
}

fn termination_graph_wins(arena: &Arena) -> bool {
    let g = build_game_graph(arena, Mode::Termination, GraphOptions::default()).unwrap();
    solve_game(&g, SolveOptions::default()).player1_wins
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn independent_sets_match_subset_filter(seed in any::<u64>(), mask in any::<u32>()) {
        let arena = random_arena(seed, params());
        let neg = arena.negotiation();
        let enabled: Vec<AtomId> = neg.atom_ids().filter(|n| mask & (1 << n.0) != 0).collect();
        let mut expected: Vec<Vec<AtomId>> = Vec::new();
        for sub in 1u32..(1 << enabled.len()) {
            let set: Vec<AtomId> = (0..enabled.len())
                .filter(|i| sub & (1 << i) != 0)
                .map(|i| enabled[i])
                .collect();
            let disjoint = set.iter().enumerate().all(|(i, &p)| {
                set[i + 1..].iter().all(|&q| {
                    neg.atom(p).parties.iter().all(|a| !neg.atom(q).parties.contains(a))
                })
            });
            if disjoint {
                expected.push(set);
            }
        }
        expected.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let got: Vec<Vec<AtomId>> = neg.independent_sets(&enabled).into_iter().map(|s| s.0).collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn soundness_matches_naive_exploration(seed in any::<u64>()) {
        let arena = random_arena(seed, params());
        let neg = arena.negotiation();
        let Some((sound, never)) = naive_soundness(neg, 50_000) else {
            return Err(TestCaseError::reject("state space too large"));
        };
        let report = check_soundness(neg).unwrap();
        prop_assert_eq!(report.sound, sound);
        let got: Vec<usize> = report.unreachable_atoms.iter().map(|n| n.index()).collect();
        prop_assert_eq!(got, never);
    }

    #[test]
    fn concurrent_steps_commute(seed in any::<u64>(), walk in proptest::collection::vec(any::<u32>(), 0..6), pick in any::<u32>()) {
        let arena = random_arena(seed, params());
        let neg = arena.negotiation();
        let mut x = Marking::initial(neg);
        for w in walk {
            let en = enabled_atoms(neg, &x);
            if en.is_empty() {
                break;
            }
            let n = en[w as usize % en.len()];
            let r = Outcome(w % neg.atom(n).outcomes.len() as u32);
            x = occur(neg, &x, Step::new(n, r)).unwrap();
        }
        let sets = neg.independent_sets(&enabled_atoms(neg, &x));
        prop_assume!(!sets.is_empty());
        let set = &sets[pick as usize % sets.len()].0;
        let steps: Vec<Step> = set
            .iter()
            .map(|&n| Step::new(n, Outcome(pick % neg.atom(n).outcomes.len() as u32)))
            .collect();
        let together = occur_set(neg, &x, &steps).unwrap();
        let mut forward = x.clone();
        for s in &steps {
            forward = occur(neg, &forward, *s).unwrap();
        }
        let mut backward = x.clone();
        for s in steps.iter().rev() {
            backward = occur(neg, &backward, *s).unwrap();
        }
        prop_assert_eq!(&together, &forward);
        prop_assert_eq!(&together, &backward);
    }

    #[test]
    fn majority_partition(seed in any::<u64>(), mask in any::<u8>()) {
        let neg = random_arena(seed, params()).into_negotiation();
        let members: Vec<AgentId> = neg.agents().filter(|a| mask & (1 << a.0) != 0).collect();
        let rest: Vec<AgentId> = neg.agents().filter(|a| mask & (1 << a.0) == 0).collect();
        let ours = partition_from_coalition(neg.clone(), &Coalition::new(members.clone()));
        let theirs = partition_from_coalition(neg.clone(), &Coalition::new(rest));
        for n in neg.atom_ids() {
            let parties = &neg.atom(n).parties;
            let inside = parties.iter().filter(|a| members.contains(a)).count();
            let expected = if 2 * inside > parties.len() { Player::One } else { Player::Two };
            prop_assert_eq!(ours.owner(n), expected);
            prop_assert!(!(ours.owner(n) == Player::One && theirs.owner(n) == Player::One));
            if 2 * inside != parties.len() {
                prop_assert!(ours.owner(n) == Player::One || theirs.owner(n) == Player::One);
            }
        }
    }

    #[test]
    fn attractor_agrees_with_game_graph(seed in any::<u64>()) {
        let arena = random_arena(seed, params());
        prop_assume!(sound_type2(&arena));
        let verdict = decide_termination(&arena, Soundness::Assume).unwrap();
        prop_assert_eq!(verdict.player1_wins, termination_graph_wins(&arena));
        let check = validate_strategies(&arena, &verdict.attractor, 1_000_000).unwrap();
        prop_assert_eq!(check.player1_wins, verdict.player1_wins);
    }

    #[test]
    fn game_graph_strategies_are_winning(seed in any::<u64>()) {
        let arena = random_arena(seed, params());
        let g = build_game_graph(&arena, Mode::Termination, GraphOptions::default()).unwrap();
        let r = solve_game(&g, SolveOptions::default());
        if r.player1_wins {
            prop_assert!(verify_player1(&g, &r).is_ok());
        } else if r.player2_positional {
            prop_assert!(verify_player2(&g, &r).is_ok());
        }
    }

    #[test]
    fn transform_agrees_with_game_graph(seed in any::<u64>()) {
        let arena = random_arena(seed, params());
        prop_assume!(sound_type2(&arena));
        let goal_arena = arena.clone().with_goals(Some(random_goals(&arena, seed)));
        let verdict = match solve_concluding_outcome(&goal_arena, Soundness::default()) {
            Ok(v) => v,
            Err(TransformError::Attractor(_)) => return Err(TestCaseError::reject("transformed arena not sound and type 2")),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let g = build_game_graph(&goal_arena, Mode::ConcludingOutcome, GraphOptions::default()).unwrap();
        prop_assert_eq!(verdict.player1_wins, solve_game(&g, SolveOptions::default()).player1_wins);
    }

    #[test]
    fn export_then_parse_is_identity(seed in any::<u64>(), goals in any::<bool>()) {
        let mut arena = random_arena(seed, params());
        if goals {
            // Goals that constrain nobody have no written form.
            let g = random_goals(&arena, seed);
            if g.iter().next().is_some() {
                arena = arena.with_goals(Some(g));
            }
        }
        let text = textio::export(&arena);
        let back = textio::parse(&text).unwrap();
        prop_assert_eq!(&back, &arena);
        prop_assert_eq!(textio::export(&back), text);
    }

    #[test]
    fn parse_never_panics(text in "[a-z0-9 #>\\-\n]{0,200}") {
        let _ = textio::parse(&text);
    }

    #[test]
    fn parse_survives_fixture_mutations(which in 0usize..7, cut in any::<u32>(), junk in "[a-z0-9 >\\-\n]{0,12}") {
        let src = fixtures::ALL[which];
        let at = cut as usize % (src.len() + 1);
        let at = (0..=at).rev().find(|&i| src.is_char_boundary(i)).unwrap();
        let mutated = format!("{}{}{}", &src[..at], junk, &src[at..]);
        let _ = textio::parse(&mutated);
        let _ = textio::parse(&src[..at]);
    }

    #[test]
    fn retarget_gives_control_and_keeps_the_rest(seed in any::<u64>(), mask in any::<u8>(), pick in any::<u32>()) {
        let neg = random_arena(seed, params()).into_negotiation();
        prop_assume!(neg.atom_count() > 2);
        let coalition = Coalition::new(neg.agents().filter(|a| mask & (1 << a.0) != 0).collect());
        let before = partition_from_coalition(neg.clone(), &coalition);
        let inner: Vec<AtomId> = neg
            .atom_ids()
            .filter(|&n| n != neg.initial() && n != neg.final_atom())
            .collect();
        let atom = inner[pick as usize % inner.len()];
        let out = retarget_control(&neg, &coalition, atom, RetargetOptions::default()).unwrap();
        let after = &out.arena;
        let rneg = after.negotiation();
        prop_assert!(after.validate().is_valid());
        prop_assert_eq!(after.owner(atom), Player::One);
        for n in neg.atom_ids().filter(|&n| n != atom) {
            prop_assert_eq!(after.owner(n), before.owner(n), "{}", neg.atom_name(n));
        }
        for (n, a, r, t) in neg.triples() {
            prop_assert_eq!(rneg.targets(n, a, r), Some(t));
        }
        let was = check_soundness(&neg).unwrap().sound;
        prop_assert_eq!(check_soundness(rneg).unwrap().sound, was);
        let det = classify(&neg).deterministic_agents;
        prop_assert_eq!(&classify(rneg).deterministic_agents[..det.len()], &det[..]);
    }

    #[test]
    fn atm_encodings_decide_acceptance(text in random_atm()) {
        let atm = Atm::parse(&text).unwrap();
        let expected = match atm.accepts() {
            Ok(v) => v,
            Err(AtmError::OffTape { .. }) => return Err(TestCaseError::reject("leaves the tape")),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let nd = encode_nondeterministic(&atm).unwrap();
        prop_assert!(nd.validate().is_valid());
        prop_assert_eq!(termination_graph_wins(&nd), expected, "{}", text);
        let det = encode_deterministic(&atm).unwrap();
        prop_assert!(classify(det.negotiation()).deterministic);
        prop_assert_eq!(termination_graph_wins(&det), expected, "{}", text);
    }
}

/// Small machines over `{a, b}` with up to four states and a short input.
fn random_atm() -> impl proptest::strategy::Strategy<Value = String> {
    let labels = prop::sample::select(vec!["E", "U", "acc", "rej"]);
    (
        proptest::collection::vec(labels, 1..4),
        "[ab]{1,3}",
        proptest::collection::vec((0usize..8, 0usize..2, 0usize..8, 0usize..2, any::<bool>()), 0..10),
    )
        .prop_map(|(labels, input, moves)| {
            // q0 is always a choice state so that something happens.
            let mut states = vec!["q0[E]".to_string()];
            states.extend(labels.iter().enumerate().map(|(i, l)| format!("q{}[{l}]", i + 1)));
            let count = states.len();
            let symbols = ['a', 'b'];
            let mut text = format!("atm random\nstates {}\nalphabet a b\ninput {input}\n", states.join(" "));
            let mut delta: std::collections::BTreeMap<(usize, usize), Vec<String>> = Default::default();
            for (q, s, p, t, right) in moves {
                let (q, p) = (q % count, p % count);
                if q > 0 && matches!(labels[q - 1], "acc" | "rej") {
                    continue;
                }
                let m = format!("(q{p} {} {})", symbols[t], if right { 'R' } else { 'L' });
                let list = delta.entry((q, s)).or_default();
                if !list.contains(&m) && list.len() < 2 {
                    list.push(m);
                }
            }
            for ((q, s), list) in delta {
                text.push_str(&format!("delta q{q} {} -> {}\n", symbols[s], list.join(" ")));
            }
            text
        })
}
