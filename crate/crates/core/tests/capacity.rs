use std::collections::HashMap;

use bifi_core::editmodel::{extract_events, Context, Direction, EditModel, EventKind};
use bifi_core::{generate_good, make_synthetic_pairs, NoiseSpec, RepairPair, TokenSeq};

fn oriented(p: &RepairPair, direction: Direction) -> (&TokenSeq, &TokenSeq) {
    match direction {
        Direction::BadToGood => (&p.bad, &p.good),
        Direction::GoodToBad => (&p.good, &p.bad),
    }
}

fn mode_filtered_rate(pairs: &[RepairPair], direction: Direction) -> (usize, usize) {
    let repeated: Vec<RepairPair> = pairs.iter().flat_map(|p| std::iter::repeat_n(p.clone(), 3)).collect();
    let model = EditModel::train(&repeated, direction, None).unwrap();
    let events: Vec<_> = pairs
        .iter()
        .map(|p| {
            let (s, t) = oriented(p, direction);
            extract_events(s, t)
        })
        .collect();
    let mut seen: HashMap<Context, HashMap<EventKind, usize>> = HashMap::new();
    for e in events.iter().flatten() {
        *seen.entry(e.context).or_default().entry(e.kind).or_default() += 1;
    }
    let is_mode = |c: &Context, k: &EventKind| {
        let m = &seen[c];
        m.iter().all(|(other, &n)| other == k || n < m[k])
    };
    let mut n = 0;
    let mut hits = 0;
    for (p, evs) in pairs.iter().zip(&events) {
        if !evs.iter().all(|e| is_mode(&e.context, &e.kind)) {
            continue;
        }
        let (src, tgt) = oriented(p, direction);
        n += 1;
        hits += (model.decode(src).first().map(|c| &c.output) == Some(tgt)) as usize;
    }
    (n, hits)
}

/// Each pair on its own, seen three times, decodes back in both directions.
#[test]
fn reproduces_single_pairs() {
    let goods = generate_good(60, 22).unwrap();
    let pairs = make_synthetic_pairs(&goods, &NoiseSpec::default(), 22);
    for direction in [Direction::BadToGood, Direction::GoodToBad] {
        let (mut n, mut hits) = (0, 0);
        for p in pairs.iter().take(60) {
            let (dn, dh) = mode_filtered_rate(std::slice::from_ref(p), direction);
            n += dn;
            hits += dh;
        }
        assert!(n >= 30, "{direction:?}: only {n} pairs to check");
        let rate = hits as f64 / n as f64;
        assert!(rate >= 0.9, "{direction:?}: {hits}/{n} = {rate:.3}");
    }
}

/// Training sources decode back to their targets once every event has been
/// seen at least three times. Only pairs whose every event is the most
/// frequent one of its context are expected back; class-collapsed windows
/// make the others genuinely ambiguous. Good-to-bad edits are almost never
/// the mode of a shared corpus, so that direction is covered per pair above.
#[test]
fn reproduces_training_targets() {
    let goods = generate_good(300, 21).unwrap();
    let spec = NoiseSpec {
        copies_per_good: 1,
        ..NoiseSpec::default()
    };
    let pairs = make_synthetic_pairs(&goods, &spec, 21);
    let (n, hits) = mode_filtered_rate(&pairs, Direction::BadToGood);
    assert!(n >= 30, "only {n} pairs to check");
    let rate = hits as f64 / n as f64;
    assert!(rate >= 0.9, "{hits}/{n} = {rate:.3}");
}
