use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{entity_tail, sq_dist_translated, EmbeddingError, EmbeddingTable};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};

pub const DEFAULT_HITS_AT: [usize; 3] = [1, 3, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResult {
    pub mrr: f64,
    pub hits_at: BTreeMap<usize, f64>,
    pub evaluated: usize,
}

fn tail_scores(table: &EmbeddingTable, h: EntityId, r: RelationId) -> Result<Vec<(EntityId, f64)>, EmbeddingError> {
    let hv = table.entity(h)?;
    let rv = table.relation(r)?;
    Ok(table.entities.iter().map(|(&e, tv)| (e, -sq_dist_translated(hv, rv, tv))).collect())
}

/// Top-`k` tails for `(h, r, ?)`, best first, ties by entity id. With
/// `filtered`, tails already linked by `(h, r, ·)` in `graph` are skipped.
pub fn predict_links(
    table: &EmbeddingTable,
    graph: &KnowledgeGraph,
    h: EntityId,
    r: RelationId,
    k: usize,
    filtered: bool,
) -> Result<Vec<(EntityId, f64)>, EmbeddingError> {
    let known: BTreeSet<EntityId> = if filtered {
        graph.with_head(h).filter(|t| t.relation == r).filter_map(|t| t.tail.entity()).collect()
    } else {
        BTreeSet::new()
    };
    let mut scored: Vec<(EntityId, f64)> = tail_scores(table, h, r)?.into_iter().filter(|(e, _)| !known.contains(e)).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

/// Filtered tail-ranking metrics.
///
/// For each test triple the true tail is ranked among all entities, skipping
/// other tails `t'` for which `(h, r, t')` is in `graph` or in `test`. Equal
/// scores rank by entity id, matching [`predict_links`].
pub fn rank_metrics(
    table: &EmbeddingTable,
    graph: &KnowledgeGraph,
    test: &[Triple],
    hits_at: &[usize],
) -> Result<RankResult, EmbeddingError> {
    if test.is_empty() {
        return Err(EmbeddingError::EmptyTestSet);
    }
    let mut known: BTreeMap<(EntityId, RelationId), BTreeSet<EntityId>> = BTreeMap::new();
    for t in graph.triples().chain(test) {
        if let Some(tail) = t.tail.entity() {
            known.entry((t.head, t.relation)).or_default().insert(tail);
        }
    }
    let mut ranks = Vec::with_capacity(test.len());
    for t in test {
        let tail = entity_tail(t)?;
        let scores = tail_scores(table, t.head, t.relation)?;
        let true_score = scores.iter().find(|(e, _)| *e == tail).map(|p| p.1).ok_or(EmbeddingError::MissingEntity(tail))?;
        let skip = &known[&(t.head, t.relation)];
        let ahead = scores
            .iter()
            .filter(|(e, _)| *e != tail && !skip.contains(e))
            .filter(|(e, s)| *s > true_score || (*s == true_score && *e < tail))
            .count();
        ranks.push(ahead + 1);
    }
    let n = ranks.len() as f64;
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
    let hits_at = hits_at.iter().map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / n)).collect();
    Ok(RankResult { mrr, hits_at, evaluated: ranks.len() })
}

#[cfg(test)]
mod tests {
    use super::super::{init_embeddings, TrainConfig};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_graph(n: usize) -> (KnowledgeGraph, Vec<EntityId>, RelationId) {
        let mut g = KnowledgeGraph::new();
        let ids: Vec<EntityId> = (0..n).map(|i| g.add_entity(&format!("N{i}"), "node", Default::default()).unwrap()).collect();
        let r = g.add_relation("next").unwrap();
        (g, ids, r)
    }

    #[test]
    fn exact_translation_ranks_first() {
        let (g, ids, r) = line_graph(3);
        let table = EmbeddingTable {
            dim: 2,
            entities: [(ids[0], vec![0.0, 0.0]), (ids[1], vec![1.0, 0.0]), (ids[2], vec![0.0, 3.0])].into(),
            relations: [(r, vec![1.0, 0.0])].into(),
            seed: 0,
            epochs: 0,
        };
        let top = predict_links(&table, &g, ids[0], r, 10, false).unwrap();
        assert_eq!(top.len(), 3);
        assert_eq!(top[0], (ids[1], 0.0));
        assert!(top.windows(2).all(|p| p[0].1 >= p[1].1));

        let all_first = rank_metrics(&table, &g, &[Triple::new(ids[0], r, ids[1])], &DEFAULT_HITS_AT).unwrap();
        assert_eq!(all_first.mrr, 1.0);
        assert_eq!(all_first.hits_at[&1], 1.0);

        let second = rank_metrics(&table, &g, &[Triple::new(ids[0], r, ids[0])], &DEFAULT_HITS_AT).unwrap();
        assert_eq!(second.mrr, 0.5);
        assert_eq!(second.hits_at[&1], 0.0);
        assert_eq!(second.hits_at[&10], 1.0);
        assert!(rank_metrics(&table, &g, &[], &[1]).is_err());
    }

    #[test]
    fn filtered_prediction_skips_known_tails() {
        let (mut g, ids, r) = line_graph(3);
        g.add_triple(ids[0], r, ids[1]).unwrap();
        let table = init_embeddings(&g.clone().frozen(), &TrainConfig { dim: 4, ..Default::default() }).unwrap();
        let out = predict_links(&table, &g, ids[0], r, 3, true).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|(e, _)| *e != ids[1]));
    }

    fn brute_force(table: &EmbeddingTable, graph: &KnowledgeGraph, test: &[Triple], ks: &[usize]) -> (f64, Vec<f64>) {
        let truth: BTreeSet<Triple> = graph.triples().cloned().chain(test.iter().cloned()).collect();
        let mut rr = 0.0;
        let mut hits = vec![0.0; ks.len()];
        for t in test {
            let tail = t.tail.entity().unwrap();
            let mut cands: Vec<(f64, EntityId)> = table
                .entities
                .keys()
                .filter(|&&e| e == tail || !truth.contains(&Triple::new(t.head, t.relation, e)))
                .map(|&e| (super::super::score_triple(table, t.head, t.relation, e).unwrap(), e))
                .collect();
            cands.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            let rank = cands.iter().position(|c| c.1 == tail).unwrap() + 1;
            rr += 1.0 / rank as f64;
            for (i, &k) in ks.iter().enumerate() {
                if rank <= k {
                    hits[i] += 1.0;
                }
            }
        }
        let n = test.len() as f64;
        (rr / n, hits.into_iter().map(|h| h / n).collect())
    }

    #[test]
    fn metrics_match_brute_force_on_random_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let (mut g, ids, r) = line_graph(4);
            let s = g.add_relation("other").unwrap();
            for _ in 0..4 {
                let rel = if rng.gen_bool(0.5) { r } else { s };
                g.add_triple(ids[rng.gen_range(0..4)], rel, ids[rng.gen_range(0..4)]).unwrap();
            }
            let g = g.frozen();
            let table = init_embeddings(&g, &TrainConfig { dim: 3, seed: rng.gen(), ..Default::default() }).unwrap();
            let test: Vec<Triple> = (0..3).map(|_| Triple::new(ids[rng.gen_range(0..4)], r, ids[rng.gen_range(0..4)])).collect();
            let ks = [1, 2, 3];
            let got = rank_metrics(&table, &g, &test, &ks).unwrap();
            let (mrr, hits) = brute_force(&table, &g, &test, &ks);
            assert!((got.mrr - mrr).abs() < 1e-12);
            for (i, k) in ks.iter().enumerate() {
                assert!((got.hits_at[k] - hits[i]).abs() < 1e-12);
            }
            assert!(got.hits_at[&1] <= got.hits_at[&2] && got.hits_at[&2] <= got.hits_at[&3]);

            // predict_links against exhaustive scoring
            let all = predict_links(&table, &g, ids[0], r, 99, false).unwrap();
            let mut expect: Vec<(EntityId, f64)> =
                ids.iter().map(|&e| (e, super::super::score_triple(&table, ids[0], r, e).unwrap())).collect();
            expect.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            assert_eq!(all, expect);
        }
    }
}
