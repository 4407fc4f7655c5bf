import json
import random
from collections import Counter
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eutxo_cluster.address_model import AddressKind
from eutxo_cluster.clustering import BOTH, H1_ONLY, H2_ONLY, cluster_stream
from eutxo_cluster.ingestion import dump_tx_line
from eutxo_cluster.simulator import (ChainGenerator, InvalidParams, MissingAddress, SimParams,
                                     evaluate, evaluate_labels, generate_chain, read_truth,
                                     score_pairs, write_chain)
from eutxo_cluster.union_find import DisjointSetForest
from oracles import all_pairs_scores


def small(**kw):
    base = dict(n_entities=200, n_transactions=2000, rng_seed=1)
    base.update(kw)
    return SimParams(**base)


# --- params ------------------------------------------------------------------

@pytest.mark.parametrize("kw", [
    dict(byron_fraction=1.5),
    dict(franken_rate=-0.1),
    dict(n_entities=0),
    dict(n_transactions=-5),
    dict(addresses_per_entity="poisson:3"),
    dict(addresses_per_entity="geometric:0.5"),
    dict(addresses_per_entity="fixed:2.5"),
    dict(n_entities=1, multi_party_tx_rate=0.1),
    dict(mean_slot_gap=-1),
])
def test_invalid_params(kw):
    with pytest.raises(InvalidParams):
        SimParams(**kw)


def test_params_from_json(tmp_path):
    p = tmp_path / "sim.json"
    p.write_text(json.dumps({"n_entities": 5, "rng_seed": 3}))
    assert SimParams.from_json(p) == SimParams(n_entities=5, rng_seed=3)
    p.write_text(json.dumps({"n_entitys": 5}))
    with pytest.raises(InvalidParams):
        SimParams.from_json(p)


def test_fixed_wallet_size():
    gen = ChainGenerator(small(addresses_per_entity="fixed:3"))
    assert {e.wallet_size for e in gen.entities} == {3}


def test_geometric_wallet_mean():
    rng = random.Random(0)
    draw = SimParams(addresses_per_entity="geometric:9.67").wallet_sampler()
    xs = [draw(rng) for _ in range(100_000)]
    assert min(xs) == 1
    assert sum(xs) / len(xs) == pytest.approx(9.67, rel=0.02)


# --- generation --------------------------------------------------------------

def test_reproducible_byte_identical(tmp_path):
    a = write_chain(small(), tmp_path / "a.jsonl", tmp_path / "a.csv")
    b = write_chain(small(), tmp_path / "b.jsonl", tmp_path / "b.csv")
    assert a == b
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_different_seeds_differ():
    x = [tx.tx_id for tx in generate_chain(small(rng_seed=1))[0][:5]]
    y = [tx.tx_id for tx in generate_chain(small(rng_seed=2))[0][:5]]
    assert x != y


def test_truth_covers_every_address():
    txs, truth, table = generate_chain(small())
    seen = {i.id for tx in txs for i in tx.addresses()}
    assert len(truth) == len(table) == len(seen)
    assert sum(truth.entity_sizes().values()) == len(table)


def test_stream_shape():
    p = small(max_inputs=3, max_recipients=2)
    txs, truth, table = generate_chain(p)
    assert len(txs) == p.n_transactions
    assert all(tx.slot <= nxt.slot for tx, nxt in zip(txs, txs[1:]))
    assert len({tx.tx_id for tx in txs}) == len(txs)
    for tx in txs:
        assert 1 <= len(tx.inputs) <= 2 * p.max_inputs + 1
        assert 2 <= len(tx.outputs) <= p.max_recipients + 1
        # ordinary transactions spend from one entity, plus at most one shared contract
        owners = {truth[i.id] for i in tx.inputs if truth[i.id] < p.n_entities}
        assert len(owners) == 1
        assert len(tx.inputs) - sum(truth[i.id] < p.n_entities for i in tx.inputs) <= 1


def test_byron_entities_have_no_stake():
    txs, truth, table = generate_chain(small(byron_fraction=0.5))
    for ordinal in range(len(table)):
        info = table.info(ordinal)
        if info.kind is AddressKind.BYRON:
            assert info.stake_key is None


def test_stream_roundtrips_through_jsonl():
    from eutxo_cluster.address_model import InternTable
    from eutxo_cluster.ingestion import parse_tx_line

    txs, truth, table = generate_chain(small(n_transactions=300))
    t2 = InternTable()
    assert [parse_tx_line(dump_tx_line(tx, table), t2) for tx in txs] == txs


def test_multi_party_mixes_two_entities():
    txs, truth, _ = generate_chain(small(multi_party_tx_rate=1.0))
    for tx in txs:
        owners = {truth[i.id] for i in tx.inputs if i.kind is not AddressKind.SHELLEY_SCRIPT}
        assert len(owners) == 2


def test_franken_addresses_point_elsewhere():
    gen = ChainGenerator(small(franken_rate=0.3, byron_fraction=0, stake_key_probability=1))
    list(gen)
    owner_of_stake = {}
    for e, ent in enumerate(gen.entities):
        owner_of_stake[ent.stake] = e
    foreign = 0
    for ordinal, entity in enumerate(gen.truth):
        s = gen.table.info(ordinal).stake_key
        if s is not None and owner_of_stake[gen.table.stake(s)] != entity:
            foreign += 1
    assert foreign > 0


# --- soundness ---------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_precision_one_without_false_positive_mechanisms(seed):
    txs, truth, _ = generate_chain(small(rng_seed=seed))
    forest, _ = cluster_stream(txs, BOTH)
    report = evaluate(forest, truth)
    assert report.pairwise_precision == 1.0
    assert report.merged_entity_clusters == 0
    assert report.largest_cluster_entity_span == 1


def test_h2_alone_full_recall_with_universal_staking():
    txs, truth, _ = generate_chain(small(stake_key_probability=1.0, byron_fraction=0.0,
                                         script_fraction=0.0))
    forest, _ = cluster_stream(txs, H2_ONLY)
    report = evaluate(forest, truth)
    assert report.pairwise_recall == 1.0 and report.pairwise_precision == 1.0


def test_h1_never_merges_through_shared_script():
    txs, truth, table = generate_chain(small(script_fraction=0.3))
    contract_inputs = [i for tx in txs for i in tx.inputs if truth[i.id] >= 200]
    assert contract_inputs
    forest, _ = cluster_stream(txs, H1_ONLY)
    assert evaluate(forest, truth).pairwise_precision == 1.0
    for info in contract_inputs:
        assert forest.set_size(info.id) == 1


def test_franken_breaks_h2_precision():
    txs, truth, _ = generate_chain(small(franken_rate=0.2))
    forest, _ = cluster_stream(txs, H2_ONLY)
    assert evaluate(forest, truth).pairwise_precision < 1.0


def test_multi_party_creates_merged_clusters():
    txs, truth, _ = generate_chain(small(multi_party_tx_rate=0.05))
    forest, _ = cluster_stream(txs, H1_ONLY)
    report = evaluate(forest, truth)
    assert report.merged_entity_clusters > 0
    assert report.pairwise_precision < 1.0


def test_merged_clusters_grow_with_rate():
    def mean_merged(rate):
        out = []
        for seed in range(10):
            txs, truth, _ = generate_chain(SimParams(n_entities=1000, n_transactions=4000,
                                                     multi_party_tx_rate=rate, rng_seed=seed))
            out.append(evaluate(cluster_stream(txs)[0], truth))
        return (sum(r.merged_entity_clusters for r in out) / len(out),
                sum(r.largest_cluster_entity_span for r in out) / len(out))

    m0, m1, m2 = mean_merged(0.0), mean_merged(0.01), mean_merged(0.05)
    assert m0 == (0.0, 1.0)
    assert m0[0] < m1[0] < m2[0]
    assert m0[1] < m1[1] < m2[1]


# --- evaluation --------------------------------------------------------------

def test_identical_clustering_scores_one():
    truth = [0, 0, 1, 2, 2, 2]
    f = DisjointSetForest(6)
    f.union(0, 1)
    f.union(3, 4)
    f.union(4, 5)
    r = evaluate(f, truth)
    assert (r.pairwise_precision, r.pairwise_recall, r.f1) == (1.0, 1.0, 1.0)


@pytest.mark.parametrize("e,s", [(2, 2), (3, 4), (5, 7)])
def test_single_cluster_closed_form(e, s):
    truth = [i // s for i in range(e * s)]
    f = DisjointSetForest(e * s)
    for i in range(1, e * s):
        f.union(0, i)
    r = evaluate(f, truth)
    assert r.pairwise_recall == 1.0
    assert r.pairwise_precision == pytest.approx(e * comb(s, 2) / comb(e * s, 2), rel=1e-15)
    assert r.largest_cluster_entity_span == e and r.merged_entity_clusters == 1


def test_all_singletons_has_no_pairs():
    r = evaluate(DisjointSetForest(3), [0, 1, 2])
    assert (r.pairwise_precision, r.pairwise_recall) == (1.0, 1.0)


def test_missing_address():
    with pytest.raises(MissingAddress):
        evaluate(DisjointSetForest(2), [0, 0, 1])
    with pytest.raises(MissingAddress):
        evaluate_labels({"a": 0}, {"a": 0, "b": 1})


labelings = st.integers(1, 200).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 6), min_size=n, max_size=n),
    st.lists(st.integers(0, 6), min_size=n, max_size=n)))


@given(labelings)
@settings(max_examples=150, deadline=None)
def test_scores_match_all_pairs_enumeration(case):
    clusters, entities = case
    r = score_pairs(Counter(zip(clusters, entities)))
    p, rec = all_pairs_scores(clusters, entities)
    assert r.pairwise_precision == pytest.approx(p, abs=1e-12)
    assert r.pairwise_recall == pytest.approx(rec, abs=1e-12)
    assert 0 <= r.f1 <= 1
    if p + rec:
        assert r.f1 == pytest.approx(2 * p * rec / (p + rec), abs=1e-12)
    spans = Counter()
    for c in set(clusters):
        spans[c] = len({entities[i] for i in range(len(clusters)) if clusters[i] == c})
    assert r.largest_cluster_entity_span == max(spans.values())
    assert r.merged_entity_clusters == sum(v >= 2 for v in spans.values())


def test_evaluate_labels_matches_forest(tmp_path):
    from eutxo_cluster.clustering import read_assignments, write_assignments

    txs, truth, table = generate_chain(small(multi_party_tx_rate=0.02))
    forest, _ = cluster_stream(txs)
    write_chain(small(multi_party_tx_rate=0.02), tmp_path / "t.jsonl", tmp_path / "g.csv")
    write_assignments(tmp_path / "c.csv", forest, table)
    by_label = evaluate_labels(read_assignments(tmp_path / "c.csv"), read_truth(tmp_path / "g.csv"))
    assert by_label == evaluate(forest, truth)
