import itertools
import re
import string
import zlib

import numpy as np
import pytest

from commentattack.attack import (
    AttackConfig, Oracle, accent_attack, attack_many, best_candidate, global_vocabulary, h_score,
    letter_candidate, mh_attack, random_attack, raw_vocabulary, saliency, score,
)
from commentattack.corpus import CodeSample
from commentattack.embed import EmbedConfig, EmbeddingTable, train_embeddings
from commentattack.lang import code_subtokens, extract_identifiers, identifier_texts, rename, validate
from commentattack.model import AdapterError, LocalAdapter, SurrogateModel
from commentattack.synth import synth_corpus

import oracles
from bruteforce import all_map_drops, reference_accent, scan_candidates

FIGURE_1 = """public void removeRange(int fromIndex, int toIndex) {
    int index = fromIndex;
    for (int i = fromIndex; i < toIndex; i++) {
        remove(index);
    }
}"""
FIGURE_1_REF = "removes the range between indices"


def hand_table(vectors):
    names = list(vectors)
    return EmbeddingTable(dim=len(next(iter(vectors.values()))), vocab={n: i for i, n in enumerate(names)},
                          vectors=np.array([vectors[n] for n in names], dtype=float), window=1, seed=0)


def names_in(code):
    return set(re.findall(r"[A-Za-z_]\w*", code))


def figure_model(code):
    present = names_in(code)
    words = FIGURE_1_REF.split()
    if "removeRange" not in present:
        words.remove("removes")
    if "index" not in present:
        words.remove("indices")
    return " ".join(words)


FIGURE_TABLE = hand_table({
    "removeRange": [1.0, 0.9, 0.0, 0.1], "deleteRange": [1.0, 0.85, 0.0, 0.1], "eraseSpan": [1.0, 0.6, 0.0, 0.3],
    "index": [1.0, 0.0, 0.9, 0.1], "index1": [1.0, 0.0, 0.88, 0.1], "position": [1.0, 0.1, 0.6, 0.2],
    "fromIndex": [1.0, 0.2, 0.5, 0.0], "toIndex": [1.0, 0.2, 0.5, 0.05], "start": [1.0, 0.2, 0.45, 0.0],
})
FIGURE_VOCAB = ["deleteRange", "eraseSpan", "index1", "position", "start"]


# --------------------------------------------------------------- scoring pieces

@pytest.mark.parametrize("s,delta,expected", [
    (0.5, 10.0, 5.0), (0.5, 0.0, 0.25), (0.0, 10.0, 5.0), (0.0, 0.0, 0.0), (-0.4, 0.0, -0.2),
    (1e-13, 1e-13, 0.0), (0.3, 1e-13, 0.15),
])
def test_h_score_examples(s, delta, expected):
    assert h_score(s, delta) == pytest.approx(expected)


@pytest.mark.parametrize("s,delta", list(itertools.product([0.0, 0.7, -0.3, 1e-13], [0.0, 4.0, -2.0, 1e-14])))
def test_h_score_branches(s, delta):
    alpha, beta = 0.3, 0.8
    zs, zd = abs(s) < 1e-12, abs(delta) < 1e-12
    if not zs and not zd:
        expected = s * delta
    elif not zs:
        expected = s * beta
    elif not zd:
        expected = delta * alpha
    else:
        expected = 0.0
    assert h_score(s, delta, alpha, beta) == pytest.approx(expected)


def test_score_is_bleu_of_model_output():
    ad = LocalAdapter(lambda code: "returns the sum")
    assert score(ad, "x", "returns the sum") == pytest.approx(100.0)
    assert score(ad, "x", "returns the sum of values") == pytest.approx(oracles.bleu("returns the sum",
                                                                                     "returns the sum of values"))


def test_oracle_caches_and_counts():
    calls = []
    oracle = Oracle(LocalAdapter(lambda c: calls.append(c) or "a b"), "a b")
    assert oracle("p") == oracle("p") == pytest.approx(100.0)
    oracle("q")
    assert oracle.queries == 2 == len(calls)


def test_best_candidate_matches_exhaustive():
    sample = CodeSample("f1", FIGURE_1, FIGURE_1_REF, "java")
    oracle = Oracle(LocalAdapter(figure_model), sample.comment)
    cands = ["eraseSpan", "toIndex", "deleteRange", "while"]
    got = best_candidate(sample, "removeRange", cands, oracle)
    before = oracles.bleu(figure_model(FIGURE_1), FIGURE_1_REF)
    drops = {}
    for c in cands:
        try:
            out = rename(FIGURE_1, "removeRange", c, "java")
        except Exception:
            continue
        drops[c] = before - oracles.bleu(figure_model(out), FIGURE_1_REF)
    best = max(drops.values())
    assert got == ("eraseSpan", pytest.approx(best))
    assert "toIndex" not in drops and "while" not in drops
    assert best_candidate(sample, "removeRange", ["toIndex"], oracle) is None


def test_saliency():
    table = hand_table({"a": [1.0, 0.0], "b": [1.0, 0.0]})
    sample = CodeSample("s", "int a(int b){ return b; }", "x", "java")
    assert saliency(sample, "a", table) == pytest.approx(1.0)
    assert saliency(sample, "zzz", table) == 0.0
    table = hand_table({"a": [1.0, 0.0], "b": [0.0, 1.0]})
    prog = np.mean([table[t] for t in code_subtokens(sample.code, "java") if t in table], axis=0)
    expected = float(np.dot(table["a"], prog) / np.linalg.norm(prog))
    assert saliency(sample, "a", table) == pytest.approx(expected)


def test_letter_candidate_avoids_used_names():
    code = "void f(){ int a = 1; int c = a; g(b); }"
    picks = {letter_candidate("a", code, "java", np.random.default_rng(s)) for s in range(200)}
    assert picks <= set(string.ascii_lowercase) - {"a", "b", "c", "f", "g"}
    assert len(picks) > 10
    crowded = "void f(){ " + " ".join(f"int {c} = 0;" for c in string.ascii_lowercase if c != "f") + " }"
    assert letter_candidate("a", crowded, "java", np.random.default_rng(0)) is None


# --------------------------------------------------------------- accent

def test_figure_one_shape():
    sample = CodeSample("fig1", FIGURE_1, FIGURE_1_REF, "java")
    res = accent_attack(sample, LocalAdapter(figure_model), FIGURE_TABLE, FIGURE_VOCAB, AttackConfig(max=2))
    assert set(res.adv.substitutions) == {("removeRange", "deleteRange"), ("index", "index1")}
    assert "public void deleteRange(int fromIndex, int toIndex)" in res.adv.adv_code
    assert "int index1 = fromIndex;" in res.adv.adv_code and "remove(index1);" in res.adv.adv_code
    assert res.valid and res.score_after < res.score_before == pytest.approx(100.0)
    assert res.output_after == "the range between"
    by_name = {r.w: r for r in res.records}
    assert by_name["fromIndex"].delta_score == 0.0 and not by_name["fromIndex"].applied
    assert by_name["i"].w_star in set(string.ascii_lowercase) - identifier_texts(FIGURE_1, "java")


def test_saturation_when_fewer_identifiers_than_max():
    sample = CodeSample("one", "void run(){ }", "runs", "java")
    table = hand_table({"run": [1.0, 0.0], "go": [0.9, 0.1], "walk": [0.5, 0.5]})
    res = accent_attack(sample, LocalAdapter(lambda c: "runs" if "run" in names_in(c) else "x"), table,
                        ["go", "walk"], AttackConfig(max=3))
    assert res.adv.substitutions == (("run", "go"),)
    assert res.adv.adv_code == "void go(){ }"


def test_no_identifiers_is_noop():
    sample = CodeSample("none", "", "nothing", "java")
    res = accent_attack(sample, LocalAdapter(lambda c: "nothing"), FIGURE_TABLE, FIGURE_VOCAB)
    assert res.adv.adv_code == sample.code and res.adv.substitutions == () and res.score_after == res.score_before


@pytest.fixture(scope="module")
def world():
    train = synth_corpus(150, "java", seed=21)
    test = synth_corpus(25, "java", seed=22)
    table = train_embeddings([code_subtokens(s.code, s.lang) for s in train],
                             EmbedConfig(dim=16, epochs=2, min_count=1, seed=3))
    model = SurrogateModel.from_samples(train)
    return train, test, table, model, global_vocabulary(train)


def test_accent_matches_bruteforce_pipeline(world):
    _, test, table, model, vocab = world
    config = AttackConfig(k=3, max=2)
    for sample in test:
        res = accent_attack(sample, LocalAdapter(model.generate), table, vocab, config)
        letters = {r.w: r.w_star for r in res.records if len(r.w) == 1}
        code, subs = reference_accent(sample, model.generate, table, vocab, config, letters)
        assert res.adv.adv_code == code and res.adv.substitutions == subs, sample.id
        assert res.valid


def test_accent_query_budget_and_score_after(world):
    _, test, table, model, vocab = world
    config = AttackConfig(k=4, max=2)
    for sample in test[:10]:
        calls = []
        ad = LocalAdapter(lambda c: calls.append(c) or model.generate(c))
        res = accent_attack(sample, ad, table, vocab, config)
        n = len(extract_identifiers(sample.code, sample.lang))
        assert res.queries == len(calls) <= 2 + n * config.k
        assert res.score_after == pytest.approx(score(LocalAdapter(model.generate), res.adv.adv_code, sample.comment))
        assert res.score_before == pytest.approx(oracles.bleu(model.generate(sample.code), sample.comment))


def test_accent_is_deterministic(world):
    _, test, table, model, vocab = world
    a, _ = attack_many(test, LocalAdapter(model.generate), AttackConfig(seed=4), table, vocab)
    b, _ = attack_many(list(reversed(test)), LocalAdapter(model.generate), AttackConfig(seed=4), table, vocab,
                       jobs=4)
    assert [r.to_json() for r in a] == [r.to_json() for r in reversed(b)]


def test_attack_many_isolates_model_failures(world):
    _, test, table, model, vocab = world
    bad = test[3].code

    def flaky(code):
        if code == bad:
            raise AdapterError("boom")
        return model.generate(code)

    results, failures = attack_many(test[:6], LocalAdapter(flaky), AttackConfig(), table, vocab)
    assert [f.sample_id for f in failures] == [test[3].id]
    assert [r.original.id for r in results] == [s.id for i, s in enumerate(test[:6]) if i != 3]


# --------------------------------------------------------------- random

def test_random_without_identifiers_is_noop():
    sample = CodeSample("e", "", "nothing", "java")
    res = random_attack(sample, LocalAdapter(lambda c: "nothing"), ["a", "b"], AttackConfig(method="random"))
    assert res.adv.substitutions == () and res.adv.adv_code == ""


def test_random_is_deterministic_and_bounded(world):
    _, test, _, model, vocab = world
    cfg = AttackConfig(method="random", seed=9, max=2)
    for sample in test[:8]:
        a = random_attack(sample, LocalAdapter(model.generate), vocab, cfg)
        b = random_attack(sample, LocalAdapter(model.generate), vocab, cfg)
        assert a.to_json() == b.to_json()
        assert 1 <= len(a.adv.substitutions) <= 2
        assert all(new in vocab for _, new in a.adv.substitutions)


def test_random_with_raw_vocabulary_can_break_programs():
    samples = synth_corpus(200, "java", seed=31)
    vocab = raw_vocabulary(samples)
    ad = LocalAdapter(lambda c: "x")
    results, _ = attack_many(samples, ad, AttackConfig(method="random", seed=1), global_vocab=vocab)
    valid = sum(r.valid for r in results)
    assert valid < len(results)
    assert all(r.valid == validate(r.adv.adv_code, "java") for r in results)


# --------------------------------------------------------------- metropolis-hastings

MH_CODE = "int scale(int value, int factor){ return value * factor; }"
MH_REF = "multiplies the value by the factor and returns the result"
MH_TABLE = hand_table({
    "scale": [1.0, 0.0, 0.0], "value": [0.0, 1.0, 0.0], "factor": [0.0, 0.0, 1.0],
    "resize": [0.9, 0.1, 0.0], "stretch": [0.8, 0.0, 0.2], "amount": [0.1, 0.9, 0.0], "item": [0.0, 0.8, 0.3],
    "ratio": [0.0, 0.2, 0.9], "weight": [0.2, 0.0, 0.8],
})
MH_VOCAB = ["resize", "stretch", "amount", "item", "ratio", "weight"]


def rugged_model(code, salt=""):
    # a deterministic, non-additive response to which identifiers are present
    key = salt + ",".join(sorted(names_in(code)))
    words = MH_REF.split()
    return " ".join(w for j, w in enumerate(words) if zlib.crc32(f"{key}|{j}".encode()) % 3)


def test_mh_zero_iterations():
    sample = CodeSample("m", MH_CODE, MH_REF, "java")
    res = mh_attack(sample, LocalAdapter(rugged_model), MH_TABLE, MH_VOCAB,
                    AttackConfig(method="mh", mh_iterations=0))
    assert res.adv.adv_code == MH_CODE and res.queries == 1


MH_PAIR = "int scale(int value){ return value * 2; }"


def pair_model(code):
    return rugged_model(code, "s15")


@pytest.mark.parametrize("noun", ["price", "speed", "score", "weight", "rating"])
def test_mh_finds_best_map(world, noun):
    _, _, table, model, vocab = world
    cap = noun.capitalize()
    code = f"public int total{cap}s(int[] {noun}s) {{\n    return {noun}s.length;\n}}"
    sample = CodeSample(noun, code, f"returns the sum of all {noun} values", "java")
    cands = scan_candidates(code, table, vocab, 2)
    best = all_map_drops(code, sample.comment, cands, model.generate, 2)
    for seed in range(4):
        cfg = AttackConfig(method="mh", k=2, max=2, mh_iterations=200, seed=seed)
        res = mh_attack(sample, LocalAdapter(model.generate), table, vocab, cfg)
        assert res.score_before - res.score_after == pytest.approx(best), seed
        assert res.valid


@pytest.mark.parametrize("seed", range(5))
def test_mh_crosses_valley_when_hot(seed):
    # every single substitution hurts here and only one pair helps
    sample = CodeSample("m", MH_PAIR, MH_REF, "java")
    cands = {"scale": ["resize", "stretch"], "value": ["amount", "item"]}
    assert all_map_drops(MH_PAIR, MH_REF, cands, pair_model, 1) == 0.0
    best = all_map_drops(MH_PAIR, MH_REF, cands, pair_model, 2)
    assert best > 0
    hot = AttackConfig(method="mh", k=2, max=2, mh_iterations=200, mh_temperature=10.0, seed=seed)
    res = mh_attack(sample, LocalAdapter(pair_model), MH_TABLE, MH_VOCAB, hot)
    assert res.score_before - res.score_after == pytest.approx(best)
    assert len(res.adv.substitutions) == 2


def test_mh_cold_limit_is_greedy():
    # no downhill move is ever accepted, so the valley above is never crossed
    sample = CodeSample("m", MH_PAIR, MH_REF, "java")
    cold = AttackConfig(method="mh", k=2, max=2, mh_iterations=200, mh_temperature=1e-9, seed=0)
    res = mh_attack(sample, LocalAdapter(pair_model), MH_TABLE, MH_VOCAB, cold)
    assert res.adv.substitutions == () and res.score_after == res.score_before


def test_mh_state_respects_limits(world):
    _, test, table, model, vocab = world
    cfg = AttackConfig(method="mh", max=1, mh_iterations=30)
    for sample in test[:5]:
        res = mh_attack(sample, LocalAdapter(model.generate), table, vocab, cfg)
        assert len(res.adv.substitutions) <= 1 and res.valid
        assert res.score_after <= res.score_before
        assert res.queries <= 1 + cfg.mh_iterations
