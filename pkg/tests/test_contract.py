"""One contract suite, two oracle implementations.

The scripted oracle (ground-truth payloads) and the remote client (image
payloads against the mock server) must be interchangeable behind the same
interface: same method shapes, same output ranges.
"""

import json

import pytest

from conftest import SHARE_DIR
from eqasim.mockserver import MockOracleServer
from eqasim.oracle import ObservationPayload, RemoteOracle, Rulebook, ScriptedOracle


@pytest.fixture(scope="module")
def implementations():
    rulebook = json.loads((SHARE_DIR / "wire" / "mock_rulebook.json").read_text())
    server = MockOracleServer(rulebook).start()
    remote = RemoteOracle(server.url, retry_max=1, backoff_base_s=0.0, timeout_s=5.0)
    scripted = ScriptedOracle(Rulebook.from_mapping({"bathroom": ["bathroom"]}),
                              answer_key={"q": "gold"})
    yield {"scripted": scripted, "remote": remote}
    remote.close()
    server.stop()


def _payload_for(oracle, samples=((1, 2), (3, 4))):
    if oracle.payload_mode == "image":
        return ObservationPayload(question="Is there a mirror in the bathroom?",
                                  pose=(0.0, 0.0, 0.0), sample_cells=tuple(samples),
                                  image_ref="sim://contract/0")
    return ObservationPayload(
        question="Is there a mirror in the bathroom?", pose=(0.0, 0.0, 0.0),
        sample_cells=tuple(samples),
        visible_region_counts={"bathroom": 4}, visible_free_count=9,
        region_rep_cells={"bathroom": (2, 2)},
        sample_region_types=tuple("bathroom" for _ in samples),
        target_visible=True)


@pytest.mark.parametrize("name", ["scripted", "remote"])
def test_semantic_scores_contract(implementations, name):
    oracle = implementations[name]
    payload = _payload_for(oracle)
    v_l, v_g = oracle.semantic_scores(payload)
    assert len(v_l) == len(payload.sample_cells)
    assert all(0.0 <= v <= 1.0 for v in v_l)
    assert 0.0 <= v_g <= 1.0


@pytest.mark.parametrize("name", ["scripted", "remote"])
def test_classify_region_contract(implementations, name):
    oracle = implementations[name]
    rtype, confidence, rep = oracle.classify_region(_payload_for(oracle))
    assert isinstance(rtype, str) and rtype
    assert 0.0 <= confidence <= 1.0
    assert rep is None or (isinstance(rep, tuple) and len(rep) == 2)


@pytest.mark.parametrize("name", ["scripted", "remote"])
def test_stop_answer_grade_contract(implementations, name):
    oracle = implementations[name]
    payload = _payload_for(oracle)
    assert oracle.should_stop(payload) in (True, False)
    answer = oracle.answer(payload)
    assert isinstance(answer, str)
    sigma, delta = oracle.grade("q", "gold", answer, payload)
    assert sigma in (1, 2, 3, 4, 5)
    assert delta in (0.0, 0.5, 1.0)


@pytest.mark.parametrize("name", ["scripted", "remote"])
def test_prioritize_contract(implementations, name):
    oracle = implementations[name]
    ranked = oracle.prioritize_regions("Is there a mirror in the bathroom?")
    assert isinstance(ranked, list)
    assert all(isinstance(t, str) for t in ranked)
