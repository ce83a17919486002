import json
import math

import pytest

from conelab import corpus
from conelab.geometry import SequenceSet
from conelab.svmaps import SetValuedMap


def test_entries_have_expected_objects():
    assert isinstance(corpus.get_entry("K").object, SequenceSet)
    assert isinstance(corpus.get_entry("Omega").object, SequenceSet)
    assert isinstance(corpus.get_entry("xsin").object, SetValuedMap)
    assert corpus.entry_names() == ["K", "Omega", "xsin"]
    with pytest.raises(KeyError):
        corpus.get_entry("nope")


def test_terms():
    assert corpus.K_set().point(4).tolist() == [0.25, 0.25]
    assert corpus.Omega_set().point(8).tolist() == [1 / math.factorial(16)] * 2
    assert corpus.Omega_set().tail_bound(8) == math.sqrt(2) / math.factorial(18)


def test_constructors_are_deterministic():
    a = corpus.corpus_K().to_dict()
    assert corpus.corpus_K().to_dict() == a


def test_manifest_is_json_and_claim_ids_unique():
    m = corpus.manifest()
    json.dumps(m)
    ids = [(c["entry"], c["id"]) for c in m]
    assert len(ids) == len(set(ids))
    assert {c["kind"] for c in m} >= {"cone_membership", "cone_scan", "derivative_set_scan",
                                        "deviation_bound", "deviation_values", "lipschitz"}


@pytest.mark.parametrize(
    "entry, claim",
    [(name, c) for name in corpus.entry_names() for c in corpus.get_entry(name).claims],
    ids=lambda x: x if isinstance(x, str) else x.id,
)
def test_claim_passes(entry, claim):
    res = corpus.run_claim(corpus.get_entry(entry), claim)
    assert res.passed, res.line()


def test_failing_claim_is_reported_not_raised():
    bad = corpus.Claim("bad", "term", "term(4) = (1, 1)", {"n": 4}, [1.0, 1.0])
    res = corpus.run_claim(corpus.get_entry("K"), bad)
    assert not res.passed and res.line().startswith("FAIL")
    crash = corpus.Claim("crash", "no_such_kind", "", {}, None)
    assert "unknown claim kind" in corpus.run_claim(corpus.get_entry("K"), crash).detail


def test_parse_sample():
    assert len(corpus.parse_sample("interval:-1,1,41")) == 41
    with pytest.raises(ValueError):
        corpus.parse_sample("grid:1")
