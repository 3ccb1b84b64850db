import numpy as np
import pytest

from foci.errors import ContractError, GenerationError
from foci.synthetic import SyntheticSpec, community_of, generate_synthetic


def test_degenerate_probabilities_give_complete_blocks():
    spec = SyntheticSpec(communities=2, community_size=6, p_in=1.0, p_out=0.0, seed=3)
    dense = generate_synthetic(spec).network.matrix.toarray()
    labels = np.arange(12) // 6
    expected = (labels[:, None] == labels[None, :]).astype(float)
    np.fill_diagonal(expected, 0)
    np.testing.assert_array_equal(dense, expected)


def test_same_seed_is_bit_identical():
    a = generate_synthetic(SyntheticSpec(seed=11))
    b = generate_synthetic(SyntheticSpec(seed=11))
    assert a.network.edges() == b.network.edges()
    assert np.array_equal(a.content.matrix.data, b.content.matrix.data)
    assert a.vocabulary == b.vocabulary and a.questions == b.questions and a.counts == b.counts


def test_seed_changes_edges():
    base = generate_synthetic(SyntheticSpec(seed=0)).network.edges()
    assert any(generate_synthetic(SyntheticSpec(seed=s)).network.edges() != base for s in range(1, 6))


def test_intra_block_density():
    spec = SyntheticSpec(communities=5, community_size=20, p_in=0.3, p_out=0.02, seed=2)
    dense = generate_synthetic(spec).network.matrix.toarray()
    labels = np.arange(100) // 20
    same = labels[:, None] == labels[None, :]
    np.fill_diagonal(same, False)
    assert abs(dense[same].mean() - 0.3) < 0.05
    assert abs(dense[~(labels[:, None] == labels[None, :])].mean() - 0.02) < 0.01


def test_questions_and_ground_truth():
    spec = SyntheticSpec(seed=4)
    inst = generate_synthetic(spec)
    assert len(inst.questions) == spec.questions_per_topic * spec.communities
    for q in inst.questions:
        topic = int(q.id[1:].split("-")[0])
        assert all(w.startswith(f"t{topic}w") for w in q.words)
        assert q.accepted
        for f in q.accepted:
            assert community_of(f, spec) == 0 and inst.network.has_edge(f, 0)
    linkers = {f for f in range(1, spec.community_size) if inst.network.has_edge(f, 0)}
    assert inst.questions[0].accepted == linkers


def test_content_is_topic_blocked():
    spec = SyntheticSpec(seed=5)
    inst = generate_synthetic(spec)
    dense = inst.content.counts.toarray()
    for user in (0, 25, 61):
        own = [inst.vocabulary.index[w] for w in inst.vocabulary.words if w.startswith(f"t{community_of(user, spec)}w")]
        assert dense[user, own].mean() > 3 * dense[user].mean() / 2


def test_noise_content_carries_no_blocks():
    spec = SyntheticSpec(seed=5, informative_content=False)
    dense = generate_synthetic(spec).content.counts.toarray()
    per_block = dense.reshape(100, 5, -1).mean(axis=(0, 2))
    assert per_block.max() - per_block.min() < 0.1


def test_retry_budget_exhausted():
    spec = SyntheticSpec(communities=2, community_size=3, p_in=1e-9, p_out=0.0, max_retries=3)
    with pytest.raises(GenerationError):
        generate_synthetic(spec)


@pytest.mark.parametrize(
    "kw", [dict(communities=1), dict(p_in=0.1, p_out=0.2), dict(in_rate=0.1, off_rate=0.2)]
)
def test_spec_invariants(kw):
    with pytest.raises(ContractError):
        SyntheticSpec(**kw)
